#pragma once

// Versioned little-endian binary containers for prepared datasets and trained
// models, plus atomic file replacement.
//
// Both containers start with an 8-byte magic string and a u32 format version.
// Integers are fixed-width little-endian, reals are IEEE-754 binary64 bit
// patterns, strings are a u64 length followed by bytes, and ±1 code matrices
// are stored bit-packed one code per column (see codes.hpp for bit order).

#include "mfdcf/data.hpp"
#include "mfdcf/solver.hpp"

#include <cstdint>
#include <string>

namespace mfdcf {

inline constexpr std::uint32_t kDatasetCacheVersion = 1;
inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Writes `contents` to a temporary sibling of `path`, then renames it over
/// `path`, so readers never observe a partial file.
void write_file_atomic(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

struct DatasetCache {
  Dataset data;
  std::string fingerprint;  // identifies the raw inputs the cache was built from
};

std::string serialize_dataset(const DatasetCache& cache);
DatasetCache deserialize_dataset(const std::string& bytes);
void save_dataset(const std::string& path, const DatasetCache& cache);
DatasetCache load_dataset(const std::string& path);

std::string serialize_model(const TrainedModel& model);
TrainedModel deserialize_model(const std::string& bytes);
void save_model(const std::string& path, const TrainedModel& model);
TrainedModel load_model(const std::string& path);

/// Size and FNV-1a content hash of each file, in order.
std::string fingerprint_files(const std::vector<std::string>& paths);

}  // namespace mfdcf
