#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mfdcf {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using SparseMatrix = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;

using Mat = Matrix<double>;
using Vec = Vector<double>;
using SpMat = SparseMatrix<double>;

// Hash codes are held as ±1 doubles while training; the evaluation path
// bit-packs them (see codes.hpp).
using CodeMatrix = Mat;

/// Bad argument, shape, or configuration value.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative kernel did not converge or hit a singular system.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, std::int64_t iterations = -1)
      : std::runtime_error(what), iterations_(iterations) {}
  std::int64_t iterations() const noexcept { return iterations_; }

 private:
  std::int64_t iterations_;
};

class SingularityError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Malformed input file. Carries the file name and 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& file, std::int64_t line, const std::string& msg)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + msg),
        file_(file),
        line_(line) {}
  const std::string& file() const noexcept { return file_; }
  std::int64_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::int64_t line_;
};

/// A record refers to a user or item that does not exist.
class ReferentialError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training produced a non-finite value. `step()` names the update that did it.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::string step, int iteration)
      : std::runtime_error("non-finite value after step '" + step + "' in iteration " +
                           std::to_string(iteration)),
        step_(std::move(step)),
        iteration_(iteration) {}
  const std::string& step() const noexcept { return step_; }
  int iteration() const noexcept { return iteration_; }

 private:
  std::string step_;
  int iteration_;
};

/// Unreadable or incompatible binary container.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mfdcf
