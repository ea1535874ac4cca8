#pragma once

// Glue shared by the command-line tool and the end-to-end tests: feature
// views for a training split, and one train + cold-start + evaluate pass.

#include "mfdcf/coldstart.hpp"
#include "mfdcf/data.hpp"
#include "mfdcf/eval.hpp"
#include "mfdcf/solver.hpp"

#include <vector>

namespace mfdcf {

struct ViewOptions {
  bool demographics = true;
  bool interaction = true;
  int min_category_count = 1;
  Index interaction_dim = 128;
};

/// BookCrossing locations are long-tailed, so rare countries share a slot.
ViewOptions default_view_options(const Dataset& d);

struct TrainingViews {
  std::vector<FeatureBlock> blocks;
  ModelEncoders encoders;
};

/// Fits the encoders on the training users only and encodes their views.
TrainingViews build_training_views(const Dataset& train, const ViewOptions& options);

/// Trains on one split and attaches the fitted encoders to the model.
TrainedModel train_split(const ColdStartSplit& split, const ViewOptions& views, const Hyperparams& hyper,
                         ProgressSink progress = {});

/// Cold-start codes for the split's test users from their demographics alone.
ColdStartBatch cold_start_codes(const TrainedModel& model, const Dataset& test);

/// MFDCF, random and popularity reports for one split.
std::vector<EvalReport> evaluate_split(const TrainedModel& model, const ColdStartSplit& split,
                                       const std::vector<int>& ks, const PositiveRule& rule, int split_index,
                                       std::uint64_t seed);

}  // namespace mfdcf
