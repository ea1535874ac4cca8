#include "mfdcf/pipeline.hpp"

namespace mfdcf {

ViewOptions default_view_options(const Dataset& d) {
  ViewOptions options;
  if (d.ratings.scale.min == 1.0 && d.ratings.scale.max == 10.0) options.min_category_count = 5;
  return options;
}

TrainingViews build_training_views(const Dataset& train, const ViewOptions& options) {
  TrainingViews out;
  int view = 0;
  if (options.demographics && !train.user_demo.attributes.empty()) {
    auto enc = DemographicEncoder::fit(train.user_demo, options.min_category_count);
    if (enc.dim() > 0) {
      out.blocks.push_back(encode_demographics(train, enc, view++));
      out.encoders.demographic = std::move(enc);
    }
  }
  if (options.interaction) {
    auto enc = InteractionEncoder::fit_vocabulary(train);
    if (enc.vocab_size() > 0) {
      out.blocks.push_back(encode_interaction_preference(train, options.interaction_dim, enc, view++));
      out.encoders.interaction = std::move(enc);
    }
  }
  if (out.blocks.empty()) throw ParameterError("no feature view could be built for dataset '" + train.name + "'");
  return out;
}

TrainedModel train_split(const ColdStartSplit& split, const ViewOptions& views, const Hyperparams& hyper,
                         ProgressSink progress) {
  TrainingViews tv = build_training_views(split.train, views);
  TrainedModel model = train(split.train, tv.blocks, hyper, std::move(progress));
  model.encoders = std::move(tv.encoders);
  return model;
}

ColdStartBatch cold_start_codes(const TrainedModel& model, const Dataset& test) {
  return generate_user_codes(model, encode_user_views(model, test.user_demo));
}

std::vector<EvalReport> evaluate_split(const TrainedModel& model, const ColdStartSplit& split,
                                       const std::vector<int>& ks, const PositiveRule& rule, int split_index,
                                       std::uint64_t seed) {
  const ColdStartBatch codes = cold_start_codes(model, split.test);
  std::vector<EvalReport> reports;
  reports.push_back(accuracy_at_k(hamming_ranker(PackedCodes::from_signs(codes.B), PackedCodes::from_signs(model.D)),
                                  split.test, ks, rule));
  reports.back().method = "mfdcf";
  reports.push_back(accuracy_at_k(baseline_random(split.test.num_items(), seed + static_cast<std::uint64_t>(split_index)),
                                  split.test, ks, rule));
  reports.back().method = "random";
  reports.push_back(accuracy_at_k(baseline_popularity(split.train), split.test, ks, rule));
  reports.back().method = "popularity";
  for (auto& r : reports) r.split = split_index;
  return reports;
}

}  // namespace mfdcf
