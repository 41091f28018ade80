#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "choir/data/dataset.hpp"
#include "choir/eval/evaluate.hpp"
#include "choir/model/loss.hpp"
#include "choir/model/model.hpp"

namespace choir::train {

// Throws DataError naming every field where the model and data disagree.
void check_compatible(const model::ModelConfig& config, const data::GeneratorConfig& data, std::size_t T);

// Model tensors for a clip; `instance` supplies the object cloud and its
// affordance labels.
model::ModelInput make_input(const model::ModelConfig& config, const data::Clip& clip,
                             const data::SyntheticSample& instance);
model::Targets make_targets(const model::ModelConfig& config, const data::Clip& clip,
                            const data::SyntheticSample& instance);

eval::Predictor model_predictor(const model::ChoirModel& model);

struct PretrainOptions {
  std::size_t epochs = 30;
  std::size_t batch = 8;
  double lr = 5e-3;
  std::uint64_t seed = 0;
};

struct PretrainResult {
  std::vector<double> epoch_loss;  // mean alignment loss per epoch
};

// Offline alignment of the motion encoder against the frozen patch
// embedding. Only motion parameters change; throws UsageError if an
// appearance parameter ever receives a gradient.
PretrainResult pretrain_motion(model::ChoirModel& model, const std::vector<data::SyntheticSample>& samples,
                               const PretrainOptions& options);

// Trailing moving average.
std::vector<double> smooth(const std::vector<double>& values, std::size_t window);

// One kv-mapping layer group whose weight gradient is logged.
struct GradientProbe {
  std::string block;   // "theta_a" or "theta_c"
  std::string branch;  // "appearance", "motion", "affordance", "point"
  std::vector<ad::Tensor> weights;
};
// theta_a: appearance kv, motion kv, point query; theta_c: affordance kv,
// motion kv, appearance query.
std::vector<GradientProbe> gradient_probes(const model::ChoirModel& model);
// Frobenius norm of the probe's weight gradients. Throws UsageError before
// any backward pass has populated them.
double gradient_norm(const GradientProbe& probe);

struct GradientTable {
  std::vector<std::string> rows;  // "block/branch"
  // norm[row][class]: mean per-sample gradient norm over the epoch.
  std::vector<std::array<double, data::kClassCount>> norm;
  std::array<std::size_t, data::kClassCount> samples{};
};

// Per-sample gradient norms of `model` on `samples`, grouped by class.
GradientTable gradient_modulation_report(model::ChoirModel& model, const std::vector<data::SyntheticSample>& samples,
                                         std::size_t T);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double lr = 0.0;
  double total = 0.0, affordance = 0.0, contact = 0.0, semantic = 0.0, alignment = 0.0;
  GradientTable gradients;
  std::optional<eval::Aggregate> val;
};

struct TrainOptions {
  std::size_t epochs = 100;
  std::size_t batch = 8;
  double lr = 1e-4;
  std::uint64_t seed = 0;
  std::size_t eval_every = 0;  // 0: evaluate only before and after training
  bool pair_instances = true;  // draw a random object instance of the same class
};

struct TrainResult {
  std::vector<EpochRecord> epochs;
  std::optional<eval::EvalReport> initial, final;
};

// Adam with cosine annealing over `epochs`. Deterministic for a fixed seed.
TrainResult train(model::ChoirModel& model, const std::vector<data::SyntheticSample>& train_set,
                  const std::vector<data::SyntheticSample>* val_set, const TrainOptions& options,
                  const std::function<void(const EpochRecord&)>& progress = {});

nlohmann::json to_json(const GradientTable& t);
nlohmann::json to_json(const EpochRecord& e);
nlohmann::json to_json(const TrainOptions& o);
nlohmann::json to_json(const PretrainOptions& o);

}  // namespace choir::train
