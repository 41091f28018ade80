#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "choir/data/scenario.hpp"
#include "choir/eval/metrics.hpp"
#include "json.hpp"

namespace choir::eval {

inline constexpr std::uint32_t kMetricsSchemaVersion = 1;

// Column names of the aggregate table.
inline constexpr std::array<const char*, 7> kMetricColumns = {"Precision", "Recall", "F1",  "geo.",
                                                               "AUC",       "aIOU",   "SIM"};

struct Prediction {
  std::vector<double> affordance;  // N
  std::vector<double> contact;     // T x V
  std::vector<double> logits;      // classes
};

// Predicts for one sample given its evaluation clip.
using Predictor = std::function<Prediction(const data::SyntheticSample&, const data::Clip&)>;

struct SampleMetrics {
  std::size_t index = 0;
  std::size_t label = 0;
  std::size_t predicted_label = 0;
  data::Mode mode = data::Mode::Hand;
  ContactMetrics contact;
  bool auc_valid = false, sim_valid = false;
  double auc = 0.0, aiou = 0.0, sim = 0.0;
};

// Unweighted means over valid samples.
struct Aggregate {
  std::size_t samples = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0, geo_cm = 0.0;
  double auc = 0.0, aiou = 0.0, sim = 0.0;
  double accuracy = 0.0;
  std::size_t auc_samples = 0, sim_samples = 0, geo_samples = 0;
};

struct EvalReport {
  std::vector<SampleMetrics> per_sample;
  Aggregate aggregate;
  Aggregate hand, body;                              // by scenario mode
  std::array<Aggregate, data::kClassCount> per_class;
};

struct EvalOptions {
  std::size_t T = 8;
  double contact_threshold = 0.5;
  double auc_positive_threshold = 0.5;  // ground-truth affordance >= this is positive
  std::vector<double> iou_thresholds = default_iou_thresholds();
};

// Evaluates every sample on its clip starting at frame 0. Throws DataError
// for an empty sample list.
EvalReport evaluate(const std::vector<data::SyntheticSample>& samples, const Predictor& predictor,
                    const EvalOptions& options = {});

// Predicts the ground truth; scores every metric as perfect.
Predictor oracle_predictor();
// Predicts 0.5 everywhere with uniform logits.
Predictor constant_predictor(double value = 0.5);

Aggregate aggregate(const std::vector<SampleMetrics>& samples);
nlohmann::json to_json(const Aggregate& a);
nlohmann::json to_json(const EvalReport& r, const nlohmann::json& config);
// Throws DataError unless `report` has the expected schema version and keys.
void validate_metrics_report(const nlohmann::json& report);
// Aligned text table with the metric columns.
std::string format_table(const Aggregate& a);

}  // namespace choir::eval
