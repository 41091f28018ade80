#include "choir/eval/evaluate.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "choir/error.hpp"

namespace choir::eval {

Aggregate aggregate(const std::vector<SampleMetrics>& samples) {
  Aggregate a;
  a.samples = samples.size();
  if (samples.empty()) return a;
  for (const auto& s : samples) {
    a.precision += s.contact.precision;
    a.recall += s.contact.recall;
    a.f1 += s.contact.f1;
    a.aiou += s.aiou;
    a.accuracy += s.predicted_label == s.label ? 1.0 : 0.0;
    if (s.contact.geo_frames > 0) {
      a.geo_cm += s.contact.geo_cm;
      ++a.geo_samples;
    }
    if (s.auc_valid) {
      a.auc += s.auc;
      ++a.auc_samples;
    }
    if (s.sim_valid) {
      a.sim += s.sim;
      ++a.sim_samples;
    }
  }
  const double n = static_cast<double>(samples.size());
  a.precision /= n;
  a.recall /= n;
  a.f1 /= n;
  a.aiou /= n;
  a.accuracy /= n;
  if (a.geo_samples) a.geo_cm /= static_cast<double>(a.geo_samples);
  if (a.auc_samples) a.auc /= static_cast<double>(a.auc_samples);
  if (a.sim_samples) a.sim /= static_cast<double>(a.sim_samples);
  return a;
}

EvalReport evaluate(const std::vector<data::SyntheticSample>& samples, const Predictor& predictor,
                    const EvalOptions& options) {
  if (samples.empty()) throw DataError("evaluate: empty dataset");
  EvalReport report;
  const auto& cfg = samples.front().config;
  const auto graph = geometry::edge_graph(geometry::make_template_mesh(cfg.V));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (!(s.config == cfg)) throw DataError("evaluate: samples use different generator configs");
    const auto frames = data::clip_frames(s.spec.frames, options.T, 0);
    const auto clip = data::extract_clip(s, frames);
    const auto pred = predictor(s, clip);
    SampleMetrics m;
    m.index = i;
    m.label = s.label();
    m.mode = s.spec.mode;
    std::vector<std::uint8_t> truth(clip.contact.size());
    for (std::size_t j = 0; j < truth.size(); ++j) truth[j] = clip.contact[j] != 0.0;
    m.contact = contact_metrics(pred.contact, truth, graph, options.T, options.contact_threshold);
    if (pred.logits.empty()) throw ShapeError("evaluate: predictor returned no class logits");
    m.predicted_label = static_cast<std::size_t>(std::max_element(pred.logits.begin(), pred.logits.end()) -
                                                 pred.logits.begin());
    std::vector<std::uint8_t> positive(s.affordance.size());
    for (std::size_t j = 0; j < positive.size(); ++j) positive[j] = s.affordance[j] >= options.auc_positive_threshold;
    try {
      m.auc = auc(pred.affordance, positive);
      m.auc_valid = true;
    } catch (const DataError&) {
      m.auc_valid = false;
    }
    m.aiou = aiou(pred.affordance, s.affordance, options.iou_thresholds);
    try {
      m.sim = sim(pred.affordance, s.affordance);
      m.sim_valid = true;
    } catch (const DataError&) {
      m.sim_valid = false;
    }
    report.per_sample.push_back(m);
  }
  report.aggregate = aggregate(report.per_sample);
  std::vector<SampleMetrics> hand, body;
  std::array<std::vector<SampleMetrics>, data::kClassCount> by_class;
  for (const auto& m : report.per_sample) {
    (m.mode == data::Mode::Hand ? hand : body).push_back(m);
    by_class[m.label].push_back(m);
  }
  report.hand = aggregate(hand);
  report.body = aggregate(body);
  for (std::size_t c = 0; c < data::kClassCount; ++c) report.per_class[c] = aggregate(by_class[c]);
  return report;
}

Predictor oracle_predictor() {
  return [](const data::SyntheticSample& s, const data::Clip& clip) {
    Prediction p;
    p.affordance = s.affordance;
    p.contact = clip.contact;
    p.logits.assign(data::kClassCount, 0.0);
    p.logits[s.label()] = 1.0;
    return p;
  };
}

Predictor constant_predictor(double value) {
  return [value](const data::SyntheticSample& s, const data::Clip& clip) {
    Prediction p;
    p.affordance.assign(s.affordance.size(), value);
    p.contact.assign(clip.contact.size(), value);
    p.logits.assign(data::kClassCount, 0.0);
    return p;
  };
}

nlohmann::json to_json(const Aggregate& a) {
  return {{"samples", a.samples},   {"Precision", a.precision},     {"Recall", a.recall},
          {"F1", a.f1},             {"geo.", a.geo_cm},             {"AUC", a.auc},
          {"aIOU", a.aiou},         {"SIM", a.sim},                 {"accuracy", a.accuracy},
          {"auc_samples", a.auc_samples}, {"sim_samples", a.sim_samples}, {"geo_samples", a.geo_samples}};
}

nlohmann::json to_json(const EvalReport& r, const nlohmann::json& config) {
  nlohmann::json per_sample = nlohmann::json::array();
  for (const auto& m : r.per_sample) {
    per_sample.push_back({{"index", m.index},
                          {"class", data::class_name(static_cast<data::InteractionClass>(m.label))},
                          {"mode", data::mode_name(m.mode)},
                          {"predicted_class", data::class_name(static_cast<data::InteractionClass>(m.predicted_label))},
                          {"Precision", m.contact.precision},
                          {"Recall", m.contact.recall},
                          {"F1", m.contact.f1},
                          {"geo.", m.contact.geo_cm},
                          {"geo_frames", m.contact.geo_frames},
                          {"empty_prediction", m.contact.empty_prediction},
                          {"tp", m.contact.counts.tp},
                          {"fp", m.contact.counts.fp},
                          {"fn", m.contact.counts.fn},
                          {"AUC", m.auc_valid ? nlohmann::json(m.auc) : nlohmann::json(nullptr)},
                          {"aIOU", m.aiou},
                          {"SIM", m.sim_valid ? nlohmann::json(m.sim) : nlohmann::json(nullptr)}});
  }
  nlohmann::json per_class = nlohmann::json::array();
  for (std::size_t c = 0; c < data::kClassCount; ++c) {
    auto row = to_json(r.per_class[c]);
    row["class"] = data::class_name(static_cast<data::InteractionClass>(c));
    per_class.push_back(row);
  }
  return {{"schema", "choir-metrics"},
          {"schema_version", kMetricsSchemaVersion},
          {"config", config},
          {"per_sample", per_sample},
          {"per_class", per_class},
          {"aggregate", to_json(r.aggregate)},
          {"by_mode", {{"hand", to_json(r.hand)}, {"body", to_json(r.body)}}}};
}

void validate_metrics_report(const nlohmann::json& report) {
  if (!report.is_object() || report.value("schema", "") != "choir-metrics") {
    throw DataError("metrics report: not a choir metrics report");
  }
  const auto version = report.value("schema_version", 0u);
  if (version != kMetricsSchemaVersion) {
    throw DataError("metrics report: schema version " + std::to_string(version) + ", expected " +
                    std::to_string(kMetricsSchemaVersion));
  }
  for (const char* key : {"config", "per_sample", "per_class", "aggregate"}) {
    if (!report.contains(key)) throw DataError(std::string("metrics report: missing '") + key + "'");
  }
  if (report["per_class"].size() != data::kClassCount) throw DataError("metrics report: per_class needs 12 rows");
  for (const char* column : kMetricColumns) {
    if (!report["aggregate"].contains(column)) throw DataError(std::string("metrics report: missing column ") + column);
  }
}

std::string format_table(const Aggregate& a) {
  std::ostringstream os;
  char buf[32];
  for (const char* column : kMetricColumns) {
    std::snprintf(buf, sizeof(buf), "%10s", column);
    os << buf;
  }
  os << '\n';
  for (double v : {a.precision, a.recall, a.f1, a.geo_cm, 100.0 * a.auc, 100.0 * a.aiou, a.sim}) {
    std::snprintf(buf, sizeof(buf), "%10.4f", v);
    os << buf;
  }
  os << '\n';
  return os.str();
}

}  // namespace choir::eval
