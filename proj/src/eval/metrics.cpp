#include "choir/eval/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "choir/error.hpp"

namespace choir::eval {

namespace {

void same_size(const char* op, std::size_t a, std::size_t b) {
  if (a != b) {
    throw ShapeError(std::string(op) + ": prediction has " + std::to_string(a) + " entries, ground truth " +
                     std::to_string(b));
  }
}

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

PrecisionRecall precision_recall(const Counts& c) {
  PrecisionRecall r;
  r.precision = ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp));
  r.recall = ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn));
  r.f1 = ratio(2.0 * r.precision * r.recall, r.precision + r.recall);
  return r;
}

Counts count_binary(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth) {
  same_size("count_binary", predicted.size(), truth.size());
  Counts c;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool p = predicted[i] != 0, t = truth[i] != 0;
    c.tp += p && t;
    c.fp += p && !t;
    c.fn += !p && t;
  }
  return c;
}

ContactMetrics contact_metrics(std::span<const double> pred, std::span<const std::uint8_t> truth,
                               const geometry::EdgeGraph& mesh, std::size_t frames, double threshold) {
  same_size("contact_metrics", pred.size(), truth.size());
  const std::size_t V = mesh.adjacency.size();
  if (frames * V != pred.size()) {
    throw ShapeError("contact_metrics: expected " + std::to_string(frames) + " x " + std::to_string(V) +
                     " values, got " + std::to_string(pred.size()));
  }
  ContactMetrics m;
  double geo_sum = 0.0;
  bool any_prediction = false;
  for (std::size_t t = 0; t < frames; ++t) {
    std::vector<std::uint8_t> p(V);
    for (std::size_t v = 0; v < V; ++v) p[v] = pred[t * V + v] >= threshold;
    const auto gt = truth.subspan(t * V, V);
    m.counts += count_binary(p, gt);
    const auto geo = geometry::geodesic_error(p, gt, mesh);
    any_prediction = any_prediction || !geo.empty_prediction;
    if (!geo.empty_prediction && !geo.empty_ground_truth) {
      geo_sum += geo.centimeters;
      ++m.geo_frames;
    }
  }
  const auto pr = precision_recall(m.counts);
  m.precision = pr.precision;
  m.recall = pr.recall;
  m.f1 = pr.f1;
  m.empty_prediction = !any_prediction;
  m.geo_cm = m.geo_frames ? geo_sum / static_cast<double>(m.geo_frames) : 0.0;
  return m;
}

double auc(std::span<const double> scores, std::span<const std::uint8_t> truth) {
  same_size("auc", scores.size(), truth.size());
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  // Sum of midranks of the positives.
  double rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::size_t tied_pos = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) tied_pos += truth[order[j++]] != 0;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    rank_sum += midrank * static_cast<double>(tied_pos);
    pos += tied_pos;
    i = j;
  }
  const std::size_t neg = scores.size() - pos;
  if (pos == 0 || neg == 0) throw DataError("auc: ground truth has a single class");
  const double P = static_cast<double>(pos), N = static_cast<double>(neg);
  return (rank_sum - P * (P + 1.0) / 2.0) / (P * N);
}

std::vector<double> default_iou_thresholds() {
  std::vector<double> t;
  for (int i = 1; i <= 99; ++i) t.push_back(i / 100.0);
  return t;
}

double aiou(std::span<const double> pred, std::span<const double> truth, std::span<const double> thresholds) {
  same_size("aiou", pred.size(), truth.size());
  if (thresholds.empty()) throw UsageError("aiou: empty threshold grid");
  double total = 0.0;
  for (double th : thresholds) {
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const bool p = pred[i] >= th, t = truth[i] > 0.0;
      inter += p && t;
      uni += p || t;
    }
    total += uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
  }
  return total / static_cast<double>(thresholds.size());
}

double aiou(std::span<const double> pred, std::span<const double> truth) {
  const auto t = default_iou_thresholds();
  return aiou(pred, truth, t);
}

double sim(std::span<const double> pred, std::span<const double> truth) {
  same_size("sim", pred.size(), truth.size());
  double sp = 0.0, st = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < 0.0 || truth[i] < 0.0) throw DataError("sim: negative map entry");
    sp += pred[i];
    st += truth[i];
  }
  if (sp == 0.0 || st == 0.0) throw DataError("sim: all-zero map");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::min(pred[i] / sp, truth[i] / st);
  return s;
}

}  // namespace choir::eval
