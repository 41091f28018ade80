#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "choir/geometry/mesh.hpp"

namespace choir::eval {

struct Counts {
  std::size_t tp = 0, fp = 0, fn = 0;
  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const Counts&) const = default;
};

struct PrecisionRecall {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

// 0/0 is taken as 0 for every ratio.
PrecisionRecall precision_recall(const Counts& c);

Counts count_binary(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth);

struct ContactMetrics {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  double geo_cm = 0.0;
  bool empty_prediction = false;  // no vertex predicted in any frame
  std::size_t geo_frames = 0;     // frames that entered the geodesic mean
  Counts counts;
};

// pred: T x V probabilities; truth: T x V 0/1. Counts are pooled over all
// frames. The geodesic error averages frames where both the prediction and
// the ground truth are nonempty.
ContactMetrics contact_metrics(std::span<const double> pred, std::span<const std::uint8_t> truth,
                               const geometry::EdgeGraph& mesh, std::size_t frames, double threshold = 0.5);

// Mann-Whitney statistic: fraction of (positive, negative) pairs ranked
// correctly, ties counting one half. Throws DataError when `truth` has a
// single class.
double auc(std::span<const double> scores, std::span<const std::uint8_t> truth);

// Default aIOU thresholds 0.01, 0.02, ..., 0.99.
std::vector<double> default_iou_thresholds();

// Truth binarized at > 0, prediction at >= each threshold. A threshold where
// both sets are empty scores 1.
double aiou(std::span<const double> pred, std::span<const double> truth, std::span<const double> thresholds);
double aiou(std::span<const double> pred, std::span<const double> truth);

// Histogram intersection of the two maps normalized to unit mass. Throws
// DataError for an all-zero map or negative entries.
double sim(std::span<const double> pred, std::span<const double> truth);

}  // namespace choir::eval
