#include "choir/encoders/encoders.hpp"

#include <algorithm>
#include <cmath>

#include "choir/ad/ops.hpp"
#include "choir/error.hpp"
#include "choir/geometry/knn.hpp"

namespace choir::inline CHOIR_PRECISION_NS::enc {

void EncoderConfig::validate() const {
  if (T == 0 || H1 == 0 || W1 == 0 || D == 0 || C == 0 || N == 0) {
    throw UsageError("encoder config: T, H1, W1, D, C and N must be positive");
  }
  if (heads == 0 || C % heads != 0) {
    throw UsageError("encoder config: C=" + std::to_string(C) + " is not divisible by heads=" +
                     std::to_string(heads));
  }
  if (knn_k == 0 || N <= knn_k) {
    throw UsageError("encoder config: need N > knn_k >= 1, got N=" + std::to_string(N) +
                     " knn_k=" + std::to_string(knn_k));
  }
}

namespace {

void require_shape(const char* what, const Tensor& x, std::size_t rows, std::size_t cols) {
  if (x.rank() != 2 || x.rows() != rows || x.cols() != cols) {
    throw ShapeError(std::string(what) + ": expected [" + std::to_string(rows) + "x" + std::to_string(cols) +
                     "], got " + ad::shape_str(x.shape()));
  }
}

}  // namespace

AppearanceEncoder::AppearanceEncoder(nn::ParameterSet& params, const EncoderConfig& config, nn::Rng& rng)
    : config_(config) {
  config_.validate();
  const std::string p = kAppearancePrefix;
  const std::size_t C = config.C;
  patch_ = nn::Linear(params, p + "patch", config.D, C, true, rng);
  spatial_pos_ = params.uniform(p + "pos_spatial", {config.patches(), C}, C, rng);
  temporal_pos_ = params.uniform(p + "pos_temporal", {config.T, C}, C, rng);
  for (std::size_t b = 0; b < config.st_depth; ++b) {
    const std::string name = p + "block" + std::to_string(b);
    Block blk;
    blk.norm1 = nn::LayerNorm(params, name + ".norm1", C);
    blk.attention = nn::MultiHeadAttention(params, name + ".attn", C, config.heads, true, rng);
    blk.norm2 = nn::LayerNorm(params, name + ".norm2", C);
    blk.ffn = nn::Mlp(params, name + ".ffn", {C, C, C}, rng);
    blocks_.push_back(std::move(blk));
  }
  final_norm_ = nn::LayerNorm(params, p + "norm", C);
  for (std::size_t t = 0; t < config.T; ++t) {
    for (std::size_t s = 0; s < config.patches(); ++s) {
      spatial_index_.push_back(s);
      temporal_index_.push_back(t);
    }
  }
}

Tensor AppearanceEncoder::embed(const Tensor& grid) const {
  require_shape("encode_appearance", grid, config_.tokens(), config_.D);
  return patch_(grid);
}

Tensor AppearanceEncoder::operator()(const Tensor& grid) const {
  Tensor x = embed(grid);
  x = ad::add(x, ad::gather_rows(spatial_pos_, spatial_index_));
  x = ad::add(x, ad::gather_rows(temporal_pos_, temporal_index_));
  for (const auto& blk : blocks_) {
    Tensor h = blk.norm1(x);
    x = ad::add(x, blk.attention(h, h));
    x = ad::add(x, blk.ffn(blk.norm2(x)));
  }
  return final_norm_(x);
}

MotionEncoder::MotionEncoder(nn::ParameterSet& params, const EncoderConfig& config, nn::Rng& rng)
    : width_(config.C) {
  const std::string p = kMotionPrefix;
  mlp_ = nn::Mlp(params, p + "mlp", {12, config.C, config.C, config.C}, rng);
}

Tensor MotionEncoder::operator()(const Tensor& motion) const {
  if (motion.rank() != 2 || motion.cols() != 12) {
    throw ShapeError("encode_motion: expected [Tx12], got " + ad::shape_str(motion.shape()));
  }
  return mlp_(motion);
}

PointEncoder::PointEncoder(nn::ParameterSet& params, const EncoderConfig& config, nn::Rng& rng)
    : config_(config) {
  const std::string p = kPointPrefix;
  const std::size_t C = config.C;
  edge_ = nn::Mlp(params, p + "edge", {6, C, C}, rng);
  fusion_ = nn::Mlp(params, p + "fusion", {2 * C, C, C}, rng);
}

Tensor edge_features(std::span<const geometry::Vec3> cloud, std::size_t k) {
  const auto graph = geometry::knn_graph(cloud, k);
  const std::size_t n = cloud.size();
  std::vector<real> feats;
  feats.reserve(n * k * 6);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : graph.row(i)) {
      const auto& xi = cloud[i];
      const auto d = cloud[j] - xi;
      for (double v : {xi.x(), xi.y(), xi.z(), d.x(), d.y(), d.z()}) feats.push_back(v);
    }
  }
  return Tensor::constant({n * k, 6}, std::move(feats));
}

Tensor PointEncoder::operator()(std::span<const geometry::Vec3> cloud) const {
  if (cloud.size() != config_.N) {
    throw ShapeError("encode_points: expected " + std::to_string(config_.N) + " points, got " +
                     std::to_string(cloud.size()));
  }
  if (cloud.size() <= config_.knn_k) {
    throw UsageError("encode_points: need more than k=" + std::to_string(config_.knn_k) + " points");
  }
  Tensor local = ad::max_pool_groups(edge_(edge_features(cloud, config_.knn_k)), config_.knn_k);
  Tensor global = ad::max_rows(local);
  const std::vector<std::size_t> zeros(cloud.size(), 0);
  Tensor joined = ad::concat({local, ad::gather_rows(global, zeros)}, ad::Axis::Cols);
  return fusion_(joined);
}

Tensor alignment_divergence(const Tensor& p, const Tensor& q, real eps) {
  if (!(eps > 0.0)) throw UsageError("motion alignment: eps must be positive");
  Tensor ratio = ad::div(p, ad::add_scalar(q, eps));
  return ad::sum(ad::mul(p, ad::log(ad::add_scalar(ratio, eps))));
}

Tensor motion_alignment_loss(const Tensor& fm_j, const Tensor& fm_k, const Tensor& fv_j, const Tensor& fv_k,
                             const AlignmentOptions& options) {
  if (!(options.eps > 0.0)) throw UsageError("motion alignment: eps must be positive");
  if (fm_j.shape() != fm_k.shape() || fv_j.shape() != fv_k.shape()) {
    throw ShapeError("motion alignment: frame pair shapes differ (" + ad::shape_str(fm_j.shape()) + " vs " +
                     ad::shape_str(fm_k.shape()) + ", " + ad::shape_str(fv_j.shape()) + " vs " +
                     ad::shape_str(fv_k.shape()) + ")");
  }
  auto prep = [&](const Tensor& x) { return options.normalize ? ad::softmax_rows(x) : x; };
  Tensor motion = alignment_divergence(prep(fm_j), prep(fm_k), options.eps);
  Tensor visual = alignment_divergence(prep(fv_j), prep(fv_k), options.eps);
  return ad::abs(ad::sub(motion, visual));
}

geometry::Points normalize_cloud(std::span<const geometry::Vec3> cloud) {
  if (cloud.empty()) return {};
  geometry::Vec3 centroid = geometry::Vec3::Zero();
  for (const auto& p : cloud) centroid += p;
  centroid /= static_cast<double>(cloud.size());
  double radius = 0.0;
  for (const auto& p : cloud) radius = std::max(radius, (p - centroid).norm());
  const double s = radius > 0.0 ? 1.0 / radius : 1.0;
  geometry::Points out;
  out.reserve(cloud.size());
  for (const auto& p : cloud) out.push_back((p - centroid) * s);
  return out;
}

}  // namespace choir::inline CHOIR_PRECISION_NS::enc
