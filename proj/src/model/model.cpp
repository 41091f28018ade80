#include "choir/model/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "choir/ad/ops.hpp"
#include "choir/error.hpp"

namespace choir::inline CHOIR_PRECISION_NS::model {

std::vector<std::size_t> canonical_point_order(std::span<const geometry::Vec3> cloud) {
  std::vector<std::size_t> order(cloud.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& pa = cloud[a];
    const auto& pb = cloud[b];
    if (pa.x() != pb.x()) return pa.x() < pb.x();
    if (pa.y() != pb.y()) return pa.y() < pb.y();
    if (pa.z() != pb.z()) return pa.z() < pb.z();
    return a < b;
  });
  return order;
}

Tensor temporal_encoding(std::size_t T, std::size_t C) {
  std::vector<real> pe(T * C);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t c = 0; c < C; ++c) {
      const double freq = std::pow(10000.0, -static_cast<double>(c - c % 2) / static_cast<double>(C));
      const double a = static_cast<double>(t) * freq;
      pe[t * C + c] = c % 2 == 0 ? std::sin(a) : std::cos(a);
    }
  }
  return Tensor::constant({T, C}, std::move(pe));
}

ChoirModel::ChoirModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  nn::Rng rng(seed);
  const std::size_t C = config.C;
  // Registration order is fixed regardless of ablation flags so checkpoints
  // stay interchangeable.
  appearance_ = enc::AppearanceEncoder(params_, config_, rng);
  motion_ = enc::MotionEncoder(params_, config_, rng);
  points_ = enc::PointEncoder(params_, config_, rng);
  tau_v_ = params_.add("tau.v", {1, C}, std::vector<real>(C, 1.0));
  tau_m_ = params_.add("tau.m", {1, C}, std::vector<real>(C, 1.0));
  tau_o_ = params_.add("tau.o", {1, C}, std::vector<real>(C, 1.0));
  token_f_ = params_.uniform("token.functionality", {1, C}, C, rng);
  token_i_ = params_.uniform("token.intention", {1, C}, C, rng);
  theta_a_ = ParallelCrossAttention(params_, "theta_a", C, config.heads, rng);
  theta_c_ = ParallelCrossAttention(params_, "theta_c", C, config.heads, rng);
  synergy_ = nn::MultiHeadAttention(params_, "synergy", C, config.heads, false, rng);
  semantic_head_ = nn::Mlp(params_, "decoder.semantic", {2 * C, C, config.classes}, rng);
  affordance_head_ = nn::Mlp(params_, "decoder.affordance", {C, C, 1}, rng);
  contact_feature_ = nn::Linear(params_, "decoder.contact_feature", C, 1, true, rng);
  contact_spatial_ = nn::Linear(params_, "decoder.contact_spatial", config.patches(), config.V, true, rng);
  pe_t_ = temporal_encoding(config.T, C);
  for (std::size_t t = 0; t < config.T; ++t)
    for (std::size_t s = 0; s < config.patches(); ++s) frame_index_.push_back(t);
}

std::vector<Tensor> ChoirModel::trainable() const {
  std::vector<Tensor> out;
  const auto& ab = config_.ablation;
  for (const auto& [name, t] : params_.entries()) {
    if (ab.disable_tau && name.rfind("tau.", 0) == 0) continue;
    if (ab.disable_semantic_head && (name.rfind("token.", 0) == 0 || name.rfind("decoder.semantic", 0) == 0)) {
      continue;
    }
    out.push_back(t);
  }
  return out;
}

ModelOutputs ChoirModel::decode(const Tensor& F_a_refined, const Tensor& F_c, const Tensor& F_sf,
                                const Tensor& F_si) const {
  const auto& cfg = config_;
  ModelOutputs out;
  out.phi_s = cfg.ablation.disable_semantic_head ? Tensor::zeros({1, cfg.classes})
                                                 : semantic_head_(ad::concat({F_sf, F_si}, ad::Axis::Cols));
  out.phi_a = ad::sigmoid(affordance_head_(F_a_refined));
  // Feature dimension first, then the spatial map to mesh vertices.
  Tensor per_token = ad::reshape(contact_feature_(F_c), {cfg.T, cfg.patches()});
  out.phi_c = ad::sigmoid(contact_spatial_(per_token));
  return out;
}

ModelOutputs ChoirModel::forward(const ModelInput& input, ForwardTrace* trace, nn::Rng* dropout_rng) const {
  const auto& cfg = config_;
  const auto& ab = cfg.ablation;
  const std::size_t N = cfg.N, C = cfg.C;
  if (input.cloud.size() != N) {
    throw ShapeError("model: expected " + std::to_string(N) + " points, got " + std::to_string(input.cloud.size()));
  }
  if (input.motion.rank() != 2 || input.motion.rows() != cfg.T || input.motion.cols() != 12) {
    throw ShapeError("model: expected motion [" + std::to_string(cfg.T) + "x12], got " +
                     ad::shape_str(input.motion.shape()));
  }
  nn::Rng* drop = cfg.dropout_enabled ? dropout_rng : nullptr;

  const auto order = canonical_point_order(input.cloud);
  geometry::Points sorted;
  sorted.reserve(N);
  for (auto i : order) sorted.push_back(input.cloud[i]);

  Tensor F_V = appearance_(input.grid);
  Tensor F_M = ab.disable_motion ? Tensor::zeros({cfg.T, C}) : motion_(input.motion);
  Tensor F_O = points_(sorted);

  const bool semantic = !ab.disable_semantic_head;
  const std::size_t off = semantic ? 1 : 0;

  // Affordance block: object geometry queries modulated appearance and motion.
  Tensor q_a = semantic ? ad::concat({token_f_, F_O}, ad::Axis::Rows) : F_O;
  Tensor out_a = theta_a_(q_a, ad::mul(F_V, tau_v_), ad::mul(F_M, tau_m_), trace ? &trace->theta_a : nullptr,
                          cfg.dropout, drop);
  Tensor F_a = ad::slice(out_a, ad::Axis::Rows, off, N);
  Tensor F_sf = semantic ? ad::slice(out_a, ad::Axis::Rows, 0, 1) : Tensor();

  // Contact block: appearance queries modulated affordance and motion.
  Tensor V_q = F_V, M_kv = F_M;
  if (!ab.disable_pe_t) {
    V_q = ad::add(F_V, ad::gather_rows(pe_t_, frame_index_));
    // A disabled motion branch stays zero end to end.
    if (!ab.disable_motion) M_kv = ad::add(F_M, pe_t_);
  }
  Tensor q_c = semantic ? ad::concat({token_i_, V_q}, ad::Axis::Rows) : V_q;
  Tensor a_kv = ab.disable_affordance_branch ? Tensor::zeros({N, C}) : ad::mul(F_a, tau_o_);
  Tensor out_c = theta_c_(q_c, a_kv, ad::mul(M_kv, tau_m_), trace ? &trace->theta_c : nullptr, cfg.dropout, drop);
  Tensor F_c = ad::slice(out_c, ad::Axis::Rows, off, cfg.tokens());
  Tensor F_si = semantic ? ad::slice(out_c, ad::Axis::Rows, 0, 1) : Tensor();

  Tensor F_a_ref = ab.disable_synergy ? F_a : ad::add(F_a, synergy_(F_a, F_c));

  ModelOutputs out = decode(F_a_ref, F_c, F_sf, F_si);
  std::vector<std::size_t> inverse(N);
  for (std::size_t r = 0; r < N; ++r) inverse[order[r]] = r;
  out.phi_a = ad::gather_rows(out.phi_a, inverse);

  if (trace) {
    trace->point_order = order;
    trace->F_V = F_V;
    trace->F_M = F_M;
    trace->F_O = F_O;
    trace->F_a = F_a;
    trace->F_sf = F_sf;
    trace->F_c = F_c;
    trace->F_si = F_si;
    trace->F_a_refined = F_a_ref;
  }
  return out;
}

}  // namespace choir::inline CHOIR_PRECISION_NS::model
