#include "choir/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "choir/ad/ops.hpp"
#include "choir/ad/optim.hpp"
#include "choir/encoders/encoders.hpp"
#include "choir/error.hpp"

namespace choir::train {

using ad::Tensor;

void check_compatible(const model::ModelConfig& config, const data::GeneratorConfig& data, std::size_t T) {
  std::vector<std::string> bad;
  auto expect = [&](const char* field, std::size_t model_value, std::size_t data_value) {
    if (model_value != data_value) {
      bad.push_back(std::string(field) + " (model " + std::to_string(model_value) + ", data " +
                    std::to_string(data_value) + ")");
    }
  };
  expect("T", config.T, T);
  expect("H1", config.H1, data.H1);
  expect("W1", config.W1, data.W1);
  expect("D", config.D, data::kObservationChannels);
  expect("N", config.N, data.N);
  expect("V", config.V, data.V);
  expect("classes", config.classes, data::kClassCount);
  if (!bad.empty()) {
    std::string msg = "model config does not match the dataset:";
    for (const auto& b : bad) msg += " " + b + ";";
    throw DataError(msg);
  }
  if (data.frames < T) throw DataError("dataset clips are shorter than T");
}

model::ModelInput make_input(const model::ModelConfig& config, const data::Clip& clip,
                             const data::SyntheticSample& instance) {
  model::ModelInput in;
  in.grid = Tensor::constant({config.tokens(), config.D}, clip.grid);
  in.motion = Tensor::constant({config.T, 12}, clip.motion);
  in.cloud = instance.cloud;
  return in;
}

model::Targets make_targets(const model::ModelConfig& config, const data::Clip& clip,
                            const data::SyntheticSample& instance) {
  model::Targets t;
  t.affordance = Tensor::constant({config.N, 1}, instance.affordance);
  t.contact = Tensor::constant({config.T, config.V}, clip.contact);
  t.label = instance.label();
  return t;
}

eval::Predictor model_predictor(const model::ChoirModel& model) {
  return [&model](const data::SyntheticSample& s, const data::Clip& clip) {
    ad::NoGradScope ng;
    const auto out = model.forward(make_input(model.config(), clip, s));
    eval::Prediction p;
    p.affordance.assign(out.phi_a.values().begin(), out.phi_a.values().end());
    p.contact.assign(out.phi_c.values().begin(), out.phi_c.values().end());
    p.logits.assign(out.phi_s.values().begin(), out.phi_s.values().end());
    return p;
  };
}

namespace {

std::vector<Tensor> with_prefix(const model::ChoirModel& model, const std::string& prefix) {
  std::vector<Tensor> out;
  for (const auto& [name, t] : model.parameters().entries())
    if (name.rfind(prefix, 0) == 0) out.push_back(t);
  return out;
}

bool any_gradient(const std::vector<Tensor>& params) {
  for (const auto& p : params)
    for (auto g : p.grad())
      if (g != 0.0) return true;
  return false;
}

// Alignment loss for frames j < k of one clip.
Tensor alignment_term(const model::ChoirModel& model, const Tensor& grid, const Tensor& motion, std::size_t j,
                      std::size_t k, bool appearance_grad) {
  const auto& cfg = model.config();
  const std::size_t P = cfg.patches();
  Tensor fv;
  if (appearance_grad) {
    fv = model.appearance().embed(grid);
  } else {
    ad::NoGradScope ng;
    fv = model.appearance().embed(grid);
  }
  const Tensor fm = model.motion()(motion);
  return enc::motion_alignment_loss(ad::slice(fm, ad::Axis::Rows, j, 1), ad::slice(fm, ad::Axis::Rows, k, 1),
                                    ad::slice(fv, ad::Axis::Rows, j * P, P), ad::slice(fv, ad::Axis::Rows, k * P, P));
}

std::pair<std::size_t, std::size_t> random_pair(std::size_t T, std::mt19937_64& rng) {
  std::size_t j = std::uniform_int_distribution<std::size_t>(0, T - 1)(rng);
  std::size_t k = std::uniform_int_distribution<std::size_t>(0, T - 2)(rng);
  if (k >= j) ++k;
  return {std::min(j, k), std::max(j, k)};
}

std::vector<std::size_t> shuffled(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Fisher-Yates with explicit draws so the order is library independent.
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  return order;
}

}  // namespace

PretrainResult pretrain_motion(model::ChoirModel& model, const std::vector<data::SyntheticSample>& samples,
                               const PretrainOptions& options) {
  if (samples.empty()) throw DataError("pretrain_motion: empty dataset");
  if (options.batch == 0) throw UsageError("pretrain_motion: batch must be positive");
  const auto& cfg = model.config();
  check_compatible(cfg, samples.front().config, cfg.T);
  if (cfg.T < 2) throw UsageError("pretrain_motion: needs at least two frames");
  auto motion = with_prefix(model, enc::kMotionPrefix);
  const auto appearance = with_prefix(model, enc::kAppearancePrefix);
  ad::Adam adam(motion);
  std::mt19937_64 rng(options.seed);
  PretrainResult result;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    const auto order = shuffled(samples.size(), rng);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < order.size(); b += options.batch) {
      const std::size_t n = std::min(options.batch, order.size() - b);
      model.parameters().zero_grad();
      for (std::size_t i = 0; i < n; ++i) {
        const auto& s = samples[order[b + i]];
        const auto start = std::uniform_int_distribution<std::size_t>(0, data::max_clip_start(s.spec.frames, cfg.T))(rng);
        const auto clip = data::extract_clip(s, data::clip_frames(s.spec.frames, cfg.T, start));
        const auto [j, k] = random_pair(cfg.T, rng);
        ad::Graph graph;
        ad::GraphScope scope(graph);
        const Tensor grid = Tensor::constant({cfg.tokens(), cfg.D}, clip.grid);
        const Tensor mo = Tensor::constant({cfg.T, 12}, clip.motion);
        const Tensor loss = alignment_term(model, grid, mo, j, k, false);
        epoch_loss += loss.item();
        if (loss.requires_grad()) graph.backward(ad::scale(loss, 1.0 / static_cast<double>(n)));
      }
      if (any_gradient(appearance)) throw UsageError("pretrain_motion: appearance encoder received a gradient");
      adam.step(options.lr);
    }
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(samples.size()));
  }
  return result;
}

std::vector<double> smooth(const std::vector<double>& values, std::size_t window) {
  if (window == 0) throw UsageError("smooth: window must be positive");
  std::vector<double> out(values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum += values[i];
    if (i >= window) sum -= values[i - window];
    out[i] = sum / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

std::vector<GradientProbe> gradient_probes(const model::ChoirModel& model) {
  const auto& a = model.theta_a();
  const auto& c = model.theta_c();
  return {
      {"theta_a", "appearance", {a.k_proj(0).weight(), a.v_proj(0).weight()}},
      {"theta_a", "motion", {a.k_proj(1).weight(), a.v_proj(1).weight()}},
      {"theta_a", "point", {a.q_proj().weight()}},
      {"theta_c", "affordance", {c.k_proj(0).weight(), c.v_proj(0).weight()}},
      {"theta_c", "motion", {c.k_proj(1).weight(), c.v_proj(1).weight()}},
      {"theta_c", "appearance", {c.q_proj().weight()}},
  };
}

double gradient_norm(const GradientProbe& probe) {
  double s = 0.0;
  for (const auto& w : probe.weights) {
    if (!w.has_grad()) {
      throw UsageError("gradient report: " + probe.block + "/" + probe.branch + " has no gradient; run backward first");
    }
    for (double g : w.grad()) s += g * g;
  }
  return std::sqrt(s);
}

namespace {

struct Snapshot {
  std::vector<std::vector<double>> grads;
};

Snapshot snapshot_grads(const std::vector<GradientProbe>& probes) {
  Snapshot s;
  for (const auto& p : probes)
    for (const auto& w : p.weights) {
      if (w.has_grad()) {
        s.grads.emplace_back(w.grad().begin(), w.grad().end());
      } else {
        s.grads.emplace_back(w.size(), 0.0);
      }
    }
  return s;
}

// Norms of (after - before) * scale per probe.
std::vector<double> probe_deltas(const std::vector<GradientProbe>& probes, const Snapshot& before, double scale) {
  std::vector<double> out;
  std::size_t t = 0;
  for (const auto& p : probes) {
    double s = 0.0;
    for (const auto& w : p.weights) {
      const auto& b = before.grads[t++];
      if (!w.has_grad()) continue;
      auto g = w.grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double d = (g[i] - b[i]) * scale;
        s += d * d;
      }
    }
    out.push_back(std::sqrt(s));
  }
  return out;
}

GradientTable empty_table(const std::vector<GradientProbe>& probes) {
  GradientTable t;
  for (const auto& p : probes) t.rows.push_back(p.block + "/" + p.branch);
  t.norm.assign(probes.size(), {});
  return t;
}

void finish_table(GradientTable& t) {
  for (auto& row : t.norm)
    for (std::size_t c = 0; c < data::kClassCount; ++c)
      if (t.samples[c]) row[c] /= static_cast<double>(t.samples[c]);
}

}  // namespace

GradientTable gradient_modulation_report(model::ChoirModel& model, const std::vector<data::SyntheticSample>& samples,
                                         std::size_t T) {
  const auto probes = gradient_probes(model);
  auto table = empty_table(probes);
  const auto& cfg = model.config();
  for (const auto& s : samples) {
    model.parameters().zero_grad();
    const auto clip = data::extract_clip(s, data::clip_frames(s.spec.frames, T, 0));
    ad::Graph graph;
    {
      ad::GraphScope scope(graph);
      const auto loss = model::loss_total(model.forward(make_input(cfg, clip, s)), make_targets(cfg, clip, s), cfg);
      graph.backward(loss.total);
    }
    for (std::size_t r = 0; r < probes.size(); ++r) table.norm[r][s.label()] += gradient_norm(probes[r]);
    ++table.samples[s.label()];
  }
  model.parameters().zero_grad();
  finish_table(table);
  return table;
}

TrainResult train(model::ChoirModel& model, const std::vector<data::SyntheticSample>& train_set,
                  const std::vector<data::SyntheticSample>* val_set, const TrainOptions& options,
                  const std::function<void(const EpochRecord&)>& progress) {
  if (train_set.empty()) throw DataError("train: empty dataset");
  if (options.batch == 0) throw UsageError("train: batch must be positive");
  const auto& cfg = model.config();
  check_compatible(cfg, train_set.front().config, cfg.T);
  eval::EvalOptions eval_options;
  eval_options.T = cfg.T;
  TrainResult result;
  if (val_set && !val_set->empty()) result.initial = eval::evaluate(*val_set, model_predictor(model), eval_options);

  // Object instances available per class.
  std::array<std::vector<std::size_t>, data::kClassCount> pool;
  for (std::size_t i = 0; i < train_set.size(); ++i) pool[train_set[i].label()].push_back(i);

  const auto probes = gradient_probes(model);
  ad::Adam adam(model.trainable());
  std::mt19937_64 rng(options.seed);
  nn::Rng dropout_rng(options.seed ^ 0xd1b54a32d192ed03ULL);
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.lr = ad::cosine_lr(epoch, options.epochs, options.lr);
    rec.gradients = empty_table(probes);
    const auto order = shuffled(train_set.size(), rng);
    for (std::size_t b = 0; b < order.size(); b += options.batch) {
      const std::size_t n = std::min(options.batch, order.size() - b);
      const double weight = 1.0 / static_cast<double>(n);
      model.parameters().zero_grad();
      for (std::size_t i = 0; i < n; ++i) {
        const auto& s = train_set[order[b + i]];
        const auto start = std::uniform_int_distribution<std::size_t>(0, data::max_clip_start(s.spec.frames, cfg.T))(rng);
        const auto clip = data::extract_clip(s, data::clip_frames(s.spec.frames, cfg.T, start));
        const auto& members = pool[s.label()];
        const auto& instance = options.pair_instances ? train_set[members[rng() % members.size()]] : s;
        const auto before = snapshot_grads(probes);
        ad::Graph graph;
        {
          ad::GraphScope scope(graph);
          const auto input = make_input(cfg, clip, instance);
          model::ForwardTrace trace;
          const auto out = model.forward(input, &trace, &dropout_rng);
          auto loss = model::loss_total(out, make_targets(cfg, clip, instance), cfg);
          Tensor total = loss.total;
          if (cfg.ablation.online_motion_pretrain) {
            const auto [j, k] = random_pair(cfg.T, rng);
            const Tensor align = alignment_term(model, input.grid, input.motion, j, k, true);
            rec.alignment += align.item();
            total = ad::add(total, align);
          }
          rec.total += total.item();
          rec.affordance += loss.affordance.item();
          rec.contact += loss.contact.item();
          rec.semantic += loss.semantic.item();
          graph.backward(ad::scale(total, weight));
        }
        const auto norms = probe_deltas(probes, before, 1.0 / weight);
        for (std::size_t r = 0; r < norms.size(); ++r) rec.gradients.norm[r][s.label()] += norms[r];
        ++rec.gradients.samples[s.label()];
      }
      adam.step(rec.lr);
    }
    const double count = static_cast<double>(train_set.size());
    rec.total /= count;
    rec.affordance /= count;
    rec.contact /= count;
    rec.semantic /= count;
    rec.alignment /= count;
    finish_table(rec.gradients);
    const bool last = epoch + 1 == options.epochs;
    if (val_set && !val_set->empty() && (last || (options.eval_every && (epoch + 1) % options.eval_every == 0))) {
      auto report = eval::evaluate(*val_set, model_predictor(model), eval_options);
      rec.val = report.aggregate;
      if (last) result.final = std::move(report);
    }
    if (!std::isfinite(rec.total)) throw NumericError("train: loss diverged at epoch " + std::to_string(rec.epoch));
    if (progress) progress(rec);
    result.epochs.push_back(std::move(rec));
  }
  model.parameters().zero_grad();
  return result;
}

nlohmann::json to_json(const GradientTable& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t c = 0; c < data::kClassCount; ++c) {
      rows.push_back({{"layer", t.rows[r]},
                      {"class", data::class_name(static_cast<data::InteractionClass>(c))},
                      {"samples", t.samples[c]},
                      {"norm", t.norm[r][c]}});
    }
  }
  return rows;
}

nlohmann::json to_json(const EpochRecord& e) {
  nlohmann::json j = {{"epoch", e.epoch},
                      {"lr", e.lr},
                      {"loss", {{"total", e.total},
                                {"affordance", e.affordance},
                                {"contact", e.contact},
                                {"semantic", e.semantic},
                                {"alignment", e.alignment}}},
                      {"gradients", to_json(e.gradients)}};
  if (e.val) j["val"] = eval::to_json(*e.val);
  return j;
}

nlohmann::json to_json(const TrainOptions& o) {
  return {{"epochs", o.epochs},         {"batch", o.batch},         {"lr", o.lr},
          {"seed", o.seed},             {"eval_every", o.eval_every}, {"pair_instances", o.pair_instances}};
}

nlohmann::json to_json(const PretrainOptions& o) {
  return {{"epochs", o.epochs}, {"batch", o.batch}, {"lr", o.lr}, {"seed", o.seed}};
}

}  // namespace choir::train
