#pragma once

#include <cstdint>
#include <random>

#include "choir/ad/tensor.hpp"
#include "choir/model/loss.hpp"
#include "choir/model/model.hpp"
#include "reference_fd.hpp"

namespace choir::testing {

// Small configuration used by gradient checks.
inline model::ModelConfig tiny_config() {
  model::ModelConfig c;
  c.T = 2;
  c.H1 = 2;
  c.W1 = 2;
  c.D = 4;
  c.C = 8;
  c.N = 16;
  c.V = 12;
  c.heads = 2;
  c.st_depth = 2;
  c.knn_k = 4;
  return c;
}

inline model::ModelInput random_input(const model::ModelConfig& c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> grid(c.tokens() * c.D), motion(c.T * 12);
  for (auto& x : grid) x = nd(rng);
  for (auto& x : motion) x = 0.3 * nd(rng);
  model::ModelInput in;
  in.grid = ad::Tensor::constant({c.tokens(), c.D}, std::move(grid));
  in.motion = ad::Tensor::constant({c.T, 12}, std::move(motion));
  for (std::size_t i = 0; i < c.N; ++i) in.cloud.emplace_back(nd(rng), nd(rng), nd(rng));
  return in;
}

// Targets with both labels present in every row.
inline model::Targets random_targets(const model::ModelConfig& c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> aff(c.N), contact(c.T * c.V);
  for (auto& x : aff) x = u(rng);
  aff[0] = 1.0;
  aff[1] = 0.0;
  for (std::size_t i = 0; i < contact.size(); ++i) contact[i] = (u(rng) < 0.3 || i % c.V == 0) && i % c.V != 1;
  model::Targets t;
  t.affordance = ad::Tensor::constant({c.N, 1}, std::move(aff));
  t.contact = ad::Tensor::constant({c.T, c.V}, std::move(contact));
  t.label = static_cast<std::size_t>(rng() % c.classes);
  return t;
}

// Packs a model, its input and targets for the extended-precision reference.
inline reference::Problem reference_problem(const model::ChoirModel& m, std::uint64_t seed,
                                            const model::ModelInput& in, const model::Targets& gt) {
  reference::Problem p;
  p.config_json = model::to_json(m.config()).dump();
  p.seed = seed;
  for (const auto& [name, t] : m.parameters().entries()) {
    p.params.emplace_back(name, std::vector<double>(t.values().begin(), t.values().end()));
  }
  p.grid.assign(in.grid.values().begin(), in.grid.values().end());
  p.motion.assign(in.motion.values().begin(), in.motion.values().end());
  for (const auto& q : in.cloud) p.cloud.push_back({q.x(), q.y(), q.z()});
  p.affordance.assign(gt.affordance.values().begin(), gt.affordance.values().end());
  p.contact.assign(gt.contact.values().begin(), gt.contact.values().end());
  p.label = gt.label;
  return p;
}

}  // namespace choir::testing
