#include "choir/data/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "choir/error.hpp"

namespace choir::data {

using geometry::BodyPart;
using geometry::Mat3;
using geometry::Vec3;

namespace {

constexpr std::array<std::string_view, kClassCount> kClassNames = {
    "grasp", "open", "lay", "sit", "wrapgrasp", "pour", "pull", "play", "stab", "contain", "cut", "mix"};
constexpr std::array<std::string_view, kArchetypeCount> kArchetypeNames = {
    "chair", "bed", "cabinet", "door", "mug", "bottle", "knife", "bowl", "guitar"};

const std::array<InteractionInfo, kClassCount>& interaction_table() {
  static const std::array<InteractionInfo, kClassCount> table = {{
      {Archetype::Mug, Mode::Hand, {BodyPart::Hands}},
      {Archetype::Cabinet, Mode::Body, {BodyPart::Hands, BodyPart::Arms}},
      {Archetype::Bed, Mode::Body, {BodyPart::Torso, BodyPart::Back}},
      {Archetype::Chair, Mode::Body, {BodyPart::Pelvis, BodyPart::Thighs}},
      {Archetype::Bottle, Mode::Hand, {BodyPart::Hands}},
      {Archetype::Bottle, Mode::Hand, {BodyPart::Hands}},
      {Archetype::Door, Mode::Body, {BodyPart::Hands, BodyPart::Arms}},
      {Archetype::Guitar, Mode::Hand, {BodyPart::Hands}},
      {Archetype::Knife, Mode::Hand, {BodyPart::Hands}},
      {Archetype::Bowl, Mode::Hand, {BodyPart::Hands}},
      {Archetype::Knife, Mode::Hand, {BodyPart::Hands}},
      {Archetype::Mug, Mode::Hand, {BodyPart::Hands}},
  }};
  return table;
}

// Surface primitive. Cylinders run along z; `caps` selects which ends are
// closed (bit 0 bottom, bit 1 top).
struct Primitive {
  enum class Kind { Box, Cylinder } kind;
  Vec3 center;
  Vec3 half;  // box half extents; cylinder (radius, radius, half height)
  unsigned caps = 3;
};

enum class Role { None, Red, Blue };

// Points of primitive `prim` whose local coordinates (each in [-1, 1]) lie
// inside [lo, hi] take `role`. The first matching rule wins.
struct RegionRule {
  std::size_t prim;
  Role role;
  Vec3 lo = Vec3::Constant(-1.0);
  Vec3 hi = Vec3::Constant(1.0);
};

Primitive box(Vec3 c, Vec3 h) { return {Primitive::Kind::Box, c, h, 0}; }
Primitive cylinder(Vec3 c, double r, double hh, unsigned caps = 3) {
  return {Primitive::Kind::Cylinder, c, Vec3(r, r, hh), caps};
}

std::vector<Primitive> archetype_shape(Archetype a) {
  switch (a) {
    case Archetype::Chair:
      return {box({0, 0, 0.45}, {0.22, 0.22, 0.03}), box({0, -0.2, 0.72}, {0.22, 0.02, 0.25}),
              box({0.19, 0.19, 0.21}, {0.02, 0.02, 0.21}), box({-0.19, 0.19, 0.21}, {0.02, 0.02, 0.21}),
              box({0.19, -0.19, 0.21}, {0.02, 0.02, 0.21}), box({-0.19, -0.19, 0.21}, {0.02, 0.02, 0.21})};
    case Archetype::Bed:
      return {box({0, 0, 0.4}, {1.0, 0.7, 0.12}), box({0, 0, 0.15}, {1.0, 0.7, 0.13}),
              box({-1.03, 0, 0.6}, {0.03, 0.7, 0.35})};
    case Archetype::Cabinet:
      return {box({0, 0, 0.5}, {0.4, 0.25, 0.5}), box({0, 0.26, 0.5}, {0.38, 0.01, 0.48}),
              box({0.3, 0.29, 0.6}, {0.015, 0.02, 0.08})};
    case Archetype::Door:
      return {box({0, 0, 1.0}, {0.45, 0.025, 1.0}), box({0.32, 0.07, 1.0}, {0.06, 0.012, 0.012}),
              box({0.38, 0.045, 1.0}, {0.01, 0.02, 0.01})};
    case Archetype::Mug:
      return {cylinder({0, 0, 0.05}, 0.04, 0.05, 1), box({0.05, 0, 0.05}, {0.012, 0.006, 0.03})};
    case Archetype::Bottle:
      return {cylinder({0, 0, 0.1}, 0.035, 0.1), cylinder({0, 0, 0.23}, 0.013, 0.03, 2)};
    case Archetype::Knife:
      return {box({-0.06, 0, 0}, {0.05, 0.01, 0.012}), box({0.08, 0, 0}, {0.09, 0.0015, 0.015})};
    case Archetype::Bowl:
      return {cylinder({0, 0, 0.04}, 0.08, 0.04, 0), cylinder({0, 0, 0.005}, 0.05, 0.005)};
    case Archetype::Guitar:
      return {box({0, 0, 0.25}, {0.18, 0.05, 0.25}), box({0, 0, 0.75}, {0.03, 0.02, 0.25}),
              box({0, 0, 1.05}, {0.045, 0.02, 0.05})};
  }
  throw DataError("unknown archetype " + std::to_string(static_cast<int>(a)));
}

std::vector<RegionRule> region_rules(InteractionClass c) {
  using enum InteractionClass;
  const Role R = Role::Red, B = Role::Blue;
  switch (c) {
    case Grasp:
      return {{1, R}, {0, B, {0.3, -1, -1}}};
    case Open:
      return {{2, R}, {1, B, {0, -1, -1}}};
    case Lay:
      return {{0, R, {-1, -1, 0.3}}, {0, B}, {2, B}};
    case Sit:
      return {{0, R, {-1, -1, 0}}, {0, B}, {1, B, {-1, -1, -1}, {1, 1, 0}}};
    case WrapGrasp:
      return {{0, R, {-1, -1, -0.4}, {1, 1, 0.4}}, {0, B}};
    case Pour:
      return {{1, R}, {0, B, {-1, -1, 0.6}}};
    case Pull:
      return {{1, R}, {2, R}, {0, B, {0.3, -1, -0.2}, {1, 1, 0.2}}};
    case Play:
      return {{0, R, {-1, 0.99, -1}}, {1, B}};
    case Stab:
      return {{1, R, {0.5, -1, -1}}, {1, B}};
    case Contain:
      return {{0, R, {-1, -1, -1}, {1, 1, 0}}, {0, B}};
    case Cut:
      return {{1, R, {-1, -1, -1}, {1, 1, -0.2}}, {1, B}};
    case Mix:
      return {{0, R, {-1, -1, 0.5}}, {0, B, {-1, -1, -0.2}}};
  }
  throw DataError("unknown interaction class " + std::to_string(static_cast<int>(c)));
}

double surface_area(const Primitive& p) {
  const Vec3& h = p.half;
  if (p.kind == Primitive::Kind::Box) return 8.0 * (h.x() * h.y() + h.y() * h.z() + h.x() * h.z());
  const double r = h.x(), caps = static_cast<double>((p.caps & 1u) + ((p.caps >> 1) & 1u));
  return 2.0 * std::numbers::pi * r * 2.0 * h.z() + caps * std::numbers::pi * r * r;
}

// Uniform surface sample; returns (world point, local coordinates).
std::pair<Vec3, Vec3> sample_surface(const Primitive& p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), u01(0.0, 1.0);
  const Vec3& h = p.half;
  Vec3 local;
  if (p.kind == Primitive::Kind::Box) {
    const std::array<double, 3> face = {h.y() * h.z(), h.x() * h.z(), h.x() * h.y()};
    const double pick = u01(rng) * (face[0] + face[1] + face[2]);
    const std::size_t axis = pick < face[0] ? 0 : (pick < face[0] + face[1] ? 1 : 2);
    local = Vec3(u(rng), u(rng), u(rng));
    local[axis] = u01(rng) < 0.5 ? -1.0 : 1.0;
  } else {
    const double r = h.x();
    const double side = 2.0 * std::numbers::pi * r * 2.0 * h.z();
    const double cap = std::numbers::pi * r * r;
    const double bottom = (p.caps & 1u) ? cap : 0.0, top = (p.caps & 2u) ? cap : 0.0;
    const double pick = u01(rng) * (side + bottom + top);
    const double theta = 2.0 * std::numbers::pi * u01(rng);
    if (pick < side) {
      local = Vec3(std::cos(theta), std::sin(theta), u(rng));
    } else {
      const double rho = std::sqrt(u01(rng));
      local = Vec3(rho * std::cos(theta), rho * std::sin(theta), pick < side + bottom ? -1.0 : 1.0);
    }
  }
  return {p.center + local.cwiseProduct(h), local};
}

Role role_of(const std::vector<RegionRule>& rules, std::size_t prim, const Vec3& local) {
  for (const auto& r : rules) {
    if (r.prim != prim) continue;
    if ((local.array() >= r.lo.array()).all() && (local.array() <= r.hi.array()).all()) return r.role;
  }
  return Role::None;
}

struct SampledObject {
  geometry::Points cloud;
  geometry::AffordanceSeed seed;
};

SampledObject sample_object(const ScenarioSpec& spec, std::size_t n, std::mt19937_64& rng) {
  constexpr std::size_t kMinPerPrimitive = 8;
  constexpr double kJitter = 0.005;
  auto shape = archetype_shape(spec.archetype);
  const auto rules = region_rules(spec.cls);
  if (n < kMinPerPrimitive * shape.size()) {
    throw UsageError("generator: N=" + std::to_string(n) + " is too small for archetype " +
                     std::string(archetype_name(spec.archetype)));
  }
  // Instance variation: global and per-primitive scale.
  std::uniform_real_distribution<double> global(0.85, 1.15), local_scale(0.95, 1.05);
  const double g = global(rng);
  for (auto& p : shape) {
    const double s = local_scale(rng);
    p.center *= g;
    p.half *= g * s;
  }
  // Area-proportional allocation with a floor; remainder by largest fraction.
  std::vector<double> area;
  double total_area = 0.0;
  for (const auto& p : shape) total_area += area.emplace_back(surface_area(p));
  const std::size_t free = n - kMinPerPrimitive * shape.size();
  std::vector<std::size_t> count(shape.size());
  std::vector<std::pair<double, std::size_t>> frac;
  std::size_t used = 0;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    const double exact = static_cast<double>(free) * area[i] / total_area;
    count[i] = kMinPerPrimitive + static_cast<std::size_t>(std::floor(exact));
    used += count[i];
    frac.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t j = 0; used < n; ++j, ++used) ++count[frac[j % frac.size()].second];

  std::normal_distribution<double> jitter(0.0, kJitter);
  for (int attempt = 0; attempt < 64; ++attempt) {
    SampledObject obj;
    for (std::size_t i = 0; i < shape.size(); ++i) {
      for (std::size_t c = 0; c < count[i]; ++c) {
        auto [point, local] = sample_surface(shape[i], rng);
        const auto role = role_of(rules, i, local);
        const std::size_t index = obj.cloud.size();
        if (role == Role::Red) obj.seed.red.push_back(index);
        if (role == Role::Blue) obj.seed.blue.push_back(index);
        obj.cloud.push_back(point);
      }
    }
    if (obj.seed.red.empty() || obj.seed.blue.empty()) continue;
    // Jitter after unit normalization, then renormalize so the result stays
    // centered inside the unit sphere.
    Vec3 centroid = Vec3::Zero();
    for (const auto& p : obj.cloud) centroid += p;
    centroid /= static_cast<double>(obj.cloud.size());
    double radius = 0.0;
    for (const auto& p : obj.cloud) radius = std::max(radius, (p - centroid).norm());
    for (auto& p : obj.cloud) {
      p = (p - centroid) / radius;
      p += Vec3(jitter(rng), jitter(rng), jitter(rng));
    }
    centroid = Vec3::Zero();
    for (const auto& p : obj.cloud) centroid += p;
    centroid /= static_cast<double>(obj.cloud.size());
    radius = 0.0;
    for (const auto& p : obj.cloud) radius = std::max(radius, (p - centroid).norm());
    for (auto& p : obj.cloud) p = (p - centroid) / radius;
    return obj;
  }
  throw DataError("generator: could not sample both seed regions for class " + std::string(class_name(spec.cls)));
}

// Fixed +-1 spatial code per class, independent of the sample seed.
double class_code(InteractionClass c, std::size_t patch) {
  std::mt19937_64 rng(0x5eed'c0deULL + static_cast<std::uint64_t>(c));
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i <= patch / 64; ++i) bits = rng();
  return (bits >> (patch % 64)) & 1u ? 1.0 : -1.0;
}

geometry::HeadTrajectory body_trajectory(const ScenarioSpec& spec, std::mt19937_64& rng) {
  constexpr double kDeg = std::numbers::pi / 180.0;
  std::uniform_real_distribution<double> amp(45.0 * kDeg, 90.0 * kDeg), small(-2.0 * kDeg, 2.0 * kDeg),
      drift(-0.02, 0.02), fwd(0.2, 0.5), down(0.3, 0.6), extra(0.0, 2.0 * kDeg);
  const double A = amp(rng);
  const Vec3 shift(fwd(rng), 0.0, -down(rng));
  geometry::HeadTrajectory traj(spec.frames);
  for (std::size_t t = 1; t < spec.frames; ++t) {
    auto& pose = traj[t];
    if (t >= spec.t_on && t <= spec.t_off) {
      pose.R = geometry::rot_z(A + extra(rng));
      pose.t = shift + Vec3(drift(rng), drift(rng), drift(rng));
    } else if (t == spec.t_off + 1) {
      // Partial return: the turn rate peaks when contact starts.
      pose.R = geometry::rot_z(0.5 * A) * geometry::rot_x(small(rng));
      pose.t = 0.5 * shift + Vec3(drift(rng), drift(rng), drift(rng));
    } else {
      pose.R = geometry::rot_z(small(rng)) * geometry::rot_x(small(rng));
      pose.t = Vec3(drift(rng), drift(rng), drift(rng));
    }
  }
  return traj;
}

// Small oscillation plus a downward glance at the hands during contact.
geometry::HeadTrajectory hand_trajectory(const ScenarioSpec& spec, std::mt19937_64& rng) {
  constexpr double kDeg = std::numbers::pi / 180.0;
  std::uniform_real_distribution<double> amp(0.0, 1.0 * kDeg), phase(0.0, 2.0 * std::numbers::pi),
      rate(0.3, 1.2), offset(-0.01, 0.01), dip(3.0 * kDeg, 5.0 * kDeg), lean(0.04, 0.06);
  const double ay = amp(rng), ax = amp(rng), py = phase(rng), px = phase(rng), w = rate(rng);
  const double pitch = dip(rng), forward = lean(rng);
  const Vec3 dir(offset(rng), offset(rng), offset(rng));
  geometry::HeadTrajectory traj(spec.frames);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    const double s = static_cast<double>(t);
    const bool active = t >= spec.t_on && t <= spec.t_off;
    traj[t].R = geometry::rot_x(active ? -pitch : 0.0) * geometry::rot_z(ay * std::sin(w * s + py)) *
                geometry::rot_x(ax * std::sin(w * s + px));
    traj[t].t = dir * std::sin(w * s) + Vec3(active ? forward : 0.0, 0.0, 0.0);
  }
  return traj;
}

}  // namespace

std::string_view class_name(InteractionClass c) {
  const auto i = static_cast<std::size_t>(c);
  if (i >= kClassCount) throw DataError("unknown interaction class " + std::to_string(i));
  return kClassNames[i];
}

std::string_view archetype_name(Archetype a) {
  const auto i = static_cast<std::size_t>(a);
  if (i >= kArchetypeCount) throw DataError("unknown archetype " + std::to_string(i));
  return kArchetypeNames[i];
}

std::string_view mode_name(Mode m) { return m == Mode::Hand ? "hand" : "body"; }

InteractionClass class_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kClassCount; ++i) {
    if (kClassNames[i] == name) return static_cast<InteractionClass>(i);
  }
  throw DataError("unknown interaction class '" + std::string(name) + "'");
}

const InteractionInfo& interaction_info(InteractionClass c) {
  const auto i = static_cast<std::size_t>(c);
  if (i >= kClassCount) throw DataError("unknown interaction class " + std::to_string(i));
  return interaction_table()[i];
}

void GeneratorConfig::validate() const {
  if (frames < 3 || H1 == 0 || W1 == 0 || N == 0 || V == 0) {
    throw UsageError("generator config: need frames >= 3 and positive H1, W1, N, V");
  }
}

std::size_t frames_for(std::size_t T) {
  if (T < 3) throw UsageError("generator: clips need T >= 3 frames, got " + std::to_string(T));
  return T + 2;
}

void ScenarioSpec::validate() const {
  const auto& info = interaction_info(cls);
  if (static_cast<std::size_t>(archetype) >= kArchetypeCount) {
    throw DataError("unknown archetype " + std::to_string(static_cast<int>(archetype)));
  }
  if (info.archetype != archetype || info.mode != mode) {
    throw DataError("scenario: class " + std::string(class_name(cls)) + " expects archetype " +
                    std::string(archetype_name(info.archetype)) + " in " + std::string(mode_name(info.mode)) +
                    " mode");
  }
  if (!(t_on <= t_off && t_off < frames)) {
    throw DataError("scenario: contact window [" + std::to_string(t_on) + ", " + std::to_string(t_off) +
                    "] outside " + std::to_string(frames) + " frames");
  }
}

ScenarioSpec make_spec(InteractionClass cls, std::size_t frames, std::size_t T, std::uint64_t seed) {
  if (T < 3 || frames < T + 2) {
    throw UsageError("make_spec: need T >= 3 and frames >= T + 2, got T=" + std::to_string(T) +
                     ", frames=" + std::to_string(frames));
  }
  const auto& info = interaction_info(cls);
  ScenarioSpec spec;
  spec.cls = cls;
  spec.archetype = info.archetype;
  spec.mode = info.mode;
  spec.frames = frames;
  spec.seed = seed;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const std::size_t first = frames - T + 1;
  spec.t_on = std::uniform_int_distribution<std::size_t>(first, frames - 2)(rng);
  const std::size_t longest = std::min<std::size_t>(4, frames - spec.t_on);
  spec.t_off = spec.t_on + std::uniform_int_distribution<std::size_t>(2, longest)(rng) - 1;
  return spec;
}

SyntheticSample generate_scenario(const ScenarioSpec& spec, const GeneratorConfig& config) {
  spec.validate();
  config.validate();
  if (spec.frames != config.frames) {
    throw UsageError("generator: spec has " + std::to_string(spec.frames) + " frames, config " +
                     std::to_string(config.frames));
  }
  SyntheticSample s;
  s.spec = spec;
  s.config = config;
  const auto& info = interaction_info(spec.cls);
  // Independent streams so each component is stable under changes to another.
  std::mt19937_64 grid_rng(spec.seed * 4 + 0), motion_rng(spec.seed * 4 + 1), object_rng(spec.seed * 4 + 2);

  // Observation channels: 0 class code, 1 hand contact ramp, 2 static
  // per-sample texture, 3 per-frame noise.
  const std::size_t P = config.patches(), D = kObservationChannels;
  std::normal_distribution<double> noise(0.0, 0.03), texture(0.0, 0.5);
  std::vector<double> static_texture(P);
  for (auto& v : static_texture) v = texture(grid_rng);
  s.grid.resize(spec.frames * P * D);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    const bool active = info.mode == Mode::Hand && t >= spec.t_on && t <= spec.t_off;
    const double ramp = 0.4 + 0.1 * static_cast<double>(t - std::min(t, spec.t_on)) /
                                  static_cast<double>(std::max<std::size_t>(1, spec.t_off - spec.t_on));
    for (std::size_t p = 0; p < P; ++p) {
      const bool lower = p / config.W1 >= config.H1 / 2;
      double* cell = &s.grid[(t * P + p) * D];
      cell[0] = 0.8 * class_code(spec.cls, p) + noise(grid_rng);
      cell[1] = (active && lower ? ramp : 0.0) + noise(grid_rng);
      cell[2] = static_texture[p] + noise(grid_rng);
      cell[3] = noise(grid_rng);
    }
  }

  s.trajectory = info.mode == Mode::Body ? body_trajectory(spec, motion_rng) : hand_trajectory(spec, motion_rng);

  auto object = sample_object(spec, config.N, object_rng);
  s.cloud = std::move(object.cloud);
  s.seed_regions = std::move(object.seed);
  s.affordance = geometry::propagate_affordance(s.cloud, s.seed_regions);

  const auto mesh = geometry::make_template_mesh(config.V);
  s.contact.assign(spec.frames * config.V, 0);
  for (std::size_t t = spec.t_on; t <= spec.t_off; ++t) {
    for (std::size_t v = 0; v < config.V; ++v) {
      const auto part = mesh.parts[v];
      if (std::find(info.contact_parts.begin(), info.contact_parts.end(), part) != info.contact_parts.end()) {
        s.contact[t * config.V + v] = 1;
      }
    }
  }
  return s;
}

bool SyntheticSample::operator==(const SyntheticSample& o) const {
  auto same_points = [](const geometry::Points& a, const geometry::Points& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i] != b[i]) return false;
    return true;
  };
  if (!(spec == o.spec && config == o.config && grid == o.grid && affordance == o.affordance &&
        contact == o.contact && seed_regions.red == o.seed_regions.red && seed_regions.blue == o.seed_regions.blue &&
        same_points(cloud, o.cloud) && trajectory.size() == o.trajectory.size())) {
    return false;
  }
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    if (trajectory[i].t != o.trajectory[i].t || trajectory[i].R != o.trajectory[i].R) return false;
  }
  return true;
}

std::size_t max_clip_start(std::size_t frames, std::size_t T) {
  if (T == 0 || T > frames) {
    throw UsageError("clip: cannot take " + std::to_string(T) + " frames from " + std::to_string(frames));
  }
  return frames - T;
}

std::vector<std::size_t> clip_frames(std::size_t frames, std::size_t T, std::size_t start) {
  if (start > max_clip_start(frames, T)) {
    throw UsageError("clip: start " + std::to_string(start) + " leaves fewer than " + std::to_string(T) +
                     " frames");
  }
  std::vector<std::size_t> idx(T);
  const std::size_t span = frames - 1 - start;
  for (std::size_t i = 0; i < T; ++i) {
    // Rounded i * span / (T - 1) in integer arithmetic.
    idx[i] = T == 1 ? start : start + (2 * i * span + (T - 1)) / (2 * (T - 1));
  }
  return idx;
}

Clip extract_clip(const SyntheticSample& sample, std::span<const std::size_t> frames) {
  const auto& cfg = sample.config;
  const std::size_t P = cfg.patches(), D = kObservationChannels;
  Clip clip;
  geometry::HeadTrajectory poses;
  for (auto f : frames) {
    if (f >= sample.spec.frames) throw UsageError("clip: frame " + std::to_string(f) + " out of range");
    const auto* g = &sample.grid[f * P * D];
    clip.grid.insert(clip.grid.end(), g, g + P * D);
    const auto* c = &sample.contact[f * cfg.V];
    for (std::size_t v = 0; v < cfg.V; ++v) clip.contact.push_back(c[v]);
    poses.push_back(sample.trajectory[f]);
  }
  for (const auto& m : geometry::relative_motion(poses).frames) clip.motion.insert(clip.motion.end(), m.begin(), m.end());
  return clip;
}

}  // namespace choir::data
