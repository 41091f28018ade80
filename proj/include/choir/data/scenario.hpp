#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "choir/geometry/mesh.hpp"
#include "choir/geometry/pose.hpp"
#include "choir/geometry/propagation.hpp"
#include "choir/geometry/types.hpp"

namespace choir::data {

inline constexpr std::size_t kClassCount = 12;
inline constexpr std::size_t kArchetypeCount = 9;
inline constexpr std::size_t kObservationChannels = 4;
// Version of the per-class scenario table.
inline constexpr std::uint32_t kInteractionTableVersion = 1;

enum class InteractionClass : std::uint8_t {
  Grasp, Open, Lay, Sit, WrapGrasp, Pour, Pull, Play, Stab, Contain, Cut, Mix
};

enum class Archetype : std::uint8_t { Chair, Bed, Cabinet, Door, Mug, Bottle, Knife, Bowl, Guitar };

// Hand scenarios show the contact in the observation grid; body scenarios
// reveal it only through head motion.
enum class Mode : std::uint8_t { Hand, Body };

std::string_view class_name(InteractionClass c);
std::string_view archetype_name(Archetype a);
std::string_view mode_name(Mode m);
// Throws DataError for unknown names.
InteractionClass class_from_name(std::string_view name);

struct InteractionInfo {
  Archetype archetype;
  Mode mode;
  std::vector<geometry::BodyPart> contact_parts;
};
const InteractionInfo& interaction_info(InteractionClass c);

struct GeneratorConfig {
  std::size_t frames = 10;  // raw clip length; clips are resampled to T
  std::size_t H1 = 4, W1 = 4;
  std::size_t N = 256;
  std::size_t V = 512;
  std::size_t patches() const { return H1 * W1; }
  // Throws UsageError on degenerate sizes.
  void validate() const;
  bool operator==(const GeneratorConfig&) const = default;
};

// Raw clip length used for a model with T frames per clip.
std::size_t frames_for(std::size_t T);

struct ScenarioSpec {
  InteractionClass cls = InteractionClass::Grasp;
  Archetype archetype = Archetype::Mug;
  Mode mode = Mode::Hand;
  std::size_t frames = 10;
  std::size_t t_on = 0, t_off = 0;  // inclusive contact window
  std::uint64_t seed = 0;
  // Throws DataError when inconsistent with the interaction table or when
  // the window is outside [0, frames).
  void validate() const;
  bool operator==(const ScenarioSpec&) const = default;
};

// Spec for class `cls` with a seeded contact window that starts after
// every admissible clip start for T frames.
ScenarioSpec make_spec(InteractionClass cls, std::size_t frames, std::size_t T, std::uint64_t seed);

struct SyntheticSample {
  ScenarioSpec spec;
  GeneratorConfig config;
  std::vector<double> grid;  // frames x H1 x W1 x D, frame-major
  geometry::HeadTrajectory trajectory;
  geometry::Points cloud;            // N, centered and unit-scaled
  std::vector<double> affordance;    // N values in [0, 1]
  geometry::AffordanceSeed seed_regions;
  std::vector<std::uint8_t> contact;  // frames x V
  std::size_t label() const { return static_cast<std::size_t>(spec.cls); }
  bool operator==(const SyntheticSample&) const;
};

SyntheticSample generate_scenario(const ScenarioSpec& spec, const GeneratorConfig& config);

// Start frames admissible for a T-frame clip: [0, frames - T].
std::size_t max_clip_start(std::size_t frames, std::size_t T);
// T frame indices spread uniformly from `start` to the last frame.
std::vector<std::size_t> clip_frames(std::size_t frames, std::size_t T, std::size_t start);

// A T-frame view of a sample as consumed by the model.
struct Clip {
  std::vector<double> grid;     // (T*H1*W1) x D
  std::vector<double> motion;   // T x 12, relative to the first clip frame
  std::vector<double> contact;  // T x V
};
Clip extract_clip(const SyntheticSample& sample, std::span<const std::size_t> frames);

}  // namespace choir::data
