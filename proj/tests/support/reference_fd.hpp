#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

// High-precision central differences of the full training loss. This header
// is precision-neutral: everything crosses the boundary as double.
namespace choir::reference {

struct Problem {
  std::string config_json;
  std::uint64_t seed = 0;
  // Parameter values by name; names absent here keep their seeded values.
  std::vector<std::pair<std::string, std::vector<double>>> params;
  std::vector<double> grid, motion;
  std::vector<std::array<double, 3>> cloud;
  std::vector<double> affordance, contact;
  std::size_t label = 0;
};

// For each trainable parameter (registration order) and each coordinate:
// (L(x + h) - L(x - h)) / 2h, evaluated in extended precision.
std::vector<std::vector<double>> central_differences(const Problem& problem, double h);

// Loss at the given values, evaluated in extended precision.
double loss(const Problem& problem);

// Number of significand bits of the reference scalar type.
int significand_bits();

}  // namespace choir::reference
