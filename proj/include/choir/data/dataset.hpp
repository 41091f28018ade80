#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "choir/data/scenario.hpp"

namespace choir::data {

inline constexpr std::uint32_t kRecordVersion = 1;
inline constexpr std::uint32_t kManifestVersion = 1;

// Little-endian binary record of one sample.
std::vector<std::uint8_t> encode_sample(const SyntheticSample& sample);
// Throws DataError on malformed or truncated bytes.
SyntheticSample decode_sample(const std::vector<std::uint8_t>& bytes);

std::uint32_t crc32(const std::vector<std::uint8_t>& bytes);

struct Split {
  std::string name;
  std::uint64_t seed_begin = 0;  // samples use seeds [seed_begin, seed_begin + samples.size())
  std::vector<SyntheticSample> samples;
};

struct Dataset {
  std::uint64_t suite_seed = 0;
  std::size_t T = 0;  // clip length the suite was generated for
  GeneratorConfig config;
  std::vector<Split> splits;
  const Split& split(const std::string& name) const;
};

struct ManifestEntry {
  std::string file;
  std::string split;
  std::string cls;
  std::uint64_t seed = 0;
  std::uint32_t crc32 = 0;
  std::size_t bytes = 0;
};

// Balanced over classes (sample i has class i mod 12). Split seeds come from
// disjoint ranges derived from `seed`.
Dataset standard_suite(std::uint64_t seed, std::size_t train = 96, std::size_t val = 32,
                       const GeneratorConfig& config = {}, std::size_t T = 8);

// Writes manifest.json and one record per sample under `dir`; returns the
// manifest entries. The directory must be empty or absent.
std::vector<ManifestEntry> write_dataset(const Dataset& dataset, const std::filesystem::path& dir);
// Validates versions and per-record checksums.
Dataset read_dataset(const std::filesystem::path& dir);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& dir);

}  // namespace choir::data
