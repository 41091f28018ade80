#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "choir/model/config.hpp"
#include "choir/model/model.hpp"

namespace choir::train {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct ParamRecord {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;
  bool operator==(const ParamRecord&) const = default;
};

// Named parameters plus the configuration and seed that produced them.
struct Checkpoint {
  std::string kind;  // "model" or "motion"
  model::ModelConfig config;
  std::uint64_t seed = 0;
  std::vector<ParamRecord> params;
  bool operator==(const Checkpoint&) const = default;
};

// Records every parameter whose name starts with `prefix`, in registration
// order.
Checkpoint snapshot(const model::ChoirModel& model, std::string kind, std::uint64_t seed,
                    const std::string& prefix = "");
// Copies the records into same-named parameters. Throws DataError naming
// the parameter on a missing name or shape mismatch.
void restore(model::ChoirModel& model, const Checkpoint& ckpt);

// Little-endian container: magic, version, kind, seed, config JSON, then
// (name, rank, dims, f64 payload) records.
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Names of configuration fields whose values differ ("C", "ablation.disable_tau").
std::vector<std::string> config_differences(const nlohmann::json& a, const nlohmann::json& b,
                                            const std::string& prefix = "");

}  // namespace choir::train
