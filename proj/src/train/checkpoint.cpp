#include "choir/train/checkpoint.hpp"

#include "choir/error.hpp"
#include "choir/io/binary.hpp"

namespace choir::train {

namespace {
constexpr std::uint32_t kMagic = 0x4b434843;  // "CHCK"
}

Checkpoint snapshot(const model::ChoirModel& model, std::string kind, std::uint64_t seed, const std::string& prefix) {
  Checkpoint c;
  c.kind = std::move(kind);
  c.config = model.config();
  c.seed = seed;
  for (const auto& [name, t] : model.parameters().entries()) {
    if (name.rfind(prefix, 0) != 0) continue;
    c.params.push_back({name, {t.shape().begin(), t.shape().end()}, {t.values().begin(), t.values().end()}});
  }
  return c;
}

void restore(model::ChoirModel& model, const Checkpoint& ckpt) {
  for (const auto& rec : ckpt.params) {
    if (!model.parameters().contains(rec.name)) {
      throw DataError("checkpoint parameter '" + rec.name + "' does not exist in the model");
    }
    auto t = model.parameters().get(rec.name);
    const std::vector<std::size_t> shape(t.shape().begin(), t.shape().end());
    if (shape != rec.shape || rec.values.size() != t.size()) {
      throw DataError("checkpoint parameter '" + rec.name + "' has shape " + ad::shape_str(rec.shape) +
                      ", model expects " + ad::shape_str(t.shape()));
    }
    auto dst = t.mutable_values();
    std::copy(rec.values.begin(), rec.values.end(), dst.begin());
  }
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  io::ByteWriter w;
  w.put<std::uint32_t>(kMagic);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put_string(ckpt.kind);
  w.put<std::uint64_t>(ckpt.seed);
  w.put_string(model::to_json(ckpt.config).dump());
  w.put<std::uint64_t>(ckpt.params.size());
  for (const auto& p : ckpt.params) {
    w.put_string(p.name);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(p.shape.size()));
    for (auto d : p.shape) w.put<std::uint64_t>(d);
    w.put<std::uint64_t>(p.values.size());
    w.put_all<double>(p.values);
  }
  return std::move(w.bytes());
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  io::ByteReader r(bytes, "checkpoint");
  if (r.get<std::uint32_t>() != kMagic) throw DataError("checkpoint: bad magic");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint: version " + std::to_string(version) + ", expected " +
                    std::to_string(kCheckpointVersion));
  }
  Checkpoint c;
  c.kind = r.get_string();
  c.seed = r.get<std::uint64_t>();
  try {
    c.config = model::model_config_from_json(nlohmann::json::parse(r.get_string()));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint: bad config: " + std::string(e.what()));
  } catch (const UsageError& e) {
    throw DataError("checkpoint: bad config: " + std::string(e.what()));
  }
  const auto n = r.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < n; ++i) {
    ParamRecord p;
    p.name = r.get_string();
    const auto rank = r.get<std::uint32_t>();
    std::size_t count = 1;
    for (std::uint32_t k = 0; k < rank; ++k) count *= p.shape.emplace_back(r.get<std::uint64_t>());
    const auto stored = r.get<std::uint64_t>();
    if (stored != count) throw DataError("checkpoint: record '" + p.name + "' size does not match its shape");
    p.values = r.get_all<double>(count);
    c.params.push_back(std::move(p));
  }
  r.expect_done();
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  io::write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(io::read_file(path)); }

std::vector<std::string> config_differences(const nlohmann::json& a, const nlohmann::json& b,
                                            const std::string& prefix) {
  std::vector<std::string> diff;
  for (auto it = a.begin(); it != a.end(); ++it) {
    const std::string key = prefix + it.key();
    if (!b.contains(it.key())) {
      diff.push_back(key);
    } else if (it->is_object() && b[it.key()].is_object()) {
      auto sub = config_differences(*it, b[it.key()], key + ".");
      diff.insert(diff.end(), sub.begin(), sub.end());
    } else if (*it != b[it.key()]) {
      diff.push_back(key);
    }
  }
  for (auto it = b.begin(); it != b.end(); ++it) {
    if (!a.contains(it.key())) diff.push_back(prefix + it.key());
  }
  return diff;
}

}  // namespace choir::train
