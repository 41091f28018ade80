#include "choir/data/dataset.hpp"

#include <cstdio>
#include <zlib.h>

#include "choir/io/binary.hpp"
#include "json.hpp"

namespace choir::data {

namespace {

constexpr std::uint32_t kRecordMagic = 0x52534843;  // "CHSR"
constexpr std::uint64_t kSplitStride = 1ULL << 20;
constexpr std::uint64_t kValOffset = 1ULL << 19;

nlohmann::json config_json(const GeneratorConfig& c) {
  return {{"frames", c.frames}, {"H1", c.H1}, {"W1", c.W1}, {"D", kObservationChannels}, {"N", c.N}, {"V", c.V}};
}

std::string record_name(const std::string& split, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06zu.bin", i);
  return split + "/" + buf;
}

}  // namespace

std::uint32_t crc32(const std::vector<std::uint8_t>& bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in bounded chunks.
  std::size_t off = 0;
  while (off < bytes.size()) {
    const std::size_t n = std::min<std::size_t>(bytes.size() - off, 1u << 30);
    crc = ::crc32(crc, bytes.data() + off, static_cast<uInt>(n));
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> encode_sample(const SyntheticSample& s) {
  const auto& c = s.config;
  io::ByteWriter w;
  w.put<std::uint32_t>(kRecordMagic);
  w.put<std::uint32_t>(kRecordVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(s.spec.cls));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(s.spec.archetype));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(s.spec.mode));
  w.put<std::uint64_t>(s.spec.seed);
  for (std::size_t v : {s.spec.frames, s.spec.t_on, s.spec.t_off, c.H1, c.W1, kObservationChannels, c.N, c.V}) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(v));
  }
  w.put_all<double>(s.grid);
  for (const auto& pose : s.trajectory) {
    for (int i = 0; i < 3; ++i) w.put<double>(pose.t[i]);
    for (int r = 0; r < 3; ++r)
      for (int k = 0; k < 3; ++k) w.put<double>(pose.R(r, k));
  }
  for (const auto& p : s.cloud)
    for (int i = 0; i < 3; ++i) w.put<double>(p[i]);
  w.put_all<double>(s.affordance);
  for (const auto* set : {&s.seed_regions.red, &s.seed_regions.blue}) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(set->size()));
    for (auto i : *set) w.put<std::uint32_t>(static_cast<std::uint32_t>(i));
  }
  w.put_raw(s.contact);
  return std::move(w.bytes());
}

SyntheticSample decode_sample(const std::vector<std::uint8_t>& bytes) {
  io::ByteReader r(bytes, "sample record");
  if (r.get<std::uint32_t>() != kRecordMagic) throw DataError("sample record: bad magic");
  const auto version = r.get<std::uint32_t>();
  if (version != kRecordVersion) {
    throw DataError("sample record: version " + std::to_string(version) + ", expected " +
                    std::to_string(kRecordVersion));
  }
  SyntheticSample s;
  const auto cls = r.get<std::uint32_t>(), arch = r.get<std::uint32_t>(), mode = r.get<std::uint32_t>();
  if (cls >= kClassCount || arch >= kArchetypeCount || mode > 1) throw DataError("sample record: bad class tags");
  s.spec.cls = static_cast<InteractionClass>(cls);
  s.spec.archetype = static_cast<Archetype>(arch);
  s.spec.mode = static_cast<Mode>(mode);
  s.spec.seed = r.get<std::uint64_t>();
  std::size_t dims[8];
  for (auto& d : dims) d = r.get<std::uint32_t>();
  s.spec.frames = dims[0];
  s.spec.t_on = dims[1];
  s.spec.t_off = dims[2];
  s.config = {dims[0], dims[3], dims[4], dims[6], dims[7]};
  if (dims[5] != kObservationChannels) throw DataError("sample record: unsupported channel count");
  s.spec.validate();
  s.config.validate();
  const auto& c = s.config;
  s.grid = r.get_all<double>(c.frames * c.patches() * kObservationChannels);
  s.trajectory.resize(c.frames);
  for (auto& pose : s.trajectory) {
    for (int i = 0; i < 3; ++i) pose.t[i] = r.get<double>();
    for (int a = 0; a < 3; ++a)
      for (int k = 0; k < 3; ++k) pose.R(a, k) = r.get<double>();
  }
  s.cloud.resize(c.N);
  for (auto& p : s.cloud)
    for (int i = 0; i < 3; ++i) p[i] = r.get<double>();
  s.affordance = r.get_all<double>(c.N);
  for (auto* set : {&s.seed_regions.red, &s.seed_regions.blue}) {
    const auto n = r.get<std::uint32_t>();
    for (auto v : r.get_all<std::uint32_t>(n)) set->push_back(v);
  }
  s.seed_regions.validate(c.N);
  auto contact = r.get_raw(c.frames * c.V);
  s.contact.assign(contact.begin(), contact.end());
  r.expect_done();
  return s;
}

const Split& Dataset::split(const std::string& name) const {
  for (const auto& s : splits)
    if (s.name == name) return s;
  throw DataError("dataset has no split '" + name + "'");
}

Dataset standard_suite(std::uint64_t seed, std::size_t train, std::size_t val, const GeneratorConfig& config,
                       std::size_t T) {
  if (train >= kValOffset || val >= kValOffset) throw UsageError("standard_suite: split too large");
  config.validate();
  if (config.frames < T + 2) throw UsageError("standard_suite: frames must be at least T + 2");
  Dataset d;
  d.suite_seed = seed;
  d.T = T;
  d.config = config;
  const std::uint64_t base = seed * kSplitStride;
  for (auto [name, count, begin] : {std::tuple{"train", train, base}, std::tuple{"val", val, base + kValOffset}}) {
    Split split{name, begin, {}};
    for (std::size_t i = 0; i < count; ++i) {
      const auto cls = static_cast<InteractionClass>(i % kClassCount);
      split.samples.push_back(generate_scenario(make_spec(cls, config.frames, T, begin + i), config));
    }
    d.splits.push_back(std::move(split));
  }
  return d;
}

std::vector<ManifestEntry> write_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (fs::exists(dir) && !fs::is_empty(dir)) throw UsageError("dataset directory is not empty: " + dir.string());
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
  nlohmann::json manifest;
  manifest["format"] = "choir-dataset";
  manifest["version"] = kManifestVersion;
  manifest["record_version"] = kRecordVersion;
  manifest["interaction_table_version"] = kInteractionTableVersion;
  manifest["suite_seed"] = dataset.suite_seed;
  manifest["T"] = dataset.T;
  manifest["generator"] = config_json(dataset.config);
  nlohmann::json classes = nlohmann::json::array();
  for (std::size_t c = 0; c < kClassCount; ++c) {
    const auto cls = static_cast<InteractionClass>(c);
    classes.push_back({{"index", c},
                       {"name", class_name(cls)},
                       {"archetype", archetype_name(interaction_info(cls).archetype)},
                       {"mode", mode_name(interaction_info(cls).mode)}});
  }
  manifest["class_map"] = classes;
  std::vector<ManifestEntry> entries;
  nlohmann::json splits = nlohmann::json::array(), samples = nlohmann::json::array();
  for (const auto& split : dataset.splits) {
    fs::create_directories(dir / split.name, ec);
    if (ec) throw DataError("cannot create " + (dir / split.name).string() + ": " + ec.message());
    splits.push_back({{"name", split.name},
                      {"count", split.samples.size()},
                      {"seed_begin", split.seed_begin},
                      {"seed_end", split.seed_begin + split.samples.size()}});
    for (std::size_t i = 0; i < split.samples.size(); ++i) {
      const auto& s = split.samples[i];
      auto bytes = encode_sample(s);
      ManifestEntry e{record_name(split.name, i), split.name, std::string(class_name(s.spec.cls)), s.spec.seed,
                      crc32(bytes), bytes.size()};
      io::write_file(dir / e.file, bytes);
      samples.push_back(
          {{"file", e.file}, {"split", e.split}, {"class", e.cls}, {"seed", e.seed}, {"crc32", e.crc32}, {"bytes", e.bytes}});
      entries.push_back(std::move(e));
    }
  }
  manifest["splits"] = splits;
  manifest["samples"] = samples;
  io::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  return entries;
}

namespace {

nlohmann::json load_manifest(const std::filesystem::path& dir) {
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(io::read_text(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("manifest.json: " + std::string(e.what()));
  }
  if (m.value("format", "") != "choir-dataset") throw DataError("manifest.json: not a choir dataset");
  if (m.value("version", 0u) != kManifestVersion) {
    throw DataError("manifest.json: version " + m.value("version", nlohmann::json(0)).dump() + ", expected " +
                    std::to_string(kManifestVersion));
  }
  if (m.value("record_version", 0u) != kRecordVersion) throw DataError("manifest.json: record version mismatch");
  if (m.value("interaction_table_version", 0u) != kInteractionTableVersion) {
    throw DataError("manifest.json: interaction table version mismatch");
  }
  return m;
}

}  // namespace

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& dir) {
  const auto m = load_manifest(dir);
  std::vector<ManifestEntry> entries;
  try {
    for (const auto& s : m.at("samples")) {
      entries.push_back({s.at("file").get<std::string>(), s.at("split").get<std::string>(),
                         s.at("class").get<std::string>(), s.at("seed").get<std::uint64_t>(),
                         s.at("crc32").get<std::uint32_t>(), s.at("bytes").get<std::size_t>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("manifest.json: " + std::string(e.what()));
  }
  return entries;
}

Dataset read_dataset(const std::filesystem::path& dir) {
  const auto m = load_manifest(dir);
  const auto entries = read_manifest(dir);
  Dataset d;
  try {
    d.suite_seed = m.at("suite_seed").get<std::uint64_t>();
    d.T = m.at("T").get<std::size_t>();
    const auto& g = m.at("generator");
    d.config = {g.at("frames").get<std::size_t>(), g.at("H1").get<std::size_t>(), g.at("W1").get<std::size_t>(),
                g.at("N").get<std::size_t>(), g.at("V").get<std::size_t>()};
    for (const auto& s : m.at("splits")) {
      d.splits.push_back({s.at("name").get<std::string>(), s.at("seed_begin").get<std::uint64_t>(), {}});
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("manifest.json: " + std::string(e.what()));
  }
  for (const auto& e : entries) {
    const auto bytes = io::read_file(dir / e.file);
    const auto crc = crc32(bytes);
    if (crc != e.crc32 || bytes.size() != e.bytes) {
      throw DataError("checksum mismatch for " + e.file + " (crc32 " + std::to_string(crc) + ", manifest " +
                      std::to_string(e.crc32) + ")");
    }
    auto sample = decode_sample(bytes);
    if (!(sample.config == d.config)) throw DataError(e.file + ": generator config differs from manifest");
    auto it = std::find_if(d.splits.begin(), d.splits.end(), [&](const Split& s) { return s.name == e.split; });
    if (it == d.splits.end()) throw DataError(e.file + ": unknown split " + e.split);
    it->samples.push_back(std::move(sample));
  }
  for (const auto& s : d.splits) {
    const auto declared = m.at("splits");
    for (const auto& j : declared) {
      if (j.at("name") == s.name && j.at("count").get<std::size_t>() != s.samples.size()) {
        throw DataError("manifest.json: split " + s.name + " declares " + j.at("count").dump() + " samples, found " +
                        std::to_string(s.samples.size()));
      }
    }
  }
  return d;
}

}  // namespace choir::data
