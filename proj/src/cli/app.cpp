#include "choir/cli/app.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <optional>
#include <sstream>

#include "choir/data/dataset.hpp"
#include "choir/error.hpp"
#include "choir/eval/evaluate.hpp"
#include "choir/geometry/mesh.hpp"
#include "choir/geometry/propagation.hpp"
#include "choir/io/binary.hpp"
#include "choir/io/ply.hpp"
#include "choir/train/checkpoint.hpp"
#include "choir/train/trainer.hpp"
#include "json.hpp"

namespace choir::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kReportFormat = "choir-run-report";
constexpr int kReportVersion = 1;

json tool_json() { return {{"name", "choir"}, {"version", CHOIR_VERSION}}; }

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end || text.empty()) throw UsageError(what + ": not an unsigned integer: '" + text + "'");
  return v;
}

json load_json_file(const fs::path& path) {
  try {
    return json::parse(io::read_text(path));
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

// Layered run configuration: JSON file first, then explicit flags.
struct ConfigFile {
  json model = json::object();
  json train = json::object();
  json pretrain = json::object();
  std::optional<std::uint64_t> seed;

  static ConfigFile load(const std::string& path) {
    ConfigFile c;
    if (path.empty()) return c;
    const auto j = load_json_file(path);
    if (!j.is_object()) throw DataError(path + ": configuration must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key == "model") c.model = value;
      else if (key == "train") c.train = value;
      else if (key == "pretrain") c.pretrain = value;
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else throw DataError(path + ": unknown configuration key '" + key + "'");
    }
    return c;
  }
};

// Flag, then config file, then CHOIR_SEED, then 0.
std::uint64_t resolve_seed(const CLI::Option* flag, std::uint64_t flag_value, const ConfigFile& file) {
  if (flag->count()) return flag_value;
  if (file.seed) return *file.seed;
  if (const char* env = std::getenv("CHOIR_SEED"); env && *env) return parse_u64(env, "CHOIR_SEED");
  return 0;
}

void reject_unknown(const json& section, std::initializer_list<const char*> keys, const std::string& name) {
  for (const auto& [key, value] : section.items()) {
    if (std::find_if(keys.begin(), keys.end(), [&](const char* k) { return key == k; }) == keys.end()) {
      throw DataError("configuration section '" + name + "': unknown key '" + key + "'");
    }
  }
}

// Model dimensions default to the dataset's; explicit values are kept so a
// mismatch is reported rather than silently overridden.
model::ModelConfig resolve_model(json section, const data::Dataset& dataset) {
  const auto& g = dataset.config;
  const std::array<std::pair<const char*, std::size_t>, 6> dims = {
      {{"T", dataset.T}, {"H1", g.H1}, {"W1", g.W1}, {"N", g.N}, {"V", g.V}, {"D", data::kObservationChannels}}};
  for (const auto& [key, value] : dims) {
    if (!section.contains(key)) section[key] = value;
  }
  auto config = model::model_config_from_json(section);
  train::check_compatible(config, g, dataset.T);
  return config;
}

train::TrainOptions train_options_from(const json& j) {
  reject_unknown(j, {"epochs", "batch", "lr", "eval_every", "pair_instances"}, "train");
  train::TrainOptions o;
  o.epochs = j.value("epochs", o.epochs);
  o.batch = j.value("batch", o.batch);
  o.lr = j.value("lr", o.lr);
  o.eval_every = j.value("eval_every", o.eval_every);
  o.pair_instances = j.value("pair_instances", o.pair_instances);
  return o;
}

train::PretrainOptions pretrain_options_from(const json& j) {
  reject_unknown(j, {"epochs", "batch", "lr"}, "pretrain");
  train::PretrainOptions o;
  o.epochs = j.value("epochs", o.epochs);
  o.batch = j.value("batch", o.batch);
  o.lr = j.value("lr", o.lr);
  return o;
}

json dataset_json(const std::string& path, const data::Dataset& d) {
  json splits = json::object();
  for (const auto& s : d.splits) splits[s.name] = s.samples.size();
  return {{"path", path}, {"suite_seed", d.suite_seed}, {"splits", splits}};
}

void write_report(const fs::path& path, const json& report, double seconds, std::size_t epochs) {
  io::write_text(path, report.dump(2) + "\n");
  // Wall-clock lives beside the report so reruns stay byte-identical.
  json timing = {{"wall_seconds", seconds}};
  if (epochs > 0) timing["seconds_per_epoch"] = seconds / static_cast<double>(epochs);
  auto sidecar = path;
  sidecar += ".timing.json";
  io::write_text(sidecar, timing.dump(2) + "\n");
}

fs::path default_report(const std::string& report, const std::string& out) {
  return report.empty() ? fs::path(out + ".json") : fs::path(report);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

void load_model(const std::string& path, std::unique_ptr<model::ChoirModel>& model) {
  const auto ckpt = train::load_checkpoint(path);
  if (ckpt.kind != "model") throw DataError(path + ": expected a model checkpoint, found '" + ckpt.kind + "'");
  model = std::make_unique<model::ChoirModel>(ckpt.config, ckpt.seed);
  train::restore(*model, ckpt);
}

// ---- gen-data ----

struct GenDataArgs {
  std::string out;
  std::uint64_t seed = 0;
  std::size_t train = 96, val = 32, T = 8, frames = 0;
  data::GeneratorConfig generator;
  bool force = false;
  CLI::Option* seed_flag = nullptr;
};

int gen_data(const GenDataArgs& a, std::ostream& out) {
  const auto seed = resolve_seed(a.seed_flag, a.seed, {});
  auto g = a.generator;
  g.frames = a.frames ? a.frames : data::frames_for(a.T);
  const fs::path dir(a.out);
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!a.force) throw UsageError("output directory is not empty (use --force to replace a dataset): " + a.out);
    if (!fs::exists(dir / "manifest.json")) {
      throw UsageError("--force only replaces an existing dataset; no manifest.json in " + a.out);
    }
    fs::remove_all(dir);
  }
  const auto dataset = data::standard_suite(seed, a.train, a.val, g, a.T);
  data::write_dataset(dataset, dir);

  out << "wrote " << a.train << " train + " << a.val << " val samples to " << a.out << " (seed " << seed << ")\n";
  out << std::left << std::setw(12) << "class";
  for (const auto& s : dataset.splits) out << std::right << std::setw(7) << s.name;
  out << "\n";
  for (std::size_t c = 0; c < data::kClassCount; ++c) {
    out << std::left << std::setw(12) << data::class_name(static_cast<data::InteractionClass>(c));
    for (const auto& s : dataset.splits) {
      const auto n = std::count_if(s.samples.begin(), s.samples.end(), [&](const auto& x) { return x.label() == c; });
      out << std::right << std::setw(7) << n;
    }
    out << "\n";
  }
  return kExitOk;
}

// ---- pretrain-motion ----

struct PretrainArgs {
  std::string data, out, report, config;
  std::size_t epochs = 0, batch = 0;
  double lr = 0.0;
  std::uint64_t seed = 0;
  CLI::Option *seed_flag = nullptr, *epochs_flag = nullptr, *batch_flag = nullptr, *lr_flag = nullptr;
};

int pretrain_motion(const PretrainArgs& a, std::ostream& out) {
  const auto file = ConfigFile::load(a.config);
  const auto dataset = data::read_dataset(a.data);
  const auto config = resolve_model(file.model, dataset);
  auto options = pretrain_options_from(file.pretrain);
  if (a.epochs_flag->count()) options.epochs = a.epochs;
  if (a.batch_flag->count()) options.batch = a.batch;
  if (a.lr_flag->count()) options.lr = a.lr;
  options.seed = resolve_seed(a.seed_flag, a.seed, file);

  const auto t0 = std::chrono::steady_clock::now();
  model::ChoirModel model(config, options.seed);
  const auto result = train::pretrain_motion(model, dataset.split("train").samples, options);
  const double seconds = seconds_since(t0);

  // The frozen appearance weights travel with the motion encoder they were
  // aligned against.
  auto ckpt = train::snapshot(model, "motion", options.seed, enc::kMotionPrefix);
  const auto appearance = train::snapshot(model, "motion", options.seed, enc::kAppearancePrefix);
  ckpt.params.insert(ckpt.params.end(), appearance.params.begin(), appearance.params.end());
  train::save_checkpoint(a.out, ckpt);

  const auto smoothed = train::smooth(result.epoch_loss, 5);
  const double drop = result.epoch_loss.empty() || result.epoch_loss.front() == 0.0
                          ? 0.0
                          : 1.0 - smoothed.back() / result.epoch_loss.front();
  const json report = {
      {"format", kReportFormat},
      {"version", kReportVersion},
      {"command", "pretrain-motion"},
      {"tool", tool_json()},
      {"config", {{"model", model::to_json(config)}, {"pretrain", train::to_json(options)}}},
      {"seeds", {{"model", options.seed}, {"sampling", options.seed}, {"data", dataset.suite_seed}}},
      {"data", dataset_json(a.data, dataset)},
      {"checkpoint", a.out},
      {"loss_curve", result.epoch_loss},
      {"smoothed_loss", smoothed},
      {"smoothed_drop", drop},
  };
  const auto report_path = default_report(a.report, a.out);
  write_report(report_path, report, seconds, options.epochs);
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
    out << "epoch " << (e + 1) << "  alignment " << fixed(result.epoch_loss[e], 6) << "\n";
  }
  out << "smoothed drop " << fixed(100.0 * drop, 1) << "%  checkpoint " << a.out << "  report "
      << report_path.string() << "\n";
  return kExitOk;
}

// ---- train ----

struct TrainArgs {
  std::string data, motion_ckpt, out, report, config;
  std::size_t epochs = 0, batch = 0, eval_every = 0;
  double lr = 0.0;
  std::uint64_t seed = 0;
  bool no_motion_ckpt = false, no_pairing = false;
  model::Ablation ablation;
  CLI::Option *seed_flag = nullptr, *epochs_flag = nullptr, *batch_flag = nullptr, *lr_flag = nullptr,
              *eval_flag = nullptr;
};

// Mean theta_c motion/appearance gradient ratio over the classes of one mode.
double modulation_ratio(const train::GradientTable& t, data::Mode mode) {
  const auto find = [&](const std::string& row) {
    const auto it = std::find(t.rows.begin(), t.rows.end(), row);
    if (it == t.rows.end()) throw UsageError("gradient table has no row " + row);
    return static_cast<std::size_t>(it - t.rows.begin());
  };
  const auto motion = find("theta_c/motion"), appearance = find("theta_c/appearance");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < data::kClassCount; ++c) {
    if (data::interaction_info(static_cast<data::InteractionClass>(c)).mode != mode || t.samples[c] == 0) continue;
    if (t.norm[appearance][c] == 0.0) continue;
    sum += t.norm[motion][c] / t.norm[appearance][c];
    ++n;
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

void apply_motion_checkpoint(model::ChoirModel& model, const std::string& path) {
  const auto ckpt = train::load_checkpoint(path);
  if (ckpt.kind != "motion") throw DataError(path + ": expected a motion checkpoint, found '" + ckpt.kind + "'");
  const auto& want = static_cast<const enc::EncoderConfig&>(model.config());
  const auto& have = static_cast<const enc::EncoderConfig&>(ckpt.config);
  const auto diff = train::config_differences(model::to_json(have), model::to_json(want));
  if (!diff.empty()) {
    std::string names;
    for (const auto& d : diff) names += (names.empty() ? "" : ", ") + d;
    throw DataError(path + ": motion checkpoint does not match the run configuration in: " + names);
  }
  train::restore(model, ckpt);
}

int train_cmd(TrainArgs a, std::ostream& out) {
  const auto file = ConfigFile::load(a.config);
  const auto dataset = data::read_dataset(a.data);
  auto model_json = file.model;
  const auto flags = model::to_json(a.ablation);
  for (const auto& [key, value] : flags.items()) {
    if (value.get<bool>()) model_json["ablation"][key] = true;
  }
  const auto config = resolve_model(model_json, dataset);
  auto options = train_options_from(file.train);
  if (a.epochs_flag->count()) options.epochs = a.epochs;
  if (a.batch_flag->count()) options.batch = a.batch;
  if (a.lr_flag->count()) options.lr = a.lr;
  if (a.eval_flag->count()) options.eval_every = a.eval_every;
  if (a.no_pairing) options.pair_instances = false;
  options.seed = resolve_seed(a.seed_flag, a.seed, file);

  const bool needs_motion = !config.ablation.disable_motion && !config.ablation.online_motion_pretrain;
  if (a.motion_ckpt.empty() && needs_motion && !a.no_motion_ckpt) {
    throw UsageError("train needs --motion-ckpt (or --no-motion-ckpt to start from a random motion encoder)");
  }

  const auto t0 = std::chrono::steady_clock::now();
  model::ChoirModel model(config, options.seed);
  if (!a.motion_ckpt.empty()) apply_motion_checkpoint(model, a.motion_ckpt);
  const auto& val = dataset.split("val").samples;
  const auto result = train::train(model, dataset.split("train").samples, &val, options, [&](const auto& e) {
    out << "epoch " << e.epoch << "  lr " << format_number(e.lr) << "  loss " << fixed(e.total, 4) << " (a "
        << fixed(e.affordance, 4) << ", c " << fixed(e.contact, 4) << ", s " << fixed(e.semantic, 4) << ")";
    if (e.val) out << "  val F1 " << fixed(e.val->f1, 3) << " acc " << fixed(e.val->accuracy, 3);
    out << "\n";
    out.flush();
  });
  const double seconds = seconds_since(t0);
  train::save_checkpoint(a.out, train::snapshot(model, "model", options.seed));

  json epochs = json::array();
  for (const auto& e : result.epochs) epochs.push_back(train::to_json(e));
  json report = {
      {"format", kReportFormat},
      {"version", kReportVersion},
      {"command", "train"},
      {"tool", tool_json()},
      {"config", {{"model", model::to_json(config)}, {"train", train::to_json(options)}}},
      {"seeds", {{"model", options.seed}, {"sampling", options.seed}, {"data", dataset.suite_seed}}},
      {"data", dataset_json(a.data, dataset)},
      {"motion_checkpoint", a.motion_ckpt},
      {"checkpoint", a.out},
      {"epochs", epochs},
      {"initial", eval::to_json(result.initial->aggregate)},
      {"final", eval::to_json(*result.final, model::to_json(config))},
  };
  if (!result.epochs.empty()) {
    const auto& g = result.epochs.back().gradients;
    report["modulation_ratio"] = {{"body", modulation_ratio(g, data::Mode::Body)},
                                  {"hand", modulation_ratio(g, data::Mode::Hand)}};
  }
  const auto report_path = default_report(a.report, a.out);
  write_report(report_path, report, seconds, options.epochs);
  out << eval::format_table(result.final->aggregate);
  out << "val F1 " << fixed(result.initial->aggregate.f1, 3) << " -> " << fixed(result.final->aggregate.f1, 3)
      << "  checkpoint " << a.out << "  report " << report_path.string() << "\n";
  return kExitOk;
}

// ---- eval ----

struct EvalArgs {
  std::string data, ckpt, report, split = "val";
  bool oracle = false;
  double threshold = 0.5;
};

int eval_cmd(const EvalArgs& a, std::ostream& out) {
  const auto dataset = data::read_dataset(a.data);
  const auto& samples = dataset.split(a.split).samples;
  eval::EvalOptions options;
  options.T = dataset.T;
  options.contact_threshold = a.threshold;
  std::unique_ptr<model::ChoirModel> model;
  json config;
  eval::Predictor predictor;
  if (a.oracle) {
    predictor = eval::oracle_predictor();
    config = {{"predictor", "ground-truth"}};
  } else {
    if (a.ckpt.empty()) throw UsageError("eval needs --ckpt or --oracle");
    load_model(a.ckpt, model);
    train::check_compatible(model->config(), dataset.config, dataset.T);
    predictor = train::model_predictor(*model);
    config = {{"predictor", "model"}, {"checkpoint", a.ckpt}, {"model", model::to_json(model->config())}};
  }
  config["data"] = dataset_json(a.data, dataset);
  config["split"] = a.split;
  config["contact_threshold"] = a.threshold;
  const auto report = eval::evaluate(samples, predictor, options);
  const auto j = eval::to_json(report, config);
  eval::validate_metrics_report(j);
  if (!a.report.empty()) io::write_text(a.report, j.dump(2) + "\n");
  out << eval::format_table(report.aggregate);
  return kExitOk;
}

// ---- propagate ----

struct PropagateArgs {
  std::string ply, red, blue, out;
  double alpha = 0.995;
  std::size_t k = 5;
};

int propagate_cmd(const PropagateArgs& a, std::ostream& out) {
  auto ply = io::read_ply(a.ply);
  geometry::AffordanceSeed seed{parse_index_list(a.red), parse_index_list(a.blue)};
  seed.validate(ply.vertices.size());
  geometry::PropagationOptions options;
  options.alpha = a.alpha;
  options.k = a.k;
  ply.quality = geometry::propagate_affordance(ply.vertices, seed, options);
  ply.comments = {"choir propagate alpha " + format_number(a.alpha) + " k " + std::to_string(a.k)};
  io::write_ply(a.out, ply);
  out << "propagated " << seed.red.size() << " red / " << seed.blue.size() << " blue seeds over "
      << ply.vertices.size() << " points (alpha " << format_number(a.alpha) << ") -> " << a.out << "\n";
  return kExitOk;
}

// ---- export ----

struct ExportArgs {
  std::string ckpt, sample, out;
  std::size_t start = 0;
};

int export_cmd(const ExportArgs& a, std::ostream& out) {
  std::unique_ptr<model::ChoirModel> model;
  load_model(a.ckpt, model);
  const auto& config = model->config();
  const auto sample = data::decode_sample(io::read_file(a.sample));
  train::check_compatible(config, sample.config, config.T);
  if (a.start > data::max_clip_start(sample.spec.frames, config.T)) {
    throw UsageError("--start " + std::to_string(a.start) + " leaves fewer than T frames");
  }
  const auto clip = data::extract_clip(sample, data::clip_frames(sample.spec.frames, config.T, a.start));
  ad::NoGradScope no_grad;
  const auto pred = model->forward(train::make_input(config, clip, sample));

  fs::create_directories(a.out);
  const auto label = std::string(data::class_name(static_cast<data::InteractionClass>(sample.label())));
  io::PlyData cloud;
  cloud.vertices = sample.cloud;
  cloud.quality = std::vector<double>(pred.phi_a.values().begin(), pred.phi_a.values().end());
  cloud.comments = {"choir export affordance " + label};
  io::write_ply(fs::path(a.out) / "affordance.ply", cloud);

  const auto mesh = geometry::make_template_mesh(config.V);
  const auto contact = pred.phi_c.values();
  for (std::size_t t = 0; t < config.T; ++t) {
    io::PlyData frame;
    frame.vertices = mesh.vertices;
    frame.faces = mesh.faces;
    frame.quality = std::vector<double>(contact.begin() + static_cast<std::ptrdiff_t>(t * config.V),
                                        contact.begin() + static_cast<std::ptrdiff_t>((t + 1) * config.V));
    frame.comments = {"choir export contact " + label + " frame " + std::to_string(t)};
    std::ostringstream name;
    name << "contact_" << std::setw(2) << std::setfill('0') << t << ".ply";
    io::write_ply(fs::path(a.out) / name.str(), frame);
  }
  out << "wrote affordance.ply and " << config.T << " contact frames to " << a.out << "\n";
  return kExitOk;
}

}  // namespace

std::vector<std::size_t> parse_index_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) throw UsageError("empty entry in index list '" + text + "'");
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      out.push_back(parse_u64(item, "index"));
      continue;
    }
    const auto lo = parse_u64(item.substr(0, dash), "index"), hi = parse_u64(item.substr(dash + 1), "index");
    if (hi < lo) throw UsageError("descending range '" + item + "'");
    for (auto i = lo; i <= hi; ++i) out.push_back(i);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string format_number(double value) {
  std::array<char, 64> buf{};
  const auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), p);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Egocentric interaction grounding: data generation, training and evaluation", "choir"};
  app.set_version_flag("--version", std::string("choir ") + CHOIR_VERSION);
  app.require_subcommand(1);
  std::function<int()> action;

  GenDataArgs gen;
  auto* g = app.add_subcommand("gen-data", "Generate the seeded synthetic train/val suite");
  g->add_option("--out", gen.out, "Output directory")->required();
  gen.seed_flag = g->add_option("--seed", gen.seed, "Suite seed (default: CHOIR_SEED or 0)");
  g->add_option("--train", gen.train, "Training samples")->capture_default_str();
  g->add_option("--val", gen.val, "Validation samples")->capture_default_str();
  g->add_option("--T", gen.T, "Frames per model clip")->capture_default_str();
  g->add_option("--frames", gen.frames, "Raw frames per sample (default T+2)");
  g->add_option("--H1", gen.generator.H1, "Patch grid rows")->capture_default_str();
  g->add_option("--W1", gen.generator.W1, "Patch grid cols")->capture_default_str();
  g->add_option("--N", gen.generator.N, "Object points")->capture_default_str();
  g->add_option("--V", gen.generator.V, "Body mesh vertices")->capture_default_str();
  g->add_flag("--force", gen.force, "Replace an existing dataset");
  g->callback([&] { action = [&] { return gen_data(gen, out); }; });

  PretrainArgs pre;
  auto* p = app.add_subcommand("pretrain-motion", "Align the motion encoder with the frozen appearance embedding");
  p->add_option("--data", pre.data, "Dataset directory")->required();
  p->add_option("--out", pre.out, "Motion checkpoint to write")->required();
  p->add_option("--report", pre.report, "Run report (default <out>.json)");
  p->add_option("--config", pre.config, "JSON configuration file");
  pre.epochs_flag = p->add_option("--epochs", pre.epochs, "Epochs (default 30)");
  pre.batch_flag = p->add_option("--batch", pre.batch, "Batch size (default 8)");
  pre.lr_flag = p->add_option("--lr", pre.lr, "Learning rate (default 5e-3)");
  pre.seed_flag = p->add_option("--seed", pre.seed, "Seed (default: config, CHOIR_SEED or 0)");
  p->callback([&] { action = [&] { return pretrain_motion(pre, out); }; });

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train the full model");
  t->add_option("--data", tr.data, "Dataset directory")->required();
  t->add_option("--motion-ckpt", tr.motion_ckpt, "Pretrained motion checkpoint");
  t->add_flag("--no-motion-ckpt", tr.no_motion_ckpt, "Start from a randomly initialized motion encoder");
  t->add_option("--out", tr.out, "Model checkpoint to write")->required();
  t->add_option("--report", tr.report, "Run report (default <out>.json)");
  t->add_option("--config", tr.config, "JSON configuration file");
  tr.epochs_flag = t->add_option("--epochs", tr.epochs, "Epochs (default 100)");
  tr.batch_flag = t->add_option("--batch", tr.batch, "Batch size (default 8)");
  tr.lr_flag = t->add_option("--lr", tr.lr, "Peak learning rate (default 1e-4)");
  tr.eval_flag = t->add_option("--eval-every", tr.eval_every, "Validate every N epochs (0: first and last only)");
  tr.seed_flag = t->add_option("--seed", tr.seed, "Seed (default: config, CHOIR_SEED or 0)");
  t->add_flag("--no-instance-pairing", tr.no_pairing, "Use each clip's own object instance");
  t->add_flag("--disable-motion", tr.ablation.disable_motion, "Replace motion features with zeros");
  t->add_flag("--disable-affordance-branch", tr.ablation.disable_affordance_branch,
              "Contact block ignores affordance features");
  t->add_flag("--disable-tau", tr.ablation.disable_tau, "Freeze modulation tokens at one");
  t->add_flag("--disable-pe-t", tr.ablation.disable_pe_t, "Drop the temporal position encoding");
  t->add_flag("--disable-synergy", tr.ablation.disable_synergy, "Skip affordance refinement from contact");
  t->add_flag("--disable-semantic-head", tr.ablation.disable_semantic_head, "Drop semantic tokens and class loss");
  t->add_flag("--online-motion-pretrain", tr.ablation.online_motion_pretrain,
              "Add the alignment loss to the main objective");
  t->callback([&] { action = [&] { return train_cmd(tr, out); }; });

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
  e->add_option("--data", ev.data, "Dataset directory")->required();
  e->add_option("--ckpt", ev.ckpt, "Model checkpoint");
  e->add_option("--report", ev.report, "Metrics report to write");
  e->add_option("--split", ev.split, "Split name")->capture_default_str();
  e->add_option("--threshold", ev.threshold, "Contact probability threshold")->capture_default_str();
  e->add_flag("--oracle", ev.oracle, "Score the ground truth against itself");
  e->callback([&] { action = [&] { return eval_cmd(ev, out); }; });

  PropagateArgs pr;
  auto* q = app.add_subcommand("propagate", "Spread seed regions over a point cloud");
  q->add_option("--ply", pr.ply, "Input PLY")->required();
  q->add_option("--red", pr.red, "Red seed indices, e.g. 0,4-9")->required();
  q->add_option("--blue", pr.blue, "Blue seed indices")->required();
  q->add_option("--alpha", pr.alpha, "Propagation strength")->capture_default_str();
  q->add_option("--k", pr.k, "Blue neighbors per red point")->capture_default_str();
  q->add_option("--out", pr.out, "Output PLY")->required();
  q->callback([&] { action = [&] { return propagate_cmd(pr, out); }; });

  ExportArgs ex;
  auto* x = app.add_subcommand("export", "Write predicted affordance and contact as PLY files");
  x->add_option("--ckpt", ex.ckpt, "Model checkpoint")->required();
  x->add_option("--sample", ex.sample, "Sample record (.bin)")->required();
  x->add_option("--out", ex.out, "Output directory")->required();
  x->add_option("--start", ex.start, "Clip start frame")->capture_default_str();
  x->callback([&] { action = [&] { return export_cmd(ex, out); }; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& error) {
    const int code = app.exit(error, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    return action();
  } catch (const UsageError& error) {
    err << "error: " << error.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& error) {
    err << "numeric failure: " << error.what() << "\n";
    return kExitNumeric;
  } catch (const Error& error) {
    err << "data error: " << error.what() << "\n";
    return kExitData;
  } catch (const json::exception& error) {
    err << "data error: " << error.what() << "\n";
    return kExitData;
  } catch (const std::filesystem::filesystem_error& error) {
    err << "data error: " << error.what() << "\n";
    return kExitData;
  }
}

}  // namespace choir::cli
