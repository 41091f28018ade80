#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "choir/cli/app.hpp"
#include "choir/data/scenario.hpp"
#include "choir/error.hpp"
#include "choir/eval/evaluate.hpp"
#include "choir/io/binary.hpp"
#include "choir/io/ply.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result choir_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = choir::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

// Fresh scratch directory per test case.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("choir_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& f) const { return (dir / f).string(); }
};

const std::vector<std::string> kSmall = {"--T", "4", "--H1", "2", "--W1", "2", "--N", "64", "--V", "192"};

std::string small_data(const Scratch& s, const std::string& name = "data", const std::string& seed = "1") {
  std::vector<std::string> args = {"gen-data", "--out", s / name, "--seed", seed, "--train", "12", "--val", "12"};
  args.insert(args.end(), kSmall.begin(), kSmall.end());
  REQUIRE(choir_run(args).code == 0);
  return s / name;
}

std::string small_config(const Scratch& s) {
  const auto path = s / "config.json";
  choir::io::write_text(path, R"({"model": {"C": 16, "heads": 2, "st_depth": 1}, "train": {"lr": 0.001}})");
  return path;
}

}  // namespace

TEST_CASE("gen-data writes a balanced, reproducible suite") {
  Scratch s("gen");
  const auto r = choir_run({"gen-data", "--out", s / "a", "--seed", "4", "--train", "12", "--val", "12", "--T", "4",
                            "--H1", "2", "--W1", "2", "--N", "64", "--V", "192"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("grasp") != std::string::npos);
  const auto manifest = json::parse(choir::io::read_text(s / "a/manifest.json"));
  CHECK(manifest["samples"].size() == 24);
  std::array<int, 12> per_class{};
  for (const auto& e : manifest["samples"]) {
    if (e["split"] == "train") ++per_class[static_cast<std::size_t>(choir::data::class_from_name(e["class"].get<std::string>()))];
  }
  for (int n : per_class) CHECK(n == 1);

  setenv("CHOIR_SEED", "4", 1);
  REQUIRE(choir_run({"gen-data", "--out", s / "b", "--train", "12", "--val", "12", "--T", "4", "--H1", "2", "--W1",
                     "2", "--N", "64", "--V", "192"})
              .code == 0);
  unsetenv("CHOIR_SEED");
  CHECK(choir::io::read_text(s / "a/manifest.json") == choir::io::read_text(s / "b/manifest.json"));

  CHECK(choir_run({"gen-data", "--out", s / "a", "--train", "12", "--val", "0"}).code == choir::cli::kExitUsage);
  CHECK(choir_run({"gen-data", "--out", s / "a", "--train", "12", "--val", "0", "--force"}).code == 0);
  CHECK(json::parse(choir::io::read_text(s / "a/manifest.json"))["samples"].size() == 12);
  fs::create_directories(s / "other");
  choir::io::write_text(s / "other/file.txt", "keep");
  CHECK(choir_run({"gen-data", "--out", s / "other", "--force"}).code == choir::cli::kExitUsage);
  CHECK(fs::exists(s / "other/file.txt"));
}

TEST_CASE("pretrain, train, eval and export pipeline") {
  Scratch s("pipeline");
  const auto data = small_data(s);
  const auto config = small_config(s);

  CHECK(choir_run({"pretrain-motion", "--data", s / "missing", "--out", s / "m.ckpt"}).code ==
        choir::cli::kExitData);
  REQUIRE(choir_run({"pretrain-motion", "--data", data, "--out", s / "m.ckpt", "--epochs", "3", "--config", config})
              .code == 0);
  const auto motion_bytes = choir::io::read_file(s / "m.ckpt");
  const auto pre = json::parse(choir::io::read_text(s / "m.ckpt.json"));
  CHECK(pre["loss_curve"].size() == 3);
  CHECK(pre["config"]["model"]["C"] == 16);
  CHECK(fs::exists(s / "m.ckpt.json.timing.json"));
  REQUIRE(choir_run({"pretrain-motion", "--data", data, "--out", s / "m.ckpt", "--epochs", "3", "--config", config})
              .code == 0);
  CHECK(choir::io::read_file(s / "m.ckpt") == motion_bytes);

  CHECK(choir_run({"train", "--data", data, "--motion-ckpt", s / "m.ckpt", "--out", s / "x.ckpt"}).code ==
        choir::cli::kExitData);
  CHECK(choir_run({"train", "--data", data, "--out", s / "x.ckpt", "--config", config}).code ==
        choir::cli::kExitUsage);
  const std::vector<std::string> train_args = {"train", "--data", data, "--motion-ckpt", s / "m.ckpt", "--out",
                                               s / "t.ckpt", "--epochs", "2", "--config", config};
  REQUIRE(choir_run(train_args).code == 0);
  const auto model_bytes = choir::io::read_file(s / "t.ckpt");
  const auto report_text = choir::io::read_text(s / "t.ckpt.json");
  const auto report = json::parse(report_text);
  REQUIRE(report["epochs"].size() == 2);
  for (const auto& e : report["epochs"]) {
    CHECK(e["gradients"].size() == 6 * 12);
  }
  CHECK(report["config"]["train"]["lr"] == 0.001);
  CHECK(report["config"]["model"]["ablation"]["disable_motion"] == false);
  REQUIRE(choir_run(train_args).code == 0);
  CHECK(choir::io::read_file(s / "t.ckpt") == model_bytes);
  CHECK(choir::io::read_text(s / "t.ckpt.json") == report_text);

  auto ablated = train_args;
  ablated[6] = s / "ablated.ckpt";
  ablated.push_back("--disable-motion");
  REQUIRE(choir_run(ablated).code == 0);
  const auto ab = json::parse(choir::io::read_text(s / "ablated.ckpt.json"));
  CHECK(ab["config"]["model"]["ablation"]["disable_motion"] == true);
  for (const auto& e : ab["epochs"]) {
    for (const auto& row : e["gradients"]) {
      if (row["layer"].get<std::string>().ends_with("/motion")) CHECK(row["norm"].get<double>() == 0.0);
    }
  }

  const auto ev = choir_run({"eval", "--data", data, "--ckpt", s / "t.ckpt", "--report", s / "metrics.json"});
  REQUIRE(ev.code == 0);
  for (const char* col : choir::eval::kMetricColumns) CHECK(ev.out.find(col) != std::string::npos);
  CHECK_NOTHROW(choir::eval::validate_metrics_report(json::parse(choir::io::read_text(s / "metrics.json"))));
  const auto oracle = choir_run({"eval", "--data", data, "--oracle", "--report", s / "oracle.json"});
  REQUIRE(oracle.code == 0);
  const auto o = json::parse(choir::io::read_text(s / "oracle.json"))["aggregate"];
  CHECK(o["F1"] == 1.0);
  CHECK(o["AUC"] == 1.0);
  CHECK(choir_run({"eval", "--data", data, "--ckpt", s / "m.ckpt"}).code == choir::cli::kExitData);

  REQUIRE(choir_run({"export", "--ckpt", s / "t.ckpt", "--sample", data + "/val/000002.bin", "--out", s / "ex"}).code ==
          0);
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(s / "ex")) {
    ++files;
    const auto ply = choir::io::read_ply(entry.path());
    REQUIRE(ply.quality.has_value());
    for (double q : *ply.quality) CHECK((q >= 0.0 && q <= 1.0));
  }
  CHECK(files == 4 + 1);
  const auto first = choir::io::read_text(s / "ex/contact_03.ply");
  REQUIRE(choir_run({"export", "--ckpt", s / "t.ckpt", "--sample", data + "/val/000002.bin", "--out", s / "ex"}).code ==
          0);
  CHECK(choir::io::read_text(s / "ex/contact_03.ply") == first);
}

TEST_CASE("propagate writes normalized scores and echoes alpha") {
  Scratch s("propagate");
  choir::io::PlyData ply;
  for (int i = 0; i < 20; ++i) ply.vertices.push_back({0.1 * i, 0.02 * (i % 3), 0.0});
  choir::io::write_ply(s / "in.ply", ply);

  REQUIRE(choir_run({"propagate", "--ply", s / "in.ply", "--red", "0,1", "--blue", "2-9", "--out", s / "out.ply"})
              .code == 0);
  const auto out = choir::io::read_ply(s / "out.ply");
  REQUIRE(out.quality.has_value());
  CHECK(out.comments.front().find("alpha 0.995") != std::string::npos);
  for (double q : *out.quality) CHECK((q >= 0.0 && q <= 1.0));
  CHECK((*out.quality)[0] == 1.0);
  CHECK((*out.quality)[15] == 0.0);

  REQUIRE(choir_run({"propagate", "--ply", s / "in.ply", "--red", "0,1", "--blue", "2-9", "--alpha", "0", "--out",
                     s / "zero.ply"})
              .code == 0);
  const auto zero = *choir::io::read_ply(s / "zero.ply").quality;
  for (std::size_t i = 0; i < zero.size(); ++i) CHECK(zero[i] == (i < 2 ? 1.0 : 0.0));

  CHECK(choir_run({"propagate", "--ply", s / "in.ply", "--red", "0", "--blue", "25", "--out", s / "bad.ply"}).code ==
        choir::cli::kExitData);
  CHECK(choir_run({"propagate", "--ply", s / "in.ply", "--red", "x", "--blue", "2", "--out", s / "bad.ply"}).code ==
        choir::cli::kExitUsage);
}

TEST_CASE("argument errors and helpers") {
  CHECK(choir_run({}).code == choir::cli::kExitUsage);
  CHECK(choir_run({"train", "--bogus"}).code == choir::cli::kExitUsage);
  CHECK(choir_run({"--help"}).code == choir::cli::kExitOk);
  CHECK(choir::cli::parse_index_list("5,1-3,2") == std::vector<std::size_t>{1, 2, 3, 5});
  CHECK_THROWS_AS(choir::cli::parse_index_list("3-1"), choir::UsageError);
  CHECK_THROWS_AS(choir::cli::parse_index_list("1,,2"), choir::UsageError);
  CHECK(choir::cli::format_number(0.995) == "0.995");
  CHECK(choir::cli::format_number(1e-4) == "1e-04");
}
