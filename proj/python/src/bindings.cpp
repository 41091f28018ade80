#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "choir/cli/app.hpp"
#include "choir/data/dataset.hpp"
#include "choir/error.hpp"
#include "choir/eval/metrics.hpp"
#include "choir/geometry/propagation.hpp"
#include "choir/io/binary.hpp"
#include "choir/model/model.hpp"
#include "choir/train/checkpoint.hpp"
#include "choir/train/trainer.hpp"

namespace py = pybind11;
using namespace choir;

namespace {

py::array_t<double> array(const std::vector<double>& v, std::vector<py::ssize_t> shape) {
  py::array_t<double> out(shape);
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::array_t<std::uint8_t> array(const std::vector<std::uint8_t>& v, std::vector<py::ssize_t> shape) {
  py::array_t<std::uint8_t> out(shape);
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

geometry::Points to_points(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2 || a.shape(1) != 3) throw ShapeError("points must have shape (n, 3)");
  geometry::Points pts;
  const auto* d = a.data();
  for (py::ssize_t i = 0; i < a.shape(0); ++i) pts.emplace_back(d[3 * i], d[3 * i + 1], d[3 * i + 2]);
  return pts;
}

py::dict sample_dict(const data::SyntheticSample& s) {
  const auto& c = s.config;
  const auto frames = static_cast<py::ssize_t>(s.spec.frames);
  std::vector<double> cloud;
  for (const auto& p : s.cloud) cloud.insert(cloud.end(), {p.x(), p.y(), p.z()});
  std::vector<double> motion;
  for (const auto& pose : s.trajectory) {
    motion.insert(motion.end(), {pose.t.x(), pose.t.y(), pose.t.z()});
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) motion.push_back(pose.R(a, b));
  }
  py::dict d;
  d["label"] = s.label();
  d["class_name"] = std::string(data::class_name(s.spec.cls));
  d["mode"] = std::string(data::mode_name(data::interaction_info(s.spec.cls).mode));
  d["seed"] = s.spec.seed;
  d["contact_window"] = py::make_tuple(s.spec.t_on, s.spec.t_off);
  d["grid"] = array(s.grid, {frames, static_cast<py::ssize_t>(c.H1), static_cast<py::ssize_t>(c.W1),
                             static_cast<py::ssize_t>(data::kObservationChannels)});
  d["trajectory"] = array(motion, {frames, 12});
  d["cloud"] = array(cloud, {static_cast<py::ssize_t>(c.N), 3});
  d["affordance"] = array(s.affordance, {static_cast<py::ssize_t>(c.N)});
  d["red"] = s.seed_regions.red;
  d["blue"] = s.seed_regions.blue;
  d["contact"] = array(s.contact, {frames, static_cast<py::ssize_t>(c.V)});
  return d;
}

// Model restored from a checkpoint, predicting on stored sample records.
class Predictor {
 public:
  explicit Predictor(const std::string& checkpoint) {
    const auto ckpt = train::load_checkpoint(checkpoint);
    if (ckpt.kind != "model") throw DataError(checkpoint + ": expected a model checkpoint");
    model_ = std::make_unique<model::ChoirModel>(ckpt.config, ckpt.seed);
    train::restore(*model_, ckpt);
  }

  py::dict predict(const std::string& record, std::size_t start) const {
    const auto& cfg = model_->config();
    const auto sample = data::decode_sample(io::read_file(record));
    train::check_compatible(cfg, sample.config, cfg.T);
    if (start > data::max_clip_start(sample.spec.frames, cfg.T)) throw UsageError("start leaves fewer than T frames");
    const auto clip = data::extract_clip(sample, data::clip_frames(sample.spec.frames, cfg.T, start));
    ad::NoGradScope ng;
    const auto out = model_->forward(train::make_input(cfg, clip, sample));
    const auto vec = [](const ad::Tensor& t) { return std::vector<double>(t.values().begin(), t.values().end()); };
    py::dict d;
    d["affordance"] = array(vec(out.phi_a), {static_cast<py::ssize_t>(cfg.N)});
    d["contact"] = array(vec(out.phi_c), {static_cast<py::ssize_t>(cfg.T), static_cast<py::ssize_t>(cfg.V)});
    d["logits"] = array(vec(out.phi_s), {static_cast<py::ssize_t>(out.phi_s.size())});
    return d;
  }

  std::string config_json() const { return model::to_json(model_->config()).dump(); }

 private:
  std::unique_ptr<model::ChoirModel> model_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Egocentric interaction grounding core";
  m.attr("__version__") = CHOIR_VERSION;

  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs one CLI invocation in process; returns (exit code, stdout, stderr).");

  m.def(
      "generate_sample",
      [](const std::string& cls, std::uint64_t seed, std::size_t T, std::size_t H1, std::size_t W1, std::size_t N,
         std::size_t V) {
        data::GeneratorConfig g{data::frames_for(T), H1, W1, N, V};
        return sample_dict(data::generate_scenario(data::make_spec(data::class_from_name(cls), g.frames, T, seed), g));
      },
      py::arg("cls"), py::arg("seed"), py::arg("T") = 8, py::arg("H1") = 4, py::arg("W1") = 4, py::arg("N") = 256,
      py::arg("V") = 512, "Generates one synthetic scenario.");
  m.def(
      "load_sample", [](const std::string& path) { return sample_dict(data::decode_sample(io::read_file(path))); },
      py::arg("path"), "Reads a sample record written by gen-data.");
  m.def("class_names", [] {
    std::vector<std::string> names;
    for (std::size_t c = 0; c < data::kClassCount; ++c) {
      names.emplace_back(data::class_name(static_cast<data::InteractionClass>(c)));
    }
    return names;
  });

  m.def(
      "propagate_affordance",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& points,
         const std::vector<std::size_t>& red, const std::vector<std::size_t>& blue, double alpha, std::size_t k) {
        geometry::PropagationOptions o;
        o.alpha = alpha;
        o.k = k;
        const auto pts = to_points(points);
        const auto s = geometry::propagate_affordance(pts, {red, blue}, o);
        return array(s, {static_cast<py::ssize_t>(s.size())});
      },
      py::arg("points"), py::arg("red"), py::arg("blue"), py::arg("alpha") = 0.995, py::arg("k") = 5);

  m.def(
      "auc", [](const std::vector<double>& s, const std::vector<std::uint8_t>& y) { return eval::auc(s, y); },
      py::arg("scores"), py::arg("labels"));
  m.def(
      "aiou", [](const std::vector<double>& p, const std::vector<double>& g) { return eval::aiou(p, g); },
      py::arg("pred"), py::arg("truth"));
  m.def(
      "sim", [](const std::vector<double>& p, const std::vector<double>& g) { return eval::sim(p, g); },
      py::arg("pred"), py::arg("truth"));
  m.def(
      "precision_recall",
      [](std::size_t tp, std::size_t fp, std::size_t fn) {
        const auto r = eval::precision_recall({tp, fp, fn});
        return py::make_tuple(r.precision, r.recall, r.f1);
      },
      py::arg("tp"), py::arg("fp"), py::arg("fn"));

  py::class_<Predictor>(m, "Predictor")
      .def(py::init<const std::string&>(), py::arg("checkpoint"))
      .def("predict", &Predictor::predict, py::arg("record"), py::arg("start") = 0)
      .def("config_json", &Predictor::config_json);
}
