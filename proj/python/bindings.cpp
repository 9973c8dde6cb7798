#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "selfmentor/augment.hpp"
#include "selfmentor/data.hpp"
#include "selfmentor/errors.hpp"
#include "selfmentor/evaluation.hpp"
#include "selfmentor/pipeline.hpp"
#include "selfmentor/synthmask.hpp"
#include "selfmentor/training.hpp"
#include "selfmentor/unet.hpp"

namespace py = pybind11;
using namespace selfmentor;

namespace {

using Array = py::array_t<float, py::array::c_style | py::array::forcecast>;

Image to_cpp(const Array& a) {
  if (a.ndim() != 2) throw ShapeError("expected a 2-D array, got " + std::to_string(a.ndim()) + " dimensions");
  Image im(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), im.pixels.begin());
  return im;
}

Array to_py(const Image& im) {
  Array a({im.height, im.width});
  std::copy(im.pixels.begin(), im.pixels.end(), a.mutable_data());
  return a;
}

py::object optional_mask(const std::optional<Mask>& y) { return y ? py::object(to_py(*y)) : py::object(py::none()); }

py::dict sample_dict(const Sample& s) {
  py::dict d;
  d["name"] = s.name;
  d["x"] = to_py(s.x);
  d["y"] = optional_mask(s.y);
  return d;
}

py::list sample_list(const std::vector<Sample>& samples) {
  py::list out;
  for (const Sample& s : samples) out.append(sample_dict(s));
  return out;
}

std::vector<Sample> samples_from(const std::vector<Array>& xs, const std::vector<Array>& ys) {
  if (xs.size() != ys.size()) throw ContractError("xs and ys differ in length");
  std::vector<Sample> out;
  for (std::size_t i = 0; i < xs.size(); ++i) out.push_back(Sample{"s" + std::to_string(i), to_cpp(xs[i]), to_cpp(ys[i])});
  return out;
}

py::dict phase_result(const PhaseResult& r) {
  py::dict d;
  d["epochs"] = r.epochs;
  d["best_epoch"] = r.best_epoch;
  d["best_validation"] = r.best_validation;
  d["restarts"] = r.restarts;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Few-shot segmentation with referee and reverse networks";

  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<CapacityError>(m, "CapacityError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);
  py::register_exception<PrerequisiteError>(m, "PrerequisiteError", PyExc_RuntimeError);

  m.def("derive_seed", py::overload_cast<std::uint64_t, std::string_view>(&derive_seed), py::arg("seed"),
        py::arg("name"));

  py::class_<UNetConfig>(m, "UNetConfig")
      .def(py::init([](int depth, int filters, int convs, int pool) {
             UNetConfig c{depth, filters};
             c.convs_per_block = convs;
             c.pool_size = pool;
             return c;
           }),
           py::arg("depth") = 3, py::arg("filters") = 5, py::arg("convs_per_block") = 2, py::arg("pool_size") = 4)
      .def_readwrite("depth", &UNetConfig::depth)
      .def_readwrite("filters", &UNetConfig::base_filters)
      .def_readwrite("convs_per_block", &UNetConfig::convs_per_block)
      .def_readwrite("pool_size", &UNetConfig::pool_size)
      .def("required_divisor", &UNetConfig::required_divisor)
      .def("parameter_count", [](const UNetConfig& c) { return parameter_count(c); })
      .def("__repr__", [](const UNetConfig& c) {
        return "UNetConfig(depth=" + std::to_string(c.depth) + ", filters=" + std::to_string(c.base_filters) + ")";
      });

  py::class_<UNet>(m, "UNet")
      .def(py::init([](const UNetConfig& c, std::uint64_t seed) { return UNet::build(c, seed); }), py::arg("config"),
           py::arg("seed") = 0)
      .def_property_readonly("config", &UNet::config)
      .def("parameter_count", &UNet::parameter_count)
      .def(
          "predict",
          [](const UNet& net, const Array& x) {
            Image im = to_cpp(x);
            py::gil_scoped_release release;
            NoGradGuard guard;
            Image out = to_image(net.forward(to_tensor(im)));
            py::gil_scoped_acquire acquire;
            return to_py(out);
          },
          py::arg("x"), "Soft prediction for one H x W image.")
      .def("save", [](const UNet& net, const std::filesystem::path& p) { save_checkpoint(net, p); })
      .def_static("load", &load_checkpoint)
      .def("serialize", [](const UNet& net) { return py::bytes(serialize_checkpoint(net)); })
      .def_static("deserialize", [](const py::bytes& b) { return deserialize_checkpoint(std::string(b)); })
      .def("clone", &UNet::clone);

  py::class_<CorruptionConfig>(m, "CorruptionConfig")
      .def(py::init<>())
      .def_static("defaults_for", &CorruptionConfig::defaults_for, py::arg("side"))
      .def_readwrite("min_thickness", &CorruptionConfig::min_thickness)
      .def_readwrite("max_thickness", &CorruptionConfig::max_thickness)
      .def_readwrite("noise_sigma", &CorruptionConfig::noise_sigma);

  py::class_<PhaseConfig>(m, "PhaseConfig")
      .def(py::init<>())
      .def_readwrite("lambda_ae", &PhaseConfig::lambda_ae)
      .def_readwrite("patience_pretrain", &PhaseConfig::patience_pretrain)
      .def_readwrite("patience_main", &PhaseConfig::patience_main)
      .def_readwrite("patience_referee", &PhaseConfig::patience_referee)
      .def_readwrite("synthetic_train_size", &PhaseConfig::synthetic_train_size)
      .def_readwrite("synthetic_val_size", &PhaseConfig::synthetic_val_size)
      .def_readwrite("max_epochs", &PhaseConfig::max_epochs)
      .def_property(
          "learning_rate", [](const PhaseConfig& p) { return p.optimizer.learning_rate; },
          [](PhaseConfig& p, double lr) { p.optimizer.learning_rate = lr; });

  py::class_<CurriculumSchedule>(m, "CurriculumSchedule")
      .def(py::init<>())
      .def_readwrite("start_fraction", &CurriculumSchedule::start_fraction)
      .def_readwrite("increment", &CurriculumSchedule::increment)
      .def_readwrite("steps", &CurriculumSchedule::steps)
      .def("rounds", &CurriculumSchedule::rounds)
      .def("fraction", &CurriculumSchedule::fraction)
      .def("active_count", &CurriculumSchedule::active_count);

  m.def("jaccard", [](const Array& y, const Array& y_hat, float t) { return jaccard(to_cpp(y), to_cpp(y_hat), t); },
        py::arg("y"), py::arg("y_hat"), py::arg("threshold") = 0.5f);
  m.def("threshold", [](const Array& x, float t) { return to_py(threshold(to_cpp(x), t)); }, py::arg("x"),
        py::arg("threshold") = 0.5f);

  m.def(
      "sample_pair_set",
      [](int n, int side, const std::optional<CorruptionConfig>& c, std::uint64_t seed) {
        py::list out;
        for (const MaskPair& p : sample_pair_set(n, side, c.value_or(CorruptionConfig::defaults_for(side)), seed)) {
          out.append(py::make_tuple(to_py(p.corrupted), to_py(p.clean)));
        }
        return out;
      },
      py::arg("n"), py::arg("side"), py::arg("corruption") = py::none(), py::arg("seed") = 0,
      "List of (corrupted, clean) mask pairs.");
  m.def("erode", [](const Array& mask, int t) { return to_py(erode_square(to_cpp(mask), t)); }, py::arg("mask"),
        py::arg("t"));

  m.def("synth_capsule_dataset", [](int n, int side, std::uint64_t seed) { return sample_list(synth_capsule_dataset(n, side, seed)); },
        py::arg("n"), py::arg("side") = 64, py::arg("seed") = 0);
  m.def(
      "suppress_background",
      [](const std::vector<Array>& images) {
        std::vector<Image> in;
        for (const Array& a : images) in.push_back(to_cpp(a));
        const BackgroundSuppression r = suppress_background(in);
        py::list processed;
        for (const Image& im : r.processed) processed.append(to_py(im));
        return py::make_tuple(to_py(r.background), processed);
      },
      py::arg("images"), "Returns (median background, processed images).");
  m.def(
      "augment_supervised",
      [](const std::vector<Array>& xs, const std::vector<Array>& ys, int size, std::uint64_t seed) {
        AugmentConfig cfg;
        cfg.output_set_size = size;
        Rng rng(seed);
        py::list out;
        for (const Sample& s : augment_supervised(samples_from(xs, ys), cfg, rng)) {
          out.append(py::make_tuple(to_py(s.x), to_py(*s.y)));
        }
        return out;
      },
      py::arg("xs"), py::arg("ys"), py::arg("size") = 100, py::arg("seed") = 0);

  m.def(
      "train_referee",
      [](UNet& ref, int side, const PhaseConfig& phase, std::uint64_t seed) {
        py::gil_scoped_release release;
        return train_referee(ref, side, CorruptionConfig::defaults_for(side), phase, seed);
      },
      py::arg("ref"), py::arg("side"), py::arg("phase"), py::arg("seed") = 0);
  m.def(
      "pretrain_trainee",
      [](UNet& tne, const std::vector<Array>& xs, const std::vector<Array>& ys, const std::vector<Array>& val_xs,
         const std::vector<Array>& val_ys, const PhaseConfig& phase, std::uint64_t seed) {
        const auto tr = samples_from(xs, ys), va = samples_from(val_xs, val_ys);
        py::gil_scoped_release release;
        return pretrain_trainee(tne, tr, va, phase, seed);
      },
      py::arg("tne"), py::arg("xs"), py::arg("ys"), py::arg("val_xs"), py::arg("val_ys"), py::arg("phase"),
      py::arg("seed") = 0);
  py::class_<PhaseResult>(m, "PhaseResult")
      .def_readonly("epochs", &PhaseResult::epochs)
      .def_readonly("best_epoch", &PhaseResult::best_epoch)
      .def_readonly("best_validation", &PhaseResult::best_validation)
      .def_readonly("restarts", &PhaseResult::restarts)
      .def("as_dict", &phase_result);
  m.def("select_top_k", &select_top_k, py::arg("scores"), py::arg("k"));

  m.def("command_names", &command_names);
  m.def(
      "run_command",
      [](const std::string& command, const std::filesystem::path& config, const std::vector<std::string>& overrides) {
        std::ostringstream out, err;
        int code = kExitOk;
        {
          py::gil_scoped_release release;
          try {
            code = run_command(command, load_run_config(config, overrides), out, err);
          } catch (const ConfigError& e) {
            err << e.what() << '\n';
            code = kExitConfig;
          }
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("command"), py::arg("config"), py::arg("overrides") = std::vector<std::string>{},
      "Runs one CLI command; returns (exit_code, stdout, stderr).");
}
