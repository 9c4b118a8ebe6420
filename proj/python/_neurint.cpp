#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <random>
#include <sstream>

#include "neurint/baselines.hpp"
#include "neurint/cli.hpp"
#include "neurint/eval.hpp"
#include "neurint/interpolators.hpp"
#include "neurint/io.hpp"
#include "neurint/training.hpp"

namespace py = pybind11;
using namespace neurint;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
  if (a.ndim() == 1) return Tensor({1, static_cast<std::size_t>(a.shape(0))}, {a.data(), a.data() + a.size()});
  if (a.ndim() != 2) throw ShapeError("expected a 1-D or 2-D array, got " + std::to_string(a.ndim()) + "-D");
  return Tensor({static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1))},
                {a.data(), a.data() + a.size()});
}

Array to_array(const Tensor& t) {
  const auto rows = static_cast<py::ssize_t>(t.rank() == 2 ? t.rows() : 1);
  const auto cols = static_cast<py::ssize_t>(t.rank() == 2 ? t.cols() : t.size());
  Array out({rows, cols});
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

py::dict report_dict(const EvalReport& r) {
  py::dict d;
  d["method"] = r.method;
  d["support"] = r.support;
  d["solver"] = r.solver;
  d["steps"] = r.steps;
  d["surrogate_fid"] = r.surrogate_fid;
  d["smoothness"] = r.smoothness;
  d["diversity"] = r.diversity;
  d["endpoint_disagreement"] = r.endpoint_disagreement;
  d["endpoint_mse"] = r.endpoint_mse;
  d["midpoint_residual"] = r.midpoint_residual;
  d["generation_seconds"] = r.generation_seconds;
  return d;
}

RunConfig config_from(const py::dict& overrides) {
  std::ostringstream text;
  for (const auto& [k, v] : overrides) text << py::str(k).cast<std::string>() << " = " << py::str(v).cast<std::string>() << '\n';
  std::istringstream is(text.str());
  RunConfig c = parse_run_config(is);
  c.validate();
  return c;
}

SolverConfig solver_from(const std::string& method, int steps) {
  SolverConfig s{solver_method_from_string(method), steps, 1.0};
  s.validate();
  return s;
}

// A trained or freshly initialized model with the run configuration it came from.
struct Model {
  RunConfig config;
  ModelBundle bundle;
};

Model create_model(const py::dict& overrides) {
  RunConfig c = config_from(overrides);
  return {c, ModelBundle::create(c.bundle_config(), c.seed)};
}

Dataset dataset_of(const Model& m) {
  return generate_dataset(m.config.dataset, m.config.dataset_size, m.config.dataset_seed);
}

}  // namespace

PYBIND11_MODULE(_neurint, m) {
  m.doc() = "Stochastic second-order latent ODE interpolation between data items.";

  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<CheckpointError>(m, "CheckpointError", PyExc_IOError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def(
      "generate_dataset",
      [](const std::string& name, std::size_t n, std::uint64_t seed) {
        const Dataset d = generate_dataset(name, n, seed);
        py::dict out;
        out["items"] = to_array(d.items);
        out["factors"] = to_array(d.factors);
        std::vector<bool> test(d.n);
        for (std::size_t i = 0; i < d.n; ++i) test[i] = d.split[i] == Split::Test;
        out["is_test"] = test;
        return out;
      },
      py::arg("name"), py::arg("n"), py::arg("seed") = 7);
  m.def("dataset_names", &dataset_names);
  m.def(
      "manifold_residuals", [](const std::string& name, const Array& x) { return manifold_residuals(name, to_tensor(x)); },
      py::arg("name"), py::arg("x"));

  m.def(
      "lerp", [](const Array& a, const Array& b, double t, double T) { return to_array(lerp(to_tensor(a), to_tensor(b), t, T)); },
      py::arg("a"), py::arg("b"), py::arg("t"), py::arg("total_time") = 1.0);
  m.def(
      "slerp", [](const Array& a, const Array& b, double t, double T) { return to_array(slerp(to_tensor(a), to_tensor(b), t, T)); },
      py::arg("a"), py::arg("b"), py::arg("t"), py::arg("total_time") = 1.0);
  m.def(
      "frechet_distance",
      [](const Array& a, const Array& b) {
        return frechet_gaussian_distance(fit_gaussian(to_tensor(a)), fit_gaussian(to_tensor(b)));
      },
      py::arg("a"), py::arg("b"), "Frechet distance between Gaussian fits of two row sets.");

  py::class_<Model>(m, "Model")
      .def(py::init(&create_model), py::arg("config") = py::dict(),
           "Fresh model; `config` holds run-configuration keys, e.g. {'dataset': 'ring2d', 'train_steps': 500}.")
      .def_static(
          "load", [](const std::filesystem::path& p) {
            Checkpoint c = load_checkpoint(p);
            return Model{c.config, std::move(c.bundle)};
          },
          py::arg("path"))
      .def(
          "save",
          [](const Model& self, const std::filesystem::path& p) {
            Checkpoint c;
            c.config = self.config;
            c.bundle = self.bundle;
            save_checkpoint(p, c);
          },
          py::arg("path"))
      .def_property_readonly("method", [](const Model& self) { return to_string(self.bundle.config.kind); })
      .def_property_readonly("latent_dim", [](const Model& self) { return self.bundle.config.latent_dim; })
      .def_property_readonly("config", [](const Model& self) {
        std::ostringstream os;
        write_run_config(os, self.config);
        return os.str();
      })
      .def(
          "train",
          [](Model& self, long steps) {
            const Dataset data = dataset_of(self);
            TrainConfig tc = self.config.train_config();
            if (steps > 0) tc.total_steps = steps;
            std::vector<LossReport> history;
            {
              py::gil_scoped_release release;
              if (self.bundle.config.kind == InterpolatorKind::NeurintPT) {
                const long total = tc.resolved_total_steps(data.indices(Support::Train).size());
                auto r = train_neurint_pt(data, self.bundle.config, tc, PretrainSchedule::from_budget(total));
                self.bundle = std::move(r.bundle);
                history = std::move(r.history);
              } else {
                auto r = train(self.bundle, data, tc);
                self.bundle = std::move(r.bundle);
                history = std::move(r.history);
              }
            }
            py::list out;
            for (const LossReport& l : history) {
              py::dict d;
              d["step"] = l.step;
              d["lambda"] = l.lambda;
              d["l_ae"] = l.reconstruction;
              d["l_gan_disc"] = l.discriminator;
              d["l_gan_gen"] = l.generator;
              out.append(d);
            }
            return out;
          },
          py::arg("steps") = 0, "Train in place; returns the per-step loss history.")
      .def(
          "interpolate",
          [](const Model& self, const Array& source, const Array& target, const std::vector<double>& times,
             std::uint64_t seed, const std::string& solver, int steps) {
            std::mt19937_64 rng(seed);
            const auto curve =
                generate_curve(self.bundle, to_tensor(source), to_tensor(target), solver_from(solver, steps), rng);
            py::list frames;
            for (double t : times) frames.append(to_array(curve.at(t)));
            return frames;
          },
          py::arg("source"), py::arg("target"), py::arg("times"), py::arg("seed") = 0, py::arg("solver") = "rk4",
          py::arg("steps") = 32, "Decoded points at each time; one array of shape (batch, dim) per time.")
      .def(
          "latent_path",
          [](const Model& self, const Array& source, const Array& target, const std::vector<double>& times,
             std::uint64_t seed, const std::string& solver, int steps) {
            std::mt19937_64 rng(seed);
            const auto curve =
                generate_curve(self.bundle, to_tensor(source), to_tensor(target), solver_from(solver, steps), rng);
            py::list out;
            for (double t : times) out.append(to_array(curve.latent_at(t)));
            return out;
          },
          py::arg("source"), py::arg("target"), py::arg("times"), py::arg("seed") = 0, py::arg("solver") = "rk4",
          py::arg("steps") = 32)
      .def(
          "evaluate",
          [](const Model& self, const std::string& support, std::size_t pairs) {
            const Dataset data = dataset_of(self);
            ReportSettings rs = self.config.report;
            rs.generation = self.config.generation;
            rs.generation.support = support_from_string(support);
            if (pairs > 0) rs.generation.pairs = pairs;
            EvalReport r;
            {
              py::gil_scoped_release release;
              r = evaluate(self.bundle, data, rs);
            }
            return report_dict(r);
          },
          py::arg("support") = "train", py::arg("pairs") = 0);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line tool in-process; returns (exit code, stdout, stderr).");
}
