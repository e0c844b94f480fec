// Python bindings. Report-producing calls return the JSON text; the package
// wrapper turns it into dicts.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cirseq/bound_constants.hpp"
#include "cirseq/cir_process.hpp"
#include "cirseq/concentration.hpp"
#include "cirseq/config.hpp"
#include "cirseq/experiment.hpp"

namespace py = pybind11;
using namespace cirseq;

namespace {

py::array_t<double> to_array(std::span<const double> v) {
  return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

Procedure parse_bound(const std::string& name) {
  if (name == "b") return Procedure::B;
  if (name == "a") return Procedure::A;
  if (name == "2d") return Procedure::TwoD;
  throw std::invalid_argument("procedure must be 'b', 'a' or '2d'");
}

py::dict breakdown(const AccuracyBreakdown& b) {
  py::dict d;
  d["statistical_term"] = b.statistical_term;
  d["truncation_term"] = b.truncation_term;
  d["stage_tail_term"] = b.stage_tail_term;
  d["total"] = b.total();
  return d;
}

ExperimentConfig config_from(const std::map<std::string, std::string>& kv) {
  return make_config({KeyValues(kv.begin(), kv.end())});
}

}  // namespace

PYBIND11_MODULE(_cirseq, m) {
  m.doc() = "Truncated sequential estimation for the CIR process";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<ModelParams>(m, "ModelParams")
      .def(py::init([](double a, double b, double sigma, double x0) {
             ModelParams p{a, b, sigma, x0};
             p.validate();
             return p;
           }),
           py::arg("a"), py::arg("b"), py::arg("sigma"), py::arg("x0"))
      .def_readwrite("a", &ModelParams::a)
      .def_readwrite("b", &ModelParams::b)
      .def_readwrite("sigma", &ModelParams::sigma)
      .def_readwrite("x0", &ModelParams::x0)
      .def_property_readonly("alpha", &ModelParams::alpha)
      .def_property_readonly("beta", &ModelParams::beta)
      .def("__repr__", [](const ModelParams& p) {
        return "ModelParams(a=" + std::to_string(p.a) + ", b=" + std::to_string(p.b) +
               ", sigma=" + std::to_string(p.sigma) + ", x0=" + std::to_string(p.x0) + ")";
      });

  py::class_<ParamRegion>(m, "ParamRegion")
      .def(py::init<double, double, double, double, double, double>(), py::arg("a_min"),
           py::arg("a_max"), py::arg("b_min"), py::arg("b_max"), py::arg("sigma"), py::arg("x0"))
      .def_static("point", &ParamRegion::point)
      .def_readwrite("a_min", &ParamRegion::a_min)
      .def_readwrite("a_max", &ParamRegion::a_max)
      .def_readwrite("b_min", &ParamRegion::b_min)
      .def_readwrite("b_max", &ParamRegion::b_max)
      .def_readwrite("sigma", &ParamRegion::sigma)
      .def_readwrite("x0", &ParamRegion::x0);

  m.def("transition_mean", &transition_mean, py::arg("params"), py::arg("x"), py::arg("dt"));
  m.def("transition_variance", &transition_variance, py::arg("params"), py::arg("x"), py::arg("dt"));
  m.def("stationary_moment", &stationary_moment, py::arg("params"), py::arg("q"));
  m.def("transient_moment", &transient_moment, py::arg("params"), py::arg("t"), py::arg("q"));

  m.def(
      "sample_transitions",
      [](const ModelParams& p, double x, double dt, std::size_t n, std::uint64_t seed) {
        Rng rng(seed, 0);
        TransitionSampler draw(p, dt);
        std::vector<double> out(n);
        for (auto& v : out) v = draw(x, rng);
        return to_array(out);
      },
      py::arg("params"), py::arg("x"), py::arg("dt"), py::arg("n"), py::arg("seed"));

  m.def(
      "simulate_path",
      [](const ModelParams& p, double horizon, double step, std::uint64_t seed,
         std::uint64_t replicate) {
        Rng rng = replicate_stream(seed, replicate);
        const PathRecord path = simulate_path(p, horizon, step, rng);
        py::dict d;
        d["t"] = to_array(path.times());
        d["x"] = to_array(path.states());
        d["int_x"] = to_array(path.int_x());
        d["int_invx"] = to_array(path.int_invx());
        return d;
      },
      py::arg("params"), py::arg("horizon"), py::arg("step") = 0.01, py::arg("seed") = 0,
      py::arg("replicate") = 0);

  m.def("L_m", &L_m, py::arg("region"), py::arg("m"));
  m.def("mu_a_theta", &mu_a_theta, py::arg("a"), py::arg("b"), py::arg("sigma"), py::arg("r"));
  m.def("u_star", &u_star, py::arg("region"));
  m.def("r_threshold", &r_threshold, py::arg("region"), py::arg("b"), py::arg("T"), py::arg("delta"));
  m.def(
      "accuracy_b",
      [](const ParamRegion& g, double H, double T, int mm) { return breakdown(accuracy_b(g, H, T, mm)); },
      py::arg("region"), py::arg("H"), py::arg("T"), py::arg("m"));
  m.def(
      "accuracy_a",
      [](const ParamRegion& g, double H, double T, int mm, double r) {
        return breakdown(accuracy_a(g, H, T, mm, r));
      },
      py::arg("region"), py::arg("H"), py::arg("T"), py::arg("m"), py::arg("r"));
  m.def(
      "optimal_threshold",
      [](const std::string& procedure, const ParamRegion& g, double T, int mm, double r) {
        const ThresholdSolution s = optimal_threshold(parse_bound(procedure), g, T, mm, r);
        py::dict d;
        d["H"] = s.H;
        d["residual"] = s.residual;
        d["grid_H"] = s.grid_H;
        d["grid_cell"] = s.grid_cell;
        d["fixed_point_H"] = s.fixed_point_H;
        return d;
      },
      py::arg("procedure"), py::arg("region"), py::arg("T"), py::arg("m"), py::arg("r") = 1.0);
  m.def("poisson_solution", &poisson_solution, py::arg("params"), py::arg("r"), py::arg("x"));

  m.def(
      "_estimate", [](const std::map<std::string, std::string>& kv) { return run_experiment(config_from(kv)).json.dump(); },
      py::arg("config"), py::call_guard<py::gil_scoped_release>());
  m.def(
      "_compare",
      [](const std::map<std::string, std::string>& kv) {
        return compare_sequential_vs_fixed(config_from(kv)).json.dump();
      },
      py::arg("config"), py::call_guard<py::gil_scoped_release>());
  m.def(
      "_verify_bounds",
      [](const std::map<std::string, std::string>& kv) { return verify_bounds(config_from(kv)).json.dump(); },
      py::arg("config"), py::call_guard<py::gil_scoped_release>());
  m.def(
      "_simulate",
      [](const std::map<std::string, std::string>& kv) { return simulate(config_from(kv)).json.dump(); },
      py::arg("config"), py::call_guard<py::gil_scoped_release>());
  m.def(
      "_dump_constants",
      [](const std::map<std::string, std::string>& kv) { return dump_constants(config_from(kv)).dump(); },
      py::arg("config"));
}
