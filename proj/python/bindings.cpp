#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "cvarlearn/analysis.hpp"
#include "cvarlearn/config.hpp"
#include "cvarlearn/distributions.hpp"
#include "cvarlearn/errors.hpp"
#include "cvarlearn/experiment.hpp"
#include "cvarlearn/games.hpp"
#include "cvarlearn/learning.hpp"

namespace py = pybind11;
using namespace cvarlearn;

namespace {

Algorithm parse_algorithm(const std::string& name) {
  if (name == "algorithm1") return Algorithm::risk_averse_fo;
  if (name == "unbiased-fo") return Algorithm::unbiased_fo;
  throw DomainError("unknown algorithm '" + name + "'");
}

py::dict trace_to_dict(const RunTrace& trace) {
  const std::size_t n = trace.records.size();
  const std::size_t width = n ? trace.records[0].x.flatten().size() : 0;
  const std::size_t agents = trace.alphas.size();
  py::array_t<double> x({n, width});
  py::array_t<double> nu({n, agents});
  auto xv = x.mutable_unchecked<2>();
  auto nv = nu.mutable_unchecked<2>();
  for (std::size_t t = 0; t < n; ++t) {
    const auto flat = trace.records[t].x.flatten();
    for (std::size_t k = 0; k < width; ++k) xv(t, k) = flat[k];
    for (std::size_t i = 0; i < agents; ++i) nv(t, i) = trace.records[t].var_estimate[i];
  }
  py::dict out;
  out["game"] = trace.game;
  out["algorithm"] = trace.algorithm;
  out["alphas"] = trace.alphas;
  out["eta"] = trace.eta;
  out["seed"] = trace.seed;
  out["x"] = x;
  out["var_estimate"] = nu;
  out["final_action"] = trace.final_action.flatten();
  if (trace.has_error()) out["sq_error"] = py::array(py::cast(squared_errors(trace)));
  return out;
}

py::dict report_to_dict(const BoundReport& r) {
  py::dict d;
  d["bound"] = r.name;
  d["subject"] = r.subject;
  d["empirical"] = r.empirical;
  d["theoretical"] = r.theoretical;
  d["pass"] = r.pass;
  return d;
}

}  // namespace

PYBIND11_MODULE(_cvarlearn, m) {
  m.doc() = "Risk-averse CVaR learning in convex games";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<UnsupportedError>(m, "UnsupportedError", PyExc_NotImplementedError);
  py::register_exception<StateError>(m, "StateError", PyExc_RuntimeError);

  m.def(
      "empirical_var",
      [](std::vector<double> samples, double alpha) { return var_select(samples, RiskLevel(alpha)); },
      py::arg("samples"), py::arg("alpha"));
  m.def(
      "empirical_cvar",
      [](std::vector<double> samples, double alpha) { return var_cvar_select(samples, RiskLevel(alpha)).second; },
      py::arg("samples"), py::arg("alpha"));
  m.def(
      "uniform_var_cvar",
      [](double lower, double upper, double alpha) {
        return closed_form_var_cvar(ClosedFormDistribution::uniform(lower, upper), RiskLevel(alpha));
      },
      py::arg("lower"), py::arg("upper"), py::arg("alpha"));
  m.def("dkw_confidence_width", &dkw_confidence_width, py::arg("t"), py::arg("gamma"), py::arg("p_lower"));

  m.def("game_names", &game_names);
  m.def(
      "cournot_equilibrium",
      [](double a1, double a2) { return cournot_exact_ne(RiskLevel(a1), RiskLevel(a2)).flatten(); },
      py::arg("alpha1"), py::arg("alpha2"));

  m.def(
      "resolve_config", [](const std::string& text) { return config_to_json(validate_config_text(text)).dump(); },
      py::arg("config_json"));
  m.def(
      "run_trace",
      [](const std::string& text, const std::string& algorithm, std::size_t trial) {
        const auto cfg = validate_config_text(text);
        const auto game = make_game(cfg.game, cfg.game_params());
        RunTrace trace;
        {
          py::gil_scoped_release release;
          trace = run_algorithm(parse_algorithm(algorithm), *game, cfg.run_settings(trial_seed(cfg.seed, trial)));
        }
        return trace_to_dict(trace);
      },
      py::arg("config_json"), py::arg("algorithm") = "algorithm1", py::arg("trial") = 0);
  m.def(
      "run_experiment",
      [](const std::string& text, const std::string& output) {
        const auto cfg = validate_config_text(text);
        ExperimentOptions opts;
        if (!output.empty()) opts.output = output;
        OutputBundle bundle;
        {
          py::gil_scoped_release release;
          bundle = run_experiment(cfg, opts);
        }
        py::list reports;
        for (const auto& r : bundle.reports) reports.append(report_to_dict(r));
        return reports;
      },
      py::arg("config_json"), py::arg("output") = "");

  m.def("running_average", [](std::vector<double> s) { return running_average(s); }, py::arg("series"));
  m.def(
      "fit_rate", [](std::vector<double> s, std::size_t first, std::size_t last) { return fit_rate(s, first, last); },
      py::arg("series"), py::arg("first"), py::arg("last"));
}
