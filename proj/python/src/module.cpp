#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "refcast/benchmarks.hpp"
#include "refcast/config.hpp"
#include "refcast/error.hpp"
#include "refcast/metrics.hpp"
#include "refcast/objective.hpp"
#include "refcast/pipeline.hpp"
#include "refcast/predictive.hpp"
#include "refcast/priors.hpp"
#include "refcast/solver.hpp"
#include "refcast/theory_mc.hpp"

namespace py = pybind11;
using namespace refcast;

namespace {

ModelSpec make_model(const std::string &variant, double lambda, const std::vector<double> &priors, double mu_bar,
                     double sigma2) {
  const auto v = parse_variant(variant);
  ModelSpec spec;
  spec.transform = v.transform;
  spec.penalty = v.penalty;
  spec.lambda = lambda;
  spec.priors = priors;
  spec.mu_bar = mu_bar;
  spec.sigma2 = sigma2;
  return spec;
}

} // namespace

PYBIND11_MODULE(_refcast, m) {
  m.doc() = "Regularized ensemble forecasting";

  static py::exception<Error> error(m, "RefcastError", PyExc_RuntimeError);
  static py::exception<InputError> input_error(m, "InputError", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InputError &e) {
      py::set_error(input_error, e.what());
    } catch (const Error &e) {
      py::set_error(error, e.what());
    }
  });

  m.def("variants", []() {
    std::vector<std::string> out;
    for (auto v : all_variants()) out.push_back(variant_name(v));
    return out;
  });

  m.def("softmax", [](const std::vector<double> &z) { return softmax(z); }, py::arg("z"));

  m.def(
      "objective",
      [](const std::vector<double> &w, const std::vector<double> &mu, const std::string &variant, double lambda,
         const std::vector<double> &priors, double mu_bar, double sigma2) {
        const auto p = objective(w, mu, make_model(variant, lambda, priors, mu_bar, sigma2));
        return py::dict(py::arg("total") = p.total, py::arg("variance_term") = p.variance_term,
                        py::arg("penalty_term") = p.penalty_term);
      },
      py::arg("w"), py::arg("mu"), py::arg("variant"), py::arg("lam"), py::arg("priors"), py::arg("mu_bar"),
      py::arg("sigma2") = 0.0);

  m.def(
      "solve",
      [](const std::vector<double> &mu, const std::string &variant, double lambda, const std::vector<double> &priors,
         double mu_bar, double sigma2, int restarts, std::uint64_t seed) {
        SolverConfig cfg;
        cfg.restarts = restarts;
        cfg.seed = seed;
        const auto w = solve(mu, make_model(variant, lambda, priors, mu_bar, sigma2), cfg);
        return py::dict(py::arg("weights") = w.weights, py::arg("objective") = w.objective_value,
                        py::arg("variance_term") = w.variance_term, py::arg("penalty_term") = w.penalty_term,
                        py::arg("penalty_share") = penalty_share(w), py::arg("converged") = w.converged,
                        py::arg("iterations") = w.iterations);
      },
      py::arg("mu"), py::arg("variant"), py::arg("lam"), py::arg("priors"), py::arg("mu_bar"),
      py::arg("sigma2") = 0.0, py::arg("restarts") = 4, py::arg("seed") = 0);

  m.def(
      "closed_form_identity_l2",
      [](const std::vector<double> &mu, double lambda, const std::vector<double> &priors, double mu_bar) {
        return closed_form_identity_l2(mu, make_model("identity-l2", lambda, priors, mu_bar, 0.0));
      },
      py::arg("mu"), py::arg("lam"), py::arg("priors"), py::arg("mu_bar"));

  m.def("ccr_raw_weights", [](const std::vector<double> &v2, double rho) { return ccr_raw_weights(v2, rho); },
        py::arg("v2"), py::arg("rho"));
  m.def(
      "ccr_prior", [](const std::vector<double> &v2, double rho) { return ccr_prior(v2, rho).s; }, py::arg("v2"),
      py::arg("rho"));

  m.def(
      "rmsse",
      [](const std::vector<double> &f, const std::vector<double> &y, const std::vector<double> &insample) {
        return rmsse(f, y, insample);
      },
      py::arg("forecasts"), py::arg("actuals"), py::arg("insample"));
  m.def("penalty_share", py::overload_cast<double, double>(&penalty_share), py::arg("penalty_term"),
        py::arg("variance_term"));
  m.def(
      "ps_bins",
      [](const std::vector<double> &s) {
        std::vector<std::string> out;
        for (auto b : ps_bins(s)) out.push_back(ps_bin_name(b));
        return out;
      },
      py::arg("shares"));
  m.def("delta_rmsse", &delta_rmsse, py::arg("benchmark"), py::arg("reference"));

  m.def("trimmed_mean", [](const std::vector<double> &mu, double f) { return trimmed_mean(mu, f); }, py::arg("mu"),
        py::arg("fraction") = 0.10);
  m.def("winsorized_mean", [](const std::vector<double> &mu, double f) { return winsorized_mean(mu, f); },
        py::arg("mu"), py::arg("fraction") = 0.15);

  m.def(
      "student_t",
      [](double point, double scale_core, double m_, double a) {
        PredictiveSpec s;
        s.family = PredictiveFamily::StudentTUnknownVar;
        s.point = point;
        s.scale_core = scale_core;
        s.m = m_;
        s.a = a;
        StudentTPredictive d(s);
        return py::dict(py::arg("mean") = d.mean(), py::arg("variance") = d.variance(),
                        py::arg("dof") = d.dof(), py::arg("precision") = d.precision(),
                        py::arg("q05") = d.quantile(0.05), py::arg("q95") = d.quantile(0.95));
      },
      py::arg("point"), py::arg("scale_core"), py::arg("m") = 1.0, py::arg("a") = 2.0);

  m.def(
      "simulate",
      [](const std::string &variant, const std::vector<int> &k, int replications, double sigma_y,
         std::uint64_t seed, bool simple_mean) {
        RateExperiment e;
        e.variant = parse_variant(variant);
        e.k_grid = k;
        e.replications = replications;
        e.sigma_y = sigma_y;
        e.seed = seed;
        const auto r = simple_mean ? mspe_simple_mean(e) : mspe_ref(e);
        py::list points;
        for (const auto &p : r.points) {
          points.append(py::dict(py::arg("k") = p.k, py::arg("mspe") = p.mspe, py::arg("se") = p.se,
                                 py::arg("excess") = p.excess));
        }
        return py::dict(py::arg("points") = points, py::arg("slope") = r.slope);
      },
      py::arg("variant") = "identity-l2", py::arg("k") = std::vector<int>{10, 40, 160},
      py::arg("replications") = 2000, py::arg("sigma_y") = 1.0, py::arg("seed") = 20240101,
      py::arg("simple_mean") = false);

  m.def(
      "run_pipeline",
      [](const std::string &config_path, const std::string &output_dir) {
        auto cfg = load_run_config(config_path);
        if (!output_dir.empty()) cfg.output_dir = output_dir;
        const auto res = run_pipeline(cfg);
        py::dict out;
        for (const auto &a : res.report.aggregates) out[py::str(a.method)] = a.mean_rmsse;
        return out;
      },
      py::arg("config_path"), py::arg("output_dir") = "");
}
