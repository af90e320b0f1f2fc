#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "chardemand/anomaly.hpp"
#include "chardemand/charnorm.hpp"
#include "chardemand/cli.hpp"
#include "chardemand/error.hpp"
#include "chardemand/gaussian_ident.hpp"
#include "chardemand/io.hpp"
#include "chardemand/market_model.hpp"
#include "chardemand/mv_demand.hpp"
#include "chardemand/panel.hpp"
#include "chardemand/scenario.hpp"

namespace py = pybind11;
using namespace chardemand;

namespace {

template <class E>
E parse_or_throw(std::optional<E> v, const char* what, const std::string& s) {
  if (!v) throw py::value_error(std::string("unknown ") + what + " '" + s + "'");
  return *v;
}

// Regression design from flat arrays: one row per observation.
RegressionDesign make_design(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                             const std::vector<std::size_t>& firm, const std::vector<std::size_t>& date) {
  const auto n = static_cast<std::size_t>(y.size());
  if (static_cast<std::size_t>(x.rows()) != n || firm.size() != n || date.size() != n)
    throw py::value_error("y, x, firm and date must have the same length");
  if (x.cols() % 2 != 0) throw py::value_error("x needs K level columns followed by K delta columns");
  RegressionDesign d;
  std::size_t nf = 0, nd = 0;
  for (std::size_t i = 0; i < n; ++i) {
    nf = std::max(nf, firm[i] + 1);
    nd = std::max(nd, date[i] + 1);
    d.rows.push_back({date[i], firm[i]});
  }
  for (std::size_t f = 0; f < nf; ++f) d.firms.push_back(std::to_string(f));
  d.dates = month_sequence("2000-01", nd);
  for (Eigen::Index k = 0; k < x.cols() / 2; ++k) d.k_names.push_back("c" + std::to_string(k));
  d.response = y;
  d.regressors = x;
  return d;
}

py::dict estimate_dict(const PanelEstimate& e) {
  py::dict out;
  out["method"] = std::string(to_string(e.method));
  out["coef_names"] = e.coef_names;
  out["coefficients"] = e.coefficients;
  out["std_errors"] = e.std_errors;
  out["t_stats"] = e.t_stats;
  out["effect_firms"] = e.effect_firms;
  out["alpha_hat"] = e.alpha_hat;
  out["intercept"] = e.intercept ? py::cast(*e.intercept) : py::none();
  out["r_squared"] = e.r_squared;
  out["n_obs"] = e.n_obs;
  out["dof"] = e.dof;
  out["residuals"] = e.residuals;
  return out;
}

AgentBeliefs beliefs_from(const Eigen::MatrixXd& c, const Eigen::VectorXd& beta, const Eigen::MatrixXd& sigma,
                          const Eigen::VectorXd& e2, double gamma, double budget) {
  return AgentBeliefs{c, beta, sigma, e2, gamma, budget};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Characteristic-demand asset pricing toolkit";
  m.attr("__version__") = kVersion;

  static py::exception<Error> exc(m, "Error", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(exc.ptr(), e.what());
    }
  });

  m.def("gaussian_rank_normalize",
        [](const std::vector<double>& v) { return gaussian_rank_normalize(v); },
        py::arg("values"), "Gaussian rank scores clipped to ±3; NaN stays NaN.");

  m.def("sorted_split_closed_form",
        [](double sy, double sz, double rho) { return sorted_split_closed_form({sy, sz, rho}); },
        py::arg("sigma_y"), py::arg("sigma_z"), py::arg("rho"));
  m.def(
      "sorted_split_monte_carlo",
      [](double sy, double sz, double rho, std::size_t n, std::uint64_t seed, unsigned threads) {
        const auto r = sorted_split_monte_carlo({sy, sz, rho}, n, seed, threads);
        return py::make_tuple(r.estimate, r.std_error);
      },
      py::arg("sigma_y"), py::arg("sigma_z"), py::arg("rho"), py::arg("n_samples"), py::arg("seed"),
      py::arg("threads") = 1);
  m.def(
      "dispersion_closed_form",
      [](const Eigen::VectorXd& mu, const Eigen::MatrixXd& omega, std::size_t t) {
        return dispersion_closed_form({mu, omega, t});
      },
      py::arg("mu"), py::arg("omega"), py::arg("t_len"));
  m.def(
      "dispersion_monte_carlo",
      [](const Eigen::VectorXd& mu, const Eigen::MatrixXd& omega, std::size_t t, std::size_t reps,
         std::uint64_t seed, unsigned threads) {
        const auto r = dispersion_monte_carlo({mu, omega, t}, reps, seed, threads);
        return py::make_tuple(r.estimate, r.std_error);
      },
      py::arg("mu"), py::arg("omega"), py::arg("t_len"), py::arg("n_reps"), py::arg("seed"),
      py::arg("threads") = 1);
  m.def(
      "identity_grid",
      [](std::size_t samples, std::size_t reps, std::size_t specs, std::uint64_t seed, unsigned threads) {
        IdentityGridOptions o;
        o.split_samples = samples;
        o.dispersion_reps = reps;
        o.dispersion_specs = specs;
        o.seed = seed;
        o.threads = threads;
        py::list out;
        for (const auto& c : identity_grid(o)) {
          py::dict d;
          d["name"] = c.name;
          d["estimate"] = c.estimate;
          d["target"] = c.target;
          d["std_error"] = c.std_error;
          d["tolerance"] = c.tolerance;
          d["passed"] = c.passed;
          out.append(d);
        }
        return out;
      },
      py::arg("split_samples") = 1000000, py::arg("dispersion_reps") = 2000, py::arg("dispersion_specs") = 5,
      py::arg("seed") = 20240101, py::arg("threads") = 1);

  m.def(
      "posterior_moments",
      [](const Eigen::MatrixXd& c, const Eigen::VectorXd& beta, const Eigen::MatrixXd& sigma,
         const Eigen::VectorXd& e2) {
        const auto r = posterior_moments(beliefs_from(c, beta, sigma, e2, 1.0, 1.0));
        return py::make_tuple(r.mean, r.covariance);
      },
      py::arg("char_matrix"), py::arg("beta_hat"), py::arg("sigma_beta"), py::arg("sigma_e2"));
  m.def(
      "invert_covariance",
      [](const Eigen::MatrixXd& c, const Eigen::VectorXd& beta, const Eigen::MatrixXd& sigma,
         const Eigen::VectorXd& e2) { return invert_covariance(beliefs_from(c, beta, sigma, e2, 1.0, 1.0)); },
      py::arg("char_matrix"), py::arg("beta_hat"), py::arg("sigma_beta"), py::arg("sigma_e2"));
  m.def(
      "optimal_weights",
      [](const Eigen::MatrixXd& c, const Eigen::VectorXd& beta, const Eigen::MatrixXd& sigma,
         const Eigen::VectorXd& e2, double gamma, double budget) {
        const auto s = optimal_weights(beliefs_from(c, beta, sigma, e2, gamma, budget));
        py::dict d;
        d["weights"] = s.weights;
        d["delta"] = s.delta;
        d["f1"] = s.f1;
        d["f2"] = s.f2;
        d["mean"] = s.moments.mean;
        d["covariance"] = s.moments.covariance;
        d["reconstruction_residual"] = s.reconstruction_residual;
        return d;
      },
      py::arg("char_matrix"), py::arg("beta_hat"), py::arg("sigma_beta"), py::arg("sigma_e2"),
      py::arg("gamma") = 1.0, py::arg("budget") = 1.0);

  m.def(
      "estimate",
      [](const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const std::vector<std::size_t>& firm,
         const std::vector<std::size_t>& date, const std::string& method, bool robust) {
        EstimationOptions o;
        o.robust_se = robust;
        const Method mt = parse_or_throw(parse_method(method), "method", method);
        return estimate_dict(estimate(make_design(y, x, firm, date), mt, o));
      },
      py::arg("y"), py::arg("x"), py::arg("firm"), py::arg("date"), py::arg("method") = "within",
      py::arg("robust_se") = false,
      "Panel regression of y on x = [levels | deltas] with firm fixed effects (within) or one intercept (pooled).");

  m.def(
      "long_short",
      [](const std::vector<double>& scores, const std::vector<double>& returns) {
        if (scores.size() != returns.size()) throw py::value_error("scores and returns differ in length");
        std::vector<std::size_t> tie(scores.size());
        for (std::size_t i = 0; i < tie.size(); ++i) tie[i] = i;
        const LegSplit s = split_halves(scores, tie);
        return py::make_tuple(leg_spread(returns, s), s.long_leg, s.short_leg);
      },
      py::arg("scores"), py::arg("returns"),
      "Median-split spread of returns; ties break by position.");

  m.def(
      "simulate",
      [](const std::string& config_json) {
        const SimulationConfig cfg = parse_simulation_config(nlohmann::json::parse(config_json));
        const Scenario sc = build_scenario(cfg);
        const auto eq = simulate_panel(sc.agents, sc.chars, sc.supply, cfg.variant, cfg.timing);
        const std::size_t T = sc.chars.n_dates(), N = sc.chars.n_firms(), K = sc.chars.n_chars();
        py::list scores;
        for (std::size_t k = 0; k < K; ++k) {
          Eigen::MatrixXd s(T, N);
          for (std::size_t t = 0; t < T; ++t)
            for (std::size_t n = 0; n < N; ++n)
              s(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(n)) = sc.chars.score(t, n, k);
          scores.append(s);
        }
        py::dict d;
        d["dates"] = eq.dates;
        d["firms"] = eq.firms;
        d["characteristics"] = sc.chars.k_names();
        d["scores"] = scores;
        d["log_prices"] = eq.log_prices;
        d["log_returns"] = eq.log_returns;
        d["true_beta"] = eq.true_beta;
        d["true_eta"] = eq.true_eta;
        d["true_alpha"] = eq.true_alpha;
        d["epsilon"] = eq.epsilon;
        return d;
      },
      py::arg("config_json"), "Simulates a market from a JSON config; returns panels keyed by name.");

  m.def(
      "run_cli", [](const std::vector<std::string>& args) { return cli::run(args); }, py::arg("args"),
      "Runs the command-line tool in-process and returns its exit code.");
}
