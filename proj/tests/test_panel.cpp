#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "chardemand/error.hpp"
#include "chardemand/market_model.hpp"
#include "chardemand/panel.hpp"
#include "chardemand/scenario.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "panel_oracles.hpp"

using namespace chardemand;
using Eigen::Index;

namespace {

SimulationConfig noiseless_config(std::size_t T, std::size_t N, std::size_t K) {
  SimulationConfig c;
  c.n_dates = T;
  c.n_firms = N;
  c.n_agents = 3;
  c.k_names = fixture::char_names(K);
  c.seed = 99;
  c.eta_initial = {0.4, -0.25, 0.15};
  c.eta_initial.resize(K, 0.1);
  c.agent_dispersion = 0.2;
  c.price_slope = {-1.0, -0.5, -2.0};
  c.alpha_dispersion = 0.01;
  return c;
}

struct SimPanel {
  Scenario sc;
  EquilibriumPanel eq;
};

SimPanel simulate(const SimulationConfig& c) {
  Scenario sc = build_scenario(c);
  EquilibriumPanel eq = simulate_panel(sc.agents, sc.chars, sc.supply, c.variant, c.timing);
  return {std::move(sc), std::move(eq)};
}

}  // namespace

TEST_CASE("within transform: demeaning and group means") {
  RegressionDesign d;
  d.dates = fixture::months(3);
  d.firms = {"a", "b"};
  d.k_names = {"k"};
  d.rows = {{0, 0}, {1, 0}, {0, 1}, {1, 1}, {2, 1}};
  d.response.resize(5);
  d.response << 1, 3, 5, 5, 5;
  d.regressors.resize(5, 2);
  d.regressors << 1, 2, 3, 4, 0, 1, 3, 1, 6, 1;
  const auto w = within_transform(d);
  CHECK(w.demeaned.response(0) == -1.0);
  CHECK(w.demeaned.response(1) == 1.0);
  CHECK(w.demeaned.response.tail(3).cwiseAbs().maxCoeff() == 0.0);
  // Brute-force group-by.
  CHECK(w.means[0].response == 2.0);
  CHECK(w.means[1].regressors(0) == doctest::Approx(3.0));
  CHECK(w.means[1].regressors(1) == doctest::Approx(1.0));
  CHECK(w.means[0].count == 2);
}

TEST_CASE("singleton firms: dropped with a record or rejected") {
  RegressionDesign d;
  d.dates = fixture::months(4);
  d.firms = {"a", "b", "solo"};
  d.k_names = {"k"};
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  std::vector<DesignRow> rows;
  for (std::size_t t = 0; t < 4; ++t) {
    rows.push_back({t, 0});
    rows.push_back({t, 1});
  }
  rows.push_back({3, 2});
  std::sort(rows.begin(), rows.end(), [](auto& a, auto& b) { return a.date != b.date ? a.date < b.date : a.firm < b.firm; });
  d.rows = rows;
  d.response = oracle::random_matrix(rng, 9, 1);
  d.regressors = oracle::random_matrix(rng, 9, 2);
  const auto w = within_transform(d, SingletonPolicy::drop);
  REQUIRE(w.dropped_firms.size() == 1);
  CHECK(w.dropped_firms[0] == "solo");
  CHECK(w.demeaned.n_obs() == 8);
  try {
    within_transform(d, SingletonPolicy::error);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::singleton_firm);
    CHECK(std::string(e.what()).find("solo") != std::string::npos);
  }
  const auto est = estimate_lsdv(d);
  CHECK_FALSE(est.alpha_for(2).has_value());
  CHECK(est.dropped_firms.size() == 1);
}

TEST_CASE("LSDV equals dummy-variable least squares") {
  std::mt19937_64 rng(2024);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t N = 2 + rng() % 9, T = 3 + rng() % 6, K = 1 + rng() % 2;
    const auto d = oracle::random_design(rng, N, T, K);
    const auto est = estimate_lsdv(d);
    const auto ofit = oracle::dummy_regression(d);
    CHECK((est.coefficients - ofit.slopes).cwiseAbs().maxCoeff() < 1e-10);
    for (std::size_t g = 0; g < est.effect_firms.size(); ++g)
      CHECK(std::fabs(est.alpha_hat(static_cast<Index>(g)) - ofit.effects(static_cast<Index>(g))) < 1e-10);
    CHECK((est.std_errors - ofit.se).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(est.dof == d.n_obs() - est.n_firms - 2 * K);
  }
}

TEST_CASE("2-firm 3-date toy panel against the dummy regression") {
  RegressionDesign d;
  d.dates = fixture::months(3);
  d.firms = {"a", "b"};
  d.k_names = {"k"};
  d.rows = {{0, 0}, {0, 1}, {1, 0}, {1, 1}, {2, 0}, {2, 1}};
  d.response.resize(6);
  d.response << 0.1, -0.2, 0.3, 0.05, -0.1, 0.2;
  d.regressors.resize(6, 2);
  d.regressors << 1.0, 0.2, -0.5, 0.1, 0.3, -0.4, 0.8, 0.7, -1.1, 0.2, 0.4, -0.3;
  const auto est = estimate_lsdv(d);
  const auto o = oracle::dummy_regression(d);
  CHECK((est.coefficients - o.slopes).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(std::fabs(*est.alpha_for(0) - o.effects(0)) < 1e-10);
  CHECK(std::fabs(*est.alpha_for(1) - o.effects(1)) < 1e-10);
}

TEST_CASE("zero response gives zero coefficients and effects") {
  std::mt19937_64 rng(1);
  auto d = oracle::random_design(rng, 6, 5, 2);
  d.response.setZero();
  const auto est = estimate_lsdv(d);
  CHECK(est.coefficients.cwiseAbs().maxCoeff() == 0.0);
  CHECK(est.alpha_hat.cwiseAbs().maxCoeff() == 0.0);
  CHECK(est.r_squared == 0.0);
}

TEST_CASE("slopes are linear in returns") {
  std::mt19937_64 rng(31);
  for (Method m : {Method::within, Method::pooled}) {
    auto d1 = oracle::random_design(rng, 8, 6, 2);
    auto d2 = d1, d12 = d1;
    d2.response = oracle::random_matrix(rng, d1.response.size(), 1);
    d12.response = d1.response + d2.response;
    const auto a = estimate(d1, m), b = estimate(d2, m), c = estimate(d12, m);
    CHECK((c.coefficients - a.coefficients - b.coefficients).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("residual orthogonality and zero means") {
  std::mt19937_64 rng(17);
  const auto d = oracle::random_design(rng, 9, 7, 2);
  const auto w = estimate_lsdv(d);
  const auto wd = within_transform(d);
  CHECK((wd.demeaned.regressors.transpose() * w.residuals).cwiseAbs().maxCoeff() < 1e-10);
  std::map<std::size_t, double> per_firm;
  for (std::size_t i = 0; i < w.rows.size(); ++i) per_firm[w.rows[i].firm] += w.residuals(static_cast<Index>(i));
  for (auto& [f, s] : per_firm) CHECK(std::fabs(s) < 1e-10);
  const auto p = estimate_pooled(d);
  CHECK(std::fabs(p.residuals.sum()) < 1e-10);
  for (Index i = 0; i < p.coefficients.size(); ++i)
    if (p.std_errors(i) > 0) CHECK(p.t_stats(i) == doctest::Approx(p.coefficients(i) / p.std_errors(i)));
  CHECK(p.residual_for(d.rows[3].date, d.rows[3].firm).value() == doctest::Approx(p.residuals(3)));
  CHECK(*p.alpha_for(4) == *p.intercept);
}

TEST_CASE("robust standard errors follow the HC1 sandwich") {
  std::mt19937_64 rng(5);
  const auto d = oracle::random_design(rng, 7, 8, 1);
  EstimationOptions robust;
  robust.robust_se = true;
  const auto est = estimate_lsdv(d, robust);
  const auto X = within_transform(d).demeaned.regressors;
  const Eigen::MatrixXd inv = (X.transpose() * X).inverse();
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(X.cols(), X.cols());
  for (Index i = 0; i < X.rows(); ++i) meat += est.residuals(i) * est.residuals(i) * X.row(i).transpose() * X.row(i);
  const double scale = static_cast<double>(X.rows()) / static_cast<double>(est.dof);
  const Eigen::VectorXd se = (inv * meat * inv * scale).diagonal().cwiseSqrt();
  CHECK((est.std_errors - se).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((est.std_errors - estimate_lsdv(d).std_errors).cwiseAbs().maxCoeff() > 1e-6);
}

TEST_CASE("singular designs are refused") {
  std::mt19937_64 rng(3);
  auto d = oracle::random_design(rng, 6, 5, 1);
  d.regressors.col(1).setConstant(0.7);
  CHECK_THROWS_AS(estimate_pooled(d), Error);
  try {
    estimate_lsdv(d);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::singular_design);
    CHECK(std::string(e.what()).find("eigenvalue") != std::string::npos);
  }
  RegressionDesign empty;
  empty.k_names = {"k"};
  empty.regressors.resize(0, 2);
  CHECK_THROWS_AS(estimate_lsdv(empty), Error);
}

TEST_CASE("noiseless simulated panel is recovered exactly") {
  for (Variant v : {Variant::identity_1, Variant::identity_2})
    for (Timing tm : {Timing::lagged, Timing::synchronous}) {
      auto c = noiseless_config(10, 40, 2);
      c.variant = v;
      c.timing = tm;
      const auto sim = simulate(c);
      const auto d = build_design(sim.sc.chars, sim.eq.log_returns, v, tm, 0, 9);
      const auto est = estimate_lsdv(d);
      const Index last = 9;
      CHECK(std::fabs(est.beta_hat()(0)) < 1e-8);
      CHECK(std::fabs(est.eta_hat()(0) - sim.eq.true_eta(last, 0)) < 1e-8);
      CHECK(std::fabs(est.eta_hat()(1) - sim.eq.true_eta(last, 1)) < 1e-8);
      double mean_hat = est.alpha_hat.mean(), mean_true = 0.0;
      for (std::size_t g = 0; g < est.effect_firms.size(); ++g) mean_true += sim.eq.true_alpha(last, static_cast<Index>(est.effect_firms[g]));
      mean_true /= static_cast<double>(est.effect_firms.size());
      for (std::size_t g = 0; g < est.effect_firms.size(); ++g)
        CHECK(std::fabs((est.alpha_hat(static_cast<Index>(g)) - mean_hat) -
                        (sim.eq.true_alpha(last, static_cast<Index>(est.effect_firms[g])) - mean_true)) < 1e-8);
    }
}

TEST_CASE("pooled and within agree when fixed effects do not vary") {
  auto c = noiseless_config(10, 40, 2);
  c.alpha_dispersion = 0.0;
  c.alpha_mean = 0.003;
  const auto sim = simulate(c);
  const auto d = build_design(sim.sc.chars, sim.eq.log_returns, c.variant, c.timing, 0, 9);
  const auto w = estimate_lsdv(d), p = estimate_pooled(d);
  CHECK((w.coefficients - p.coefficients).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(*p.intercept == doctest::Approx(0.003).epsilon(1e-8));
}

TEST_CASE("fixed effects correlated with characteristics bias the pooled fit") {
  auto c = noiseless_config(24, 300, 1);
  c.char_process.persistence = 0.95;
  c.alpha_dispersion = 0.0;
  c.alpha_loadings = {0.05};
  c.supply_sd = 0.01;
  const auto sim = simulate(c);
  const auto d = build_design(sim.sc.chars, sim.eq.log_returns, c.variant, c.timing, 0, 23);
  const double truth_beta = 0.0;
  const double pooled_err = std::fabs(estimate_pooled(d).beta_hat()(0) - truth_beta);
  const double within_err = std::fabs(estimate_lsdv(d).beta_hat()(0) - truth_beta);
  CAPTURE(pooled_err);
  CAPTURE(within_err);
  CHECK(pooled_err > 10 * within_err);
}

TEST_CASE("rolling windows: counting, errors and schedule independence") {
  auto c = noiseless_config(13, 20, 1);
  c.supply_sd = 0.05;
  const auto sim = simulate(c);
  const auto rr = rolling_estimate(sim.sc.chars, sim.eq.log_returns, 12, Method::within,
                                   c.variant, c.timing);
  CHECK(rr.estimates.size() + rr.skipped.size() == 2);
  CHECK(rr.estimates.size() == 2);
  CHECK(rr.estimates[1].window_end == sim.sc.chars.dates()[12]);
  CHECK_THROWS_AS(rolling_estimate(sim.sc.chars, sim.eq.log_returns, 14, Method::within, c.variant, c.timing), Error);
  CHECK_THROWS_AS(rolling_estimate(sim.sc.chars, sim.eq.log_returns, 1, Method::within, c.variant, c.timing), Error);

  const auto r1 = rolling_estimate(sim.sc.chars, sim.eq.log_returns, 4, Method::within, c.variant, c.timing, {}, 1);
  const auto r3 = rolling_estimate(sim.sc.chars, sim.eq.log_returns, 4, Method::within, c.variant, c.timing, {}, 3);
  REQUIRE(r1.estimates.size() == r3.estimates.size());
  for (std::size_t i = 0; i < r1.estimates.size(); ++i)
    CHECK(r1.estimates[i].coefficients == r3.estimates[i].coefficients);
}

TEST_CASE("too-short windows are skipped, not fabricated") {
  auto c = noiseless_config(6, 10, 2);
  c.supply_sd = 0.05;
  const auto sim = simulate(c);
  // Window of 2 dates: the first window has no usable lagged rows at all.
  const auto rr = rolling_estimate(sim.sc.chars, sim.eq.log_returns, 2, Method::within, c.variant, c.timing);
  CHECK(!rr.skipped.empty());
  CHECK(rr.skipped[0].terminal_index == 1);
  CHECK_FALSE(rr.skipped[0].reason.empty());
}

TEST_CASE("rolling slopes centre on the truth") {
  auto c = noiseless_config(121, 100, 1);
  c.eta_initial = {0.1};
  c.supply_sd = 0.2;
  const auto sim = simulate(c);
  const std::size_t L = 12;
  const auto rr = rolling_estimate(sim.sc.chars, sim.eq.log_returns, L, Method::within, c.variant, c.timing);
  // Non-overlapping windows for an honest standard error.
  for (int which : {0, 1}) {
    std::vector<double> b;
    for (std::size_t i = 0; i < rr.estimates.size(); i += L)
      b.push_back(which == 0 ? rr.estimates[i].beta_hat()(0) : rr.estimates[i].eta_hat()(0));
    double mean = 0.0, var = 0.0;
    for (double x : b) mean += x / static_cast<double>(b.size());
    for (double x : b) var += (x - mean) * (x - mean) / static_cast<double>(b.size() - 1);
    const double truth = which == 0 ? 0.0 : 0.1;
    CHECK(var > 0.0);
    CHECK(std::fabs(mean - truth) < 3 * std::sqrt(var / static_cast<double>(b.size())));
  }
}

TEST_CASE("longer windows shrink fixed-effect dispersion") {
  auto c = noiseless_config(96, 80, 1);
  c.alpha_dispersion = 0.0;
  c.alpha_noise = 0.05;
  const auto sim = simulate(c);
  auto dispersion = [&](std::size_t L) {
    const auto rr = rolling_estimate(sim.sc.chars, sim.eq.log_returns, L, Method::within, c.variant, c.timing);
    double s = 0.0;
    for (const auto& e : rr.estimates) {
      const double m = e.alpha_hat.mean();
      s += (e.alpha_hat.array() - m).square().mean();
    }
    return s / static_cast<double>(rr.estimates.size());
  };
  const double d12 = dispersion(12), d60 = dispersion(60);
  CAPTURE(d12);
  CAPTURE(d60);
  CHECK(d60 < d12);
}

TEST_CASE("sample quantiles") {
  CHECK(sample_quantile({1, 2, 3, 4}, 0.5) == 2.5);
  CHECK(sample_quantile({1, 2, 3, 4}, 0.25) == 1.75);
  CHECK(sample_quantile({4, 1, 3, 2}, 1.0) == 4.0);
  CHECK(sample_quantile({7}, 0.3) == 7.0);
  CHECK(std::isnan(sample_quantile({}, 0.5)));
}
