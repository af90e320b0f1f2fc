#include <doctest.h>

#include <cmath>
#include <random>

#include "chardemand/error.hpp"
#include "chardemand/market_model.hpp"
#include "fixtures.hpp"

using namespace chardemand;
using Eigen::Index;

namespace {

double max_abs_finite_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double m = 0.0;
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      if (std::isfinite(a(i, j)) || std::isfinite(b(i, j))) m = std::max(m, std::fabs(a(i, j) - b(i, j)));
  return m;
}

AgentPopulation single_agent(double A, double b0, double b1, double a, std::size_t T, std::size_t N) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Constant(static_cast<Index>(T), 1, A);
  Eigen::MatrixXd s = Eigen::MatrixXd::Constant(static_cast<Index>(T), 1, b0);
  std::vector<Eigen::MatrixXd> c(T, Eigen::MatrixXd::Constant(1, 1, b1));
  return AgentPopulation::with_uniform_baseline(w, s, c, Eigen::MatrixXd::Constant(static_cast<Index>(T), 1, a), N);
}

}  // namespace

TEST_CASE("demand curve") {
  CHECK(demand_curve(2, 1, 1) == 2.0);
  CHECK(demand_curve(2, 1, std::exp(2.0)) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(demand_curve(3, 0.5, std::exp(2.0)) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK_THROWS_AS(demand_curve(1, 1, 0.0), Error);
  CHECK_THROWS_AS(demand_curve(1, 1, -1.0), Error);
  // Summing individual curves equals the curve of summed appeals and slopes.
  const double p = 1.7;
  const double sum = demand_curve(1.0, 0.3, p) + demand_curve(-0.5, 0.9, p) + demand_curve(2.0, 0.1, p);
  CHECK(sum == doctest::Approx(demand_curve(2.5, 1.3, p)).epsilon(1e-14));
}

TEST_CASE("clearing examples") {
  const auto agents = single_agent(1.0, -1.0, 0.0, 2.0, 1, 1);
  const Eigen::MatrixXd g = Eigen::MatrixXd::Zero(1, 1);
  std::vector<double> s{1.0};
  CHECK(clear_log_price(agents, 0, g, s)(0) == doctest::Approx(1.0));
  s[0] = 2.0;
  CHECK(clear_log_price(agents, 0, g, s)(0) == doctest::Approx(0.0));
  double prev = 1e9;
  for (double sv : {-1.0, 0.0, 0.5, 3.0}) {
    s[0] = sv;
    const double lp = clear_log_price(agents, 0, g, s)(0);
    CHECK(lp < prev);
    prev = lp;
  }
}

TEST_CASE("non-positive kappa is ill-posed") {
  const auto agents = single_agent(1.0, 0.5, 0.0, 0.0, 2, 2);
  const Eigen::MatrixXd g = Eigen::MatrixXd::Zero(1, 2);
  std::vector<double> s{0.0, 0.0};
  try {
    clear_log_price(agents, 0, g, s);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::equilibrium_ill_posed);
  }
  CHECK_THROWS_AS(agents.scaled_wealth(0), Error);
  CHECK_THROWS_AS(aggregate_demands(agents, 0), Error);
}

TEST_CASE("aggregate demands against brute-force sums") {
  const auto a = single_agent(2.0, -1.0, 3.0, 0.0, 2, 3);
  CHECK(aggregate_demands(a, 0).eta(0) == doctest::Approx(3.0));
  CHECK(aggregate_demands(a, 0).beta(0) == 0.0);

  auto m = fixture::random_market(3, 2, 4, 2, 2);
  const auto agg = aggregate_demands(m.agents, 0);
  for (Index k = 0; k < 2; ++k) {
    double eta0 = 0, eta1 = 0, k0 = 0, k1 = 0;
    for (Index i = 0; i < 2; ++i) {
      k0 -= m.agents.wealth()(0, i) * m.agents.price_slope()(0, i);
      k1 -= m.agents.wealth()(1, i) * m.agents.price_slope()(1, i);
    }
    for (Index i = 0; i < 2; ++i) {
      eta0 += m.agents.wealth()(0, i) / k0 * m.agents.char_coeffs(0)(i, k);
      eta1 += m.agents.wealth()(1, i) / k1 * m.agents.char_coeffs(1)(i, k);
    }
    CHECK(agg.eta(k) == doctest::Approx(eta0).epsilon(1e-14));
    CHECK(agg.beta(k) == doctest::Approx(eta1 - eta0).epsilon(1e-13));
    CHECK(agg.kappa_now == doctest::Approx(k0));
  }
}

TEST_CASE("simulated panels: clearing, price differences and both identities") {
  for (Timing timing : {Timing::lagged, Timing::synchronous})
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      auto m = fixture::random_market(seed, 6, 7, 3, 2);
      const auto eq = simulate_panel(m.agents, m.chars, m.supply, Variant::identity_1, timing);
      for (std::size_t t = 0; t < 6; ++t) {
        const long d = characteristic_date(timing, t);
        if (d < 0) continue;
        const auto g = characteristic_demand(m.agents, t, m.chars, static_cast<std::size_t>(d));
        const Eigen::VectorXd lp = eq.log_prices.row(static_cast<Index>(t)).transpose();
        const Eigen::VectorXd dem = total_demand(m.agents, t, g, lp);
        CHECK((dem - m.supply.values().row(static_cast<Index>(t)).transpose()).cwiseAbs().maxCoeff() < 1e-10);
      }
      for (Index t = 1; t < 6; ++t)
        for (Index n = 0; n < 7; ++n)
          if (std::isfinite(eq.log_returns(t, n)))
            CHECK(std::fabs(eq.log_returns(t, n) - (eq.log_prices(t, n) - eq.log_prices(t - 1, n))) < 1e-12);
      const auto r1 = decomposed_returns(eq, m.chars, Variant::identity_1);
      const auto r2 = decomposed_returns(eq, m.chars, Variant::identity_2);
      CHECK(max_abs_finite_diff(r1, r2) < 1e-10);
      // Route through prices versus route through aggregates.
      Eigen::MatrixXd priced = eq.log_returns;
      for (Index t = 0; t < 6; ++t)
        if (characteristic_date(timing, static_cast<std::size_t>(t)) < 1) priced.row(t).setConstant(kMissing);
      CHECK(max_abs_finite_diff(priced, r1) < 1e-10);
    }
}

TEST_CASE("the two decompositions of the characteristic term agree") {
  auto m = fixture::random_market(77, 4, 5, 3, 3);
  for (std::size_t t = 1; t + 1 < 4; ++t) {
    const auto agg = aggregate_demands(m.agents, t);
    const Eigen::VectorXd eta_next = scaled_demand(m.agents, t + 1);
    for (std::size_t n = 0; n < 5; ++n) {
      double lhs = 0, rhs = 0, direct = 0;
      for (std::size_t k = 0; k < 3; ++k) {
        const auto ki = static_cast<Index>(k);
        const double c = m.chars.score(t, n, k), cp = m.chars.score(t - 1, n, k), dc = c - cp;
        lhs += agg.beta(ki) * c + agg.eta(ki) * dc;
        rhs += agg.beta(ki) * cp + eta_next(ki) * dc;
        direct += eta_next(ki) * c - agg.eta(ki) * cp;
      }
      CHECK(std::fabs(lhs - rhs) < 1e-12);
      CHECK(std::fabs(lhs - direct) < 1e-12);
    }
  }
}

TEST_CASE("constant agents and supply leave no supply shock") {
  std::mt19937_64 rng(4);
  auto chars = fixture::random_chars(rng, 5, 6, 2);
  Eigen::MatrixXd w = Eigen::MatrixXd::Constant(5, 2, 1.5), b0 = Eigen::MatrixXd::Constant(5, 2, -0.7);
  Eigen::MatrixXd c(2, 2);
  c << 0.2, -0.1, 0.4, 0.3;
  std::vector<Eigen::MatrixXd> coeffs(5, c);
  auto agents = AgentPopulation::with_uniform_baseline(w, b0, coeffs, Eigen::MatrixXd::Constant(5, 2, 0.1), 6);
  SupplyPath supply(Eigen::MatrixXd::Constant(5, 6, 0.3));
  const auto eq = simulate_panel(agents, chars, supply, Variant::identity_1);
  for (Index t = 1; t < 5; ++t) {
    CHECK(eq.epsilon.row(t).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(eq.true_beta.row(t).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("supply paths with identical scaled innovations give identical returns") {
  auto m = fixture::random_market(9, 6, 5, 3, 2);
  Eigen::MatrixXd shifted = m.supply.values();
  for (Index t = 0; t < 6; ++t)
    for (Index n = 0; n < 5; ++n) shifted(t, n) += m.agents.kappa(static_cast<std::size_t>(t)) * (0.5 + 0.1 * static_cast<double>(n));
  const auto a = simulate_panel(m.agents, m.chars, m.supply, Variant::identity_1);
  const auto b = simulate_panel(m.agents, m.chars, SupplyPath(shifted), Variant::identity_1);
  CHECK(max_abs_finite_diff(a.log_returns, b.log_returns) < 1e-12);
  CHECK(max_abs_finite_diff(a.log_prices, b.log_prices) > 0.1);
}

TEST_CASE("misaligned inputs are index errors") {
  auto m = fixture::random_market(2, 4, 5, 2, 2);
  std::mt19937_64 rng(1);
  auto other = fixture::random_chars(rng, 4, 6, 2);
  CHECK_THROWS_AS(simulate_panel(m.agents, other, m.supply, Variant::identity_1), Error);
  CHECK_THROWS_AS(SupplyPath(Eigen::MatrixXd::Constant(2, 2, std::nan(""))), Error);
  CHECK_THROWS_AS(AgentPopulation(Eigen::MatrixXd::Constant(2, 1, -1.0), Eigen::MatrixXd::Constant(2, 1, -1.0),
                                  {Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Zero(1, 1)},
                                  {Eigen::MatrixXd::Zero(1, 2), Eigen::MatrixXd::Zero(1, 2)}),
                  Error);
}

TEST_CASE("Monte Carlo mean return matches the conditional expectation") {
  // Dates 0..2, lagged timing, response at 2 reads c_1 and Δc_1. Date-2
  // coefficients and supply are random; everything else is fixed.
  const std::size_t T = 3, N = 6, I = 2, K = 2;
  std::mt19937_64 rng(123);
  std::normal_distribution<double> g;
  auto chars = fixture::random_chars(rng, T, N, K);
  Eigen::MatrixXd w(T, I), b0(T, I);
  w << 1.0, 2.0, 1.0, 2.0, 1.0, 2.0;
  b0 << -1.0, -0.5, -1.0, -0.5, -1.0, -0.5;
  Eigen::MatrixXd mean_coeff(I, K);
  mean_coeff << 0.3, -0.2, 0.1, 0.4;
  Eigen::MatrixXd next_coeff(I, K);
  next_coeff << 0.5, -0.1, 0.0, 0.2;
  std::vector<Eigen::MatrixXd> base(T);
  for (auto& b : base) b = 0.05 * oracle::random_matrix(rng, I, N);

  const std::size_t draws = 4000;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(N), sq = Eigen::VectorXd::Zero(N);
  for (std::size_t r = 0; r < draws; ++r) {
    std::vector<Eigen::MatrixXd> coeffs{mean_coeff, mean_coeff, next_coeff + 0.2 * oracle::random_matrix(rng, I, K)};
    AgentPopulation agents(w, b0, coeffs, base);
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(T, N);
    s.row(1) = 0.2 * oracle::random_matrix(rng, 1, N);
    s.row(2) = 0.2 * oracle::random_matrix(rng, 1, N);
    const auto eq = simulate_panel(agents, chars, SupplyPath(s), Variant::identity_1);
    const Eigen::VectorXd ret = eq.log_returns.row(2).transpose();
    sum += ret;
    sq += ret.cwiseProduct(ret);
  }
  AgentPopulation mean_agents(w, b0, {mean_coeff, mean_coeff, next_coeff}, base);
  const auto agg = aggregate_demands(mean_agents, 1);
  const Eigen::VectorXd expected =
      conditional_expected_return(chars, 2, Timing::lagged, agg.eta, agg.beta, agg.alpha);
  const double M = static_cast<double>(draws);
  for (Index n = 0; n < static_cast<Index>(N); ++n) {
    const double mean = sum(n) / M;
    const double se = std::sqrt((sq(n) / M - mean * mean) / (M - 1));
    CAPTURE(n);
    CHECK(std::fabs(mean - expected(n)) < 4 * se);
  }
}
