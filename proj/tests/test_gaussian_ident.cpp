#include <doctest.h>

#include <cmath>
#include <numbers>

#include "chardemand/error.hpp"
#include "chardemand/gaussian_ident.hpp"

using namespace chardemand;

namespace {
const double kLimit = 4.0 / std::sqrt(2.0 * std::numbers::pi);
}

TEST_CASE("sorted split closed form") {
  CHECK(sorted_split_closed_form({1.0, 1.0, 0.0}) == 0.0);
  CHECK(sorted_split_closed_form({1.0, 1.0, 1.0}) == doctest::Approx(1.595769).epsilon(1e-6));
  CHECK(sorted_split_closed_form({1.0, 2.0, -0.5}) == doctest::Approx(-1.595769).epsilon(1e-6));
  CHECK(sorted_split_closed_form({3.0, 1.0, 0.8}) == doctest::Approx(1.27662).epsilon(1e-5));
  // Odd in ρ, linear in σ_z, free of σ_y.
  for (double rho : {-0.7, 0.2, 0.9}) {
    CHECK(sorted_split_closed_form({1, 1.5, rho}) == -sorted_split_closed_form({1, 1.5, -rho}));
    CHECK(sorted_split_closed_form({1, 3.0, rho}) == doctest::Approx(2 * sorted_split_closed_form({1, 1.5, rho})));
    CHECK(sorted_split_closed_form({0.2, 1.0, rho}) == sorted_split_closed_form({5.0, 1.0, rho}));
  }
}

TEST_CASE("spec validation") {
  CHECK_THROWS_AS(sorted_split_closed_form({0.0, 1.0, 0.1}), Error);
  CHECK_THROWS_AS(sorted_split_closed_form({1.0, -1.0, 0.1}), Error);
  CHECK_THROWS_AS(sorted_split_closed_form({1.0, 1.0, 1.01}), Error);
  CHECK_THROWS_AS(sorted_split_closed_form({1.0, 1.0, NAN}), Error);
  DispersionSpec bad{Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(2, 2), 12};
  CHECK_THROWS_AS(dispersion_closed_form(bad), Error);
  DispersionSpec asym{Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2), 12};
  asym.omega(0, 1) = 0.3;
  CHECK_THROWS_AS(dispersion_closed_form(asym), Error);
  DispersionSpec zero_t{Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2), 0};
  CHECK_THROWS_AS(dispersion_closed_form(zero_t), Error);
}

TEST_CASE("sorted split Monte Carlo") {
  const auto mc = sorted_split_monte_carlo({1.0, 1.0, 0.8}, 1000000, 11);
  CHECK(mc.std_error > 0.0);
  CHECK(std::fabs(mc.estimate - 0.8 * kLimit) < 3 * mc.std_error);
  const auto zero = sorted_split_monte_carlo({1.0, 1.0, 0.0}, 200000, 12);
  CHECK(std::fabs(zero.estimate) < 3 * zero.std_error);
  // Same stream with σ_z doubled gives exactly twice the estimate.
  const auto a = sorted_split_monte_carlo({1.0, 1.0, 0.3}, 50000, 13);
  const auto b = sorted_split_monte_carlo({1.0, 2.0, 0.3}, 50000, 13);
  CHECK(b.estimate == doctest::Approx(2 * a.estimate).epsilon(1e-12));
  CHECK_THROWS_AS(sorted_split_monte_carlo({1, 1, 0.5}, 999, 1), Error);
}

TEST_CASE("Monte Carlo results do not depend on the thread count") {
  const auto a = sorted_split_monte_carlo({1.0, 1.0, 0.5}, 300000, 99, 1);
  const auto b = sorted_split_monte_carlo({1.0, 1.0, 0.5}, 300000, 99, 3);
  CHECK(a.estimate == b.estimate);
  CHECK(a.std_error == b.std_error);
  const auto spec = random_dispersion_spec(10, 6, 4);
  const auto c = dispersion_monte_carlo(spec, 400, 5, 1);
  const auto d = dispersion_monte_carlo(spec, 400, 5, 4);
  CHECK(c.estimate == d.estimate);
}

TEST_CASE("dispersion closed form") {
  DispersionSpec one{Eigen::VectorXd::Constant(1, 0.3), Eigen::MatrixXd::Constant(1, 1, 0.5), 12};
  CHECK(dispersion_closed_form(one) == 0.0);
  for (std::size_t n : {2, 7, 40}) {
    const auto N = static_cast<Eigen::Index>(n);
    DispersionSpec iso{Eigen::VectorXd::Constant(N, -0.2), 0.09 * Eigen::MatrixXd::Identity(N, N), 12};
    const double want = 0.09 * (1.0 - 1.0 / static_cast<double>(n)) / 12.0;
    CHECK(std::fabs(dispersion_closed_form(iso) - want) < 1e-15);
    DispersionSpec longer = iso;
    longer.t_len = 60;
    CHECK(dispersion_closed_form(longer) / dispersion_closed_form(iso) == doctest::Approx(0.2).epsilon(1e-12));
  }
  // Brute-force double sum for the mean term.
  Eigen::VectorXd mu(3);
  mu << 0.1, -0.4, 0.9;
  DispersionSpec s{mu, Eigen::MatrixXd::Zero(3, 3), 5};
  double first = 0.0;
  for (int n = 0; n < 3; ++n) {
    double cross = 0.0;
    for (int l = 0; l < 3; ++l) cross += mu(l) * mu(n) / 3.0;
    first += (mu(n) * mu(n) - cross) / 3.0;
  }
  CHECK(dispersion_closed_form(s) == doctest::Approx(first).epsilon(1e-14));
}

TEST_CASE("both dispersion terms are non-negative and the second scales as 1/T") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto spec = random_dispersion_spec(2 + seed % 30, 1 + seed % 24, seed);
    const auto t = dispersion_terms(spec);
    CHECK(t.mean_term >= 0.0);
    CHECK(t.noise_term >= 0.0);
    auto longer = spec;
    longer.t_len = spec.t_len * 7;
    const double ratio = static_cast<double>(longer.t_len) / static_cast<double>(spec.t_len);
    CHECK(std::fabs(dispersion_closed_form(spec) - t.mean_term -
                    ratio * (dispersion_closed_form(longer) - t.mean_term)) < 1e-12);
  }
}

TEST_CASE("dispersion Monte Carlo") {
  const auto spec = random_dispersion_spec(50, 12, 77);
  const auto mc = dispersion_monte_carlo(spec, 2000, 78);
  CHECK(std::fabs(mc.estimate - dispersion_closed_form(spec)) < 3 * mc.std_error);

  DispersionSpec fixed = spec;
  fixed.omega.setZero();
  const auto z = dispersion_monte_carlo(fixed, 100, 1);
  CHECK(z.estimate == doctest::Approx(dispersion_terms(fixed).mean_term).epsilon(1e-12));
  CHECK(z.std_error < 1e-14);

  DispersionSpec flat{Eigen::VectorXd::Zero(5), Eigen::MatrixXd::Identity(5, 5), 2000};
  CHECK(dispersion_monte_carlo(flat, 100, 3).estimate < 1e-3);

  DispersionSpec indefinite{Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2), 12};
  indefinite.omega(0, 1) = indefinite.omega(1, 0) = 2.0;
  try {
    dispersion_monte_carlo(indefinite, 100, 1);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::decomposition);
  }
  CHECK_THROWS_AS(dispersion_monte_carlo(spec, 99, 1), Error);
}

TEST_CASE("identity grid passes at reduced sizes") {
  IdentityGridOptions o;
  o.split_samples = 200000;
  o.dispersion_reps = 500;
  o.dispersion_specs = 2;
  const auto rows = identity_grid(o);
  CHECK(rows.size() == 15 + 2 * 2 + 2);
  for (const auto& r : rows) {
    CAPTURE(r.name);
    CHECK(r.passed);
  }
}
