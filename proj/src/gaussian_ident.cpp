#include "chardemand/gaussian_ident.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Eigenvalues>

#include "chardemand/common.hpp"
#include "chardemand/error.hpp"

namespace chardemand {

namespace {

[[noreturn]] void fail(ErrorKind kind, const char* op, const std::string& cause) {
  throw Error(kind, "gaussian_ident", op, cause);
}

constexpr std::size_t kChunk = 1 << 16;

struct SplitSums {
  double n_pos = 0, sum_pos = 0, sq_pos = 0;
  double n_neg = 0, sum_neg = 0, sq_neg = 0;
};

SplitSums split_chunk(const BivariateGaussianSpec& spec, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  const double load = spec.rho * spec.sigma_z / spec.sigma_y;
  const double idio = spec.sigma_z * std::sqrt(std::max(0.0, 1.0 - spec.rho * spec.rho));
  SplitSums s;
  for (std::size_t i = 0; i < count; ++i) {
    const double y = spec.sigma_y * gauss(rng);
    const double z = load * y + idio * gauss(rng);
    if (y > 0) {
      s.n_pos += 1;
      s.sum_pos += z;
      s.sq_pos += z * z;
    } else if (y < 0) {
      s.n_neg += 1;
      s.sum_neg += z;
      s.sq_neg += z * z;
    }
  }
  return s;
}

// Runs f(i) for i in [0, n) on up to `threads` workers; results land by index.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& f) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) f(i);
    });
}

}  // namespace

void validate(const BivariateGaussianSpec& spec) {
  if (!(spec.sigma_y > 0) || !(spec.sigma_z > 0) || !std::isfinite(spec.sigma_y) ||
      !std::isfinite(spec.sigma_z))
    fail(ErrorKind::invalid_input, "validate", "standard deviations must be positive");
  if (!(std::fabs(spec.rho) <= 1.0))
    fail(ErrorKind::invalid_input, "validate", "correlation must lie in [-1, 1]");
}

void validate(const DispersionSpec& spec) {
  const auto n = spec.mu.size();
  if (n == 0) fail(ErrorKind::invalid_input, "validate", "empty mean vector");
  if (spec.omega.rows() != n || spec.omega.cols() != n)
    fail(ErrorKind::invalid_input, "validate", "covariance dimensions do not match the means");
  if (spec.t_len < 1) fail(ErrorKind::invalid_input, "validate", "T must be at least 1");
  const double scale = std::max(1.0, spec.omega.cwiseAbs().maxCoeff());
  if ((spec.omega - spec.omega.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    fail(ErrorKind::invalid_input, "validate", "covariance is not symmetric");
}

double sorted_split_closed_form(const BivariateGaussianSpec& spec) {
  validate(spec);
  return kSortedSplitConstant * spec.rho * spec.sigma_z;
}

MonteCarloEstimate sorted_split_monte_carlo(const BivariateGaussianSpec& spec,
                                            std::size_t n_samples, std::uint64_t seed,
                                            unsigned threads) {
  validate(spec);
  if (n_samples < 1000)
    fail(ErrorKind::invalid_input, "sorted_split_monte_carlo", "need at least 1000 samples");
  const std::size_t chunks = (n_samples + kChunk - 1) / kChunk;
  std::vector<SplitSums> parts(chunks);
  parallel_for(chunks, threads, [&](std::size_t c) {
    const std::size_t count = std::min(kChunk, n_samples - c * kChunk);
    parts[c] = split_chunk(spec, count, derive_seed(seed, c));
  });
  SplitSums s;
  for (const SplitSums& p : parts) {
    s.n_pos += p.n_pos;
    s.sum_pos += p.sum_pos;
    s.sq_pos += p.sq_pos;
    s.n_neg += p.n_neg;
    s.sum_neg += p.sum_neg;
    s.sq_neg += p.sq_neg;
  }
  if (s.n_pos < 2 || s.n_neg < 2)
    fail(ErrorKind::resample, "sorted_split_monte_carlo", "all draws of Y fell on one side of zero");
  const double mp = s.sum_pos / s.n_pos, mn = s.sum_neg / s.n_neg;
  const double vp = (s.sq_pos - s.n_pos * mp * mp) / (s.n_pos - 1);
  const double vn = (s.sq_neg - s.n_neg * mn * mn) / (s.n_neg - 1);
  return {mp - mn, std::sqrt(std::max(0.0, vp / s.n_pos + vn / s.n_neg))};
}

DispersionTerms dispersion_terms(const DispersionSpec& spec) {
  validate(spec);
  const double n = static_cast<double>(spec.mu.size());
  const double mbar = spec.mu.mean();
  DispersionTerms out;
  out.mean_term = spec.mu.squaredNorm() / n - mbar * mbar;
  // (1/(NT)) Σ_n (ω_nn - (1/N) Σ_l ω_ln)
  out.noise_term = (spec.omega.trace() - spec.omega.sum() / n) / (n * static_cast<double>(spec.t_len));
  return out;
}

double dispersion_closed_form(const DispersionSpec& spec) { return dispersion_terms(spec).total(); }

MonteCarloEstimate dispersion_monte_carlo(const DispersionSpec& spec, std::size_t n_reps,
                                          std::uint64_t seed, unsigned threads) {
  validate(spec);
  if (n_reps < 100)
    fail(ErrorKind::invalid_input, "dispersion_monte_carlo", "need at least 100 replications");
  const Eigen::Index N = spec.mu.size();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(spec.omega);
  if (eig.info() != Eigen::Success)
    fail(ErrorKind::decomposition, "dispersion_monte_carlo", "eigendecomposition failed");
  const double lmin = eig.eigenvalues().minCoeff();
  if (lmin < -1e-10)
    fail(ErrorKind::decomposition, "dispersion_monte_carlo",
         "covariance is not positive semi-definite (smallest eigenvalue " + std::to_string(lmin) + ")");
  const Eigen::MatrixXd root =
      eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

  std::vector<double> draws(n_reps);
  parallel_for(n_reps, threads, [&](std::size_t r) {
    std::mt19937_64 rng(derive_seed(seed, r));
    std::normal_distribution<double> gauss;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(N), w(N);
    for (std::size_t t = 0; t < spec.t_len; ++t) {
      for (Eigen::Index i = 0; i < N; ++i) w(i) = gauss(rng);
      acc.noalias() += root * w;
    }
    const Eigen::VectorXd xbar = spec.mu + acc / static_cast<double>(spec.t_len);
    draws[r] = (xbar.array() - xbar.mean()).square().mean();
  });

  double mean = 0.0;
  for (double d : draws) mean += d;
  mean /= static_cast<double>(n_reps);
  double var = 0.0;
  for (double d : draws) var += (d - mean) * (d - mean);
  var /= static_cast<double>(n_reps - 1);
  return {mean, std::sqrt(var / static_cast<double>(n_reps))};
}

DispersionSpec random_dispersion_spec(std::size_t n_firms, std::size_t t_len, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  const auto N = static_cast<Eigen::Index>(n_firms);
  const Eigen::Index F = std::max<Eigen::Index>(1, N / 2);
  Eigen::MatrixXd load(N, F);
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index j = 0; j < F; ++j) load(i, j) = gauss(rng);
  DispersionSpec spec;
  spec.mu.resize(N);
  for (Eigen::Index i = 0; i < N; ++i) spec.mu(i) = 0.5 * gauss(rng);
  spec.omega = load * load.transpose() / static_cast<double>(F);
  spec.omega.diagonal().array() += 0.1;
  spec.t_len = t_len;
  return spec;
}

std::vector<IdentityCheck> identity_grid(const IdentityGridOptions& opts) {
  std::vector<IdentityCheck> out;
  char name[96];
  std::uint64_t stream = 0;
  for (double rho : {-0.9, -0.5, 0.0, 0.5, 0.9})
    for (double sz : {0.5, 1.0, 2.0}) {
      const BivariateGaussianSpec spec{1.0, sz, rho};
      const auto mc = sorted_split_monte_carlo(spec, opts.split_samples,
                                               derive_seed(opts.seed, stream++), opts.threads);
      IdentityCheck c;
      std::snprintf(name, sizeof name, "sorted_split rho=%g sigma_z=%g", rho, sz);
      c.name = name;
      c.estimate = mc.estimate;
      c.std_error = mc.std_error;
      c.target = sorted_split_closed_form(spec);
      c.tolerance = opts.n_se * mc.std_error;
      c.passed = std::fabs(c.estimate - c.target) <= c.tolerance;
      out.push_back(c);
    }

  for (std::size_t s = 0; s < opts.dispersion_specs; ++s) {
    const DispersionSpec spec = random_dispersion_spec(
        opts.dispersion_firms, opts.dispersion_dates, derive_seed(opts.seed, 1000 + s));
    const auto mc = dispersion_monte_carlo(spec, opts.dispersion_reps,
                                           derive_seed(opts.seed, 2000 + s), opts.threads);
    IdentityCheck c;
    std::snprintf(name, sizeof name, "dispersion spec=%zu N=%zu T=%zu", s, opts.dispersion_firms,
                  opts.dispersion_dates);
    c.name = name;
    c.estimate = mc.estimate;
    c.std_error = mc.std_error;
    c.target = dispersion_closed_form(spec);
    c.tolerance = opts.n_se * mc.std_error;
    c.passed = std::fabs(c.estimate - c.target) <= c.tolerance;
    out.push_back(c);

    // Second term at T and 5T.
    DispersionSpec longer = spec;
    longer.t_len = 5 * spec.t_len;
    const DispersionTerms a = dispersion_terms(spec), b = dispersion_terms(longer);
    IdentityCheck sc;
    std::snprintf(name, sizeof name, "dispersion 1/T scaling spec=%zu", s);
    sc.name = name;
    sc.estimate = 5.0 * b.noise_term;
    sc.target = a.noise_term;
    sc.tolerance = 1e-12;
    sc.passed = std::fabs(sc.estimate - sc.target) <= sc.tolerance;
    out.push_back(sc);
  }

  const double sigma2 = 0.04;
  for (std::size_t n : {5, 50}) {
    DispersionSpec iso;
    iso.mu = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 0.01);
    iso.omega = sigma2 * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    iso.t_len = 12;
    IdentityCheck c;
    std::snprintf(name, sizeof name, "dispersion isotropic N=%zu T=12", n);
    c.name = name;
    c.estimate = dispersion_closed_form(iso);
    c.target = sigma2 * (1.0 - 1.0 / static_cast<double>(n)) / 12.0;
    c.tolerance = 1e-12;
    c.passed = std::fabs(c.estimate - c.target) <= c.tolerance;
    out.push_back(c);
  }
  return out;
}

}  // namespace chardemand
