#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace chardemand {

struct BivariateGaussianSpec {
  double sigma_y = 1.0;
  double sigma_z = 1.0;
  double rho = 0.0;
};

/// N firms, mean vector mu, covariance omega, panels of t_len dates.
struct DispersionSpec {
  Eigen::VectorXd mu;
  Eigen::MatrixXd omega;
  std::size_t t_len = 1;
};

struct MonteCarloEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

void validate(const BivariateGaussianSpec& spec);
void validate(const DispersionSpec& spec);

/// E[Z | Y > m] - E[Z | Y < m] with m the median of Y: (4/√(2π)) ρ σ_z.
double sorted_split_closed_form(const BivariateGaussianSpec& spec);

/// Sign-split sample means of Z over n_samples draws of (Y, Z).
MonteCarloEstimate sorted_split_monte_carlo(const BivariateGaussianSpec& spec,
                                            std::size_t n_samples, std::uint64_t seed,
                                            unsigned threads = 1);

struct DispersionTerms {
  double mean_term = 0.0;   // cross-sectional dispersion of μ
  double noise_term = 0.0;  // sampling part, scales as 1/T
  double total() const noexcept { return mean_term + noise_term; }
};

DispersionTerms dispersion_terms(const DispersionSpec& spec);
double dispersion_closed_form(const DispersionSpec& spec);

/// Average over replications of (1/N) Σ_n (x̄_n - x̄)², x̄_n the time mean of a
/// simulated Gaussian T-panel.
MonteCarloEstimate dispersion_monte_carlo(const DispersionSpec& spec, std::size_t n_reps,
                                          std::uint64_t seed, unsigned threads = 1);

struct IdentityCheck {
  std::string name;
  double estimate = 0.0;
  double target = 0.0;
  double std_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct IdentityGridOptions {
  std::size_t split_samples = 1'000'000;
  std::size_t dispersion_specs = 5;
  std::size_t dispersion_firms = 20;
  std::size_t dispersion_dates = 12;
  std::size_t dispersion_reps = 2000;
  double n_se = 3.0;
  std::uint64_t seed = 20240101;
  unsigned threads = 1;
};

/// Sorted-split grid ρ ∈ {-0.9, -0.5, 0, 0.5, 0.9} × σ_z ∈ {0.5, 1, 2}, then
/// random dispersion specs and the exact isotropic and 1/T checks.
std::vector<IdentityCheck> identity_grid(const IdentityGridOptions& opts = {});

/// Random means and a low-rank-plus-ridge positive definite covariance.
DispersionSpec random_dispersion_spec(std::size_t n_firms, std::size_t t_len, std::uint64_t seed);

}  // namespace chardemand
