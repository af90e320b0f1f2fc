#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chardemand/charnorm.hpp"
#include "chardemand/panel.hpp"

namespace chardemand {

/// Equal-weighted top-half minus bottom-half portfolio sorted on one
/// characteristic at `date`, held over `date + 1`.
struct SortedPortfolio {
  std::size_t sort_k = 0;
  std::size_t date = 0;
  std::vector<std::size_t> long_leg;   // firm indices, top half
  std::vector<std::size_t> short_leg;  // bottom half
  double ls_return = 0.0;
};

struct LegSplit {
  std::vector<std::size_t> long_leg;   // positions into the cross-section
  std::vector<std::size_t> short_leg;
};

/// Median split of a cross-section. Ties break by `tie_key` (ascending); with
/// an odd count the median element joins neither leg.
LegSplit split_halves(std::span<const double> sort_values, std::span<const std::size_t> tie_key);

/// mean(values over long) - mean(values over short) = (2/N)(Σ_long - Σ_short).
double leg_spread(std::span<const double> values, const LegSplit& split);

/// Sorts firms observed at t (all K scores) with a return at t+1; ties on the
/// score break by firm identifier.
/// `eligible`, when non-empty, further restricts the universe (one flag per firm).
SortedPortfolio sort_long_short(const CharacteristicsPanel& chars, const Eigen::MatrixXd& returns,
                                std::size_t k, std::size_t t,
                                std::span<const char> eligible = {});

struct AnomalyAggregates {
  Eigen::VectorXd psi;  // Ψ^(j), spread of level regressors
  Eigen::VectorXd phi;  // Φ^(j), spread of delta regressors
  double lambda = 0.0;  // Λ, spread of fixed effects
  double xi = 0.0;      // Ξ, spread of residuals
};

/// Ψ, Φ, Λ, Ξ over the legs of `portfolio`, using the estimate's fixed
/// effects and its residuals at the holding date.
AnomalyAggregates portfolio_aggregates(const CharacteristicsPanel& chars,
                                       const PanelEstimate& estimate,
                                       const SortedPortfolio& portfolio);

struct DecompositionDate {
  std::size_t sort_date = 0;
  std::string date;  // holding (response) date
  double ls_return = 0.0;
  double lambda = 0.0;
  Eigen::VectorXd beta;  // β̂ from the window ending at this date
  Eigen::VectorXd eta;
  Eigen::VectorXd psi;
  Eigen::VectorXd phi;
  double xi = 0.0;
  double accounting_error = 0.0;  // ls - (Λ + Σ(β̂Ψ + η̂Φ) + Ξ)
};

struct CharacteristicTerms {
  double mu_beta = 0.0, mu_psi = 0.0, cov_beta_psi = 0.0;
  double mu_eta = 0.0, mu_phi = 0.0, cov_eta_phi = 0.0;
};

/// Time-series decomposition of the mean long-short return:
///   mean_ls = mean_lambda + Σ_j (μβ μΨ + σβΨ + μη μΦ + σηΦ) + residual.
/// Covariances use the 1/T normalisation so the identity is exact.
struct DecompositionReport {
  std::size_t sort_k = 0;
  std::size_t n_dates = 0;
  double mean_ls_return = 0.0;
  double mean_lambda = 0.0;
  double mu_beta_term = 0.0;         // Σ_j μβ μΨ
  double mu_eta_term = 0.0;          // Σ_j μη μΦ
  double covariance_beta_psi = 0.0;  // Σ_j σβΨ
  double covariance_eta_phi = 0.0;   // Σ_j σηΦ
  double residual = 0.0;             // equals the mean of Ξ
  double max_accounting_error = 0.0;
  std::vector<CharacteristicTerms> terms;  // per characteristic j
  // Large-N form: E[Λ] + (4/√(2π)) μβ^(k) + Cov(Σ_{j≠k} β̂, Σ_{j≠k} Ψ) + Cov(Σ_{j≠k} η̂, Σ_{j≠k} Φ)
  double large_n_own_term = 0.0;
  double large_n_cov_beta = 0.0;
  double large_n_cov_eta = 0.0;
  double phi_own_mean = 0.0;  // finite-sample Φ^(k); zero only in the large-N idealisation
  bool estimation_based = true;
  std::vector<DecompositionDate> dates;
};

/// For each window ending at τ, sorts on c^(k) at τ-1 among firms with a
/// design row at τ and attributes the realised spread at τ.
DecompositionReport decompose_anomaly(const RollingResult& rolling,
                                      const CharacteristicsPanel& chars,
                                      const Eigen::MatrixXd& returns, std::size_t k);

/// Sample mean of X·Y and its split into 1/T covariance plus product of means.
struct MomentSplit {
  double mean_product = 0.0;
  double covariance = 0.0;
  double mean_x = 0.0;
  double mean_y = 0.0;
};
MomentSplit moment_split(std::span<const double> x, std::span<const double> y);

}  // namespace chardemand
