#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chardemand/charnorm.hpp"
#include "chardemand/common.hpp"

namespace chardemand {

/// One regression observation: the firm and the date of its response r(τ).
struct DesignRow {
  std::size_t date = 0;
  std::size_t firm = 0;
};

/// Stacked panel regression r(τ, n) on z(τ, n) = (levels K | deltas K).
struct RegressionDesign {
  std::vector<std::string> dates;
  std::vector<std::string> firms;
  std::vector<std::string> k_names;
  Variant variant = Variant::identity_1;
  Timing timing = Timing::lagged;
  std::vector<DesignRow> rows;
  Eigen::VectorXd response;
  Eigen::MatrixXd regressors;

  std::size_t n_chars() const noexcept { return k_names.size(); }
  std::size_t n_obs() const noexcept { return rows.size(); }
  std::size_t n_distinct_firms() const;
};

/// Level and delta regressors for response date τ under the given identity
/// and timing. Returns false when any input is unobserved.
bool regressor_row(const CharacteristicsPanel& chars, std::size_t response_date, std::size_t firm,
                   Variant variant, Timing timing, std::span<double> out);

/// Rows with response dates in [first_date, last_date] (panel date indices)
/// for which the return and every regressor are observed.
RegressionDesign build_design(const CharacteristicsPanel& chars, const Eigen::MatrixXd& returns,
                              Variant variant, Timing timing, std::size_t first_date,
                              std::size_t last_date);

enum class SingletonPolicy { drop, error };

struct FirmMeans {
  std::size_t firm = 0;
  std::size_t count = 0;
  double response = 0.0;
  Eigen::VectorXd regressors;
};

/// Firm-demeaned design plus the firm means needed to recover fixed effects.
struct WithinDesign {
  RegressionDesign demeaned;
  std::vector<FirmMeans> means;         // sorted by firm index
  std::vector<std::size_t> row_group;   // row -> index into means
  std::vector<std::string> dropped_firms;
};

WithinDesign within_transform(const RegressionDesign& design,
                              SingletonPolicy policy = SingletonPolicy::drop);

struct EstimationOptions {
  bool robust_se = false;
  SingletonPolicy singletons = SingletonPolicy::drop;
  double max_condition = 1e12;
};

struct PanelEstimate {
  Method method = Method::within;
  Variant variant = Variant::identity_1;
  Timing timing = Timing::lagged;
  std::vector<std::string> coef_names;  // "beta:<k>" then "eta:<k>"
  Eigen::VectorXd coefficients;         // (β̂ | η̂)
  Eigen::VectorXd std_errors;
  Eigen::VectorXd t_stats;
  std::vector<std::size_t> effect_firms;  // within: firms with a fixed effect
  Eigen::VectorXd alpha_hat;              // within: aligned with effect_firms
  std::optional<double> intercept;        // pooled only
  std::optional<double> intercept_se;
  double r_squared = 0.0;
  std::size_t n_obs = 0;
  std::size_t n_firms = 0;
  std::size_t dof = 0;
  std::size_t window_first = 0;
  std::size_t window_last = 0;
  std::string window_start;
  std::string window_end;
  double condition_number = 0.0;
  std::vector<DesignRow> rows;
  Eigen::VectorXd residuals;  // r - α̂ - z'ζ̂, aligned with rows
  std::vector<std::string> dropped_firms;

  std::size_t n_chars() const noexcept { return static_cast<std::size_t>(coefficients.size()) / 2; }
  Eigen::VectorXd beta_hat() const { return coefficients.head(coefficients.size() / 2); }
  Eigen::VectorXd eta_hat() const { return coefficients.tail(coefficients.size() / 2); }

  /// Fixed effect for a panel firm index (the intercept for pooled fits).
  std::optional<double> alpha_for(std::size_t firm) const;
  std::optional<double> residual_for(std::size_t date, std::size_t firm) const;
};

/// Within (LSDV) estimator with fixed-effect recovery.
PanelEstimate estimate_lsdv(const RegressionDesign& design, const EstimationOptions& opts = {});
/// Single-intercept least squares on the raw regressors.
PanelEstimate estimate_pooled(const RegressionDesign& design, const EstimationOptions& opts = {});
PanelEstimate estimate(const RegressionDesign& design, Method method,
                       const EstimationOptions& opts = {});

struct SkippedWindow {
  std::size_t terminal_index = 0;
  std::string terminal_date;
  std::string reason;
};

struct RollingResult {
  std::size_t window_len = 0;
  Method method = Method::within;
  Variant variant = Variant::identity_1;
  Timing timing = Timing::lagged;
  std::vector<PanelEstimate> estimates;  // ordered by terminal date
  std::vector<SkippedWindow> skipped;
};

/// One estimate per terminal panel date, windows of `window_len` consecutive
/// panel dates stepping by one. Singular or empty windows are skipped.
RollingResult rolling_estimate(const CharacteristicsPanel& chars, const Eigen::MatrixXd& returns,
                               std::size_t window_len, Method method, Variant variant,
                               Timing timing, const EstimationOptions& opts = {},
                               unsigned threads = 1);

/// Linear-interpolation sample quantile (R type 7).
double sample_quantile(std::vector<double> values, double p);

inline constexpr std::array<double, 5> kFixedEffectQuantiles{0.05, 0.25, 0.50, 0.75, 0.95};

std::array<double, 5> fixed_effect_quantiles(const PanelEstimate& est);

}  // namespace chardemand
