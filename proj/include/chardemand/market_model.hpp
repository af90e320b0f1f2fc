#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chardemand/charnorm.hpp"
#include "chardemand/common.hpp"

namespace chardemand {

/// Characteristics-driven agents. Agent i demands, as a fraction of wealth A,
///   w = a_n + b0 * log(p_n) + Σ_k b_k c_n^(k)
/// at every date. Slopes b0 may be of either sign individually; the
/// aggregate κ_t = -Σ_i A_{t,i} b0_{t,i} must be positive for clearing.
class AgentPopulation {
 public:
  /// wealth, price_slope: T×I. char_coeffs: T matrices of I×K.
  /// baseline: T matrices of I×N.
  AgentPopulation(Eigen::MatrixXd wealth, Eigen::MatrixXd price_slope,
                  std::vector<Eigen::MatrixXd> char_coeffs,
                  std::vector<Eigen::MatrixXd> baseline);

  /// Firm-independent baseline a_{t,i} (T×I), broadcast across n_firms.
  static AgentPopulation with_uniform_baseline(Eigen::MatrixXd wealth,
                                               Eigen::MatrixXd price_slope,
                                               std::vector<Eigen::MatrixXd> char_coeffs,
                                               const Eigen::MatrixXd& baseline,
                                               std::size_t n_firms);

  std::size_t n_dates() const noexcept { return static_cast<std::size_t>(wealth_.rows()); }
  std::size_t n_agents() const noexcept { return static_cast<std::size_t>(wealth_.cols()); }
  std::size_t n_firms() const noexcept;
  std::size_t n_chars() const noexcept;

  const Eigen::MatrixXd& wealth() const noexcept { return wealth_; }
  const Eigen::MatrixXd& price_slope() const noexcept { return price_slope_; }
  const Eigen::MatrixXd& char_coeffs(std::size_t t) const { return char_coeffs_.at(t); }
  const Eigen::MatrixXd& baseline(std::size_t t) const { return baseline_.at(t); }

  /// κ_t = -Σ_i A_{t,i} b0_{t,i}; may be non-positive (not validated here).
  double kappa(std::size_t t) const;
  /// Scaled wealths B_{t,i} = A_{t,i}/κ_t. Throws equilibrium-ill-posed if κ_t <= 0.
  Eigen::VectorXd scaled_wealth(std::size_t t) const;
  /// Throws equilibrium-ill-posed naming the first date with κ_t <= 0.
  void require_positive_kappa() const;

 private:
  Eigen::MatrixXd wealth_;
  Eigen::MatrixXd price_slope_;
  std::vector<Eigen::MatrixXd> char_coeffs_;
  std::vector<Eigen::MatrixXd> baseline_;
};

/// Net supply s_{t,n} from non-characteristic traders (T×N, finite).
class SupplyPath {
 public:
  explicit SupplyPath(Eigen::MatrixXd supply);
  const Eigen::MatrixXd& values() const noexcept { return supply_; }
  double operator()(std::size_t t, std::size_t n) const {
    return supply_(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(n));
  }

 private:
  Eigen::MatrixXd supply_;
};

/// Equilibrium outcomes plus the ground-truth aggregates that generated them.
/// Rows are panel dates; entries that are undefined at a date are NaN.
struct EquilibriumPanel {
  std::vector<std::string> dates;
  std::vector<std::string> firms;
  Variant variant = Variant::identity_1;
  Timing timing = Timing::lagged;
  Eigen::MatrixXd log_prices;   // T×N
  Eigen::MatrixXd log_returns;  // T×N, r(τ) = p(τ) - p(τ-1)
  Eigen::MatrixXd true_beta;    // T×K, β_τ = η_τ - η_{τ-1}
  Eigen::MatrixXd true_eta;     // T×K, η_τ = Σ_i B_{τ,i} b_{τ,i}
  Eigen::MatrixXd true_alpha;   // T×N, α_τ = Σ_i (B_τ a_τ - B_{τ-1} a_{τ-1})
  Eigen::MatrixXd epsilon;      // T×N, s_{τ-1}/κ_{τ-1} - s_τ/κ_τ
  Eigen::VectorXd kappa;        // T
};

/// Individual log-price demand curve: appeal - slope * log(price).
double demand_curve(double appeal, double slope, double price);

/// Characteristic demand g_{i,n} = Σ_k b_{t,i}^(k) c_{char_date,n}^(k) as I×N.
Eigen::MatrixXd characteristic_demand(const AgentPopulation& agents, std::size_t t,
                                      const CharacteristicsPanel& chars, std::size_t char_date);

/// Market-clearing log prices (Σ_i A_i (a_i + g_i) - s) / κ at date t.
Eigen::VectorXd clear_log_price(const AgentPopulation& agents, std::size_t t,
                                const Eigen::MatrixXd& char_demand,
                                std::span<const double> supply);

/// Σ_i A_{t,i} w_{t,i,n} evaluated at the given log prices.
Eigen::VectorXd total_demand(const AgentPopulation& agents, std::size_t t,
                             const Eigen::MatrixXd& char_demand,
                             const Eigen::VectorXd& log_prices);

/// Scaled characteristic demands η_t^(k) = Σ_i B_{t,i} b_{t,i}^(k).
Eigen::VectorXd scaled_demand(const AgentPopulation& agents, std::size_t t);

struct AggregateDemands {
  Eigen::VectorXd beta;   // β_{t+1}, K
  Eigen::VectorXd eta;    // η_t, K
  Eigen::VectorXd alpha;  // α_{t+1}, N
  double kappa_now = 0.0;
  double kappa_next = 0.0;
};

/// Aggregates linking dates t and t+1.
AggregateDemands aggregate_demands(const AgentPopulation& agents, std::size_t t);

/// Characteristic date read by the demand at `date` (-1 if before the panel).
long characteristic_date(Timing timing, std::size_t date) noexcept;

/// Clears the market at every date and attaches the true aggregates.
/// Requires fully observed characteristics at every date used.
EquilibriumPanel simulate_panel(const AgentPopulation& agents, const CharacteristicsPanel& chars,
                                const SupplyPath& supply, Variant variant,
                                Timing timing = Timing::lagged);

/// Returns rebuilt from the characteristic decomposition
///   r = α + Σ_k (β c + η Δc) + ε
/// using the chosen identity's regressor/coefficient pairing.
Eigen::MatrixXd decomposed_returns(const EquilibriumPanel& panel, const CharacteristicsPanel& chars,
                              Variant variant);

/// Conditional expectation E_t[r_{t+1,n}] for identity 1 given the expected
/// next-period aggregates and the expected supply innovation.
Eigen::VectorXd conditional_expected_return(const CharacteristicsPanel& chars, std::size_t response_date,
                                            Timing timing, const Eigen::VectorXd& eta_now,
                                            const Eigen::VectorXd& expected_beta_next,
                                            const Eigen::VectorXd& expected_alpha_plus_eps);

}  // namespace chardemand
