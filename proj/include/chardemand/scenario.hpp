#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "chardemand/charnorm.hpp"
#include "chardemand/common.hpp"
#include "chardemand/market_model.hpp"

namespace chardemand {

/// Latent Gaussian AR(1) characteristics with equicorrelated innovations,
/// rank-Gaussianised per date (or clipped to ±3 when rank_normalize is off).
struct CharacteristicProcess {
  double persistence = 0.9;
  double correlation = 0.0;
  bool rank_normalize = true;
};

/// Generative rules for a simulated market. The aggregates the estimators
/// target (η path, fixed effects α_n) are specified directly; individual
/// agents are heterogeneous but net exactly to those aggregates.
struct SimulationConfig {
  std::size_t n_dates = 24;
  std::size_t n_firms = 100;
  std::size_t n_agents = 2;
  std::vector<std::string> k_names{"c1"};
  std::string start_month = "2000-01";
  std::uint64_t seed = 1;
  Timing timing = Timing::lagged;
  Variant variant = Variant::identity_1;

  CharacteristicProcess char_process;

  // wealth: "constant" or "random_walk" (log-normal steps).
  std::string wealth_rule = "constant";
  double wealth_initial = 1.0;
  double wealth_volatility = 0.0;

  // Per-agent log-price slopes; a single entry is broadcast.
  std::vector<double> price_slope{-1.0};

  // η_0 = eta_initial, η_t = η_{t-1} + eta_drift + eta_volatility * z.
  std::vector<double> eta_initial{0.0};
  std::vector<double> eta_drift{0.0};
  std::vector<double> eta_volatility{0.0};
  double agent_dispersion = 0.0;

  // α_n = alpha_mean + alpha_dispersion u_n + Σ_k alpha_loadings_k x_{0,n,k},
  // plus i.i.d. alpha_noise per date.
  double alpha_mean = 0.0;
  double alpha_dispersion = 0.0;
  std::vector<double> alpha_loadings{};
  double alpha_noise = 0.0;
  double baseline_level = 0.0;

  double supply_mean = 0.0;
  double supply_sd = 0.0;

  // Explicit per-date arrays override the rules above when present.
  std::optional<Eigen::MatrixXd> wealth_values;              // T×I
  std::optional<Eigen::MatrixXd> price_slope_values;         // T×I
  std::optional<std::vector<Eigen::MatrixXd>> coeff_values;  // T of I×K
  std::optional<std::vector<Eigen::MatrixXd>> baseline_values;  // T of I×N
  std::optional<Eigen::MatrixXd> supply_values;              // T×N
};

struct Scenario {
  CharacteristicsPanel chars;
  AgentPopulation agents;
  SupplyPath supply;
  Eigen::MatrixXd latent_initial;  // N×K latent characteristics at the first date
};

/// Consecutive YYYY-MM labels starting at `start`.
std::vector<std::string> month_sequence(const std::string& start, std::size_t count);

CharacteristicsPanel simulate_characteristics(const std::vector<std::string>& dates,
                                              const std::vector<std::string>& firms,
                                              const std::vector<std::string>& k_names,
                                              const CharacteristicProcess& process,
                                              std::uint64_t seed,
                                              Eigen::MatrixXd* latent_initial = nullptr);

Scenario build_scenario(const SimulationConfig& config);

SimulationConfig parse_simulation_config(const nlohmann::json& j);
nlohmann::json to_json(const SimulationConfig& config);

}  // namespace chardemand
