#pragma once

#include <algorithm>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chardemand/charnorm.hpp"
#include "chardemand/market_model.hpp"
#include "oracles.hpp"

namespace fixture {

inline std::vector<std::string> months(std::size_t T) {
  std::vector<std::string> out;
  for (std::size_t t = 0; t < T; ++t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04zu-%02zu", 2000 + t / 12, t % 12 + 1);
    out.emplace_back(buf);
  }
  return out;
}

inline std::vector<std::string> firm_ids(std::size_t N) {
  std::vector<std::string> out;
  for (std::size_t n = 0; n < N; ++n) out.push_back("firm" + std::to_string(1000 + n));
  return out;
}

inline std::vector<std::string> char_names(std::size_t K) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < K; ++k) out.push_back("k" + std::to_string(k));
  return out;
}

// Clipped Gaussian scores; no missing entries.
inline chardemand::CharacteristicsPanel random_chars(std::mt19937_64& rng, std::size_t T,
                                                     std::size_t N, std::size_t K) {
  std::normal_distribution<double> g;
  std::vector<double> s(T * N * K);
  for (double& x : s) x = std::clamp(g(rng), -3.0, 3.0);
  return chardemand::CharacteristicsPanel(months(T), firm_ids(N), char_names(K), std::move(s));
}

struct Market {
  chardemand::CharacteristicsPanel chars;
  chardemand::AgentPopulation agents;
  chardemand::SupplyPath supply;
};

// Heterogeneous agents with time-varying wealth, slopes, coefficients and
// baselines; slopes negative so κ > 0.
inline Market random_market(std::uint64_t seed, std::size_t T, std::size_t N, std::size_t I,
                            std::size_t K, double supply_sd = 0.1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  std::normal_distribution<double> g;
  auto chars = random_chars(rng, T, N, K);
  const auto Ti = static_cast<Eigen::Index>(T), Ii = static_cast<Eigen::Index>(I);
  Eigen::MatrixXd wealth(Ti, Ii), slope(Ti, Ii);
  std::vector<Eigen::MatrixXd> coeffs, base;
  for (Eigen::Index t = 0; t < Ti; ++t) {
    for (Eigen::Index i = 0; i < Ii; ++i) {
      wealth(t, i) = u(rng);
      slope(t, i) = -u(rng);
    }
    coeffs.push_back(0.3 * oracle::random_matrix(rng, Ii, static_cast<Eigen::Index>(K)));
    base.push_back(0.1 * oracle::random_matrix(rng, Ii, static_cast<Eigen::Index>(N)));
  }
  Eigen::MatrixXd s = supply_sd * oracle::random_matrix(rng, Ti, static_cast<Eigen::Index>(N));
  return {std::move(chars), chardemand::AgentPopulation(wealth, slope, coeffs, base),
          chardemand::SupplyPath(s)};
}

}  // namespace fixture
