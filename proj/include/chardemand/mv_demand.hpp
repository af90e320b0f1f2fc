#pragma once

#include <utility>

#include <Eigen/Dense>

namespace chardemand {

/// One agent's beliefs: r = C β + e with β ~ (β̂, Σ_β) second moments and
/// independent errors of variance σ²_e.
struct AgentBeliefs {
  Eigen::MatrixXd char_matrix;  // N×K
  Eigen::VectorXd beta_hat;     // K
  Eigen::MatrixXd sigma_beta;   // K×K second moment of loadings
  Eigen::VectorXd sigma_e2;     // N
  double gamma = 1.0;
  double budget = 1.0;
};

struct ReturnMoments {
  Eigen::VectorXd mean;        // r̄ = C β̂
  Eigen::MatrixXd covariance;  // V = C Σ_β C' - r̄ r̄' + diag(σ²_e)
};

struct MVSolution {
  Eigen::VectorXd weights;
  double delta = 0.0;
  Eigen::VectorXd f1;  // N
  Eigen::MatrixXd f2;  // N×K, w_n = f1_n + Σ_k C[n,k] f2[n,k]
  ReturnMoments moments;
  double reconstruction_residual = 0.0;
};

void validate(const AgentBeliefs& beliefs);

ReturnMoments posterior_moments(const AgentBeliefs& beliefs);

/// M⁻¹ for M = C Σ_β C' + diag(σ²_e) through the K×K Woodbury kernel.
Eigen::MatrixXd woodbury_inverse(const AgentBeliefs& beliefs);

/// V⁻¹ as a rank-one update of M⁻¹.
Eigen::MatrixXd invert_covariance(const AgentBeliefs& beliefs);

MVSolution optimal_weights(const AgentBeliefs& beliefs);

/// f1 and f2 for a solved problem; the weights are f1 + rowwise(C ∘ f2).
std::pair<Eigen::VectorXd, Eigen::MatrixXd> linear_decomposition(const MVSolution& solution,
                                                                 const AgentBeliefs& beliefs);

}  // namespace chardemand
