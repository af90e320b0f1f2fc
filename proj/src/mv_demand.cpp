#include "chardemand/mv_demand.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "chardemand/error.hpp"

namespace chardemand {

namespace {

[[noreturn]] void fail(ErrorKind kind, const char* op, const std::string& cause) {
  throw Error(kind, "mv_demand", op, cause);
}

// (I_K + Σ C' D⁻¹ C)⁻¹ Σ C', the K×N block shared by the inverse and f2.
Eigen::MatrixXd woodbury_kernel(const AgentBeliefs& b) {
  const Eigen::MatrixXd& C = b.char_matrix;
  const Eigen::Index K = C.cols();
  const Eigen::VectorXd dinv = b.sigma_e2.cwiseInverse();
  const Eigen::MatrixXd sct = b.sigma_beta * C.transpose();
  const Eigen::MatrixXd inner =
      Eigen::MatrixXd::Identity(K, K) + sct * dinv.asDiagonal() * C;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(inner);
  lu.setThreshold(1e-13);
  if (!lu.isInvertible())
    fail(ErrorKind::ill_conditioned_beliefs, "invert_covariance", "singular K×K Woodbury kernel");
  return lu.solve(sct);
}

// 1 - r̄'M⁻¹r̄, positive exactly when V is positive definite.
double rank_one_denominator(const Eigen::MatrixXd& minv, const Eigen::VectorXd& rbar) {
  return 1.0 - rbar.dot(minv * rbar);
}

}  // namespace

void validate(const AgentBeliefs& b) {
  const Eigen::Index N = b.char_matrix.rows(), K = b.char_matrix.cols();
  if (N == 0 || K == 0) fail(ErrorKind::invalid_input, "validate", "empty characteristic matrix");
  if (b.beta_hat.size() != K || b.sigma_beta.rows() != K || b.sigma_beta.cols() != K ||
      b.sigma_e2.size() != N)
    fail(ErrorKind::invalid_input, "validate", "belief dimensions are inconsistent");
  if (!(b.gamma > 0) || !std::isfinite(b.gamma))
    fail(ErrorKind::invalid_input, "validate", "risk aversion must be positive");
  if (!std::isfinite(b.budget)) fail(ErrorKind::invalid_input, "validate", "budget must be finite");
  if (!b.char_matrix.allFinite() || !b.beta_hat.allFinite() || !b.sigma_beta.allFinite())
    fail(ErrorKind::invalid_input, "validate", "non-finite belief entries");
  if ((b.sigma_e2.array() <= 0).any() || !b.sigma_e2.allFinite())
    fail(ErrorKind::invalid_input, "validate", "error variances must be strictly positive");
  const double scale = std::max(1.0, b.sigma_beta.cwiseAbs().maxCoeff());
  if ((b.sigma_beta - b.sigma_beta.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    fail(ErrorKind::invalid_input, "validate", "loading second moment is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b.sigma_beta, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-10 * scale)
    fail(ErrorKind::invalid_input, "validate", "loading second moment is not positive semi-definite");
}

ReturnMoments posterior_moments(const AgentBeliefs& b) {
  validate(b);
  ReturnMoments m;
  m.mean = b.char_matrix * b.beta_hat;
  m.covariance = b.char_matrix * b.sigma_beta * b.char_matrix.transpose() -
                 m.mean * m.mean.transpose();
  m.covariance.diagonal() += b.sigma_e2;
  m.covariance = 0.5 * (m.covariance + m.covariance.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(m.covariance);
  if (llt.info() != Eigen::Success)
    fail(ErrorKind::inconsistent_beliefs, "posterior_moments",
         "implied return covariance is not positive definite");
  return m;
}

Eigen::MatrixXd woodbury_inverse(const AgentBeliefs& b) {
  validate(b);
  const Eigen::VectorXd dinv = b.sigma_e2.cwiseInverse();
  const Eigen::MatrixXd q = woodbury_kernel(b);
  // (I - D⁻¹ C Q) D⁻¹
  Eigen::MatrixXd minv = -(dinv.asDiagonal() * b.char_matrix * q) * dinv.asDiagonal();
  minv.diagonal() += dinv;
  return minv;
}

Eigen::MatrixXd invert_covariance(const AgentBeliefs& b) {
  const ReturnMoments m = posterior_moments(b);
  const Eigen::MatrixXd minv = woodbury_inverse(b);
  const double denom = rank_one_denominator(minv, m.mean);
  if (!(denom > 0))
    fail(ErrorKind::inconsistent_beliefs, "invert_covariance", "rank-one update is not positive");
  const Eigen::VectorXd mr = minv * m.mean;
  return minv + (mr * mr.transpose()) / denom;
}

MVSolution optimal_weights(const AgentBeliefs& b) {
  MVSolution s;
  s.moments = posterior_moments(b);
  const Eigen::MatrixXd vinv = invert_covariance(b);
  const Eigen::Index N = b.char_matrix.rows();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(N);
  const Eigen::VectorXd vinv1 = vinv * ones;
  const double a = ones.dot(vinv1);
  if (!(a > 0))
    fail(ErrorKind::internal_consistency, "optimal_weights", "1'V⁻¹1 is not positive");
  s.delta = (b.gamma * b.budget - vinv1.dot(s.moments.mean)) / a;
  s.weights = vinv * (s.moments.mean + s.delta * ones) / b.gamma;
  // One refinement step on δ absorbs rounding in the budget sum.
  s.delta += b.gamma * (b.budget - s.weights.sum()) / a;
  s.weights = vinv * (s.moments.mean + s.delta * ones) / b.gamma;

  auto [f1, f2] = linear_decomposition(s, b);
  s.f1 = std::move(f1);
  s.f2 = std::move(f2);
  const Eigen::VectorXd rebuilt = s.f1 + (b.char_matrix.array() * s.f2.array()).rowwise().sum().matrix();
  s.reconstruction_residual = (s.weights - rebuilt).cwiseAbs().maxCoeff();
  return s;
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> linear_decomposition(const MVSolution& s,
                                                                 const AgentBeliefs& b) {
  validate(b);
  const Eigen::Index N = b.char_matrix.rows(), K = b.char_matrix.cols();
  if (s.moments.mean.size() != N)
    fail(ErrorKind::invalid_input, "linear_decomposition", "solution and beliefs disagree on N");
  const Eigen::MatrixXd minv = woodbury_inverse(b);
  const Eigen::VectorXd& rbar = s.moments.mean;
  const double denom = rank_one_denominator(minv, rbar);
  const Eigen::VectorXd u = (rbar + s.delta * Eigen::VectorXd::Ones(N)) / b.gamma;
  // V⁻¹ = M⁻¹ (I + r̄ r̄' M⁻¹ / denom), so w = M⁻¹ v.
  const Eigen::VectorXd v = u + rbar * (rbar.dot(minv * u) / denom);
  const Eigen::VectorXd dinv = b.sigma_e2.cwiseInverse();
  const Eigen::VectorXd dv = dinv.cwiseProduct(v);
  const Eigen::VectorXd cross = woodbury_kernel(b) * dv;  // K
  Eigen::VectorXd f1 = dv;
  Eigen::MatrixXd f2(N, K);
  for (Eigen::Index n = 0; n < N; ++n) f2.row(n) = -dinv(n) * cross.transpose();
  return {std::move(f1), std::move(f2)};
}

}  // namespace chardemand
