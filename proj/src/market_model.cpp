#include "chardemand/market_model.hpp"

#include <cmath>

#include "chardemand/error.hpp"

namespace chardemand {

namespace {

using Index = Eigen::Index;

[[noreturn]] void fail(ErrorKind kind, const char* op, const std::string& cause) {
  throw Error(kind, "market_model", op, cause);
}

Index idx(std::size_t i) { return static_cast<Index>(i); }

}  // namespace

AgentPopulation::AgentPopulation(Eigen::MatrixXd wealth, Eigen::MatrixXd price_slope,
                                 std::vector<Eigen::MatrixXd> char_coeffs,
                                 std::vector<Eigen::MatrixXd> baseline)
    : wealth_(std::move(wealth)),
      price_slope_(std::move(price_slope)),
      char_coeffs_(std::move(char_coeffs)),
      baseline_(std::move(baseline)) {
  const Index T = wealth_.rows(), I = wealth_.cols();
  if (T == 0 || I == 0) fail(ErrorKind::invalid_input, "AgentPopulation", "empty population");
  if (price_slope_.rows() != T || price_slope_.cols() != I)
    fail(ErrorKind::invalid_input, "AgentPopulation", "price_slope must be T×I like wealth");
  if (char_coeffs_.size() != static_cast<std::size_t>(T) ||
      baseline_.size() != static_cast<std::size_t>(T))
    fail(ErrorKind::invalid_input, "AgentPopulation", "per-date arrays must cover every date");
  const Index K = char_coeffs_.front().cols(), N = baseline_.front().cols();
  for (std::size_t t = 0; t < char_coeffs_.size(); ++t) {
    if (char_coeffs_[t].rows() != I || char_coeffs_[t].cols() != K)
      fail(ErrorKind::invalid_input, "AgentPopulation", "char_coeffs must be I×K at every date");
    if (baseline_[t].rows() != I || baseline_[t].cols() != N)
      fail(ErrorKind::invalid_input, "AgentPopulation", "baseline must be I×N at every date");
  }
  if (!(wealth_.array() > 0.0).all() || !wealth_.allFinite())
    fail(ErrorKind::invalid_input, "AgentPopulation", "wealth must be strictly positive");
}

AgentPopulation AgentPopulation::with_uniform_baseline(Eigen::MatrixXd wealth,
                                                       Eigen::MatrixXd price_slope,
                                                       std::vector<Eigen::MatrixXd> char_coeffs,
                                                       const Eigen::MatrixXd& baseline,
                                                       std::size_t n_firms) {
  std::vector<Eigen::MatrixXd> dense;
  dense.reserve(static_cast<std::size_t>(baseline.rows()));
  for (Index t = 0; t < baseline.rows(); ++t)
    dense.push_back(baseline.row(t).transpose().replicate(1, idx(n_firms)));
  return AgentPopulation(std::move(wealth), std::move(price_slope), std::move(char_coeffs),
                         std::move(dense));
}

std::size_t AgentPopulation::n_firms() const noexcept {
  return static_cast<std::size_t>(baseline_.front().cols());
}

std::size_t AgentPopulation::n_chars() const noexcept {
  return static_cast<std::size_t>(char_coeffs_.front().cols());
}

double AgentPopulation::kappa(std::size_t t) const {
  return -wealth_.row(idx(t)).dot(price_slope_.row(idx(t)));
}

Eigen::VectorXd AgentPopulation::scaled_wealth(std::size_t t) const {
  const double k = kappa(t);
  if (!(k > 0.0))
    fail(ErrorKind::equilibrium_ill_posed, "scaled_wealth",
         "aggregate log-price slope kappa = " + std::to_string(k) + " <= 0 at date index " +
             std::to_string(t));
  return wealth_.row(idx(t)).transpose() / k;
}

void AgentPopulation::require_positive_kappa() const {
  for (std::size_t t = 0; t < n_dates(); ++t) {
    const double k = kappa(t);
    if (!(k > 0.0))
      fail(ErrorKind::equilibrium_ill_posed, "require_positive_kappa",
           "kappa = " + std::to_string(k) + " <= 0 at date index " + std::to_string(t));
  }
}

SupplyPath::SupplyPath(Eigen::MatrixXd supply) : supply_(std::move(supply)) {
  if (!supply_.allFinite()) fail(ErrorKind::invalid_input, "SupplyPath", "non-finite supply");
}

double demand_curve(double appeal, double slope, double price) {
  if (!(price > 0.0))
    fail(ErrorKind::domain, "demand_curve", "price must be positive, got " + std::to_string(price));
  return appeal - slope * std::log(price);
}

Eigen::MatrixXd characteristic_demand(const AgentPopulation& agents, std::size_t t,
                                      const CharacteristicsPanel& chars, std::size_t char_date) {
  const std::size_t N = chars.n_firms(), K = chars.n_chars();
  if (K != agents.n_chars() || N != agents.n_firms())
    fail(ErrorKind::index, "characteristic_demand", "agent and characteristic dimensions differ");
  Eigen::MatrixXd c(idx(N), idx(K));
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t k = 0; k < K; ++k) c(idx(n), idx(k)) = chars.score(char_date, n, k);
  return agents.char_coeffs(t) * c.transpose();
}

Eigen::VectorXd clear_log_price(const AgentPopulation& agents, std::size_t t,
                                const Eigen::MatrixXd& char_demand,
                                std::span<const double> supply) {
  const double k = agents.kappa(t);
  if (!(k > 0.0))
    fail(ErrorKind::equilibrium_ill_posed, "clear_log_price",
         "kappa = " + std::to_string(k) + " <= 0; clearing has no downward-sloping solution");
  const Index N = idx(agents.n_firms());
  if (char_demand.rows() != idx(agents.n_agents()) || char_demand.cols() != N ||
      supply.size() != agents.n_firms())
    fail(ErrorKind::index, "clear_log_price", "demand/supply dimensions differ from population");
  const Eigen::Map<const Eigen::VectorXd> s(supply.data(), N);
  const Eigen::VectorXd non_price =
      (agents.baseline(t) + char_demand).transpose() * agents.wealth().row(idx(t)).transpose();
  return (non_price - s) / k;
}

Eigen::VectorXd total_demand(const AgentPopulation& agents, std::size_t t,
                             const Eigen::MatrixXd& char_demand,
                             const Eigen::VectorXd& log_prices) {
  const auto A = agents.wealth().row(idx(t)).transpose();
  const auto b0 = agents.price_slope().row(idx(t)).transpose();
  Eigen::MatrixXd w = agents.baseline(t) + char_demand;
  w.noalias() += b0 * log_prices.transpose();
  return w.transpose() * A;
}

Eigen::VectorXd scaled_demand(const AgentPopulation& agents, std::size_t t) {
  return agents.char_coeffs(t).transpose() * agents.scaled_wealth(t);
}

AggregateDemands aggregate_demands(const AgentPopulation& agents, std::size_t t) {
  if (t + 1 >= agents.n_dates())
    fail(ErrorKind::index, "aggregate_demands", "need agent data at t and t+1");
  AggregateDemands out;
  out.kappa_now = agents.kappa(t);
  out.kappa_next = agents.kappa(t + 1);
  const Eigen::VectorXd B0 = agents.scaled_wealth(t);
  const Eigen::VectorXd B1 = agents.scaled_wealth(t + 1);
  out.eta = agents.char_coeffs(t).transpose() * B0;
  out.beta = agents.char_coeffs(t + 1).transpose() * B1 - out.eta;
  out.alpha = agents.baseline(t + 1).transpose() * B1 - agents.baseline(t).transpose() * B0;
  return out;
}

long characteristic_date(Timing timing, std::size_t date) noexcept {
  return timing == Timing::lagged ? static_cast<long>(date) - 1 : static_cast<long>(date);
}

EquilibriumPanel simulate_panel(const AgentPopulation& agents, const CharacteristicsPanel& chars,
                                const SupplyPath& supply, Variant variant, Timing timing) {
  const std::size_t T = chars.n_dates(), N = chars.n_firms(), K = chars.n_chars();
  if (agents.n_dates() != T || agents.n_firms() != N || agents.n_chars() != K)
    fail(ErrorKind::index, "simulate_panel", "agent population is not aligned with the panel");
  if (static_cast<std::size_t>(supply.values().rows()) != T ||
      static_cast<std::size_t>(supply.values().cols()) != N)
    fail(ErrorKind::index, "simulate_panel", "supply path is not aligned with the panel");
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t n = 0; n < N; ++n)
      if (!chars.observed(t, n))
        fail(ErrorKind::index, "simulate_panel",
             "characteristics missing for firm '" + chars.firms()[n] + "' at " + chars.dates()[t]);
  agents.require_positive_kappa();

  EquilibriumPanel out;
  out.dates = chars.dates();
  out.firms = chars.firms();
  out.variant = variant;
  out.timing = timing;
  out.log_prices = Eigen::MatrixXd::Constant(idx(T), idx(N), kMissing);
  out.log_returns = Eigen::MatrixXd::Constant(idx(T), idx(N), kMissing);
  out.true_beta = Eigen::MatrixXd::Constant(idx(T), idx(K), kMissing);
  out.true_eta = Eigen::MatrixXd::Constant(idx(T), idx(K), kMissing);
  out.true_alpha = Eigen::MatrixXd::Constant(idx(T), idx(N), kMissing);
  out.epsilon = Eigen::MatrixXd::Constant(idx(T), idx(N), kMissing);
  out.kappa.resize(idx(T));

  std::vector<double> s(N);
  for (std::size_t t = 0; t < T; ++t) {
    out.kappa(idx(t)) = agents.kappa(t);
    out.true_eta.row(idx(t)) = scaled_demand(agents, t).transpose();
    const long d = characteristic_date(timing, t);
    if (d < 0) continue;
    for (std::size_t n = 0; n < N; ++n) s[n] = supply(t, n);
    const Eigen::MatrixXd g = characteristic_demand(agents, t, chars, static_cast<std::size_t>(d));
    out.log_prices.row(idx(t)) = clear_log_price(agents, t, g, s).transpose();
  }

  for (std::size_t t = 1; t < T; ++t) {
    const AggregateDemands agg = aggregate_demands(agents, t - 1);
    out.true_beta.row(idx(t)) = agg.beta.transpose();
    out.true_alpha.row(idx(t)) = agg.alpha.transpose();
    for (std::size_t n = 0; n < N; ++n)
      out.epsilon(idx(t), idx(n)) = supply(t - 1, n) / agg.kappa_now - supply(t, n) / agg.kappa_next;
    out.log_returns.row(idx(t)) = out.log_prices.row(idx(t)) - out.log_prices.row(idx(t - 1));
  }
  return out;
}

Eigen::MatrixXd decomposed_returns(const EquilibriumPanel& panel, const CharacteristicsPanel& chars,
                              Variant variant) {
  const std::size_t T = chars.n_dates(), N = chars.n_firms(), K = chars.n_chars();
  if (static_cast<std::size_t>(panel.log_prices.rows()) != T ||
      static_cast<std::size_t>(panel.log_prices.cols()) != N ||
      static_cast<std::size_t>(panel.true_eta.cols()) != K)
    fail(ErrorKind::index, "decomposed_returns", "panel and characteristics are not aligned");

  Eigen::MatrixXd out = Eigen::MatrixXd::Constant(idx(T), idx(N), kMissing);
  for (std::size_t tau = 1; tau < T; ++tau) {
    const long d = characteristic_date(panel.timing, tau);
    if (d < 1) continue;
    const auto cd = static_cast<std::size_t>(d);
    for (std::size_t n = 0; n < N; ++n) {
      double r = panel.true_alpha(idx(tau), idx(n)) + panel.epsilon(idx(tau), idx(n));
      for (std::size_t k = 0; k < K; ++k) {
        const double beta = panel.true_beta(idx(tau), idx(k));
        const double dc = chars.delta(cd, n, k);
        if (variant == Variant::identity_1)
          r += beta * chars.score(cd, n, k) + panel.true_eta(idx(tau - 1), idx(k)) * dc;
        else
          r += beta * chars.score(cd - 1, n, k) + panel.true_eta(idx(tau), idx(k)) * dc;
      }
      out(idx(tau), idx(n)) = r;
    }
  }
  return out;
}

Eigen::VectorXd conditional_expected_return(const CharacteristicsPanel& chars,
                                            std::size_t response_date, Timing timing,
                                            const Eigen::VectorXd& eta_now,
                                            const Eigen::VectorXd& expected_beta_next,
                                            const Eigen::VectorXd& expected_alpha_plus_eps) {
  const long d = characteristic_date(timing, response_date);
  if (d < 1 || response_date >= chars.n_dates())
    fail(ErrorKind::index, "conditional_expected_return", "response date has no lagged delta");
  const auto cd = static_cast<std::size_t>(d);
  const std::size_t N = chars.n_firms(), K = chars.n_chars();
  Eigen::VectorXd out = expected_alpha_plus_eps;
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t k = 0; k < K; ++k)
      out(idx(n)) += eta_now(idx(k)) * chars.delta(cd, n, k) +
                     chars.score(cd, n, k) * expected_beta_next(idx(k));
  return out;
}

}  // namespace chardemand
