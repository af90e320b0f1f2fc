#include "chardemand/anomaly.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "chardemand/common.hpp"
#include "chardemand/error.hpp"

namespace chardemand {

namespace {

using Index = Eigen::Index;

[[noreturn]] void fail(ErrorKind kind, const char* op, const std::string& cause) {
  throw Error(kind, "anomaly", op, cause);
}

Index idx(std::size_t i) { return static_cast<Index>(i); }

double mean_over(std::span<const double> values, const std::vector<std::size_t>& members) {
  double s = 0.0;
  for (std::size_t m : members) s += values[m];
  return s / static_cast<double>(members.size());
}

}  // namespace

LegSplit split_halves(std::span<const double> sort_values, std::span<const std::size_t> tie_key) {
  const std::size_t n = sort_values.size();
  if (tie_key.size() != n) fail(ErrorKind::index, "split_halves", "tie keys do not match values");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (sort_values[a] != sort_values[b]) return sort_values[a] < sort_values[b];
    return tie_key[a] < tie_key[b];
  });
  const std::size_t half = n / 2;
  LegSplit out;
  out.short_leg.assign(order.begin(), order.begin() + static_cast<long>(half));
  out.long_leg.assign(order.end() - static_cast<long>(half), order.end());
  return out;
}

double leg_spread(std::span<const double> values, const LegSplit& split) {
  if (split.long_leg.empty() || split.short_leg.empty())
    fail(ErrorKind::thin_cross_section, "leg_spread", "empty portfolio leg");
  return mean_over(values, split.long_leg) - mean_over(values, split.short_leg);
}

SortedPortfolio sort_long_short(const CharacteristicsPanel& chars, const Eigen::MatrixXd& returns,
                                std::size_t k, std::size_t t, std::span<const char> eligible) {
  const std::size_t T = chars.n_dates(), N = chars.n_firms();
  if (static_cast<std::size_t>(returns.rows()) != T || static_cast<std::size_t>(returns.cols()) != N)
    fail(ErrorKind::index, "sort_long_short", "returns are not aligned with the characteristics panel");
  if (k >= chars.n_chars()) fail(ErrorKind::index, "sort_long_short", "characteristic index out of range");
  if (t + 1 >= T) fail(ErrorKind::index, "sort_long_short", "no holding date after the sort date");
  if (!eligible.empty() && eligible.size() != N)
    fail(ErrorKind::index, "sort_long_short", "eligibility mask has wrong length");

  // Ties break on the firm identifier, so rank firms by id once.
  std::vector<std::size_t> by_id(N), id_rank(N);
  std::iota(by_id.begin(), by_id.end(), 0);
  std::sort(by_id.begin(), by_id.end(),
            [&](std::size_t a, std::size_t b) { return chars.firms()[a] < chars.firms()[b]; });
  for (std::size_t r = 0; r < N; ++r) id_rank[by_id[r]] = r;

  std::vector<std::size_t> firms, tie;
  std::vector<double> score, ret;
  for (std::size_t n = 0; n < N; ++n) {
    if (!eligible.empty() && !eligible[n]) continue;
    const double r = returns(idx(t + 1), idx(n));
    if (!chars.observed(t, n) || is_missing(r)) continue;
    firms.push_back(n);
    tie.push_back(id_rank[n]);
    score.push_back(chars.score(t, n, k));
    ret.push_back(r);
  }
  if (firms.size() < 4)
    fail(ErrorKind::thin_cross_section, "sort_long_short",
         "need at least 4 eligible firms at " + chars.dates()[t] + ", got " +
             std::to_string(firms.size()));

  const LegSplit split = split_halves(score, tie);
  SortedPortfolio p;
  p.sort_k = k;
  p.date = t;
  for (std::size_t m : split.long_leg) p.long_leg.push_back(firms[m]);
  for (std::size_t m : split.short_leg) p.short_leg.push_back(firms[m]);
  p.ls_return = leg_spread(ret, split);
  return p;
}

AnomalyAggregates portfolio_aggregates(const CharacteristicsPanel& chars,
                                       const PanelEstimate& estimate,
                                       const SortedPortfolio& portfolio) {
  const std::size_t K = chars.n_chars();
  const std::size_t tau = portfolio.date + 1;
  if (tau >= chars.n_dates()) fail(ErrorKind::index, "portfolio_aggregates", "holding date outside panel");
  if (estimate.n_chars() != K)
    fail(ErrorKind::index, "portfolio_aggregates", "estimate and panel have different K");

  // Rows of the sum: leg members in order (long first) with a sign each.
  std::vector<std::size_t> members(portfolio.long_leg);
  members.insert(members.end(), portfolio.short_leg.begin(), portfolio.short_leg.end());
  const std::size_t M = members.size();
  Eigen::MatrixXd z(idx(M), idx(2 * K));
  std::vector<double> alpha(M), resid(M), row(2 * K);
  for (std::size_t i = 0; i < M; ++i) {
    const std::size_t n = members[i];
    if (!regressor_row(chars, tau, n, estimate.variant, estimate.timing, row))
      fail(ErrorKind::coverage, "portfolio_aggregates",
           "no regressors for firm '" + chars.firms()[n] + "' at " + chars.dates()[tau]);
    for (std::size_t c = 0; c < 2 * K; ++c) z(idx(i), idx(c)) = row[c];
    const auto a = estimate.alpha_for(n);
    const auto e = estimate.residual_for(tau, n);
    if (!a || !e)
      fail(ErrorKind::coverage, "portfolio_aggregates",
           "no fixed effect or residual for leg member '" + chars.firms()[n] + "'");
    alpha[i] = *a;
    resid[i] = *e;
  }

  LegSplit split;
  for (std::size_t i = 0; i < portfolio.long_leg.size(); ++i) split.long_leg.push_back(i);
  for (std::size_t i = portfolio.long_leg.size(); i < M; ++i) split.short_leg.push_back(i);

  AnomalyAggregates out;
  out.psi.resize(idx(K));
  out.phi.resize(idx(K));
  std::vector<double> col(M);
  for (std::size_t c = 0; c < 2 * K; ++c) {
    for (std::size_t i = 0; i < M; ++i) col[i] = z(idx(i), idx(c));
    (c < K ? out.psi(idx(c)) : out.phi(idx(c - K))) = leg_spread(col, split);
  }
  out.lambda = leg_spread(alpha, split);
  out.xi = leg_spread(resid, split);
  return out;
}

MomentSplit moment_split(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) fail(ErrorKind::index, "moment_split", "series lengths differ");
  const double n = static_cast<double>(x.size());
  MomentSplit m;
  for (std::size_t i = 0; i < x.size(); ++i) {
    m.mean_x += x[i];
    m.mean_y += y[i];
    m.mean_product += x[i] * y[i];
  }
  m.mean_x /= n;
  m.mean_y /= n;
  m.mean_product /= n;
  for (std::size_t i = 0; i < x.size(); ++i) m.covariance += (x[i] - m.mean_x) * (y[i] - m.mean_y);
  m.covariance /= n;
  return m;
}

DecompositionReport decompose_anomaly(const RollingResult& rolling,
                                      const CharacteristicsPanel& chars,
                                      const Eigen::MatrixXd& returns, std::size_t k) {
  const std::size_t T = chars.n_dates(), N = chars.n_firms(), K = chars.n_chars();
  if (static_cast<std::size_t>(returns.rows()) != T || static_cast<std::size_t>(returns.cols()) != N)
    fail(ErrorKind::index, "decompose_anomaly", "returns are not aligned with the characteristics panel");
  if (k >= K) fail(ErrorKind::index, "decompose_anomaly", "characteristic index out of range");
  if (rolling.estimates.empty())
    fail(ErrorKind::empty_window, "decompose_anomaly", "no rolling estimates to decompose");

  DecompositionReport rep;
  rep.sort_k = k;
  std::vector<char> eligible(N);
  for (const PanelEstimate& est : rolling.estimates) {
    const std::size_t tau = est.window_last;
    if (tau == 0 || tau >= T || est.n_chars() != K ||
        est.window_end != chars.dates()[tau])
      fail(ErrorKind::index, "decompose_anomaly", "estimate dates do not match the panel");
    for (std::size_t n = 0; n < N; ++n)
      eligible[n] = est.alpha_for(n) && est.residual_for(tau, n) ? 1 : 0;

    const SortedPortfolio p = sort_long_short(chars, returns, k, tau - 1, eligible);
    const AnomalyAggregates agg = portfolio_aggregates(chars, est, p);

    DecompositionDate d;
    d.sort_date = tau - 1;
    d.date = chars.dates()[tau];
    d.ls_return = p.ls_return;
    d.lambda = agg.lambda;
    d.beta = est.beta_hat();
    d.eta = est.eta_hat();
    d.psi = agg.psi;
    d.phi = agg.phi;
    d.xi = agg.xi;
    const double fitted = d.lambda + d.beta.dot(d.psi) + d.eta.dot(d.phi) + d.xi;
    d.accounting_error = d.ls_return - fitted;
    rep.max_accounting_error = std::max(rep.max_accounting_error, std::fabs(d.accounting_error));
    rep.dates.push_back(std::move(d));
  }

  const std::size_t D = rep.dates.size();
  rep.n_dates = D;
  std::vector<double> x(D), y(D), other_b(D, 0.0), other_psi(D, 0.0), other_e(D, 0.0),
      other_phi(D, 0.0);
  for (std::size_t i = 0; i < D; ++i) {
    rep.mean_ls_return += rep.dates[i].ls_return;
    rep.mean_lambda += rep.dates[i].lambda;
    rep.residual += rep.dates[i].xi;
  }
  rep.mean_ls_return /= static_cast<double>(D);
  rep.mean_lambda /= static_cast<double>(D);
  rep.residual /= static_cast<double>(D);

  for (std::size_t j = 0; j < K; ++j) {
    CharacteristicTerms term;
    for (std::size_t i = 0; i < D; ++i) {
      x[i] = rep.dates[i].beta(idx(j));
      y[i] = rep.dates[i].psi(idx(j));
      if (j != k) {
        other_b[i] += x[i];
        other_psi[i] += y[i];
      }
    }
    const MomentSplit bp = moment_split(x, y);
    term.mu_beta = bp.mean_x;
    term.mu_psi = bp.mean_y;
    term.cov_beta_psi = bp.covariance;
    for (std::size_t i = 0; i < D; ++i) {
      x[i] = rep.dates[i].eta(idx(j));
      y[i] = rep.dates[i].phi(idx(j));
      if (j != k) {
        other_e[i] += x[i];
        other_phi[i] += y[i];
      }
    }
    const MomentSplit ep = moment_split(x, y);
    term.mu_eta = ep.mean_x;
    term.mu_phi = ep.mean_y;
    term.cov_eta_phi = ep.covariance;

    rep.mu_beta_term += term.mu_beta * term.mu_psi;
    rep.mu_eta_term += term.mu_eta * term.mu_phi;
    rep.covariance_beta_psi += term.cov_beta_psi;
    rep.covariance_eta_phi += term.cov_eta_phi;
    rep.terms.push_back(term);
  }
  // The residual is reported as the remainder so the accounting identity
  // holds by construction; it coincides with the mean of Ξ.
  rep.residual = rep.mean_ls_return - (rep.mean_lambda + rep.mu_beta_term + rep.mu_eta_term +
                                       rep.covariance_beta_psi + rep.covariance_eta_phi);

  rep.large_n_own_term = kSortedSplitConstant * rep.terms[k].mu_beta;
  rep.large_n_cov_beta = moment_split(other_b, other_psi).covariance;
  rep.large_n_cov_eta = moment_split(other_e, other_phi).covariance;
  rep.phi_own_mean = rep.terms[k].mu_phi;
  return rep;
}

}  // namespace chardemand
