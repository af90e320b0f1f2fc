#include "chardemand/panel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <thread>

#include <spdlog/spdlog.h>

#include "chardemand/error.hpp"

namespace chardemand {

namespace {

using Index = Eigen::Index;

[[noreturn]] void fail(ErrorKind kind, const char* op, const std::string& cause) {
  throw Error(kind, "panel", op, cause);
}

Index idx(std::size_t i) { return static_cast<Index>(i); }

std::vector<std::string> coefficient_names(const std::vector<std::string>& k_names) {
  std::vector<std::string> out;
  for (const auto& k : k_names) out.push_back("beta:" + k);
  for (const auto& k : k_names) out.push_back("eta:" + k);
  return out;
}

void require_shape(const RegressionDesign& d, const char* op) {
  if (d.rows.empty()) fail(ErrorKind::empty_window, op, "design has no rows");
  if (static_cast<std::size_t>(d.response.size()) != d.rows.size() ||
      static_cast<std::size_t>(d.regressors.rows()) != d.rows.size() ||
      static_cast<std::size_t>(d.regressors.cols()) != 2 * d.n_chars())
    fail(ErrorKind::invalid_input, op, "design arrays have inconsistent shapes");
  if (!d.regressors.allFinite() || !d.response.allFinite())
    fail(ErrorKind::invalid_input, op, "design contains missing entries");
}

void require_size(std::size_t rows, std::size_t firms, std::size_t K, const char* op) {
  if (rows < 2 * K + 2)
    fail(ErrorKind::singular_design, op,
         "need at least " + std::to_string(2 * K + 2) + " rows, got " + std::to_string(rows));
  if (firms < 2) fail(ErrorKind::singular_design, op, "need at least two distinct firms");
}

struct LeastSquares {
  Eigen::VectorXd coef;
  Eigen::VectorXd se;
  Eigen::VectorXd resid;
  double condition = 0.0;
};

// Normal equations through a Cholesky factor, guarded by the eigenvalue
// spread of X'X. `dof` is the residual degree-of-freedom count.
LeastSquares solve_normal_equations(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                    std::size_t dof, const EstimationOptions& opts,
                                    const char* op) {
  const Eigen::MatrixXd xtx = X.transpose() * X;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(xtx, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  const double cond = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(hi > 0.0) || !(lo > 0.0) || cond > opts.max_condition) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "cross-product matrix is singular or ill-conditioned: smallest eigenvalue "
                  "%.6g, condition number %.6g",
                  lo, cond);
    fail(ErrorKind::singular_design, op, buf);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(xtx);
  if (llt.info() != Eigen::Success)
    fail(ErrorKind::singular_design, op, "Cholesky factorisation failed");

  LeastSquares out;
  out.condition = cond;
  out.coef = llt.solve(X.transpose() * y);
  out.resid = y - X * out.coef;
  if (dof == 0)
    fail(ErrorKind::singular_design, op, "no residual degrees of freedom left");

  const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(xtx.rows(), xtx.cols()));
  Eigen::MatrixXd cov;
  if (opts.robust_se) {
    const Eigen::MatrixXd meat = X.transpose() * out.resid.array().square().matrix().asDiagonal() * X;
    cov = inv * meat * inv * (static_cast<double>(X.rows()) / static_cast<double>(dof));
  } else {
    cov = inv * (out.resid.squaredNorm() / static_cast<double>(dof));
  }
  out.se = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  return out;
}

Eigen::VectorXd t_statistics(const Eigen::VectorXd& coef, const Eigen::VectorXd& se) {
  Eigen::VectorXd t(coef.size());
  for (Index i = 0; i < coef.size(); ++i) t(i) = se(i) > 0.0 ? coef(i) / se(i) : kMissing;
  return t;
}

void fill_window(PanelEstimate& est, const RegressionDesign& d) {
  std::size_t lo = d.rows.front().date, hi = lo;
  for (const auto& r : d.rows) {
    lo = std::min(lo, r.date);
    hi = std::max(hi, r.date);
  }
  est.window_first = lo;
  est.window_last = hi;
  est.window_start = d.dates.at(lo);
  est.window_end = d.dates.at(hi);
}

}  // namespace

std::size_t RegressionDesign::n_distinct_firms() const {
  std::vector<std::size_t> f;
  f.reserve(rows.size());
  for (const auto& r : rows) f.push_back(r.firm);
  std::sort(f.begin(), f.end());
  return static_cast<std::size_t>(std::unique(f.begin(), f.end()) - f.begin());
}

bool regressor_row(const CharacteristicsPanel& chars, std::size_t response_date, std::size_t firm,
                   Variant variant, Timing timing, std::span<double> out) {
  const long d = timing == Timing::lagged ? static_cast<long>(response_date) - 1
                                          : static_cast<long>(response_date);
  if (d < 1 || static_cast<std::size_t>(d) >= chars.n_dates()) return false;
  const auto cd = static_cast<std::size_t>(d);
  const std::size_t level_date = variant == Variant::identity_1 ? cd : cd - 1;
  const std::size_t K = chars.n_chars();
  for (std::size_t k = 0; k < K; ++k) {
    const double level = chars.score(level_date, firm, k);
    const double delta = chars.delta(cd, firm, k);
    if (is_missing(level) || is_missing(delta)) return false;
    out[k] = level;
    out[K + k] = delta;
  }
  return true;
}

RegressionDesign build_design(const CharacteristicsPanel& chars, const Eigen::MatrixXd& returns,
                              Variant variant, Timing timing, std::size_t first_date,
                              std::size_t last_date) {
  const std::size_t T = chars.n_dates(), N = chars.n_firms(), K = chars.n_chars();
  if (static_cast<std::size_t>(returns.rows()) != T || static_cast<std::size_t>(returns.cols()) != N)
    fail(ErrorKind::index, "build_design", "returns are not aligned with the characteristics panel");
  if (first_date > last_date || last_date >= T)
    fail(ErrorKind::index, "build_design", "window outside the panel dates");

  RegressionDesign d;
  d.dates = chars.dates();
  d.firms = chars.firms();
  d.k_names = chars.k_names();
  d.variant = variant;
  d.timing = timing;

  std::vector<double> z(2 * K);
  std::vector<double> y;
  std::vector<double> x;
  for (std::size_t tau = first_date; tau <= last_date; ++tau)
    for (std::size_t n = 0; n < N; ++n) {
      const double r = returns(idx(tau), idx(n));
      if (is_missing(r) || !regressor_row(chars, tau, n, variant, timing, z)) continue;
      d.rows.push_back({tau, n});
      y.push_back(r);
      x.insert(x.end(), z.begin(), z.end());
    }

  d.response = Eigen::Map<Eigen::VectorXd>(y.data(), idx(y.size()));
  d.regressors = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      x.data(), idx(d.rows.size()), idx(2 * K));
  return d;
}

WithinDesign within_transform(const RegressionDesign& design, SingletonPolicy policy) {
  require_shape(design, "within_transform");
  const Index P = design.regressors.cols();

  std::map<std::size_t, std::size_t> count;
  for (const auto& r : design.rows) ++count[r.firm];

  WithinDesign out;
  std::vector<std::string> singles;
  std::map<std::size_t, std::size_t> group;
  for (const auto& [firm, c] : count) {
    if (c < 2) {
      singles.push_back(design.firms.at(firm));
      continue;
    }
    group[firm] = out.means.size();
    out.means.push_back({firm, c, 0.0, Eigen::VectorXd::Zero(P)});
  }
  if (!singles.empty()) {
    std::string list;
    for (const auto& s : singles) list += (list.empty() ? "" : ", ") + s;
    if (policy == SingletonPolicy::error)
      fail(ErrorKind::singleton_firm, "within_transform", "firms with a single row: " + list);
    spdlog::warn("within_transform: dropping {} singleton firm(s): {}", singles.size(), list);
  }
  out.dropped_firms = std::move(singles);

  for (std::size_t i = 0; i < design.rows.size(); ++i) {
    const auto it = group.find(design.rows[i].firm);
    if (it == group.end()) continue;
    auto& m = out.means[it->second];
    m.response += design.response(idx(i));
    m.regressors += design.regressors.row(idx(i)).transpose();
  }
  for (auto& m : out.means) {
    m.response /= static_cast<double>(m.count);
    m.regressors /= static_cast<double>(m.count);
  }

  RegressionDesign& dm = out.demeaned;
  dm.dates = design.dates;
  dm.firms = design.firms;
  dm.k_names = design.k_names;
  dm.variant = design.variant;
  dm.timing = design.timing;
  std::size_t kept = 0;
  for (const auto& r : design.rows) kept += group.count(r.firm);
  dm.response.resize(idx(kept));
  dm.regressors.resize(idx(kept), P);
  for (std::size_t i = 0, j = 0; i < design.rows.size(); ++i) {
    const auto it = group.find(design.rows[i].firm);
    if (it == group.end()) continue;
    const auto& m = out.means[it->second];
    dm.rows.push_back(design.rows[i]);
    out.row_group.push_back(it->second);
    dm.response(idx(j)) = design.response(idx(i)) - m.response;
    dm.regressors.row(idx(j)) = design.regressors.row(idx(i)) - m.regressors.transpose();
    ++j;
  }
  return out;
}

PanelEstimate estimate_lsdv(const RegressionDesign& design, const EstimationOptions& opts) {
  require_shape(design, "estimate_lsdv");
  const WithinDesign w = within_transform(design, opts.singletons);
  const RegressionDesign& dm = w.demeaned;
  if (dm.rows.empty()) fail(ErrorKind::empty_window, "estimate_lsdv", "no firm has two rows");
  const std::size_t K = design.n_chars(), n = dm.n_obs(), N = w.means.size();
  require_size(n, N, K, "estimate_lsdv");
  const std::size_t absorbed = N + 2 * K;
  const std::size_t dof = n > absorbed ? n - absorbed : 0;

  const LeastSquares ls = solve_normal_equations(dm.regressors, dm.response, dof, opts, "estimate_lsdv");

  PanelEstimate est;
  est.method = Method::within;
  est.variant = design.variant;
  est.timing = design.timing;
  est.coef_names = coefficient_names(design.k_names);
  est.coefficients = ls.coef;
  est.std_errors = ls.se;
  est.t_stats = t_statistics(ls.coef, ls.se);
  est.alpha_hat.resize(idx(N));
  for (std::size_t g = 0; g < N; ++g) {
    est.effect_firms.push_back(w.means[g].firm);
    est.alpha_hat(idx(g)) = w.means[g].response - w.means[g].regressors.dot(ls.coef);
  }
  const double tss = dm.response.squaredNorm();
  est.r_squared = tss > 0.0 ? std::clamp(1.0 - ls.resid.squaredNorm() / tss, 0.0, 1.0) : 0.0;
  est.n_obs = n;
  est.n_firms = N;
  est.dof = dof;
  est.condition_number = ls.condition;
  est.rows = dm.rows;
  est.residuals = ls.resid;
  est.dropped_firms = w.dropped_firms;
  fill_window(est, dm);
  return est;
}

PanelEstimate estimate_pooled(const RegressionDesign& design, const EstimationOptions& opts) {
  require_shape(design, "estimate_pooled");
  const std::size_t K = design.n_chars(), n = design.n_obs();
  require_size(n, design.n_distinct_firms(), K, "estimate_pooled");
  const std::size_t dof = n > 2 * K + 1 ? n - 2 * K - 1 : 0;

  Eigen::MatrixXd X(idx(n), idx(2 * K + 1));
  X.col(0).setOnes();
  X.rightCols(idx(2 * K)) = design.regressors;
  const LeastSquares ls = solve_normal_equations(X, design.response, dof, opts, "estimate_pooled");

  PanelEstimate est;
  est.method = Method::pooled;
  est.variant = design.variant;
  est.timing = design.timing;
  est.coef_names = coefficient_names(design.k_names);
  est.coefficients = ls.coef.tail(idx(2 * K));
  est.std_errors = ls.se.tail(idx(2 * K));
  est.t_stats = t_statistics(est.coefficients, est.std_errors);
  est.intercept = ls.coef(0);
  est.intercept_se = ls.se(0);
  const double mean = design.response.mean();
  const double tss = (design.response.array() - mean).square().sum();
  est.r_squared = tss > 0.0 ? std::clamp(1.0 - ls.resid.squaredNorm() / tss, 0.0, 1.0) : 0.0;
  est.n_obs = n;
  est.n_firms = design.n_distinct_firms();
  est.dof = dof;
  est.condition_number = ls.condition;
  est.rows = design.rows;
  est.residuals = ls.resid;
  fill_window(est, design);
  return est;
}

PanelEstimate estimate(const RegressionDesign& design, Method method, const EstimationOptions& opts) {
  return method == Method::within ? estimate_lsdv(design, opts) : estimate_pooled(design, opts);
}

std::optional<double> PanelEstimate::alpha_for(std::size_t firm) const {
  if (method == Method::pooled) return intercept;
  const auto it = std::lower_bound(effect_firms.begin(), effect_firms.end(), firm);
  if (it == effect_firms.end() || *it != firm) return std::nullopt;
  return alpha_hat(static_cast<Index>(it - effect_firms.begin()));
}

std::optional<double> PanelEstimate::residual_for(std::size_t date, std::size_t firm) const {
  const auto it = std::lower_bound(rows.begin(), rows.end(), DesignRow{date, firm},
                                   [](const DesignRow& a, const DesignRow& b) {
                                     return a.date != b.date ? a.date < b.date : a.firm < b.firm;
                                   });
  if (it == rows.end() || it->date != date || it->firm != firm) return std::nullopt;
  return residuals(static_cast<Index>(it - rows.begin()));
}

RollingResult rolling_estimate(const CharacteristicsPanel& chars, const Eigen::MatrixXd& returns,
                               std::size_t window_len, Method method, Variant variant,
                               Timing timing, const EstimationOptions& opts, unsigned threads) {
  const std::size_t T = chars.n_dates();
  if (window_len < 2) fail(ErrorKind::invalid_input, "rolling_estimate", "window_len must be >= 2");
  if (window_len > T)
    fail(ErrorKind::invalid_input, "rolling_estimate",
         "window_len " + std::to_string(window_len) + " exceeds the panel span of " +
             std::to_string(T) + " dates");

  const std::size_t n_windows = T - window_len + 1;
  std::vector<std::optional<PanelEstimate>> slots(n_windows);
  std::vector<std::string> reasons(n_windows);

  auto run_window = [&](std::size_t w) {
    const std::size_t last = window_len - 1 + w;
    try {
      const RegressionDesign d = build_design(chars, returns, variant, timing, w, last);
      slots[w] = estimate(d, method, opts);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::index || e.kind() == ErrorKind::invalid_input) throw;
      reasons[w] = std::string(to_string(e.kind())) + ": " + e.cause();
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n_windows)));
  if (workers == 1) {
    for (std::size_t w = 0; w < n_windows; ++w) run_window(w);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::jthread> pool;
    for (unsigned id = 0; id < workers; ++id)
      pool.emplace_back([&, id] {
        try {
          for (std::size_t w = id; w < n_windows; w += workers) run_window(w);
        } catch (...) {
          errors[id] = std::current_exception();
        }
      });
    pool.clear();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  RollingResult out;
  out.window_len = window_len;
  out.method = method;
  out.variant = variant;
  out.timing = timing;
  for (std::size_t w = 0; w < n_windows; ++w) {
    const std::size_t last = window_len - 1 + w;
    if (slots[w]) {
      out.estimates.push_back(std::move(*slots[w]));
    } else {
      spdlog::warn("rolling_estimate: skipping window ending {}: {}", chars.dates()[last], reasons[w]);
      out.skipped.push_back({last, chars.dates()[last], reasons[w]});
    }
  }
  return out;
}

double sample_quantile(std::vector<double> values, double p) {
  if (values.empty()) return kMissing;
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::array<double, 5> fixed_effect_quantiles(const PanelEstimate& est) {
  std::vector<double> a(est.alpha_hat.data(), est.alpha_hat.data() + est.alpha_hat.size());
  if (est.method == Method::pooled && est.intercept) a.assign(1, *est.intercept);
  std::array<double, 5> out{};
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sample_quantile(a, kFixedEffectQuantiles[i]);
  return out;
}

}  // namespace chardemand
