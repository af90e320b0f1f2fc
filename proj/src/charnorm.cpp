#include "chardemand/charnorm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "chardemand/common.hpp"
#include "chardemand/error.hpp"

namespace chardemand {

namespace {

constexpr double kWinsorBound = 3.0;

[[noreturn]] void fail(ErrorKind kind, const char* op, const std::string& cause) {
  throw Error(kind, "charnorm", op, cause);
}

void check_index_sets(const std::vector<std::string>& dates,
                      const std::vector<std::string>& firms, const char* op) {
  for (std::size_t t = 0; t < dates.size(); ++t) {
    if (!is_month_label(dates[t]))
      fail(ErrorKind::invalid_input, op, "date '" + dates[t] + "' is not YYYY-MM");
    if (t > 0 && !(dates[t - 1] < dates[t]))
      fail(ErrorKind::invalid_input, op,
           "dates not strictly increasing at '" + dates[t] + "'");
  }
  std::unordered_set<std::string> seen;
  for (const auto& f : firms)
    if (!seen.insert(f).second) fail(ErrorKind::invalid_input, op, "duplicate firm id '" + f + "'");
}

}  // namespace

bool is_month_label(const std::string& s) {
  if (s.size() != 7 || s[4] != '-') return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u})
    if (s[i] < '0' || s[i] > '9') return false;
  const int month = (s[5] - '0') * 10 + (s[6] - '0');
  return month >= 1 && month <= 12;
}

RawPanel::RawPanel(std::vector<std::string> dates, std::vector<std::string> firms,
                   std::vector<std::string> k_names, std::vector<RawRow> rows)
    : dates_(std::move(dates)),
      firms_(std::move(firms)),
      k_names_(std::move(k_names)),
      rows_(std::move(rows)) {
  check_index_sets(dates_, firms_, "RawPanel");
  std::vector<char> seen(dates_.size() * firms_.size(), 0);
  for (const auto& row : rows_) {
    if (row.date >= dates_.size() || row.firm >= firms_.size())
      fail(ErrorKind::index, "RawPanel", "row index outside the date/firm sets");
    if (row.values.size() != k_names_.size())
      fail(ErrorKind::invalid_input, "RawPanel", "row has wrong number of characteristics");
    auto& flag = seen[row.date * firms_.size() + row.firm];
    if (flag)
      fail(ErrorKind::invalid_input, "RawPanel",
           "duplicate (date, firm) pair (" + dates_[row.date] + ", " + firms_[row.firm] + ")");
    flag = 1;
  }
}

Eigen::MatrixXd RawPanel::returns() const {
  Eigen::MatrixXd r = Eigen::MatrixXd::Constant(
      static_cast<Eigen::Index>(n_dates()), static_cast<Eigen::Index>(n_firms()), kMissing);
  for (const auto& row : rows_)
    r(static_cast<Eigen::Index>(row.date), static_cast<Eigen::Index>(row.firm)) = row.ret;
  return r;
}

CharacteristicsPanel::CharacteristicsPanel(std::vector<std::string> dates,
                                           std::vector<std::string> firms,
                                           std::vector<std::string> k_names,
                                           std::vector<double> scores)
    : dates_(std::move(dates)),
      firms_(std::move(firms)),
      k_names_(std::move(k_names)),
      scores_(std::move(scores)) {
  check_index_sets(dates_, firms_, "CharacteristicsPanel");
  const std::size_t T = dates_.size(), N = firms_.size(), K = k_names_.size();
  if (scores_.size() != T * N * K)
    fail(ErrorKind::invalid_input, "CharacteristicsPanel", "score array has wrong size");
  for (double s : scores_)
    if (!is_missing(s) && !(std::fabs(s) <= kWinsorBound))
      fail(ErrorKind::invalid_input, "CharacteristicsPanel", "score outside [-3, 3]");

  deltas_.assign(scores_.size(), kMissing);
  for (std::size_t t = 1; t < T; ++t)
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t k = 0; k < K; ++k) {
        const double now = scores_[index(t, n, k)];
        const double before = scores_[index(t - 1, n, k)];
        if (!is_missing(now) && !is_missing(before)) deltas_[index(t, n, k)] = now - before;
      }
}

bool CharacteristicsPanel::observed(std::size_t t, std::size_t n) const {
  for (std::size_t k = 0; k < n_chars(); ++k)
    if (is_missing(score(t, n, k))) return false;
  return true;
}

bool CharacteristicsPanel::has_delta(std::size_t t, std::size_t n) const {
  for (std::size_t k = 0; k < n_chars(); ++k)
    if (is_missing(delta(t, n, k))) return false;
  return true;
}

std::vector<double> gaussian_rank_normalize(std::span<const double> values) {
  std::vector<std::size_t> order;
  order.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!is_missing(values[i])) order.push_back(i);
  if (order.size() < 2)
    fail(ErrorKind::degenerate_cross_section, "gaussian_rank_normalize",
         "need at least 2 non-missing values, got " + std::to_string(order.size()));

  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  std::vector<double> out(values.size(), kMissing);
  const double denom = static_cast<double>(order.size()) + 1.0;
  for (std::size_t lo = 0; lo < order.size();) {
    std::size_t hi = lo + 1;
    while (hi < order.size() && values[order[hi]] == values[order[lo]]) ++hi;
    // 1-based ranks lo+1 .. hi share their average.
    const double rank = 0.5 * static_cast<double>(lo + 1 + hi);
    const double score = std::clamp(normal_quantile(rank / denom), -kWinsorBound, kWinsorBound);
    for (std::size_t j = lo; j < hi; ++j) out[order[j]] = score;
    lo = hi;
  }
  return out;
}

CharacteristicsPanel build_panel(const RawPanel& raw) {
  const std::size_t T = raw.n_dates(), N = raw.n_firms(), K = raw.n_chars();
  std::vector<double> scores(T * N * K, kMissing);

  std::vector<std::vector<const RawRow*>> by_date(T);
  for (const auto& row : raw.rows()) by_date[row.date].push_back(&row);

  std::vector<double> cross;
  for (std::size_t t = 0; t < T; ++t) {
    const auto& rows = by_date[t];
    if (rows.empty()) continue;
    for (std::size_t k = 0; k < K; ++k) {
      cross.clear();
      for (const RawRow* row : rows) cross.push_back(row->values[k]);
      std::vector<double> z;
      try {
        z = gaussian_rank_normalize(cross);
      } catch (const Error&) {
        fail(ErrorKind::degenerate_cross_section, "build_panel",
             "date " + raw.dates()[t] + " has fewer than 2 firms for characteristic '" +
                 raw.k_names()[k] + "'");
      }
      for (std::size_t j = 0; j < rows.size(); ++j)
        scores[(t * N + rows[j]->firm) * K + k] = z[j];
    }
  }

  // A (date, firm) row with any missing score is dropped entirely.
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t n = 0; n < N; ++n) {
      double* row = &scores[(t * N + n) * K];
      if (std::any_of(row, row + K, [](double s) { return is_missing(s); }))
        std::fill(row, row + K, kMissing);
    }

  return CharacteristicsPanel(raw.dates(), raw.firms(), raw.k_names(), std::move(scores));
}

}  // namespace chardemand
