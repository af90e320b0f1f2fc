#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace chardemand {

/// One (date, firm) observation of raw data. Missing values are NaN.
struct RawRow {
  std::size_t date = 0;
  std::size_t firm = 0;
  double ret = 0.0;
  std::vector<double> values;
};

/// Raw characteristics as ingested, before any cross-sectional transform.
/// Dates are YYYY-MM strings in strictly increasing order; firm ids unique;
/// each (date, firm) pair appears at most once.
class RawPanel {
 public:
  RawPanel(std::vector<std::string> dates, std::vector<std::string> firms,
           std::vector<std::string> k_names, std::vector<RawRow> rows);

  const std::vector<std::string>& dates() const noexcept { return dates_; }
  const std::vector<std::string>& firms() const noexcept { return firms_; }
  const std::vector<std::string>& k_names() const noexcept { return k_names_; }
  const std::vector<RawRow>& rows() const noexcept { return rows_; }

  std::size_t n_dates() const noexcept { return dates_.size(); }
  std::size_t n_firms() const noexcept { return firms_.size(); }
  std::size_t n_chars() const noexcept { return k_names_.size(); }

  /// Dense T×N matrix of `ret` (NaN where absent).
  Eigen::MatrixXd returns() const;

 private:
  std::vector<std::string> dates_;
  std::vector<std::string> firms_;
  std::vector<std::string> k_names_;
  std::vector<RawRow> rows_;
};

/// Gaussianised scores c(t, n, k) in [-3, 3] and their first differences
/// Δc(t, n, k) = c(t, n, k) - c(t-1, n, k) across consecutive panel dates.
/// Both are dense T×N×K arrays with NaN for unobserved entries.
class CharacteristicsPanel {
 public:
  CharacteristicsPanel(std::vector<std::string> dates, std::vector<std::string> firms,
                       std::vector<std::string> k_names, std::vector<double> scores);

  std::size_t n_dates() const noexcept { return dates_.size(); }
  std::size_t n_firms() const noexcept { return firms_.size(); }
  std::size_t n_chars() const noexcept { return k_names_.size(); }

  const std::vector<std::string>& dates() const noexcept { return dates_; }
  const std::vector<std::string>& firms() const noexcept { return firms_; }
  const std::vector<std::string>& k_names() const noexcept { return k_names_; }

  double score(std::size_t t, std::size_t n, std::size_t k) const {
    return scores_[index(t, n, k)];
  }
  double delta(std::size_t t, std::size_t n, std::size_t k) const {
    return deltas_[index(t, n, k)];
  }

  /// All K scores present at (t, n).
  bool observed(std::size_t t, std::size_t n) const;
  /// All K deltas present at (t, n), i.e. observed at t and t-1.
  bool has_delta(std::size_t t, std::size_t n) const;

 private:
  std::size_t index(std::size_t t, std::size_t n, std::size_t k) const {
    return (t * firms_.size() + n) * k_names_.size() + k;
  }

  std::vector<std::string> dates_;
  std::vector<std::string> firms_;
  std::vector<std::string> k_names_;
  std::vector<double> scores_;
  std::vector<double> deltas_;
};

/// Maps one cross-section to Gaussian scores Φ⁻¹(r/(N+1)) clipped to ±3, with
/// average ranks for ties. NaN entries are excluded from ranking and stay NaN
/// in the output; output order matches input order.
std::vector<double> gaussian_rank_normalize(std::span<const double> values);

/// Normalises every (date, characteristic) cross-section and computes deltas.
CharacteristicsPanel build_panel(const RawPanel& raw);

bool is_month_label(const std::string& s);

}  // namespace chardemand
