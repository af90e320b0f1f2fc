#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

namespace chardemand {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double x) noexcept { return std::isnan(x); }

// 4/sqrt(2*pi): long-short spread of a median-split standard Gaussian.
inline constexpr double kSortedSplitConstant = 4.0 / (2.5066282746310005024);

/// Which of the two equivalent return identities a regression targets.
///   identity_1: regressors (c_d, Δc_d), coefficients (β_{t+1}, η_t)
///   identity_2: regressors (c_{d-1}, Δc_d), coefficients (β_{t+1}, η_{t+1})
/// where d is the characteristic date entering the demand at t+1.
enum class Variant { identity_1, identity_2 };

/// Lagged: demand at t reads c_{t-1} (predictive). Synchronous: reads c_t.
enum class Timing { lagged, synchronous };

enum class Method { pooled, within };

std::string_view to_string(Variant v) noexcept;
std::string_view to_string(Timing t) noexcept;
std::string_view to_string(Method m) noexcept;

std::optional<Variant> parse_variant(std::string_view s);
std::optional<Timing> parse_timing(std::string_view s);
std::optional<Method> parse_method(std::string_view s);

/// Standard Gaussian CDF.
double normal_cdf(double x) noexcept;

/// Standard Gaussian quantile (Wichura's AS241, ~1e-16 relative accuracy).
/// Returns ±infinity at p = 0 or 1 and NaN outside [0, 1].
double normal_quantile(double p) noexcept;

/// SplitMix64 step; used to derive independent per-replication seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

}  // namespace chardemand
