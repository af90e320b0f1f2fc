#include "chardemand/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "chardemand/error.hpp"

namespace chardemand {

namespace {

using Index = Eigen::Index;
using nlohmann::json;

[[noreturn]] void fail(ErrorKind kind, const char* op, const std::string& cause) {
  throw Error(kind, "market_model", op, cause);
}

Index idx(std::size_t i) { return static_cast<Index>(i); }

std::vector<double> broadcast(const std::vector<double>& v, std::size_t n, const char* what) {
  if (v.size() == n) return v;
  if (v.size() == 1) return std::vector<double>(n, v.front());
  if (v.empty()) return std::vector<double>(n, 0.0);
  fail(ErrorKind::invalid_input, "build_scenario",
       std::string(what) + " must have 1 or " + std::to_string(n) + " entries");
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.size();
  const auto cols = rows ? j.at(0).size() : 0;
  Eigen::MatrixXd m(idx(rows), idx(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (j.at(r).size() != cols) fail(ErrorKind::parse, "parse_simulation_config", "ragged array");
    for (std::size_t c = 0; c < cols; ++c) m(idx(r), idx(c)) = j.at(r).at(c).get<double>();
  }
  return m;
}

std::vector<Eigen::MatrixXd> tensor_from_json(const json& j) {
  std::vector<Eigen::MatrixXd> out;
  for (const auto& slice : j) out.push_back(matrix_from_json(slice));
  return out;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<double> as_vector(const json& j) {
  if (j.is_number()) return {j.get<double>()};
  return j.get<std::vector<double>>();
}

}  // namespace

std::vector<std::string> month_sequence(const std::string& start, std::size_t count) {
  if (!is_month_label(start))
    fail(ErrorKind::invalid_input, "month_sequence", "start '" + start + "' is not YYYY-MM");
  int year = std::stoi(start.substr(0, 4));
  int month = std::stoi(start.substr(5, 2));
  std::vector<std::string> out;
  out.reserve(count);
  char buf[16];
  for (std::size_t i = 0; i < count; ++i) {
    if (year > 9999) fail(ErrorKind::invalid_input, "month_sequence", "calendar overflow");
    std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
    out.emplace_back(buf);
    if (++month > 12) {
      month = 1;
      ++year;
    }
  }
  return out;
}

CharacteristicsPanel simulate_characteristics(const std::vector<std::string>& dates,
                                              const std::vector<std::string>& firms,
                                              const std::vector<std::string>& k_names,
                                              const CharacteristicProcess& process,
                                              std::uint64_t seed,
                                              Eigen::MatrixXd* latent_initial) {
  const std::size_t T = dates.size(), N = firms.size(), K = k_names.size();
  if (!(std::fabs(process.persistence) < 1.0))
    fail(ErrorKind::invalid_input, "simulate_characteristics", "persistence must lie in (-1, 1)");
  const double lo = K > 1 ? -1.0 / static_cast<double>(K - 1) : -1.0;
  if (!(process.correlation > lo && process.correlation < 1.0))
    fail(ErrorKind::invalid_input, "simulate_characteristics",
         "equicorrelation outside the positive-definite range");

  Eigen::MatrixXd R = Eigen::MatrixXd::Constant(idx(K), idx(K), process.correlation);
  R.diagonal().setOnes();
  const Eigen::MatrixXd L = R.llt().matrixL();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  auto draw = [&] {
    Eigen::VectorXd z(idx(K));
    for (Index k = 0; k < z.size(); ++k) z(k) = gauss(rng);
    return Eigen::VectorXd(L * z);
  };

  const double phi = process.persistence;
  const double innov = std::sqrt(1.0 - phi * phi);
  Eigen::MatrixXd x(idx(N), idx(K));
  for (std::size_t n = 0; n < N; ++n) x.row(idx(n)) = draw().transpose();
  if (latent_initial) *latent_initial = x;

  std::vector<double> scores(T * N * K);
  std::vector<double> column(N);
  for (std::size_t t = 0; t < T; ++t) {
    if (t > 0)
      for (std::size_t n = 0; n < N; ++n)
        x.row(idx(n)) = phi * x.row(idx(n)) + innov * draw().transpose();
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t n = 0; n < N; ++n) column[n] = x(idx(n), idx(k));
      std::vector<double> z = process.rank_normalize ? gaussian_rank_normalize(column) : column;
      for (std::size_t n = 0; n < N; ++n)
        scores[(t * N + n) * K + k] = std::clamp(z[n], -3.0, 3.0);
    }
  }
  return CharacteristicsPanel(dates, firms, k_names, std::move(scores));
}

Scenario build_scenario(const SimulationConfig& cfg) {
  const std::size_t T = cfg.n_dates, N = cfg.n_firms, I = cfg.n_agents, K = cfg.k_names.size();
  if (T < 2 || N < 2 || I < 1 || K < 1)
    fail(ErrorKind::invalid_input, "build_scenario", "need >= 2 dates, >= 2 firms, >= 1 agent and char");

  const auto dates = month_sequence(cfg.start_month, T);
  std::vector<std::string> firms;
  char buf[32];
  for (std::size_t n = 0; n < N; ++n) {
    std::snprintf(buf, sizeof buf, "F%05zu", n + 1);
    firms.emplace_back(buf);
  }

  Eigen::MatrixXd latent0;
  CharacteristicsPanel chars = simulate_characteristics(dates, firms, cfg.k_names, cfg.char_process,
                                                        derive_seed(cfg.seed, 1), &latent0);

  std::normal_distribution<double> gauss;

  Eigen::MatrixXd wealth(idx(T), idx(I));
  if (cfg.wealth_values) {
    wealth = *cfg.wealth_values;
  } else {
    std::mt19937_64 rng(derive_seed(cfg.seed, 2));
    const double v = cfg.wealth_rule == "random_walk" ? cfg.wealth_volatility : 0.0;
    if (cfg.wealth_rule != "constant" && cfg.wealth_rule != "random_walk")
      fail(ErrorKind::invalid_input, "build_scenario", "unknown wealth rule '" + cfg.wealth_rule + "'");
    for (std::size_t i = 0; i < I; ++i) {
      double a = cfg.wealth_initial;
      for (std::size_t t = 0; t < T; ++t) {
        if (t > 0 && v > 0.0) a *= std::exp(v * gauss(rng) - 0.5 * v * v);
        wealth(idx(t), idx(i)) = a;
      }
    }
  }

  Eigen::MatrixXd slope(idx(T), idx(I));
  if (cfg.price_slope_values) {
    slope = *cfg.price_slope_values;
  } else {
    const auto b0 = broadcast(cfg.price_slope, I, "price_slope");
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t i = 0; i < I; ++i) slope(idx(t), idx(i)) = b0[i];
  }
  if (wealth.rows() != idx(T) || wealth.cols() != idx(I) || slope.rows() != idx(T) ||
      slope.cols() != idx(I))
    fail(ErrorKind::index, "build_scenario", "explicit wealth/slope arrays must be T×I");

  // Scaled wealths; refuses up front when the aggregate slope is not negative.
  Eigen::MatrixXd B(idx(T), idx(I));
  for (std::size_t t = 0; t < T; ++t) {
    const double kappa = -wealth.row(idx(t)).dot(slope.row(idx(t)));
    if (!(kappa > 0.0))
      fail(ErrorKind::equilibrium_ill_posed, "build_scenario",
           "kappa = " + std::to_string(kappa) + " <= 0 at " + dates[t]);
    B.row(idx(t)) = wealth.row(idx(t)) / kappa;
  }
  const double inv_I = 1.0 / static_cast<double>(I);

  std::vector<Eigen::MatrixXd> coeffs;
  if (cfg.coeff_values) {
    coeffs = *cfg.coeff_values;
  } else {
    std::mt19937_64 rng(derive_seed(cfg.seed, 3));
    const auto e0 = broadcast(cfg.eta_initial, K, "eta.initial");
    const auto drift = broadcast(cfg.eta_drift, K, "eta.drift");
    const auto vol = broadcast(cfg.eta_volatility, K, "eta.volatility");
    Eigen::MatrixXd h(idx(I), idx(K));
    for (Index i = 0; i < h.rows(); ++i)
      for (Index k = 0; k < h.cols(); ++k) h(i, k) = cfg.agent_dispersion * gauss(rng);
    h.rowwise() -= h.colwise().mean();
    Eigen::VectorXd eta = Eigen::Map<const Eigen::VectorXd>(e0.data(), idx(K));
    for (std::size_t t = 0; t < T; ++t) {
      if (t > 0)
        for (std::size_t k = 0; k < K; ++k) eta(idx(k)) += drift[k] + vol[k] * gauss(rng);
      Eigen::MatrixXd b(idx(I), idx(K));
      for (std::size_t i = 0; i < I; ++i)
        b.row(idx(i)) = (eta.transpose() * inv_I + h.row(idx(i))) / B(idx(t), idx(i));
      coeffs.push_back(std::move(b));
    }
  }

  std::vector<Eigen::MatrixXd> baseline;
  if (cfg.baseline_values) {
    baseline = *cfg.baseline_values;
  } else {
    std::mt19937_64 rng(derive_seed(cfg.seed, 4));
    const auto load = broadcast(cfg.alpha_loadings, K, "alpha.loadings");
    Eigen::VectorXd fixed(idx(N));
    for (std::size_t n = 0; n < N; ++n) {
      double d = cfg.alpha_mean + cfg.alpha_dispersion * gauss(rng);
      for (std::size_t k = 0; k < K; ++k) d += load[k] * latent0(idx(n), idx(k));
      fixed(idx(n)) = d;
    }
    Eigen::VectorXd level = Eigen::VectorXd::Constant(idx(N), cfg.baseline_level);
    for (std::size_t t = 0; t < T; ++t) {
      if (t > 0)
        for (std::size_t n = 0; n < N; ++n)
          level(idx(n)) += fixed(idx(n)) + cfg.alpha_noise * gauss(rng);
      Eigen::MatrixXd a(idx(I), idx(N));
      for (std::size_t i = 0; i < I; ++i)
        a.row(idx(i)) = level.transpose() * (inv_I / B(idx(t), idx(i)));
      baseline.push_back(std::move(a));
    }
  }

  Eigen::MatrixXd supply(idx(T), idx(N));
  if (cfg.supply_values) {
    supply = *cfg.supply_values;
  } else {
    std::mt19937_64 rng(derive_seed(cfg.seed, 5));
    for (Index t = 0; t < supply.rows(); ++t)
      for (Index n = 0; n < supply.cols(); ++n)
        supply(t, n) = cfg.supply_mean + cfg.supply_sd * gauss(rng);
  }

  return Scenario{std::move(chars),
                  AgentPopulation(std::move(wealth), std::move(slope), std::move(coeffs),
                                  std::move(baseline)),
                  SupplyPath(std::move(supply)), std::move(latent0)};
}

SimulationConfig parse_simulation_config(const json& j) {
  SimulationConfig c;
  try {
    c.n_dates = j.value("dates", c.n_dates);
    c.n_firms = j.value("firms", c.n_firms);
    c.n_agents = j.value("agents", c.n_agents);
    if (j.contains("characteristics")) {
      const auto& ch = j.at("characteristics");
      if (ch.is_number_unsigned() || ch.is_number_integer()) {
        c.k_names.clear();
        for (int k = 0; k < ch.get<int>(); ++k) c.k_names.push_back("c" + std::to_string(k + 1));
      } else {
        c.k_names = ch.get<std::vector<std::string>>();
      }
    }
    c.start_month = j.value("start", c.start_month);
    c.seed = j.value("seed", c.seed);
    if (j.contains("timing")) {
      const auto t = parse_timing(j.at("timing").get<std::string>());
      if (!t) fail(ErrorKind::parse, "parse_simulation_config", "timing must be lagged or sync");
      c.timing = *t;
    }
    if (j.contains("variant")) {
      const auto s = j.at("variant").is_string() ? j.at("variant").get<std::string>()
                                                 : std::to_string(j.at("variant").get<int>());
      const auto v = parse_variant(s);
      if (!v) fail(ErrorKind::parse, "parse_simulation_config", "variant must be 1 or 2");
      c.variant = *v;
    }
    if (j.contains("char_process")) {
      const auto& p = j.at("char_process");
      c.char_process.persistence = p.value("persistence", c.char_process.persistence);
      c.char_process.correlation = p.value("correlation", c.char_process.correlation);
      c.char_process.rank_normalize = p.value("rank_normalize", c.char_process.rank_normalize);
    }
    if (j.contains("wealth")) {
      const auto& w = j.at("wealth");
      if (w.contains("values")) c.wealth_values = matrix_from_json(w.at("values"));
      c.wealth_rule = w.value("rule", c.wealth_rule);
      c.wealth_initial = w.value("initial", c.wealth_initial);
      c.wealth_volatility = w.value("volatility", c.wealth_volatility);
    }
    if (j.contains("price_slope")) {
      const auto& s = j.at("price_slope");
      if (s.is_object()) {
        if (s.contains("values")) c.price_slope_values = matrix_from_json(s.at("values"));
        if (s.contains("value")) c.price_slope = as_vector(s.at("value"));
      } else {
        c.price_slope = as_vector(s);
      }
    }
    if (j.contains("eta")) {
      const auto& e = j.at("eta");
      if (e.contains("initial")) c.eta_initial = as_vector(e.at("initial"));
      if (e.contains("drift")) c.eta_drift = as_vector(e.at("drift"));
      if (e.contains("volatility")) c.eta_volatility = as_vector(e.at("volatility"));
    }
    c.agent_dispersion = j.value("agent_dispersion", c.agent_dispersion);
    if (j.contains("char_coeffs") && j.at("char_coeffs").contains("values"))
      c.coeff_values = tensor_from_json(j.at("char_coeffs").at("values"));
    if (j.contains("alpha")) {
      const auto& a = j.at("alpha");
      c.alpha_mean = a.value("mean", c.alpha_mean);
      c.alpha_dispersion = a.value("dispersion", c.alpha_dispersion);
      if (a.contains("loadings")) c.alpha_loadings = as_vector(a.at("loadings"));
      c.alpha_noise = a.value("noise", c.alpha_noise);
    }
    c.baseline_level = j.value("baseline_level", c.baseline_level);
    if (j.contains("baseline") && j.at("baseline").contains("values"))
      c.baseline_values = tensor_from_json(j.at("baseline").at("values"));
    if (j.contains("supply")) {
      const auto& s = j.at("supply");
      if (s.contains("values")) c.supply_values = matrix_from_json(s.at("values"));
      c.supply_mean = s.value("mean", c.supply_mean);
      c.supply_sd = s.value("sd", c.supply_sd);
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, "parse_simulation_config", e.what());
  }
  return c;
}

json to_json(const SimulationConfig& c) {
  json j;
  j["dates"] = c.n_dates;
  j["firms"] = c.n_firms;
  j["agents"] = c.n_agents;
  j["characteristics"] = c.k_names;
  j["start"] = c.start_month;
  j["seed"] = c.seed;
  j["timing"] = std::string(to_string(c.timing));
  j["variant"] = std::string(to_string(c.variant));
  j["char_process"] = {{"persistence", c.char_process.persistence},
                       {"correlation", c.char_process.correlation},
                       {"rank_normalize", c.char_process.rank_normalize}};
  j["wealth"] = {{"rule", c.wealth_rule},
                 {"initial", c.wealth_initial},
                 {"volatility", c.wealth_volatility}};
  if (c.wealth_values) j["wealth"]["values"] = matrix_to_json(*c.wealth_values);
  j["price_slope"] = {{"value", c.price_slope}};
  if (c.price_slope_values) j["price_slope"]["values"] = matrix_to_json(*c.price_slope_values);
  j["eta"] = {{"initial", c.eta_initial}, {"drift", c.eta_drift}, {"volatility", c.eta_volatility}};
  j["agent_dispersion"] = c.agent_dispersion;
  if (c.coeff_values) {
    json v = json::array();
    for (const auto& m : *c.coeff_values) v.push_back(matrix_to_json(m));
    j["char_coeffs"]["values"] = std::move(v);
  }
  j["alpha"] = {{"mean", c.alpha_mean},
                {"dispersion", c.alpha_dispersion},
                {"loadings", c.alpha_loadings},
                {"noise", c.alpha_noise}};
  j["baseline_level"] = c.baseline_level;
  if (c.baseline_values) {
    json v = json::array();
    for (const auto& m : *c.baseline_values) v.push_back(matrix_to_json(m));
    j["baseline"]["values"] = std::move(v);
  }
  j["supply"] = {{"mean", c.supply_mean}, {"sd", c.supply_sd}};
  if (c.supply_values) j["supply"]["values"] = matrix_to_json(*c.supply_values);
  return j;
}

}  // namespace chardemand
