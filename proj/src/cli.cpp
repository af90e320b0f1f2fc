#include "chardemand/cli.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "chardemand/anomaly.hpp"
#include "chardemand/charnorm.hpp"
#include "chardemand/error.hpp"
#include "chardemand/gaussian_ident.hpp"
#include "chardemand/io.hpp"
#include "chardemand/market_model.hpp"
#include "chardemand/mv_demand.hpp"
#include "chardemand/panel.hpp"
#include "chardemand/scenario.hpp"

namespace chardemand::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Index = Eigen::Index;

[[noreturn]] void fail(ErrorKind kind, const char* op, const std::string& cause) {
  throw Error(kind, "cli", op, cause);
}

struct Common {
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_given = false;
  unsigned threads = 1;
  std::string log_level = "warn";
};

struct PanelInput {
  std::string input;
  std::string manifest;
};

struct RegressionFlags {
  std::size_t window = 12;
  std::string method = "within";
  std::string variant = "1";
  std::string timing = "lagged";
  bool robust_se = false;
};

struct Options {
  Common common;
  PanelInput panel;
  RegressionFlags reg;
  std::string config;
  std::string sort_char = "0";
  std::string beliefs;
  std::size_t samples = 1'000'000;
  std::size_t reps = 2000;
  std::size_t specs = 5;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("-o,--out", c.out_dir, "Output directory (created if absent)");
  sub->add_option_function<std::uint64_t>(
      "--seed", [&c](const std::uint64_t& s) { c.seed = s; c.seed_given = true; }, "Random seed");
  sub->add_option("--threads", c.threads, "Worker threads (default: CHARDEMAND_THREADS or 1)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--log-level", c.log_level, "off|error|warn|info|debug")
      ->check(CLI::IsMember({"off", "error", "warn", "info", "debug"}));
}

void add_panel_input(CLI::App* sub, PanelInput& p) {
  sub->add_option("-i,--input", p.input, "Panel CSV (date,firm_id,ret,<characteristics>)")->required();
  sub->add_option("-m,--manifest", p.manifest,
                  "JSON manifest whose \"characteristics\" list fixes the CSV schema");
}

void add_regression(CLI::App* sub, RegressionFlags& r) {
  sub->add_option("--window", r.window, "Rolling window length in panel dates")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 30));
  sub->add_option("--method", r.method, "pooled|within")->check(CLI::IsMember({"pooled", "within"}));
  sub->add_option("--variant", r.variant, "Return identity 1|2")->check(CLI::IsMember({"1", "2"}));
  sub->add_option("--timing", r.timing, "lagged|sync")->check(CLI::IsMember({"lagged", "sync"}));
  sub->add_flag("--robust-se", r.robust_se, "Heteroskedasticity-robust (HC1) standard errors");
}

void configure_logging(const std::string& level) {
  auto logger = spdlog::get("chardemand");
  if (!logger) {
    logger = spdlog::stderr_color_mt("chardemand");
    logger->set_pattern("[%l] %v");
  }
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(level));
}

std::optional<std::vector<std::string>> manifest_chars(const std::string& path) {
  if (path.empty()) return std::nullopt;
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, "io", "read_manifest", path + ": " + e.what());
  }
  if (!j.contains("characteristics") || !j.at("characteristics").is_array())
    throw Error(ErrorKind::parse, "io", "read_manifest",
                path + ": missing \"characteristics\" list");
  return j.at("characteristics").get<std::vector<std::string>>();
}

json load_json(const std::string& path, const char* what) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, "io", what, path + ": " + e.what());
  }
}

struct LoadedPanel {
  RawPanel raw;
  CharacteristicsPanel chars;
  Eigen::MatrixXd returns;
};

LoadedPanel load_panel(const PanelInput& in) {
  RawPanel raw = read_panel_csv(in.input, manifest_chars(in.manifest));
  CharacteristicsPanel chars = build_panel(raw);
  Eigen::MatrixXd returns = raw.returns();
  return {std::move(raw), std::move(chars), std::move(returns)};
}

fs::path prepare_out(const Common& c) {
  fs::path out(c.out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) fail(ErrorKind::invalid_input, "prepare_output", "cannot create '" + c.out_dir + "'");
  return out;
}

void write_manifest(const fs::path& out, const std::string& command, const Common& c,
                    json config, const std::vector<std::string>& outputs) {
  json m;
  m["tool"] = "chardemand";
  m["version"] = kVersion;
  m["command"] = command;
  m["seed"] = c.seed;
  m["threads"] = c.threads;
  m["config"] = std::move(config);
  m["outputs"] = outputs;
  std::ofstream f(out / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorKind::invalid_input, "write_manifest", "cannot write manifest");
  f << m.dump(2) << '\n';
}

json regression_json(const RegressionFlags& r) {
  return {{"window", r.window}, {"method", r.method}, {"variant", r.variant},
          {"timing", r.timing}, {"robust_se", r.robust_se}};
}

json panel_json(const PanelInput& p) { return {{"input", p.input}, {"manifest", p.manifest}}; }

// --- normalize -------------------------------------------------------------

int cmd_normalize(const Options& o) {
  const LoadedPanel lp = load_panel(o.panel);
  const fs::path out = prepare_out(o.common);
  write_csv((out / "scores.csv").string(), "normalize", o.common.seed, panel_table(lp.chars, lp.returns));

  const auto& ch = lp.chars;
  CsvTable deltas;
  deltas.columns = {"date", "firm_id"};
  for (const auto& k : ch.k_names()) deltas.columns.push_back("d_" + k);
  for (std::size_t t = 0; t < ch.n_dates(); ++t)
    for (std::size_t n = 0; n < ch.n_firms(); ++n) {
      if (!ch.observed(t, n)) continue;
      std::vector<std::string> row{ch.dates()[t], ch.firms()[n]};
      for (std::size_t k = 0; k < ch.n_chars(); ++k) row.push_back(format_number(ch.delta(t, n, k)));
      deltas.add(std::move(row));
    }
  write_csv((out / "deltas.csv").string(), "normalize", o.common.seed, deltas);
  write_manifest(out, "normalize", o.common, panel_json(o.panel), {"scores.csv", "deltas.csv"});
  return 0;
}

// --- simulate --------------------------------------------------------------

int cmd_simulate(const Options& o) {
  SimulationConfig cfg = parse_simulation_config(load_json(o.config, "read_config"));
  Common common = o.common;
  if (common.seed_given) cfg.seed = common.seed;
  common.seed = cfg.seed;

  const Scenario sc = build_scenario(cfg);
  const EquilibriumPanel eq = simulate_panel(sc.agents, sc.chars, sc.supply, cfg.variant, cfg.timing);
  const fs::path out = prepare_out(common);
  write_csv((out / "panel.csv").string(), "simulate", cfg.seed, panel_table(sc.chars, eq.log_returns));

  const std::size_t T = eq.dates.size(), N = eq.firms.size(), K = sc.chars.n_chars();
  CsvTable agg;
  agg.columns = {"date", "kappa"};
  for (const auto& k : sc.chars.k_names()) agg.columns.push_back("beta:" + k);
  for (const auto& k : sc.chars.k_names()) agg.columns.push_back("eta:" + k);
  for (std::size_t t = 0; t < T; ++t) {
    const auto ti = static_cast<Index>(t);
    std::vector<std::string> row{eq.dates[t], format_number(eq.kappa(ti))};
    for (std::size_t k = 0; k < K; ++k) row.push_back(format_number(eq.true_beta(ti, static_cast<Index>(k))));
    for (std::size_t k = 0; k < K; ++k) row.push_back(format_number(eq.true_eta(ti, static_cast<Index>(k))));
    agg.add(std::move(row));
  }
  write_csv((out / "truth_aggregates.csv").string(), "simulate", cfg.seed, agg);

  CsvTable firm;
  firm.columns = {"date", "firm_id", "log_price", "alpha", "epsilon"};
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t n = 0; n < N; ++n) {
      const auto ti = static_cast<Index>(t), ni = static_cast<Index>(n);
      firm.add({eq.dates[t], eq.firms[n], format_number(eq.log_prices(ti, ni)),
                format_number(eq.true_alpha(ti, ni)), format_number(eq.epsilon(ti, ni))});
    }
  write_csv((out / "truth_firms.csv").string(), "simulate", cfg.seed, firm);

  json config = to_json(cfg);
  config["config_path"] = o.config;
  write_manifest(out, "simulate", common, std::move(config),
                 {"panel.csv", "truth_aggregates.csv", "truth_firms.csv"});
  return 0;
}

// --- estimate --------------------------------------------------------------

RollingResult run_rolling(const LoadedPanel& lp, const RegressionFlags& r, unsigned threads) {
  EstimationOptions opts;
  opts.robust_se = r.robust_se;
  return rolling_estimate(lp.chars, lp.returns, r.window, *parse_method(r.method),
                          *parse_variant(r.variant), *parse_timing(r.timing), opts, threads);
}

void write_skipped(const fs::path& out, const char* command, std::uint64_t seed,
                   const RollingResult& rr) {
  CsvTable skipped;
  skipped.columns = {"terminal_date", "reason"};
  for (const auto& s : rr.skipped) skipped.add({s.terminal_date, csv_field(s.reason)});
  write_csv((out / "skipped_windows.csv").string(), command, seed, skipped);
}

int cmd_estimate(const Options& o) {
  const LoadedPanel lp = load_panel(o.panel);
  const RollingResult rr = run_rolling(lp, o.reg, o.common.threads);
  const fs::path out = prepare_out(o.common);
  const std::uint64_t seed = o.common.seed;
  constexpr double kThreshold = 2.5;

  CsvTable coef, fe, quant, plot;
  coef.columns = {"terminal_date", "window_start", "coefficient", "estimate", "std_error",
                  "t_stat", "n_obs", "n_firms", "dof", "r_squared"};
  fe.columns = {"terminal_date", "firm_id", "alpha"};
  quant.columns = {"terminal_date", "q05", "q25", "q50", "q75", "q95"};
  plot.columns = {"terminal_date", "coefficient", "t_stat", "lower_threshold", "upper_threshold",
                  "significant"};
  for (const PanelEstimate& e : rr.estimates) {
    auto add_coef = [&](const std::string& name, double est, double se, double t) {
      coef.add({e.window_end, e.window_start, name, format_number(est), format_number(se),
                format_number(t), std::to_string(e.n_obs), std::to_string(e.n_firms),
                std::to_string(e.dof), format_number(e.r_squared)});
    };
    for (std::size_t c = 0; c < e.coef_names.size(); ++c) {
      const auto ci = static_cast<Index>(c);
      add_coef(e.coef_names[c], e.coefficients(ci), e.std_errors(ci), e.t_stats(ci));
      plot.add({e.window_end, e.coef_names[c], format_number(e.t_stats(ci)),
                format_number(-kThreshold), format_number(kThreshold),
                std::fabs(e.t_stats(ci)) > kThreshold ? "1" : "0"});
    }
    if (e.intercept) {
      const double se = e.intercept_se.value_or(kMissing);
      add_coef("intercept", *e.intercept, se, se > 0 ? *e.intercept / se : kMissing);
    }
    if (e.method == Method::within) {
      for (std::size_t i = 0; i < e.effect_firms.size(); ++i)
        fe.add({e.window_end, lp.chars.firms()[e.effect_firms[i]],
                format_number(e.alpha_hat(static_cast<Index>(i)))});
      const auto q = fixed_effect_quantiles(e);
      quant.add({e.window_end, format_number(q[0]), format_number(q[1]), format_number(q[2]),
                 format_number(q[3]), format_number(q[4])});
    }
  }
  write_csv((out / "coefficients.csv").string(), "estimate", seed, coef);
  write_csv((out / "fixed_effects.csv").string(), "estimate", seed, fe);
  write_csv((out / "fixed_effect_quantiles.csv").string(), "estimate", seed, quant);
  write_csv((out / "tstat_plot.csv").string(), "estimate", seed, plot);
  write_skipped(out, "estimate", seed, rr);

  json config = panel_json(o.panel);
  config["regression"] = regression_json(o.reg);
  config["t_threshold"] = kThreshold;
  write_manifest(out, "estimate", o.common, std::move(config),
                 {"coefficients.csv", "fixed_effects.csv", "fixed_effect_quantiles.csv",
                  "tstat_plot.csv", "skipped_windows.csv"});
  spdlog::info("estimate: {} windows, {} skipped", rr.estimates.size(), rr.skipped.size());
  return 0;
}

// --- decompose -------------------------------------------------------------

std::size_t resolve_char(const CharacteristicsPanel& chars, const std::string& key) {
  for (std::size_t k = 0; k < chars.n_chars(); ++k)
    if (chars.k_names()[k] == key) return k;
  std::size_t k = 0;
  const auto [p, ec] = std::from_chars(key.data(), key.data() + key.size(), k);
  if (ec != std::errc() || p != key.data() + key.size() || k >= chars.n_chars())
    fail(ErrorKind::invalid_input, "decompose", "unknown sort characteristic '" + key + "'");
  return k;
}

int cmd_decompose(const Options& o) {
  const LoadedPanel lp = load_panel(o.panel);
  const std::size_t k = resolve_char(lp.chars, o.sort_char);
  const RollingResult rr = run_rolling(lp, o.reg, o.common.threads);
  const DecompositionReport rep = decompose_anomaly(rr, lp.chars, lp.returns, k);
  const fs::path out = prepare_out(o.common);
  const std::uint64_t seed = o.common.seed;
  const auto& names = lp.chars.k_names();
  const std::size_t K = names.size();

  CsvTable dates;
  dates.columns = {"date", "sort_date", "ls_return", "lambda", "xi", "accounting_error"};
  for (const char* part : {"psi:", "phi:", "beta_psi:", "eta_phi:"})
    for (const auto& nm : names) dates.columns.push_back(part + nm);
  for (const auto& d : rep.dates) {
    std::vector<std::string> row{d.date, lp.chars.dates()[d.sort_date], format_number(d.ls_return),
                                 format_number(d.lambda), format_number(d.xi),
                                 format_number(d.accounting_error)};
    for (std::size_t j = 0; j < K; ++j) row.push_back(format_number(d.psi(static_cast<Index>(j))));
    for (std::size_t j = 0; j < K; ++j) row.push_back(format_number(d.phi(static_cast<Index>(j))));
    for (std::size_t j = 0; j < K; ++j) {
      const auto ji = static_cast<Index>(j);
      row.push_back(format_number(d.beta(ji) * d.psi(ji)));
    }
    for (std::size_t j = 0; j < K; ++j) {
      const auto ji = static_cast<Index>(j);
      row.push_back(format_number(d.eta(ji) * d.phi(ji)));
    }
    dates.add(std::move(row));
  }
  write_csv((out / "decomposition_dates.csv").string(), "decompose", seed, dates);

  CsvTable summary;
  summary.columns = {"term", "characteristic", "value"};
  auto add = [&](const std::string& term, const std::string& ch, double v) {
    summary.add({term, ch, format_number(v)});
  };
  add("n_dates", "", static_cast<double>(rep.n_dates));
  add("mean_ls_return", "", rep.mean_ls_return);
  add("mean_lambda", "", rep.mean_lambda);
  add("mu_beta_mu_psi", "", rep.mu_beta_term);
  add("mu_eta_mu_phi", "", rep.mu_eta_term);
  add("cov_beta_psi", "", rep.covariance_beta_psi);
  add("cov_eta_phi", "", rep.covariance_eta_phi);
  add("residual", "", rep.residual);
  add("max_accounting_error", "", rep.max_accounting_error);
  for (std::size_t j = 0; j < K; ++j) {
    const auto& t = rep.terms[j];
    add("mu_beta", names[j], t.mu_beta);
    add("mu_psi", names[j], t.mu_psi);
    add("cov_beta_psi", names[j], t.cov_beta_psi);
    add("mu_eta", names[j], t.mu_eta);
    add("mu_phi", names[j], t.mu_phi);
    add("cov_eta_phi", names[j], t.cov_eta_phi);
  }
  add("large_n_own_term", names[k], rep.large_n_own_term);
  add("large_n_cov_beta_other", names[k], rep.large_n_cov_beta);
  add("large_n_cov_eta_other", names[k], rep.large_n_cov_eta);
  add("large_n_total", names[k],
      rep.mean_lambda + rep.large_n_own_term + rep.large_n_cov_beta + rep.large_n_cov_eta);
  add("phi_own_mean", names[k], rep.phi_own_mean);
  write_csv((out / "decomposition_summary.csv").string(), "decompose", seed, summary);
  write_skipped(out, "decompose", seed, rr);

  json config = panel_json(o.panel);
  config["regression"] = regression_json(o.reg);
  config["sort_char"] = names[k];
  write_manifest(out, "decompose", o.common, std::move(config),
                 {"decomposition_dates.csv", "decomposition_summary.csv", "skipped_windows.csv"});
  return 0;
}

// --- verify ----------------------------------------------------------------

int cmd_verify(const Options& o) {
  IdentityGridOptions g;
  g.split_samples = o.samples;
  g.dispersion_reps = o.reps;
  g.dispersion_specs = o.specs;
  g.threads = o.common.threads;
  Common common = o.common;
  if (common.seed_given) g.seed = common.seed;
  common.seed = g.seed;

  const auto checks = identity_grid(g);
  const fs::path out = prepare_out(common);
  CsvTable tab;
  tab.columns = {"check", "estimate", "target", "std_error", "tolerance", "status"};
  bool all = true;
  std::printf("%-40s %14s %14s %12s  %s\n", "check", "estimate", "target", "tolerance", "status");
  for (const auto& c : checks) {
    all = all && c.passed;
    tab.add({csv_field(c.name), format_number(c.estimate), format_number(c.target),
             format_number(c.std_error), format_number(c.tolerance), c.passed ? "PASS" : "FAIL"});
    std::printf("%-40s %14.8f %14.8f %12.3e  %s\n", c.name.c_str(), c.estimate, c.target,
                c.tolerance, c.passed ? "PASS" : "FAIL");
  }
  write_csv((out / "verify.csv").string(), "verify", g.seed, tab);
  write_manifest(out, "verify", common,
                 {{"samples", g.split_samples}, {"reps", g.dispersion_reps},
                  {"specs", g.dispersion_specs}, {"n_se", g.n_se},
                  {"dispersion_firms", g.dispersion_firms}, {"dispersion_dates", g.dispersion_dates}},
                 {"verify.csv"});
  return all ? 0 : 1;
}

// --- mv-weights ------------------------------------------------------------

Eigen::MatrixXd json_matrix(const json& j) {
  const std::size_t rows = j.size(), cols = rows ? j.at(0).size() : 0;
  Eigen::MatrixXd m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (j.at(r).size() != cols) throw Error(ErrorKind::parse, "io", "read_beliefs", "ragged matrix");
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<Index>(r), static_cast<Index>(c)) = j.at(r).at(c).get<double>();
  }
  return m;
}

Eigen::VectorXd json_vector(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
}

AgentBeliefs parse_beliefs(const json& j) {
  try {
    AgentBeliefs b;
    b.char_matrix = json_matrix(j.at("char_matrix"));
    b.beta_hat = json_vector(j.at("beta_hat"));
    b.sigma_beta = json_matrix(j.at("sigma_beta"));
    b.sigma_e2 = json_vector(j.at("sigma_e2"));
    b.gamma = j.value("gamma", 1.0);
    b.budget = j.value("budget", 1.0);
    return b;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, "io", "read_beliefs", e.what());
  }
}

int cmd_mv_weights(const Options& o) {
  const json bj = load_json(o.beliefs, "read_beliefs");
  const AgentBeliefs b = parse_beliefs(bj);
  const MVSolution s = optimal_weights(b);
  const fs::path out = prepare_out(o.common);
  const Index K = b.char_matrix.cols();

  CsvTable w;
  w.columns = {"asset", "weight", "f1"};
  for (Index k = 0; k < K; ++k) w.columns.push_back("f2:" + std::to_string(k));
  w.columns.push_back("reconstructed");
  for (Index n = 0; n < s.weights.size(); ++n) {
    std::vector<std::string> row{std::to_string(n), format_number(s.weights(n)), format_number(s.f1(n))};
    double rebuilt = s.f1(n);
    for (Index k = 0; k < K; ++k) {
      row.push_back(format_number(s.f2(n, k)));
      rebuilt += b.char_matrix(n, k) * s.f2(n, k);
    }
    row.push_back(format_number(rebuilt));
    w.add(std::move(row));
  }
  write_csv((out / "mv_weights.csv").string(), "mv-weights", o.common.seed, w);

  CsvTable sum;
  sum.columns = {"quantity", "value"};
  sum.add({"delta", format_number(s.delta)});
  sum.add({"budget", format_number(b.budget)});
  sum.add({"weight_sum", format_number(s.weights.sum())});
  sum.add({"reconstruction_residual", format_number(s.reconstruction_residual)});
  write_csv((out / "mv_summary.csv").string(), "mv-weights", o.common.seed, sum);

  json config = bj;
  config["beliefs_path"] = o.beliefs;
  write_manifest(out, "mv-weights", o.common, std::move(config), {"mv_weights.csv", "mv_summary.csv"});
  return 0;
}

int exit_code_for(const Error& e) {
  if (e.kind() == ErrorKind::parse || e.module() == "io" || e.module() == "cli") return 2;
  return 3;
}

}  // namespace

unsigned default_threads() {
  if (const char* env = std::getenv("CHARDEMAND_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return 1;
}

int run(int argc, const char* const* argv) {
  Options o;
  o.common.threads = default_threads();

  CLI::App app{"chardemand: characteristics-driven demand, estimation and verification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  auto* normalize = app.add_subcommand("normalize", "Gaussian rank-normalise a raw panel");
  add_common(normalize, o.common);
  add_panel_input(normalize, o.panel);

  auto* simulate = app.add_subcommand("simulate", "Simulate an equilibrium panel from a JSON config");
  add_common(simulate, o.common);
  simulate->add_option("-c,--config", o.config, "Simulation manifest (JSON)")->required();

  auto* estimate = app.add_subcommand("estimate", "Rolling pooled or within panel regressions");
  add_common(estimate, o.common);
  add_panel_input(estimate, o.panel);
  add_regression(estimate, o.reg);

  auto* decompose = app.add_subcommand("decompose", "Decompose a sorted long-short return");
  add_common(decompose, o.common);
  add_panel_input(decompose, o.panel);
  add_regression(decompose, o.reg);
  decompose->add_option("--sort-char", o.sort_char, "Sort characteristic (name or 0-based index)");

  auto* verify = app.add_subcommand("verify", "Check the Gaussian identities against Monte Carlo");
  add_common(verify, o.common);
  verify->add_option("--samples", o.samples, "Draws per sorted-split grid point")
      ->check(CLI::Range(std::size_t{1000}, std::size_t{1} << 40));
  verify->add_option("--reps", o.reps, "Replications per dispersion spec")
      ->check(CLI::Range(std::size_t{100}, std::size_t{1} << 40));
  verify->add_option("--specs", o.specs, "Number of random dispersion specs");

  auto* mv = app.add_subcommand("mv-weights", "Mean-variance weights from a beliefs manifest");
  add_common(mv, o.common);
  mv->add_option("-b,--beliefs", o.beliefs, "Beliefs manifest (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    configure_logging(o.common.log_level);
    if (*normalize) return cmd_normalize(o);
    if (*simulate) return cmd_simulate(o);
    if (*estimate) return cmd_estimate(o);
    if (*decompose) return cmd_decompose(o);
    if (*verify) return cmd_verify(o);
    if (*mv) return cmd_mv_weights(o);
    return 2;
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.kind()) << "] " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"chardemand"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace chardemand::cli
