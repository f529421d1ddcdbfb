/**
 * @file cli.hpp
 * @brief Subcommands of the magsense command-line tool.
 *
 * Every command writes a CSV plus a JSON sidecar holding the fully resolved configuration
 * and a metadata block. The sidecar is itself a valid config: re-running the command with
 * it reproduces the CSV byte for byte.
 *
 * Exit codes: 0 success, 1 configuration or usage error, 2 physics precondition failure
 * (dynamical instability or integration stiffness).
 */
#pragma once

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "magsense/config.hpp"
#include "magsense/csv.hpp"
#include "magsense/errors.hpp"
#include "magsense/figures.hpp"
#include "magsense/model.hpp"
#include "magsense/modulation.hpp"
#include "magsense/spectra.hpp"
#include "magsense/stability.hpp"
#include "magsense/timedomain.hpp"

namespace magsense::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

enum ExitCode : int { kSuccess = 0, kConfigError = 1, kPhysicsError = 2 };

struct Context {
  std::string command;
  fs::path outdir;
  std::ostream& out;
};

inline constexpr const char* kNoiseClassification =
    "magnon input noise (n_m + 1/2)|M1|^2 is probe-referred: it is part of Y_out but excluded "
    "from N_ad, which counts only cavity quantum and thermal noise";

// Band over which Monte-Carlo and analytic spectra are compared, in units of kappa_m.
inline constexpr double kCompareLo = 0.05;
inline constexpr double kCompareHi = 5.0;

namespace detail {

inline json stability_json(const StabilityReport& r) {
  return {{"stable", r.stable},
          {"marginal", r.marginal},
          {"H", {{"H0", r.h[0]}, {"H1", r.h[1]}, {"H2", r.h[2]}, {"H3", r.h[3]}}},
          {"criteria_over_kappa_m", r.criteria},
          {"max_eigen_real", r.max_eigen_real}};
}

inline json angular_json(const SystemParams& p, const ModulationSettings& m) {
  return {{"omega_m", p.omega_m}, {"omega_a", p.omega_a},   {"delta_a", p.delta_a},
          {"delta_m", p.delta_m}, {"kappa_a", p.kappa_a},   {"kappa_m", p.kappa_m},
          {"g", p.g},             {"omega_L", m.omega_L},   {"omega_d", m.omega_d},
          {"omega1", m.omega1},   {"omega2", m.omega2},     {"lambda1", m.lambda1},
          {"lambda2", m.lambda2}, {"temperature_K", p.temperature}};
}

inline bool unit_modulus_regime(const EffectiveCouplings& c) {
  const double scale = std::max(std::abs(c.g1), std::abs(c.g2));
  return scale > 0.0 && std::abs(c.g1 - c.g2) <= 1e-9 * scale;
}

/// Metadata common to all parameter-driven commands.
inline json base_metadata(const Context& ctx, const config::Resolved& r, const EffectiveCouplings& c) {
  json md;
  md["version"] = std::string("magsense ") + config::kVersion;
  md["command"] = ctx.command;
  md["units"] = "angular block in rad/s; config blocks in Hz (/2pi), kelvin and seconds";
  md["angular"] = angular_json(r.system, r.modulation);
  md["couplings"] = {{"g1", c.g1}, {"g2", c.g2}};
  const auto n = occupancies(r.system);
  md["occupancies"] = {{"n_a", n.n_a}, {"n_m", n.n_m}};
  md["stability"] = stability_json(routh_hurwitz(r.system, c));

  std::vector<std::string> warnings = validate_params(r.system);
  for (auto& w : modulation_warnings(r.modulation)) warnings.push_back(w);
  md["warnings"] = warnings;

  std::vector<std::string> flags;
  if (r.omega_a_defaulted) flags.emplace_back("omega_a defaulted to omega_m");
  if (unit_modulus_regime(c)) flags.emplace_back("unit-modulus M4 regime");
  const auto rwa = rwa_residual(r.system.g, r.modulation);
  if (rwa.violation) flags.emplace_back("rotating-wave approximation violated: a dropped sideband is static");
  md["flags"] = flags;
  md["rwa"] = {{"metric", std::isfinite(rwa.metric) ? json(rwa.metric) : json("inf")},
               {"carrier_metric", std::isfinite(rwa.carrier_metric) ? json(rwa.carrier_metric) : json("inf")},
               {"violation", rwa.violation}};
  md["notes"] = {kNoiseClassification};
  return md;
}

inline void write_outputs(const Context& ctx, const config::RunConfig& cfg, const std::string& stem,
                          const std::string& csv_text, json sidecar) {
  csv::write_atomic(ctx.outdir / (stem + ".csv"), csv_text);
  if (cfg.output.metadata) {
    csv::write_atomic(ctx.outdir / (stem + ".json"), sidecar.dump(2) + "\n");
  }
  ctx.out << "wrote " << (ctx.outdir / (stem + ".csv")).string() << "\n";
}

inline std::vector<double> grid(const config::RunConfig& cfg) {
  return omega_grid_over_kappa_m(cfg.grid.omega_min_over_kappa_m, cfg.grid.omega_max_over_kappa_m,
                                 cfg.grid.points, cfg.grid.spacing);
}

inline void require_stable(const SystemParams& p, const EffectiveCouplings& c) {
  const auto r = routh_hurwitz(p, c);
  if (!r.stable) throw InstabilityError("parameters are dynamically unstable\n" + r.describe());
}

}  // namespace detail

// ---------------------------------------------------------------------------------------------

inline int cmd_spectrum(const config::RunConfig& cfg, const Context& ctx) {
  const auto r = config::resolve(cfg);
  const auto c = effective_couplings(r.system.g, r.modulation);
  const auto xs = detail::grid(cfg);
  std::vector<double> omegas;
  for (double x : xs) omegas.push_back(x * r.system.kappa_m);
  const auto result = spectrum_scan(omegas, r.system, c);

  csv::Writer w({"omega_over_kappa_m", "Y_out", "R_B", "N_ad", "below_sql"});
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto& pt = result.points[i];
    w.field(xs[i]).field(pt.y_out).field(pt.r_b).field(pt.n_ad).field(pt.below_sql);
    w.end_row();
  }
  json side = config::to_json(cfg);
  side["metadata"] = detail::base_metadata(ctx, r, c);
  detail::write_outputs(ctx, cfg, "spectrum", w.str(), side);
  return kSuccess;
}

inline int cmd_sweep(const config::RunConfig& cfg, const Context& ctx) {
  if (!cfg.sweep) throw ConfigError("sweep: config has no 'sweep' block");
  if (cfg.sweep->values.empty()) throw ConfigError("sweep: empty sweep list");
  const auto& sw = *cfg.sweep;
  const auto base = config::resolve(cfg);
  const auto xs = detail::grid(cfg);
  const auto n_base = occupancies(base.system);

  csv::Writer w({"sweep_value", "omega_over_kappa_m", "stable", "R_B", "N_ad"});
  json points = json::array();
  for (double v : sw.values) {
    SystemParams p = base.system;
    ModulationSettings m = base.modulation;
    switch (sw.parameter) {
      case config::SweepParameter::lambda2_ratio: m.lambda2 = v * m.lambda1; break;
      case config::SweepParameter::temperature: p.temperature = v; break;
      case config::SweepParameter::detuning:
        p.delta_a = p.delta_m = hz_to_angular(v);
        m = ModulationSettings::matched_to(m.lambda1, m.lambda2, p.omega_a - p.delta_a,
                                           p.omega_m - p.delta_m);
        break;
      case config::SweepParameter::cooperativity: break;
    }
    if (sw.parameter == config::SweepParameter::cooperativity) {
      // Reference ultra-strong scheme; always stable.
      for (double x : xs) {
        const auto ref = ultrastrong_reference(x * p.kappa_m, {v, p.kappa_a, p.kappa_m, n_base.n_a});
        w.field(v).field(x).field(true).field(ref.r_b2).field(ref.n_ad2);
        w.end_row();
      }
      points.push_back({{"value", v}, {"stable", true}});
      continue;
    }
    const auto c = effective_couplings(p.g, m);
    const auto report = routh_hurwitz(p, c);
    points.push_back({{"value", v}, {"g1", c.g1}, {"g2", c.g2}, {"stable", report.stable},
                      {"unit_modulus_M4", detail::unit_modulus_regime(c)}});
    const auto n = occupancies(p);
    for (double x : xs) {
      w.field(v).field(x).field(report.stable);
      if (!report.stable) {
        w.empty().empty();
      } else {
        const auto t = magsense::detail::resolvent_transfer(x * p.kappa_m, p, c);
        const double rb = std::norm(t.m1);
        w.field(rb).field(rb > 0.0 ? (n.n_a + 0.5) * std::norm(t.m4) / rb
                                   : std::numeric_limits<double>::infinity());
      }
      w.end_row();
    }
  }
  const auto c0 = effective_couplings(base.system.g, base.modulation);
  json side = config::to_json(cfg);
  side["metadata"] = detail::base_metadata(ctx, base, c0);
  side["metadata"]["sweep_points"] = points;
  detail::write_outputs(ctx, cfg, "sweep", w.str(), side);
  return kSuccess;
}

inline int cmd_stability(const config::RunConfig& cfg, const Context& ctx) {
  if (!cfg.stability_grid) throw ConfigError("stability: config has no 'stability_grid' block");
  const auto& sg = *cfg.stability_grid;
  if (sg.values1.empty() || sg.values2.empty()) throw ConfigError("stability: empty grid axis");
  const auto r = config::resolve(cfg);
  auto axis = [](const std::string& name, const std::vector<double>& vals) {
    GridAxis a;
    a.parameter = grid_parameter_from_string(name);
    const bool freq = a.parameter != GridParameter::lambda1 && a.parameter != GridParameter::lambda2;
    for (double v : vals) a.values.push_back(freq ? hz_to_angular(v) : v);
    return a;
  };
  const auto map = stability_map(r.system, r.modulation, axis(sg.param1, sg.values1),
                                 axis(sg.param2, sg.values2));
  csv::Writer w({sg.param1, sg.param2, "stable"});
  std::size_t stable_count = 0;
  for (std::size_t i = 0; i < sg.values1.size(); ++i) {
    for (std::size_t j = 0; j < sg.values2.size(); ++j) {
      const bool s = map.stable[i][j];
      stable_count += s ? 1 : 0;
      w.field(sg.values1[i]).field(sg.values2[j]).field(s);
      w.end_row();
    }
  }
  // Base point metadata; the map itself may include unstable points.
  const auto c = effective_couplings(r.system.g, r.modulation);
  json side = config::to_json(cfg);
  side["metadata"] = detail::base_metadata(ctx, r, c);
  side["metadata"]["stable_points"] = stable_count;
  side["metadata"]["total_points"] = sg.values1.size() * sg.values2.size();
  detail::write_outputs(ctx, cfg, "stability", w.str(), side);
  return kSuccess;
}

inline int cmd_montecarlo(const config::RunConfig& cfg_in, const Context& ctx,
                          std::optional<std::uint64_t> seed_override) {
  if (!cfg_in.montecarlo) throw ConfigError("montecarlo: config has no 'montecarlo' block");
  config::RunConfig cfg = cfg_in;
  if (seed_override) cfg.montecarlo->seed = *seed_override;
  const auto r = config::resolve(cfg);
  const auto& p = r.system;
  const auto c = effective_couplings(p.g, r.modulation);
  detail::require_stable(p, c);
  const SdeConfig sde = config::resolve_montecarlo(*cfg.montecarlo, p, c);
  const auto n = occupancies(p);

  SignalSpec signal;
  if (cfg.signal) {
    signal = {cfg.signal->kind, cfg.signal->amplitude, hz_to_angular(cfg.signal->omega_s_hz),
              cfg.signal->channel};
  }
  const auto traj = simulate(p, c, n, sde, signal);
  const auto est = estimate_psd(traj, sde);

  // PSD table over the configured grid window, one row per Welch bin.
  const double lo = cfg.grid.omega_min_over_kappa_m, hi = cfg.grid.omega_max_over_kappa_m;
  csv::Writer w({"omega_over_kappa_m", "psd", "std_error", "Y_out"});
  double sq = 0.0;
  std::size_t bins = 0;
  for (std::size_t k = 0; k < est.omega.size(); ++k) {
    const double x = est.omega[k] / p.kappa_m;
    const double y = output_spectrum(magsense::detail::resolvent_transfer(est.omega[k], p, c), n);
    if (x >= kCompareLo && x <= kCompareHi) {
      sq += (est.psd[k] / y - 1.0) * (est.psd[k] / y - 1.0);
      ++bins;
    }
    if (x < lo || x > hi) continue;
    w.field(x).field(est.psd[k]).field(est.std_error[k]).field(y);
    w.end_row();
  }
  const double rms = bins > 0 ? std::sqrt(sq / static_cast<double>(bins)) : std::nan("");

  // Time-averaged covariance against the Lyapunov solution.
  const Eigen::Matrix4d v = steady_covariance(drift_matrix(p, c), n, p.kappa_a, p.kappa_m);
  json cov = json::array();
  double max_z = 0.0;
  const char* names[] = {"Xa", "Pa", "Xm", "Pm"};
  for (int i = 0; i < 4; ++i) {
    for (int j = i; j < 4; ++j) {
      const double se = traj.covariance_stderr(i, j);
      const double z = se > 0.0 ? std::abs(traj.covariance(i, j) - v(i, j)) / se : 0.0;
      max_z = std::max(max_z, z);
      cov.push_back({{"element", std::string(names[i]) + "," + names[j]},
                     {"lyapunov", v(i, j)},
                     {"monte_carlo", traj.covariance(i, j)},
                     {"std_error", se},
                     {"z", z}});
    }
  }

  json side = config::to_json(cfg, sde);
  json md = detail::base_metadata(ctx, r, c);
  md["seed"] = sde.seed;
  md["psd"] = {{"segments", est.segments},
               {"samples_per_segment", est.samples_per_segment},
               {"sample_interval", est.sample_interval},
               {"compare_band_over_kappa_m", {kCompareLo, kCompareHi}},
               {"rms_relative_deviation", std::isfinite(rms) ? json(rms) : json(nullptr)},
               {"compare_bins", bins}};
  md["covariance"] = {{"elements", cov}, {"max_z", max_z}};
  md["notes"].push_back(
      "the time-domain model simulates quantum noise as classical white noise with the "
      "symmetrized variance (n + 1/2) per quadrature, exact for linear Gaussian dynamics");

  ctx.out << "PSD vs analytic Y_out: RMS relative deviation " << rms << " over ["
          << kCompareLo << ", " << kCompareHi << "] kappa_m (" << bins << " bins)\n"
          << "covariance vs Lyapunov: max |z| = " << max_z << "\n";

  if (signal.kind == SignalKind::tone && signal.amplitude > 0.0) {
    const auto gain = measure_tone_gain(p, c, signal.omega_s, signal.amplitude, signal.channel);
    csv::Writer g({"omega_s_over_kappa_m", "channel", "measured_gain", "expected_gain", "relative_error"});
    g.field(signal.omega_s / p.kappa_m)
        .field(std::string(signal.channel == SignalChannel::x_m ? "x_m" : "p_m"))
        .field(gain.gain)
        .field(gain.expected)
        .field(gain.relative_error());
    g.end_row();
    csv::write_atomic(ctx.outdir / "gain.csv", g.str());
    md["gain"] = {{"measured", gain.gain}, {"expected", gain.expected}, {"relative_error", gain.relative_error()}};
    ctx.out << "tone gain " << gain.gain << " vs |M(omega_s)| " << gain.expected << "\n";
  }
  if (cfg.montecarlo->trajectory_samples > 0) {
    csv::Writer t({"time", "output"});
    const auto count = std::min<std::size_t>(static_cast<std::size_t>(cfg.montecarlo->trajectory_samples),
                                             traj.output.size());
    for (std::size_t k = 0; k < count; ++k) {
      t.field(traj.start_time + (static_cast<double>(k) + 0.5) * traj.sample_interval).field(traj.output[k]);
      t.end_row();
    }
    csv::write_atomic(ctx.outdir / "trajectory.csv", t.str());
  }
  side["metadata"] = md;
  detail::write_outputs(ctx, cfg, "psd", w.str(), side);
  return kSuccess;
}

inline int cmd_reproduce(const config::RunConfig& cfg, const Context& ctx,
                         const std::optional<std::string>& figure_flag) {
  const auto id = figure_flag ? figure_flag : cfg.figure;
  if (!id) throw ConfigError("reproduce: no figure id (use --figure or the 'figure' config key)");
  const auto fig = figures::reproduce(*id);

  std::vector<std::string> header{fig.x_label};
  header.insert(header.end(), fig.columns.begin(), fig.columns.end());
  csv::Writer w(header);
  for (std::size_t i = 0; i < fig.x.size(); ++i) {
    w.field(fig.x[i]);
    for (const auto& col : fig.y) w.field(col[i]);
    w.end_row();
  }

  json side;
  side["figure"] = *id;
  side["output"] = {{"directory", cfg.output.directory}, {"format", "csv"}, {"metadata", cfg.output.metadata}};
  json md;
  md["version"] = std::string("magsense ") + config::kVersion;
  md["command"] = ctx.command;
  md["title"] = fig.title;
  json bundles = json::array();
  for (const auto& c : fig.curves) {
    json b = {{"label", c.label},
              {"system_angular", {{"omega_m", c.params.omega_m}, {"omega_a", c.params.omega_a},
                                  {"delta_a", c.params.delta_a}, {"delta_m", c.params.delta_m},
                                  {"kappa_a", c.params.kappa_a}, {"kappa_m", c.params.kappa_m},
                                  {"g", c.params.g}, {"temperature_K", c.params.temperature}}},
              {"couplings", {{"g1", c.couplings.g1}, {"g2", c.couplings.g2}}},
              {"stability", detail::stability_json(c.stability)}};
    if (c.modulation) b["modulation"] = {{"lambda1", c.modulation->lambda1}, {"lambda2", c.modulation->lambda2}};
    bundles.push_back(b);
  }
  md["bundles"] = bundles;
  md["report"] = figures::anchors_json(fig);
  md["flags"] = {"omega_a defaulted to omega_m"};
  md["notes"] = {kNoiseClassification};
  side["metadata"] = md;

  detail::write_outputs(ctx, cfg, *id, w.str(), side);
  const auto report = figures::report_text(fig);
  csv::write_atomic(ctx.outdir / (*id + "_report.txt"), report);
  ctx.out << report;
  return kSuccess;
}

// ---------------------------------------------------------------------------------------------

/// Parses arguments and dispatches. Never throws; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"magsense: dual-frequency-modulated cavity-magnon magnetometry model"};
  app.set_version_flag("--version", std::string("magsense ") + config::kVersion);
  std::string config_path, outdir, figure;
  std::uint64_t seed = 0;
  auto* config_opt = app.add_option("--config", config_path, "JSON run configuration");
  auto* outdir_opt = app.add_option("--outdir", outdir, "output directory (overrides output.directory)");
  auto* seed_opt = app.add_option("--seed", seed, "random seed (overrides montecarlo.seed)");
  auto* figure_opt = app.add_option("--figure", figure, "figure id for reproduce");
  (void)config_opt;
  app.require_subcommand(1);
  app.fallthrough();
  app.add_subcommand("spectrum", "Y_out, R_B and N_ad on a frequency grid");
  app.add_subcommand("sweep", "spectrum family over one swept parameter");
  app.add_subcommand("stability", "Routh-Hurwitz stability map over two parameters");
  app.add_subcommand("montecarlo", "time-domain simulation with PSD and covariance checks");
  app.add_subcommand("reproduce", "figure data and reproduction report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfigError;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    config::RunConfig cfg = config_path.empty() ? config::RunConfig{} : config::load(config_path);
    if (*outdir_opt) cfg.output.directory = outdir;
    Context ctx{command, fs::path(cfg.output.directory), out};
    if (command == "spectrum") return cmd_spectrum(cfg, ctx);
    if (command == "sweep") return cmd_sweep(cfg, ctx);
    if (command == "stability") return cmd_stability(cfg, ctx);
    if (command == "montecarlo") {
      return cmd_montecarlo(cfg, ctx, *seed_opt ? std::optional<std::uint64_t>(seed) : std::nullopt);
    }
    return cmd_reproduce(cfg, ctx, *figure_opt ? std::optional<std::string>(figure) : std::nullopt);
  } catch (const InstabilityError& e) {
    err << "error: " << e.what() << "\n";
    return kPhysicsError;
  } catch (const StiffnessError& e) {
    err << "error: " << e.what() << "\n";
    return kPhysicsError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }
}

}  // namespace magsense::cli
