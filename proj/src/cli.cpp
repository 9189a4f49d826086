// Copyright 2026 The mfsir Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfsir/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mfsir/error.hpp"
#include "mfsir/fluctuation.hpp"
#include "mfsir/limit_spde.hpp"
#include "mfsir/meanfield.hpp"
#include "mfsir/parallel.hpp"
#include "mfsir/stats.hpp"

namespace mfsir {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kMassTol = 1e-6;

struct Flags {
  std::string config;
  std::uint64_t seed = 0;
  std::size_t reps = 0;
  std::vector<std::size_t> ns;
  std::size_t n = 0;
  double T = 0.0;
  double dt = 0.0;
  int grid = 0;
  std::string out_dir = "out";
  int workers = 0;
  std::string mode;
};

class Run {
 public:
  Run(RunConfig config, fs::path dir, std::ostream& out)
      : rc(std::move(config)), log(out), dir_(std::move(dir)) {}

  RunConfig rc;
  ExperimentManifest manifest;
  std::ostream& log;
  bool pass = true;

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    std::ostringstream os;
    body(os);
    const std::string text = os.str();
    std::ofstream f(dir_ / name, std::ios::binary);
    f << text;
    if (!f) throw std::runtime_error("cannot write " + (dir_ / name).string());
    manifest.outputs.push_back({name, sha256_hex(text)});
  }

  void verdict(const std::string& name, bool ok, json detail) {
    detail["pass"] = ok;
    manifest.verdicts[name] = std::move(detail);
    pass = pass && ok;
    log << name << ": " << (ok ? "pass" : "FAIL") << '\n';
  }

  /// Limit PDE on the covering grid, read from or written to the cache.
  DensityTrajectory pde(int cells, double T, double dt, double store_dt) {
    const Grid1D grid = Grid1D::covering(rc.model, T, cells);
    const std::string key = config_hash(rc) + "|pde|" + std::to_string(cells) + "|" +
                            format_double(T) + "|" + format_double(dt) + "|" +
                            format_double(store_dt);
    const fs::path rel = fs::path("cache") / ("pde_" + sha256_hex(key).substr(0, 16) + ".bin");
    if (auto hit = read_density_cache(dir_ / rel, key)) {
      mass_error_ = std::max(mass_error_, hit->max_mass_error);
      return *hit;
    }
    DensityTrajectory traj = solve_pde(rc.model, grid, T, dt, store_dt);
    fs::create_directories(dir_ / "cache");
    write_density_cache(dir_ / rel, traj, key);
    manifest.outputs.push_back({rel.generic_string(), sha256_file(dir_ / rel)});
    mass_error_ = std::max(mass_error_, traj.max_mass_error);
    return traj;
  }

  double stable_dt(int cells, double T) const {
    return pde_stable_dt(rc.model, Grid1D::covering(rc.model, T, cells));
  }

  void mass_verdict() {
    if (mass_error_ < 0.0) return;
    verdict("mass_conservation", mass_error_ <= kMassTol,
            {{"max_error", mass_error_}, {"tolerance", kMassTol}});
  }

 private:
  fs::path dir_;
  double mass_error_ = -1.0;
};

void require_1d(const RunConfig& rc, const char* what) {
  if (rc.model.dim != 1) throw UsageError(std::string(what) + " needs dimension 1");
}

/// Largest T / m (m <= 10000) of which every time is a multiple.
double common_step(const std::vector<double>& times, double T) {
  for (int m = 1; m <= 10000; ++m) {
    const double s = T / m;
    const bool ok = std::all_of(times.begin(), times.end(), [&](double t) {
      return std::abs(t / s - std::round(t / s)) < 1e-9;
    });
    if (ok) return s;
  }
  return 0.0;
}

std::string state_label(EpidemicState e) { return std::string(to_string(e)); }

void cmd_simulate(Run& run) {
  const RunConfig& rc = run.rc;
  SimScheme scheme = rc.scheme;
  scheme.snapshot_times = rc.checkpoints();
  scheme.record_log = true;
  scheme.validate();
  const std::size_t reps = rc.experiment.reps;
  std::vector<std::string> traj(reps), events(reps);
  parallel_for(reps, rc.experiment.workers, [&](std::size_t rep) {
    RngStream rng = derive_stream(rc.experiment.seed, "simulate", rep);
    const Trajectory tr = mfsir::run(rc.model, scheme, rc.experiment.n, rng);
    std::ostringstream a, b;
    write_trajectory_csv(a, rep, tr, rep == 0);
    write_events_csv(b, rep, tr.log, rep == 0);
    traj[rep] = a.str();
    events[rep] = b.str();
  });
  run.write("trajectory.csv", [&](std::ostream& os) {
    for (const auto& s : traj) os << s;
  });
  run.write("events.csv", [&](std::ostream& os) {
    for (const auto& s : events) os << s;
  });
}

void cmd_meanfield(Run& run) {
  const RunConfig& rc = run.rc;
  require_1d(rc, "meanfield");
  const double T = rc.final_time;
  const int cells = rc.experiment.grid_cells;
  const DensityTrajectory traj = run.pde(cells, T, run.stable_dt(cells, T), T / 100.0);
  run.write("density.csv", [&](std::ostream& os) { write_density_csv(os, traj); });
  run.write("masses.csv", [&](std::ostream& os) {
    os << "t,mass_S,mass_I,mass_R,total\n";
    for (std::size_t k = 0; k < traj.size(); ++k) {
      double total = 0.0;
      os << format_double(traj.times[k]);
      for (EpidemicState e : kStates) {
        const double m = traj.channel_mass(k, e);
        total += m;
        os << ',' << format_double(m);
      }
      os << ',' << format_double(total) << '\n';
    }
  });
  run.mass_verdict();
}

void cmd_lln(Run& run) {
  const RunConfig& rc = run.rc;
  LlnOptions opt;
  opt.ns = rc.experiment.ns;
  opt.reps = rc.experiment.reps;
  opt.final_time = rc.final_time;
  opt.scheme = rc.scheme;
  opt.grid_cells = rc.experiment.grid_cells;
  opt.n_ref = rc.experiment.n_ref;
  opt.n_proj = rc.experiment.n_proj;
  opt.seed = rc.experiment.seed;
  opt.workers = rc.experiment.workers;
  const LlnResult res = lln_experiment(rc.model, opt);
  run.write("rates.csv", [&](std::ostream& os) { write_rate_csv(os, res.table); });
  run.write("lln_samples.csv", [&](std::ostream& os) {
    os << "N,rep,w1\n";
    for (std::size_t r = 0; r < res.samples.size(); ++r) {
      for (std::size_t i = 0; i < res.samples[r].size(); ++i) {
        os << res.table.rows[r].n << ',' << i << ',' << format_double(res.samples[r][i]) << '\n';
      }
    }
  });
  json detail{{"slope", res.fit.slope},
              {"slope_se", res.fit.slope_se},
              {"intercept", res.fit.intercept},
              {"r2", res.fit.r2},
              {"limit", res.limit_kind}};
  double lo = 0.0, hi = 0.0;
  if (rc.model.dim == 1) {
    lo = -0.62;
    hi = -0.38;
  } else if (rc.model.dim >= 3) {
    lo = -0.45;
    hi = -0.22;
  }
  const bool checked = lo < hi;
  detail["band"] = checked ? json::array({lo, hi}) : json(nullptr);
  run.log << "slope " << format_double(res.fit.slope) << " (se " << format_double(res.fit.slope_se)
          << ")\n";
  run.verdict("lln_slope", !checked || (res.fit.slope >= lo && res.fit.slope <= hi), detail);
}

void cmd_clt(Run& run) {
  const RunConfig& rc = run.rc;
  const double T = rc.final_time;
  const std::vector<double> checkpoints = rc.checkpoints();
  DensityTrajectory limit;
  const bool centered = rc.model.dim == 1;
  if (centered) {
    const int cells = rc.experiment.limit_grid_cells;
    limit = run.pde(cells, T, run.stable_dt(cells, T), common_step(checkpoints, T));
  }
  CltOptions opt;
  opt.n = rc.experiment.n;
  opt.reps = rc.experiment.reps;
  opt.scheme = rc.scheme;
  opt.checkpoints = checkpoints;
  opt.final_time = T;
  opt.bank = rc.bank();
  opt.martingales = true;
  opt.seed = rc.experiment.seed;
  opt.workers = rc.experiment.workers;
  const CltResult res = clt_experiment(rc.model, centered ? &limit : nullptr, opt);
  run.write("fluctuations.csv", [&](std::ostream& os) {
    write_fluctuation_csv(os, res, rc.experiment.bank, "", true, false);
  });
  // Normality screens are reported, not enforced.
  std::size_t rejected = 0, screened = 0;
  run.write("clt_summary.csv", [&](std::ostream& os) {
    os << "state,phi_id,t,mean,variance,ks_stat,p_value,skew_z,kurtosis_z,reject\n";
    if (!centered) return;
    for (EpidemicState e : kStates) {
      for (std::size_t k = 0; k < res.bank.size(); ++k) {
        for (std::size_t c = 0; c < res.checkpoints.size(); ++c) {
          const auto x = res.column(&FluctuationSample::eta, e, k, c);
          const Summary s = summarize(x);
          os << state_label(e) << ',' << rc.experiment.bank[k] << ','
             << format_double(res.checkpoints[c]) << ',' << format_double(s.mean) << ','
             << format_double(s.variance);
          if (x.size() >= 100 && s.variance > 0.0) {
            const TestVerdict v = normality_screen(x);
            ++screened;
            rejected += v.reject(0.01) ? 1 : 0;
            os << ',' << format_double(v.statistic) << ',' << format_double(v.p_value) << ','
               << format_double(v.skew_z) << ',' << format_double(v.kurtosis_z) << ','
               << (v.reject(0.01) ? 1 : 0) << '\n';
          } else {
            os << ",,,,,\n";
          }
        }
      }
    }
  });
  run.manifest.verdicts["normality_screen"] = {{"screened", screened}, {"rejected", rejected},
                                               {"alpha", 0.01}, {"informational", true}};
  run.mass_verdict();
}

void cmd_qv_check(Run& run) {
  const RunConfig& rc = run.rc;
  CltOptions opt;
  opt.n = rc.experiment.n;
  opt.reps = rc.experiment.reps;
  opt.scheme = rc.scheme;
  opt.checkpoints = {rc.final_time};
  opt.final_time = rc.final_time;
  opt.bank = rc.bank();
  opt.martingales = true;
  opt.seed = rc.experiment.seed;
  opt.tag = "qv";
  opt.workers = rc.experiment.workers;
  const CltResult res = clt_experiment(rc.model, nullptr, opt);
  const std::vector<QvRow> rows = qv_table(res, 0);
  run.write("qv_ratio.csv", [&](std::ostream& os) {
    os << "state,phi_id,t,mean_m,se_m,mean_m2,mean_qv,ratio,ratio_se,checked,pass,mean_zero\n";
    for (const QvRow& r : rows) {
      os << state_label(r.state) << ',' << rc.experiment.bank[r.k] << ','
         << format_double(rc.final_time) << ',' << format_double(r.mean_m) << ','
         << format_double(r.se_m) << ',' << format_double(r.mean_m2) << ','
         << format_double(r.mean_qv) << ',' << format_double(r.ratio) << ','
         << format_double(r.ratio_se) << ',' << r.checked << ',' << r.pass << ','
         << r.mean_zero << '\n';
    }
  });
  std::size_t checked = 0, failed = 0, nonzero_mean = 0;
  double worst = 1.0;
  for (const QvRow& r : rows) {
    if (!r.mean_zero) ++nonzero_mean;
    if (!r.checked) continue;
    ++checked;
    if (!r.pass) ++failed;
    if (std::abs(r.ratio - 1.0) > std::abs(worst - 1.0)) worst = r.ratio;
  }
  run.verdict("qv_ratio", failed == 0 && checked > 0,
              {{"checked", checked},
               {"failed", failed},
               {"worst_ratio", worst},
               {"band", {0.9, 1.1}},
               {"mean_zero_rejections", nonzero_mean}});
}

void cmd_noise_check(Run& run) {
  const RunConfig& rc = run.rc;
  require_1d(rc, "noise-check");
  const double tau = std::min(rc.final_time, 1.0);
  const int cells = rc.experiment.grid_cells;
  const double dt0 = std::min(rc.scheme.dt, run.stable_dt(cells, tau));
  const double m = 4.0 * std::ceil(tau / (4.0 * dt0) - 1e-9);
  const DensityTrajectory mu = run.pde(cells, tau, tau / m, 0.0);
  LimitMartingaleOptions opt;
  opt.paths = rc.experiment.reps;
  opt.seed = rc.experiment.seed;
  opt.workers = rc.experiment.workers;
  const std::vector<CovRow> rows =
      covariance_check(rc.model, mu, standard_covariance_tuples(rc.final_time), opt);
  run.write("cov.csv", [&](std::ostream& os) {
    os << "name,degenerate,t,s,mc,ci_lower,ci_upper,quadrature,rel_error,abs_error,pass\n";
    for (const CovRow& r : rows) {
      os << r.name << ',' << r.degenerate << ',' << format_double(r.t) << ','
         << format_double(r.s) << ',' << format_double(r.mc.estimate) << ','
         << format_double(r.mc.lower) << ',' << format_double(r.mc.upper) << ','
         << format_double(r.quadrature) << ',' << format_double(r.rel_error) << ','
         << format_double(r.abs_error) << ',' << r.pass << '\n';
    }
  });
  json detail = json::object();
  bool ok = true;
  for (const CovRow& r : rows) {
    detail[r.name] = r.degenerate ? r.abs_error : r.rel_error;
    ok = ok && r.pass;
  }
  run.verdict("noise_covariance", ok, detail);
  run.mass_verdict();
}

void cmd_spde_compare(Run& run) {
  const RunConfig& rc = run.rc;
  require_1d(rc, "spde-compare");
  const double T = rc.final_time;
  const std::vector<double> checkpoints = rc.checkpoints();
  const int fine = rc.experiment.limit_grid_cells;
  const DensityTrajectory limit =
      run.pde(fine, T, run.stable_dt(fine, T), common_step(checkpoints, T));
  const int cells = rc.experiment.grid_cells;
  if (rc.scheme.dt > run.stable_dt(cells, T)) {
    throw UsageError("spde-compare: dt exceeds the stable step of the SPDE grid");
  }
  const DensityTrajectory mu = run.pde(cells, T, rc.scheme.dt, 0.0);

  CltOptions popt;
  popt.n = rc.experiment.n;
  popt.reps = rc.experiment.reps;
  popt.scheme = rc.scheme;
  popt.checkpoints = checkpoints;
  popt.final_time = T;
  popt.bank = rc.bank();
  popt.martingales = false;
  popt.seed = rc.experiment.seed;
  popt.workers = rc.experiment.workers;
  const CltResult particle = clt_experiment(rc.model, &limit, popt);

  SpdeOptions sopt;
  sopt.reps = rc.experiment.reps;
  sopt.checkpoints = checkpoints;
  sopt.bank = popt.bank;
  sopt.seed = rc.experiment.seed;
  sopt.workers = rc.experiment.workers;
  const CltResult spde = spde_experiment(rc.model, mu, sopt);

  run.write("spde_compare.csv", [&](std::ostream& os) {
    write_fluctuation_csv(os, particle, rc.experiment.bank, "particle", true, true);
    write_fluctuation_csv(os, spde, rc.experiment.bank, "spde", false, true);
  });
  const std::vector<CompareRow> rows =
      compare_projections(particle, spde, {EpidemicState::S, EpidemicState::I});
  const std::size_t last = checkpoints.size() - 1;
  std::size_t checked = 0, failed = 0;
  run.write("compare_summary.csv", [&](std::ostream& os) {
    os << "state,phi_id,t,ks_stat,p_value,var_particle,var_spde,ratio,pass\n";
    for (const CompareRow& r : rows) {
      os << state_label(r.state) << ',' << rc.experiment.bank[r.k] << ','
         << format_double(checkpoints[r.c]) << ',' << format_double(r.ks.statistic) << ','
         << format_double(r.ks.p_value) << ',' << format_double(r.var_particle) << ','
         << format_double(r.var_spde) << ',' << format_double(r.ratio) << ',' << r.pass << '\n';
      if (r.c != last) continue;
      ++checked;
      if (!r.pass) ++failed;
    }
  });
  run.verdict("clt_two_sample", failed == 0,
              {{"t", T}, {"checked", checked}, {"failed", failed}, {"alpha", 0.01},
               {"ratio_band", {0.8, 1.25}}});
  run.mass_verdict();
}

RunConfig resolve(const Flags& f, const CLI::App& app) {
  RunConfig rc = f.config.empty() ? default_run_config() : parse_config_file(f.config);
  auto given = [&](const char* name) { return app.count(name) > 0; };
  ExperimentParams& ex = rc.experiment;
  if (given("--seed")) ex.seed = f.seed;
  if (given("--reps")) ex.reps = f.reps;
  if (given("--Ns")) ex.ns = f.ns;
  if (given("--N")) ex.n = f.n;
  if (given("--grid")) ex.grid_cells = f.grid;
  if (given("--workers")) ex.workers = f.workers;
  if (given("--T")) rc.final_time = f.T;
  if (given("--dt")) rc.scheme.dt = f.dt;
  if (given("--mode")) {
    rc.scheme.mode = f.mode == "thinning" ? JumpMode::thinning : JumpMode::split_step;
  }
  rc.scheme.snapshot_times = {rc.final_time};
  // Re-parse the resolved document so overrides pass the same validation.
  return parse_config(to_json(rc));
}

}  // namespace

RunConfig default_run_config() {
  RunConfig rc;
  ModelConfig& m = rc.model;
  m.dim = 1;
  m.gamma = 0.5;
  m.kernel = KernelSpec::gaussian(1.0, 1.0);
  m.drift = DriftSpec::saturating_attraction(0.5, 1.0);
  m.diffusion = DiffusionSpec::constant({0.5, 0.5, 0.5});
  m.initial = InitialLawSpec::standard(1, {0.9, 0.1, 0.0});
  rc.final_time = 2.0;
  rc.scheme = SimScheme::uniform(0.01, 2.0);
  return rc;
}

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spatial SIR particle system, mean-field limit and fluctuations", "mfsir"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", tool_version());
  Flags f;
  app.add_option("--config", f.config, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", f.seed, "base seed");
  app.add_option("--reps", f.reps, "replications (noise-check: paths)");
  app.add_option("--Ns", f.ns, "population sizes for lln")->delimiter(',');
  app.add_option("--N", f.n, "population size");
  app.add_option("--T", f.T, "final time");
  app.add_option("--dt", f.dt, "time step");
  app.add_option("--grid", f.grid, "grid cells");
  app.add_option("--out-dir", f.out_dir, "output directory")->capture_default_str();
  app.add_option("--workers", f.workers, "worker threads (0: all cores)");
  app.add_option("--mode", f.mode, "jump scheme")
      ->check(CLI::IsMember({"split_step", "thinning"}));

  using Handler = void (*)(Run&);
  const std::vector<std::pair<std::string, Handler>> commands{
      {"simulate", cmd_simulate},       {"meanfield", cmd_meanfield},
      {"lln", cmd_lln},                 {"clt", cmd_clt},
      {"qv-check", cmd_qv_check},       {"noise-check", cmd_noise_check},
      {"spde-compare", cmd_spde_compare}};
  const std::vector<std::string> help{
      "simulate particle paths and jump events",
      "solve the limit PDE",
      "LLN rate sweep",
      "fluctuation projections, martingales and formula QV",
      "Ito isometry check of the rescaled martingales",
      "covariance check of the limit martingale noise",
      "two-sample comparison of particle and SPDE fluctuations"};
  for (std::size_t i = 0; i < commands.size(); ++i) {
    app.add_subcommand(commands[i].first, help[i])->fallthrough();
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << tool_version() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return kExitUsage;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    const fs::path dir = f.out_dir;
    fs::create_directories(dir);
    Run run(resolve(f, app), dir, out);
    run.manifest.command = name;
    run.manifest.config_hash = config_hash(run.rc);
    run.manifest.base_seed = run.rc.experiment.seed;
    run.manifest.tool_version = tool_version();
    run.manifest.started = utc_timestamp();
    run.write("config.resolved.json",
              [&](std::ostream& os) { os << to_json(run.rc).dump(2) << '\n'; });
    for (const auto& [cmd, handler] : commands) {
      if (cmd == name) handler(run);
    }
    run.manifest.finished = utc_timestamp();
    std::ofstream(dir / "manifest.json") << run.manifest.to_json().dump(2) << '\n';
    return run.pass ? kExitOk : kExitVerdict;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return kExitError;
}

int run_command(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_command(args, std::cout, std::cerr);
}

}  // namespace mfsir
