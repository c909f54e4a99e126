// solspeck: bright-soliton dynamics in speckle disorder.
// Exit codes: 0 ok, 1 runtime failure, 2 bad config, 3 unconverged or
// partial results (artifacts flagged, not deleted), 4 ensemble aborted,
// 130 interrupted.

#include <atomic>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "solspeck/config.hpp"
#include "solspeck/ensemble.hpp"
#include "solspeck/eob.hpp"
#include "solspeck/measurement.hpp"
#include "solspeck/mps_io.hpp"
#include "solspeck/rng.hpp"
#include "solspeck/speckle.hpp"
#include "solspeck/tebd.hpp"

namespace fs = std::filesystem;
using namespace solspeck;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitUnconverged = 3;
constexpr int kExitAborted = 4;
constexpr int kExitInterrupted = 130;

std::atomic<bool> g_interrupt{false};

void on_signal(int) { g_interrupt.store(true); }

struct CommonFlags {
  std::string config_path;
  std::string preset;
  std::string seed_list;
  uint64_t seed = 0;
  int chi = 0;
  int nmax = 0;
  double dt = 0;
  double t_max = -1;
  long observe_stride = 0;
  long samples = -1;
  std::string out_dir;
  int workers = 0;
  bool dry_run = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("-c,--config", f.config_path, "config file");
  cmd->add_option("-p,--preset", f.preset, "preset name or config path");
  cmd->add_option("--seed-list", f.seed_list, "seeds, e.g. 1..96 or 3,5,9..12");
  cmd->add_option("--seed", f.seed, "single seed (overrides the list)");
  cmd->add_option("--chi", f.chi, "bond dimension");
  cmd->add_option("--nmax", f.nmax, "local occupation cutoff");
  cmd->add_option("--dt", f.dt, "evolution step");
  cmd->add_option("--t-max", f.t_max, "evolution horizon");
  cmd->add_option("--observe-stride", f.observe_stride, "steps between observations");
  cmd->add_option("--samples", f.samples, "projective samples per record");
  cmd->add_option("--out-dir", f.out_dir, "output directory");
  cmd->add_option("--workers", f.workers, "worker threads for the ensemble");
  cmd->add_flag("--dry-run", f.dry_run, "echo the resolved config and exit");
  cmd->add_flag("-q,--quiet", f.quiet, "suppress progress lines");
}

ExperimentConfig resolve(const CommonFlags& f) {
  ExperimentConfig cfg;
  if (!f.preset.empty())
    cfg = parse_config_file(resolve_preset(f.preset));
  else if (!f.config_path.empty())
    cfg = parse_config_file(f.config_path);
  if (!f.seed_list.empty()) cfg.seeds = parse_seed_list(f.seed_list);
  if (f.seed != 0) cfg.seeds = {f.seed};
  if (f.chi > 0) {
    cfg.chi = f.chi;
    cfg.gs_chi = f.chi;
  }
  if (f.nmax > 0) cfg.nmax = f.nmax;
  if (f.dt > 0) cfg.dt = f.dt;
  if (f.t_max >= 0) cfg.t_max = f.t_max;
  if (f.observe_stride > 0) cfg.observe_stride = f.observe_stride;
  if (f.samples >= 0) cfg.samples = f.samples;
  if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
  if (f.workers > 0) cfg.workers = f.workers;
  return cfg;
}

void echo(const ExperimentConfig& cfg) {
  const ContinuumParams p = cfg.continuum();
  std::printf("N = %d\n", cfg.n);
  std::printf("g = %g  (xi = %g)\n", cfg.g, p.xi);
  std::printf("M = %d sites, delta = %g  (box %g)\n", cfg.m, cfg.delta, cfg.m * cfg.delta);
  std::printf("Nmax = %d%s\n", cfg.effective_nmax(), cfg.nmax == 0 ? " (auto)" : "");
  std::printf("chi = %d (ground state %d)\n", cfg.chi, cfg.gs_chi);
  std::printf("dt = %g, t_max = %g  (%ld steps, observe every %ld)\n", cfg.dt, cfg.t_max,
              std::lround(cfg.t_max / cfg.dt), cfg.observe_stride);
  std::printf("V0 = %g, sigma0 = %g, omega = %g\n", cfg.v0, cfg.sigma0, cfg.omega);
  std::printf("seeds = %zu, samples = %ld, workers = %d\n", cfg.seeds.size(), cfg.samples,
              cfg.workers);
  std::printf("out_dir = %s\n", cfg.out_dir.c_str());
  std::printf("config_hash = %s\n", config_hash(cfg).c_str());
}

LogFn logger(const CommonFlags& f) {
  if (f.quiet) return {};
  return [](const std::string& m) {
    std::fprintf(stderr, "%s\n", m.c_str());
    std::fflush(stderr);
  };
}

uint64_t pick_seed(const ExperimentConfig& cfg) {
  return cfg.seeds.empty() ? 1 : cfg.seeds.front();
}

int cmd_ground_state(const CommonFlags& f) {
  auto cfg = resolve(f);
  echo(cfg);
  if (f.dry_run) return kExitOk;
  fs::create_directories(cfg.out_dir);
  const std::string hash = config_hash(cfg);
  const ContinuumParams params = cfg.continuum();
  auto vtrap = trap_potential(params, cfg.delta, cfg.m);
  auto model = discretize(params, cfg.delta, cfg.m, vtrap, cfg.effective_nmax());
  ImagTimeOptions opt;
  opt.schedule = cfg.schedule;
  opt.tolerance = cfg.gs_tolerance;
  opt.max_steps_per_stage = cfg.gs_max_steps;

  auto dump_trace = [&](const std::vector<std::pair<double, double>>& trace) {
    std::ofstream os(cfg.out_dir + "/gs_energy_trace.csv", std::ios::trunc);
    os << "# config_hash=" << hash << "\ntau,E\n";
    os.precision(15);
    for (auto& [tau, e] : trace) os << tau << ',' << e << '\n';
  };

  try {
    auto gs = imaginary_time_ground_state(model, cluster_product_state(model, cfg.gs_chi), opt);
    save_checkpoint(gs.psi, cfg.out_dir + "/gs.mps", hash);
    dump_trace(gs.energy_trace);
    auto dens = site_densities(gs.psi);
    std::ofstream os(cfg.out_dir + "/gs_density.csv", std::ios::trunc);
    os << "# config_hash=" << hash << "\nz,n\n";
    os.precision(12);
    for (int l = 0; l < cfg.m; ++l) os << model.z(l) << ',' << dens[l] << '\n';
    std::printf("ground state energy %.12g after %ld steps -> %s/gs.mps\n", gs.energy, gs.steps,
                cfg.out_dir.c_str());
    return kExitOk;
  } catch (const ImagTimeError& e) {
    dump_trace(e.energy_trace);
    std::fprintf(stderr, "ground state did not converge: %s\n", e.what());
    std::fprintf(stderr, "energy trace flagged partial in %s/gs_energy_trace.csv\n",
                 cfg.out_dir.c_str());
    return kExitUnconverged;
  }
}

int cmd_evolve(const CommonFlags& f, const std::string& from) {
  auto cfg = resolve(f);
  echo(cfg);
  if (f.dry_run) return kExitOk;
  const uint64_t seed = pick_seed(cfg);
  const std::string src = from.empty() ? cfg.out_dir + "/gs.mps" : from;
  auto ck = load_checkpoint(src);
  const std::string dir = cfg.out_dir + "/seed_" + std::to_string(seed);
  // run_seed redoes the ground state; here we reuse the loaded one and only
  // evolve, which is the cheap path for parameter scans
  fs::create_directories(dir);
  const std::string hash = config_hash(cfg);
  const ContinuumParams params = cfg.continuum();
  auto speckle = generate_speckle(cfg.m, cfg.delta, cfg.v0, cfg.sigma0, seed);
  write_speckle_csv(speckle, dir + "/speckle.csv", "config_hash=" + hash);
  auto model = discretize(params, cfg.delta, cfg.m, speckle.values, cfg.effective_nmax());
  if (ck.psi.M != cfg.m) {
    std::fprintf(stderr, "checkpoint %s has M=%d, config wants M=%d\n", src.c_str(), ck.psi.M,
                 cfg.m);
    return kExitConfig;
  }
  MPSState psi = std::move(ck.psi);
  const long steps = std::lround(cfg.t_max / cfg.dt);

  std::ofstream density_csv(dir + "/density.csv", std::ios::trunc);
  std::ofstream entropy_csv(dir + "/entropy.csv", std::ios::trunc);
  density_csv << "# config_hash=" << hash << "\nt,z,n\n";
  entropy_csv << "# config_hash=" << hash << "\nt,S_max,bond\n";
  density_csv.precision(12);
  entropy_csv.precision(12);
  Observers obs;
  obs.stride = cfg.observe_stride;
  obs.on_observe = [&](long, double t, const MPSState& p) {
    auto dens = site_densities(p);
    for (int l = 0; l < cfg.m; ++l)
      density_csv << t << ',' << model.z(l) << ',' << dens[l] << '\n';
    auto prof = entanglement_entropy(p);
    entropy_csv << t << ',' << prof.S_max << ',' << prof.argmax_bond << '\n';
  };
  obs.checkpoint_every = cfg.checkpoint_every;
  obs.on_checkpoint = [&](long step, double, const MPSState& p) {
    save_checkpoint(p, dir + "/checkpoint.mps", hash + ":" + std::to_string(step));
  };
  auto report = real_time_evolve(model, psi, cfg.dt, steps, obs, cfg.chi, cfg.discarded_budget,
                                 &g_interrupt);
  save_checkpoint(psi, dir + "/evolved.mps", hash);
  std::printf("evolved %ld/%ld steps, norm dev %.3g, discarded %.3g -> %s\n", report.steps_done,
              steps, report.norm_dev_max, report.cumulative_discarded, dir.c_str());
  if (report.interrupted) return kExitInterrupted;
  if (!report.converged) {
    std::fprintf(stderr, "discarded-weight budget exceeded; artifacts in %s are flagged partial\n",
                 dir.c_str());
    return kExitUnconverged;
  }
  return kExitOk;
}

int cmd_measure(const CommonFlags& f, const std::string& from) {
  auto cfg = resolve(f);
  if (f.dry_run) {
    echo(cfg);
    return kExitOk;
  }
  const uint64_t seed = pick_seed(cfg);
  const std::string src =
      from.empty() ? cfg.out_dir + "/seed_" + std::to_string(seed) + "/evolved.mps" : from;
  auto ck = load_checkpoint(src);
  fs::create_directories(cfg.out_dir);
  SamplerDiagnostics diag;
  auto samples = draw_samples(ck.psi, cfg.delta, static_cast<int>(cfg.samples),
                              SplitMix64::derive(seed, 0x53414d50), cfg.direction, &diag);
  const std::string path = cfg.out_dir + "/samples.ndjson";
  write_samples_ndjson(path, samples, false, config_hash(cfg));
  auto hist = relative_density_histogram(samples, cfg.delta, cfg.bin_width);
  std::ofstream os(cfg.out_dir + "/relative_density.csv", std::ios::trunc);
  os << "# config_hash=" << config_hash(cfg) << "\ndz,n\n";
  os.precision(12);
  for (size_t i = 0; i < hist.centers.size(); ++i)
    os << hist.centers[i] << ',' << hist.density[i] << '\n';
  std::printf("%zu samples from %s -> %s (worst conditional sum %.3g)\n", samples.size(),
              src.c_str(), path.c_str(), diag.min_prob_sum);
  return kExitOk;
}

int cmd_eob(const CommonFlags& f) {
  auto cfg = resolve(f);
  echo(cfg);
  if (f.dry_run) return kExitOk;
  fs::create_directories(cfg.out_dir);
  const std::string hash = config_hash(cfg);
  const uint64_t seed = pick_seed(cfg);
  const ContinuumParams params = cfg.continuum();
  auto speckle = generate_speckle(cfg.m, cfg.delta, cfg.v0, cfg.sigma0, seed);
  // margins without disorder pad the box so the kernel and the wavepacket
  // never feel the periodic wrap; only the analysis window is written
  const long margin =
      std::lround(std::ceil(0.5 * (cfg.box_factor - 1.0) * static_cast<double>(cfg.m)));
  std::vector<double> wide(cfg.m + 2 * margin, 0.0);
  std::copy(speckle.values.begin(), speckle.values.end(), wide.begin() + margin);
  auto model = build_eob_model(wide, cfg.delta, params);
  std::ofstream vs(cfg.out_dir + "/veff.csv", std::ios::trunc);
  vs << "# config_hash=" << hash << "\nq,V,Veff\n";
  vs.precision(12);
  for (long j = margin; j < margin + cfg.m; ++j)
    vs << model.q[j] << ',' << wide[j] << ',' << model.veff[j] << '\n';
  auto psi0 = initial_com_state(params, model);
  const double e0 = eob_energy(model, psi0);
  const long steps = std::lround(cfg.eob_horizon() / cfg.eob_dt);
  const long stride = std::max<long>(1, std::lround(cfg.observe_stride * cfg.dt / cfg.eob_dt));
  auto res = eob_evolve(model, psi0, cfg.eob_dt, steps, stride);
  std::ofstream os(cfg.out_dir + "/eob_density.csv", std::ios::trunc);
  os << "# config_hash=" << hash << "\nt,q,n\n";
  os.precision(12);
  for (size_t i = 0; i < res.times.size(); ++i)
    for (long j = margin; j < margin + cfg.m; ++j)
      os << res.times[i] << ',' << model.q[j] << ',' << res.density[i][j] << '\n';
  std::printf("eob: %ld steps, energy %.6g -> %.6g, norm dev %.3g -> %s/eob_density.csv\n",
              steps, e0, eob_energy(model, res.psi), res.max_norm_dev, cfg.out_dir.c_str());
  return kExitOk;
}

int cmd_loclen(const CommonFlags& f, std::vector<double> ks, bool no_tm) {
  auto cfg = resolve(f);
  if (f.dry_run) {
    echo(cfg);
    return kExitOk;
  }
  if (ks.empty()) ks = cfg.k_points;
  const ContinuumParams params = cfg.continuum();
  fs::create_directories(cfg.out_dir);
  std::ofstream os(cfg.out_dir + "/loclen.csv", std::ios::trunc);
  os << "# config_hash=" << config_hash(cfg) << "\n"
     << "k,L_analytic,L_single_kN,ratio,L_tm,L_tm_stderr,tm_spread,tm_flagged\n";
  os.precision(12);
  std::printf("%10s %14s %14s %12s %14s %12s\n", "k", "L_N", "L_1(k/N)", "ratio", "L_tm",
              "spread");
  for (double k : ks) {
    bool kz = false;
    const double ln = localization_length(k, params, &kz);
    double l1 = std::numeric_limits<double>::quiet_NaN();
    double ratio = std::numeric_limits<double>::quiet_NaN();
    if (k * params.sigma0 < 1) {
      l1 = localization_length_single(k / params.N, params);
      ratio = localization_ratio(k, params);
    }
    double ltm = std::numeric_limits<double>::quiet_NaN(), lse = ltm, spread = ltm;
    bool flagged = false;
    if (!no_tm && k > 0 && k * params.sigma0 < 1) {
      TransferMatrixOptions topt;
      auto tm = transfer_matrix_loclen(k, params, cfg.tm_realizations, topt);
      ltm = tm.L;
      lse = tm.L_stderr;
      spread = tm.relative_spread;
      flagged = tm.non_self_averaging;
    }
    os << k << ',' << ln << ',' << l1 << ',' << ratio << ',' << ltm << ',' << lse << ','
       << spread << ',' << (flagged ? 1 : 0) << '\n';
    std::printf("%10.4g %14.6g %14.6g %12.6g %14.6g %12.3g%s\n", k, ln, l1, ratio, ltm, spread,
                flagged ? "  (non-self-averaging)" : "");
  }
  std::printf("-> %s/loclen.csv\n", cfg.out_dir.c_str());
  return kExitOk;
}

int ensemble_exit(const EnsembleReport& rep) {
  if (rep.interrupted) return kExitInterrupted;
  if (rep.aborted) return kExitAborted;
  if (rep.failed > 0 || rep.partial > 0) return kExitUnconverged;
  return kExitOk;
}

int cmd_ensemble(const CommonFlags& f) {
  auto cfg = resolve(f);
  echo(cfg);
  if (f.dry_run) return kExitOk;
  auto rep = run_ensemble(cfg, logger(f), &g_interrupt);
  std::printf("ensemble: %d complete, %d skipped, %d partial, %d failed%s\n", rep.completed,
              rep.skipped, rep.partial, rep.failed, rep.aborted ? " (aborted)" : "");
  return ensemble_exit(rep);
}

int cmd_aggregate(const CommonFlags& f, double tail_min, double tail_max) {
  auto cfg = resolve(f);
  if (f.dry_run) {
    echo(cfg);
    return kExitOk;
  }
  auto dirs = list_record_dirs(cfg.out_dir);
  std::vector<std::string> complete;
  for (const auto& dir : dirs) {
    auto info = read_record_manifest(dir);
    if (info.status == "complete")
      complete.push_back(dir);
    else
      std::fprintf(stderr, "skipping %s (%s)\n", dir.c_str(), info.status.c_str());
  }
  if (complete.empty()) {
    std::fprintf(stderr, "no complete records under %s\n", cfg.out_dir.c_str());
    return kExitRuntime;
  }

  auto atomic = aggregate_density(complete, AggregateMode::kAtomic);
  {
    std::ofstream os(cfg.out_dir + "/density_mean.csv", std::ios::trunc);
    os << "# config_hash=" << atomic.config_hash << "\n# records=" << atomic.records
       << "\nt,z,n\n";
    os.precision(12);
    for (size_t i = 0; i < atomic.t.size(); ++i)
      for (size_t l = 0; l < atomic.z.size(); ++l)
        os << atomic.t[i] << ',' << atomic.z[l] << ',' << atomic.density[i][l] << '\n';
  }
  auto entropy = aggregate_entropy(complete);
  {
    std::ofstream os(cfg.out_dir + "/entropy_mean.csv", std::ios::trunc);
    os << "# config_hash=" << atomic.config_hash << "\nt,S_max\n";
    os.precision(12);
    for (size_t i = 0; i < entropy.t.size(); ++i)
      os << entropy.t[i] << ',' << entropy.s_max[i] << '\n';
  }
  std::printf("aggregated %d records over %zu times -> %s/density_mean.csv\n", atomic.records,
              atomic.t.size(), cfg.out_dir.c_str());

  try {
    auto com = aggregate_density(complete, AggregateMode::kCom, cfg.bin_width);
    std::ofstream os(cfg.out_dir + "/com_density.csv", std::ios::trunc);
    os << "# config_hash=" << com.config_hash << "\n# samples=" << com.samples << "\nq,p\n";
    os.precision(12);
    for (size_t i = 0; i < com.z.size(); ++i)
      os << com.z[i] << ',' << com.density[0][i] << '\n';
    std::printf("center-of-mass density from %ld samples -> %s/com_density.csv\n", com.samples,
                cfg.out_dir.c_str());
    if (tail_max <= 0) {
      // widest window with strictly positive bins on both sides
      double zpos = 0, zneg = 0;
      for (size_t i = 0; i < com.z.size(); ++i) {
        const double az = std::abs(com.z[i]);
        if (az < tail_min) continue;
        if (com.z[i] > 0 && com.density[0][i] > 0 && az > zpos) zpos = az;
        if (com.z[i] < 0 && com.density[0][i] > 0 && az > zneg) zneg = az;
      }
      for (size_t i = 0; i < com.z.size(); ++i) {  // shrink past any hole
        const double az = std::abs(com.z[i]);
        if (az < tail_min || com.density[0][i] > 0) continue;
        if (com.z[i] > 0) zpos = std::min(zpos, az - cfg.bin_width);
        else zneg = std::min(zneg, az - cfg.bin_width);
      }
      tail_max = std::min(zpos, zneg);
    }
    if (tail_max > tail_min) {
      auto fit = tail_slope_fit(com.z, com.density[0], tail_min, tail_max);
      std::printf("ln-ln tail slope over |q| in [%g, %g]: %.3g left (%d pts), %.3g right "
                  "(%d pts)\n",
                  tail_min, tail_max, fit.slope_left, fit.points_left, fit.slope_right,
                  fit.points_right);
    } else {
      std::printf("tail fit skipped: no all-positive window beyond |q| = %g\n", tail_min);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "center-of-mass density skipped: %s\n", e.what());
  }
  return kExitOk;
}

int cmd_full(const CommonFlags& f) {
  auto cfg = resolve(f);
  echo(cfg);
  if (f.dry_run) return kExitOk;
  auto rep = run_ensemble(cfg, logger(f), &g_interrupt);
  std::printf("ensemble: %d complete, %d skipped, %d partial, %d failed%s\n", rep.completed,
              rep.skipped, rep.partial, rep.failed, rep.aborted ? " (aborted)" : "");
  int code = ensemble_exit(rep);
  if (code == kExitInterrupted || code == kExitAborted) return code;
  if (rep.completed + rep.skipped > 0) {
    int agg = cmd_aggregate(f, 1.0, 0);
    if (agg != kExitOk && code == kExitOk) code = agg;
    int loc = cmd_loclen(f, {}, false);
    if (loc != kExitOk && code == kExitOk) code = loc;
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  CLI::App app{"bright-soliton localization in speckle disorder: many-body TEBD with "
               "projective sampling and a center-of-mass cross-check"};
  app.require_subcommand(1);

  CommonFlags f;
  std::string from;
  std::vector<double> ks;
  bool no_tm = false;
  double tail_min = 1.0, tail_max = 0;

  auto* gs = app.add_subcommand("ground-state", "trapped ground state via imaginary time");
  add_common(gs, f);
  auto* ev = app.add_subcommand("evolve", "quench a ground-state checkpoint into disorder");
  add_common(ev, f);
  ev->add_option("--from", from, "ground-state checkpoint (default out_dir/gs.mps)");
  auto* me = app.add_subcommand("measure", "projective samples from an evolved checkpoint");
  add_common(me, f);
  me->add_option("--from", from, "evolved checkpoint");
  auto* eo = app.add_subcommand("eob", "center-of-mass evolution in the smoothed disorder");
  add_common(eo, f);
  auto* lo = app.add_subcommand("loclen", "localization lengths: analytic and transfer matrix");
  add_common(lo, f);
  lo->add_option("--k", ks, "wavevectors (default from config)");
  lo->add_flag("--no-tm", no_tm, "skip the transfer-matrix estimate");
  auto* en = app.add_subcommand("ensemble", "disorder-averaged runs, one record per seed");
  add_common(en, f);
  auto* ag = app.add_subcommand("aggregate", "average completed records in out_dir");
  add_common(ag, f);
  ag->add_option("--tail-min", tail_min, "inner edge |z| of the tail fit");
  ag->add_option("--tail-max", tail_max, "outer edge |z| of the tail fit (0 = grid edge)");
  auto* fu = app.add_subcommand("full", "ensemble, aggregate and localization lengths");
  add_common(fu, f);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gs->parsed()) return cmd_ground_state(f);
    if (ev->parsed()) return cmd_evolve(f, from);
    if (me->parsed()) return cmd_measure(f, from);
    if (eo->parsed()) return cmd_eob(f);
    if (lo->parsed()) return cmd_loclen(f, ks, no_tm);
    if (en->parsed()) return cmd_ensemble(f);
    if (ag->parsed()) return cmd_aggregate(f, tail_min, tail_max);
    if (fu->parsed()) return cmd_full(f);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    if (g_interrupt.load()) return kExitInterrupted;
    return kExitRuntime;
  }
  return kExitOk;
}
