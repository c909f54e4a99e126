#include "solspeck/ensemble.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "solspeck/eob.hpp"
#include "solspeck/measurement.hpp"
#include "solspeck/mps_io.hpp"
#include "solspeck/rng.hpp"
#include "solspeck/speckle.hpp"
#include "solspeck/tebd.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace solspeck {
namespace {

constexpr uint64_t kSampleStream = 0x53414d50;  // sampling seeds, distinct from speckle

std::string fmtg(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

void write_text_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp);
    os << text;
    if (!os.good()) throw std::runtime_error("write failed for " + tmp);
  }
  fs::rename(tmp, path);
}

// leading "# key=value" comment lines, then a header row, then data
std::string read_csv_hash(std::istream& is, std::string& line, size_t& lineno) {
  std::string hash;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto pos = line.find("config_hash=");
      if (pos != std::string::npos) hash = line.substr(pos + 12);
      continue;
    }
    break;  // header row now in `line`
  }
  return hash;
}

std::vector<double> parse_row(const std::string& line, const std::string& path, size_t lineno) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad number '" + tok + "'");
    }
  }
  return out;
}

class SeedRecorder {
 public:
  SeedRecorder(const ExperimentConfig& cfg, uint64_t seed, const std::string& dir)
      : dir_(dir), hash_(config_hash(cfg)) {
    manifest_["seed"] = seed;
    manifest_["config_hash"] = hash_;
    manifest_["status"] = "partial";
    manifest_["n"] = cfg.n;
    manifest_["m"] = cfg.m;
    manifest_["delta"] = cfg.delta;
    manifest_["chi"] = cfg.chi;
    manifest_["dt"] = cfg.dt;
    manifest_["t_max"] = cfg.t_max;
  }
  json& manifest() { return manifest_; }
  const std::string& hash() const { return hash_; }
  void flush() { write_text_atomic(dir_ + "/manifest.json", manifest_.dump(2) + "\n"); }

 private:
  std::string dir_;
  std::string hash_;
  json manifest_;
};

}  // namespace

SeedOutcome run_seed(const ExperimentConfig& cfg, uint64_t seed, const std::string& dir,
                     const LogFn& log, const std::atomic<bool>* interrupt) {
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  auto say = [&](const std::string& msg) {
    if (log) log("seed " + std::to_string(seed) + ": " + msg);
  };

  SeedOutcome out;
  out.seed = seed;
  out.dir = dir;
  fs::create_directories(dir);
  write_text_atomic(dir + "/config.cfg", canonical_config(cfg));
  SeedRecorder rec(cfg, seed, dir);
  rec.flush();

  try {
    const ContinuumParams params = cfg.continuum();
    const int nmax = cfg.effective_nmax();

    auto speckle = generate_speckle(cfg.m, cfg.delta, cfg.v0, cfg.sigma0, seed);
    write_speckle_csv(speckle, dir + "/speckle.csv",
                      "config_hash=" + rec.hash() + "\nseed=" + std::to_string(seed));

    say("ground state");
    auto vtrap = trap_potential(params, cfg.delta, cfg.m);
    auto model_gs = discretize(params, cfg.delta, cfg.m, vtrap, nmax);
    ImagTimeOptions gopt;
    gopt.schedule = cfg.schedule;
    gopt.tolerance = cfg.gs_tolerance;
    gopt.max_steps_per_stage = cfg.gs_max_steps;
    auto gs = imaginary_time_ground_state(model_gs, cluster_product_state(model_gs, cfg.gs_chi),
                                          gopt);
    rec.manifest()["ground_state"] = {{"energy", gs.energy}, {"steps", gs.steps}};
    {
      auto obdm0 = one_body_density_matrix(gs.psi);
      write_obdm_csv(dir + "/obdm_initial.csv", obdm0, cfg.delta, rec.hash());
      rec.manifest()["condensate_fraction_initial"] =
          condensate_fraction(obdm0, total_number(gs.psi));
    }
    rec.flush();
    say("ground state done, E = " + fmtg(gs.energy) + ", " + std::to_string(gs.steps) + " steps");

    auto model = discretize(params, cfg.delta, cfg.m, speckle.values, nmax);
    MPSState psi = std::move(gs.psi);
    const long steps = std::lround(cfg.t_max / cfg.dt);

    std::ofstream density_csv(dir + "/density.csv", std::ios::trunc);
    std::ofstream entropy_csv(dir + "/entropy.csv", std::ios::trunc);
    if (!density_csv || !entropy_csv)
      throw std::runtime_error("cannot open observation files in " + dir);
    density_csv << "# config_hash=" << rec.hash() << "\n# seed=" << seed << "\nt,z,n\n";
    entropy_csv << "# config_hash=" << rec.hash() << "\n# seed=" << seed << "\nt,S_max,bond\n";
    density_csv.precision(12);
    entropy_csv.precision(12);

    long observations = 0;
    Observers obs;
    obs.stride = cfg.observe_stride;
    obs.on_observe = [&](long, double t, const MPSState& p) {
      auto dens = site_densities(p);
      // continuum normalization: sum n(z) delta = N
      for (int l = 0; l < cfg.m; ++l)
        density_csv << t << ',' << model.z(l) << ',' << dens[l] / cfg.delta << '\n';
      auto prof = entanglement_entropy(p);
      entropy_csv << t << ',' << prof.S_max << ',' << prof.argmax_bond << '\n';
      density_csv.flush();
      entropy_csv.flush();
      if (cfg.obdm_every > 0 && observations > 0 && observations % cfg.obdm_every == 0) {
        char name[64];
        std::snprintf(name, sizeof name, "/obdm_t%.6g.csv", t);
        write_obdm_csv(dir + name, one_body_density_matrix(p), cfg.delta, rec.hash());
      }
      ++observations;
    };
    obs.checkpoint_every = cfg.checkpoint_every;
    obs.on_checkpoint = [&](long step, double, const MPSState& p) {
      save_checkpoint(p, dir + "/checkpoint.mps",
                      rec.hash() + ":" + std::to_string(seed) + ":" + std::to_string(step));
    };

    say("evolving " + std::to_string(steps) + " steps");
    auto report = real_time_evolve(model, psi, cfg.dt, steps, obs, cfg.chi,
                                   cfg.discarded_budget, interrupt);
    density_csv.close();
    entropy_csv.close();
    rec.manifest()["evolution"] = {
        {"steps_done", report.steps_done},
        {"steps_requested", steps},
        {"norm_dev_max", report.norm_dev_max},
        {"number_drift_max", report.number_drift_max},
        {"cumulative_discarded", report.cumulative_discarded},
        {"max_step_discarded", report.max_step_discarded},
        {"converged", report.converged},
        {"interrupted", report.interrupted},
        {"wall_seconds", report.wall_seconds},
    };
    rec.flush();

    if (!report.interrupted) {
      // truncation lets the gauge drift during evolution; restore it so the
      // final observables and the sampler conditionals are exact for the
      // state actually kept
      canonicalize(psi);
      auto obdm = one_body_density_matrix(psi);
      write_obdm_csv(dir + "/obdm.csv", obdm, cfg.delta, rec.hash());
      rec.manifest()["condensate_fraction"] = condensate_fraction(obdm, total_number(psi));

      if (cfg.samples > 0) {
        say("sampling " + std::to_string(cfg.samples) + " configurations");
        SamplerDiagnostics diag;
        auto samples =
            draw_samples(psi, cfg.delta, static_cast<int>(cfg.samples),
                         SplitMix64::derive(seed, kSampleStream), cfg.direction, &diag);
        write_samples_ndjson(dir + "/samples.ndjson", samples, false, rec.hash());
        rec.manifest()["sampler"] = {{"renormalized_draws", diag.renormalized_draws},
                                     {"min_prob_sum", diag.min_prob_sum}};
      }

      if (cfg.eob_enabled) {
        // periodic box box_factor times the analysis window; the margins hold
        // no disorder and are excluded from the written density
        const long margin =
            std::lround(std::ceil(0.5 * (cfg.box_factor - 1.0) * static_cast<double>(cfg.m)));
        std::vector<double> wide(cfg.m + 2 * margin, 0.0);
        std::copy(speckle.values.begin(), speckle.values.end(), wide.begin() + margin);
        auto eobm = build_eob_model(wide, cfg.delta, params);
        auto psi0 = initial_com_state(params, eobm);
        const long esteps = std::lround(cfg.eob_horizon() / cfg.eob_dt);
        const long estride =
            std::max<long>(1, std::lround(cfg.observe_stride * cfg.dt / cfg.eob_dt));
        auto eres = eob_evolve(eobm, psi0, cfg.eob_dt, esteps, estride);
        std::ofstream eob_csv(dir + "/eob_density.csv", std::ios::trunc);
        eob_csv << "# config_hash=" << rec.hash() << "\nt,q,n\n";
        eob_csv.precision(12);
        // same continuum normalization as density.csv: sum n(q) delta = 1
        for (size_t i = 0; i < eres.times.size(); ++i)
          for (long j = margin; j < margin + cfg.m; ++j)
            eob_csv << eres.times[i] << ',' << eobm.q[j] << ','
                    << eres.density[i][j] / cfg.delta << '\n';
        rec.manifest()["eob"] = {{"max_norm_dev", eres.max_norm_dev},
                                 {"final_energy", eob_energy(eobm, eres.psi)}};
      }
    }

    out.wall_seconds = elapsed();
    rec.manifest()["wall_seconds"] = out.wall_seconds;
    if (report.interrupted) {
      out.status = SeedStatus::kPartial;
      out.error = "interrupted";
      rec.manifest()["status"] = "partial";
      rec.manifest()["error"] = out.error;
    } else if (!report.converged) {
      out.status = SeedStatus::kPartial;
      out.error = "discarded-weight budget exceeded at step " + std::to_string(report.steps_done);
      rec.manifest()["status"] = "partial";
      rec.manifest()["error"] = out.error;
    } else {
      out.status = SeedStatus::kComplete;
      rec.manifest()["status"] = "complete";
    }
    rec.flush();
    say("done (" + fmtg(out.wall_seconds) + " s)");
  } catch (const std::exception& e) {
    out.status = SeedStatus::kFailed;
    out.error = e.what();
    out.wall_seconds = elapsed();
    rec.manifest()["status"] = "failed";
    rec.manifest()["error"] = out.error;
    rec.manifest()["wall_seconds"] = out.wall_seconds;
    rec.flush();
    // quarantine so the next run starts clean but the wreckage survives
    const std::string grave = dir + ".failed";
    std::error_code ec;
    fs::remove_all(grave, ec);
    fs::rename(dir, grave, ec);
    if (!ec) out.dir = grave;
    say("FAILED: " + out.error);
  }
  return out;
}

EnsembleReport run_ensemble(const ExperimentConfig& cfg, const LogFn& log,
                            const std::atomic<bool>* interrupt) {
  EnsembleReport report;
  const std::string hash = config_hash(cfg);
  fs::create_directories(cfg.out_dir);

  const std::string root_cfg = cfg.out_dir + "/config.cfg";
  if (fs::exists(root_cfg)) {
    auto previous = parse_config_file(root_cfg);
    if (config_hash(previous) != hash)
      throw std::runtime_error(cfg.out_dir + " holds records for config " +
                               config_hash(previous) + "; refusing to mix with " + hash);
  } else {
    write_text_atomic(root_cfg, canonical_config(cfg));
  }

  struct Item {
    uint64_t seed;
    std::string dir;
  };
  std::vector<Item> work;
  for (uint64_t seed : cfg.seeds) {
    const std::string dir = cfg.out_dir + "/seed_" + std::to_string(seed);
    if (fs::exists(dir + "/manifest.json")) {
      RecordInfo info = read_record_manifest(dir);
      if (info.config_hash != hash)
        throw std::runtime_error(dir + " was produced with config " + info.config_hash +
                                 "; refusing to mix with " + hash);
      if (info.status == "complete") {
        report.outcomes.push_back({seed, SeedStatus::kSkipped, dir, "", 0});
        ++report.skipped;
        if (log) log("seed " + std::to_string(seed) + ": already complete, skipping");
        continue;
      }
    }
    if (fs::exists(dir)) fs::remove_all(dir);  // stale partial, rerun
    work.push_back({seed, dir});
  }

  const size_t total = cfg.seeds.size();
  const size_t abort_threshold = static_cast<size_t>(std::floor(0.2 * total));
  std::mutex mtx;
  std::atomic<size_t> next{0};
  std::atomic<size_t> failures{0};
  std::atomic<bool> stop{false};

  auto write_root_manifest = [&] {  // caller holds mtx
    json j;
    j["config_hash"] = hash;
    j["total_seeds"] = total;
    j["completed"] = report.completed;
    j["skipped"] = report.skipped;
    j["partial"] = report.partial;
    j["failed"] = report.failed;
    j["aborted"] = report.aborted;
    j["interrupted"] = report.interrupted;
    json arr = json::array();
    for (const auto& o : report.outcomes) {
      const char* s = o.status == SeedStatus::kComplete ? "complete"
                      : o.status == SeedStatus::kSkipped ? "skipped"
                      : o.status == SeedStatus::kPartial ? "partial"
                                                         : "failed";
      arr.push_back({{"seed", o.seed},
                     {"status", s},
                     {"dir", o.dir},
                     {"error", o.error},
                     {"wall_seconds", o.wall_seconds}});
    }
    j["records"] = std::move(arr);
    write_text_atomic(cfg.out_dir + "/manifest.json", j.dump(2) + "\n");
  };
  {
    std::lock_guard<std::mutex> lk(mtx);
    write_root_manifest();
  }

  auto worker = [&] {
    for (;;) {
      if (stop.load() || (interrupt && interrupt->load())) return;
      const size_t i = next.fetch_add(1);
      if (i >= work.size()) return;
      LogFn locked_log;
      if (log)
        locked_log = [&](const std::string& m) {
          std::lock_guard<std::mutex> lk(mtx);
          log(m);
        };
      SeedOutcome o = run_seed(cfg, work[i].seed, work[i].dir, locked_log, interrupt);
      std::lock_guard<std::mutex> lk(mtx);
      if (o.status == SeedStatus::kComplete) ++report.completed;
      else if (o.status == SeedStatus::kPartial) ++report.partial;
      else if (o.status == SeedStatus::kFailed) ++report.failed;
      report.outcomes.push_back(std::move(o));
      if (report.outcomes.back().status == SeedStatus::kFailed &&
          failures.fetch_add(1) + 1 > abort_threshold) {
        report.aborted = true;
        stop.store(true);
        if (log) log("too many failed seeds, aborting the ensemble");
      }
      write_root_manifest();
    }
  };

  const int nthreads = std::max(1, std::min<int>(cfg.workers, static_cast<int>(work.size())));
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  if (interrupt && interrupt->load()) report.interrupted = true;
  std::sort(report.outcomes.begin(), report.outcomes.end(),
            [](const SeedOutcome& a, const SeedOutcome& b) { return a.seed < b.seed; });
  {
    std::lock_guard<std::mutex> lk(mtx);
    write_root_manifest();
  }
  return report;
}

RecordInfo read_record_manifest(const std::string& dir) {
  std::ifstream is(dir + "/manifest.json");
  if (!is) throw std::runtime_error("no manifest in " + dir);
  json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error(dir + "/manifest.json: " + e.what());
  }
  RecordInfo info;
  info.seed = j.at("seed").get<uint64_t>();
  info.status = j.at("status").get<std::string>();
  info.config_hash = j.at("config_hash").get<std::string>();
  info.dir = dir;
  return info;
}

std::vector<std::string> list_record_dirs(const std::string& out_dir) {
  std::vector<std::pair<uint64_t, std::string>> found;
  for (const auto& entry : fs::directory_iterator(out_dir)) {
    if (!entry.is_directory()) continue;
    const std::string name = entry.path().filename().string();
    if (name.rfind("seed_", 0) != 0) continue;
    if (name.find(".failed") != std::string::npos) continue;
    try {
      found.emplace_back(std::stoull(name.substr(5)), entry.path().string());
    } catch (const std::exception&) {
    }
  }
  std::sort(found.begin(), found.end());
  std::vector<std::string> dirs;
  for (auto& [seed, dir] : found) dirs.push_back(std::move(dir));
  return dirs;
}

DensitySeries read_density_csv(const std::string& path, std::string* hash_out) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string line;
  size_t lineno = 0;
  std::string hash = read_csv_hash(is, line, lineno);
  if (hash_out) *hash_out = hash;
  // header row consumed; now long-format rows t,z,n grouped by time
  DensitySeries out;
  std::vector<double> zrow, nrow;
  double cur_t = 0;
  bool have_block = false;
  auto close_block = [&] {
    if (!have_block) return;
    if (out.z.empty()) {
      out.z = zrow;
    } else if (zrow.size() != out.z.size()) {
      throw std::runtime_error(path + ": ragged time blocks");
    }
    out.t.push_back(cur_t);
    out.n.push_back(nrow);
    zrow.clear();
    nrow.clear();
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto row = parse_row(line, path, lineno);
    if (row.size() != 3)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected t,z,n");
    if (!have_block || row[0] != cur_t) {
      close_block();
      cur_t = row[0];
      have_block = true;
    }
    zrow.push_back(row[1]);
    nrow.push_back(row[2]);
  }
  close_block();
  if (out.t.empty()) throw std::runtime_error(path + ": no data rows");
  return out;
}

EntropySeries read_entropy_csv(const std::string& path, std::string* hash_out) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string line;
  size_t lineno = 0;
  std::string hash = read_csv_hash(is, line, lineno);
  if (hash_out) *hash_out = hash;
  EntropySeries out;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto row = parse_row(line, path, lineno);
    if (row.size() != 3)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected t,S_max,bond");
    out.t.push_back(row[0]);
    out.s_max.push_back(row[1]);
    out.bond.push_back(static_cast<int>(std::lround(row[2])));
  }
  if (out.t.empty()) throw std::runtime_error(path + ": no data rows");
  return out;
}

void write_obdm_csv(const std::string& path, const Eigen::MatrixXcd& obdm, double delta,
                    const std::string& config_hash) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "# config_hash=" << config_hash << "\nz,zp,re,im\n";
  os.precision(12);
  const int m = static_cast<int>(obdm.rows());
  const int k = (m - 1) / 2;
  for (int l = 0; l < m; ++l)
    for (int j = 0; j < m; ++j)
      os << (l - k) * delta << ',' << (j - k) * delta << ',' << obdm(l, j).real() << ','
         << obdm(l, j).imag() << '\n';
  if (!os.good()) throw std::runtime_error("write failed for " + path);
}

Eigen::MatrixXcd read_obdm_csv(const std::string& path, std::string* hash_out) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string line;
  size_t lineno = 0;
  std::string hash = read_csv_hash(is, line, lineno);
  if (hash_out) *hash_out = hash;
  std::vector<double> re, im;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto row = parse_row(line, path, lineno);
    if (row.size() != 4)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected z,zp,re,im");
    re.push_back(row[2]);
    im.push_back(row[3]);
  }
  const auto m = static_cast<Eigen::Index>(std::lround(std::sqrt(double(re.size()))));
  if (m * m != static_cast<Eigen::Index>(re.size()))
    throw std::runtime_error(path + ": row count is not a perfect square");
  Eigen::MatrixXcd obdm(m, m);
  for (Eigen::Index l = 0; l < m; ++l)
    for (Eigen::Index j = 0; j < m; ++j)
      obdm(l, j) = {re[l * m + j], im[l * m + j]};
  return obdm;
}

namespace {

std::vector<RecordInfo> vetted_records(const std::vector<std::string>& dirs) {
  if (dirs.empty()) throw std::runtime_error("no records to aggregate");
  std::vector<RecordInfo> infos;
  for (const auto& dir : dirs) infos.push_back(read_record_manifest(dir));
  for (const auto& info : infos) {
    if (info.status != "complete")
      throw std::runtime_error(info.dir + " is " + info.status + ", not complete");
    if (info.config_hash != infos.front().config_hash)
      throw std::runtime_error("mixed config hashes: " + infos.front().dir + " has " +
                               infos.front().config_hash + " but " + info.dir + " has " +
                               info.config_hash);
  }
  return infos;
}

}  // namespace

AggregateResult aggregate_density(const std::vector<std::string>& record_dirs,
                                  AggregateMode mode, double bin_width) {
  auto infos = vetted_records(record_dirs);
  AggregateResult out;
  out.records = static_cast<int>(infos.size());
  out.config_hash = infos.front().config_hash;

  if (mode == AggregateMode::kAtomic) {
    bool first = true;
    for (const auto& info : infos) {
      std::string hash;
      auto series = read_density_csv(info.dir + "/density.csv", &hash);
      if (!hash.empty() && hash != out.config_hash)
        throw std::runtime_error(info.dir + "/density.csv carries hash " + hash);
      if (first) {
        out.t = series.t;
        out.z = series.z;
        out.density.assign(series.t.size(), std::vector<double>(series.z.size(), 0.0));
        first = false;
      } else if (series.t.size() != out.t.size() || series.z.size() != out.z.size()) {
        throw std::runtime_error(info.dir + "/density.csv grid differs from " +
                                 infos.front().dir);
      }
      for (size_t i = 0; i < out.t.size(); ++i) {
        if (std::abs(series.t[i] - out.t[i]) > 1e-9 * std::max(1.0, std::abs(out.t[i])))
          throw std::runtime_error(info.dir + "/density.csv time grid differs from " +
                                   infos.front().dir);
        for (size_t l = 0; l < out.z.size(); ++l) out.density[i][l] += series.n[i][l];
      }
    }
    for (auto& rowv : out.density)
      for (double& v : rowv) v /= out.records;
    return out;
  }

  // kCom: histogram of the sampled center-of-mass positions, pooled over
  // records and normalized to unit probability
  auto cfg = parse_config_file(infos.front().dir + "/config.cfg");
  if (bin_width <= 0) bin_width = cfg.bin_width;
  std::vector<double> coms;
  for (const auto& info : infos) {
    auto samples = read_samples_ndjson(info.dir + "/samples.ndjson");
    for (const auto& s : samples) coms.push_back(s.com);
  }
  if (coms.empty()) throw std::runtime_error("no samples found in the records");
  long lo = 0, hi = 0;
  for (double c : coms) {
    const long b = std::lround(c / bin_width);
    lo = std::min(lo, b);
    hi = std::max(hi, b);
  }
  std::vector<double> counts(static_cast<size_t>(hi - lo + 1), 0.0);
  for (double c : coms) counts[std::lround(c / bin_width) - lo] += 1.0;
  out.t = {cfg.t_max};
  out.z.resize(counts.size());
  for (size_t i = 0; i < counts.size(); ++i) {
    out.z[i] = (lo + static_cast<long>(i)) * bin_width;
    counts[i] /= static_cast<double>(coms.size()) * bin_width;
  }
  out.density = {std::move(counts)};
  out.samples = static_cast<long>(coms.size());
  return out;
}

EntropySeries aggregate_entropy(const std::vector<std::string>& record_dirs) {
  auto infos = vetted_records(record_dirs);
  EntropySeries out;
  bool first = true;
  for (const auto& info : infos) {
    auto series = read_entropy_csv(info.dir + "/entropy.csv");
    if (first) {
      out.t = series.t;
      out.s_max.assign(series.t.size(), 0.0);
      out.bond.assign(series.t.size(), -1);
      first = false;
    } else if (series.t.size() != out.t.size()) {
      throw std::runtime_error(info.dir + "/entropy.csv grid differs from " + infos.front().dir);
    }
    for (size_t i = 0; i < out.t.size(); ++i) out.s_max[i] += series.s_max[i];
  }
  for (double& s : out.s_max) s /= infos.size();
  return out;
}

TailFit tail_slope_fit(const std::vector<double>& z, const std::vector<double>& n,
                       double z_min, double z_max) {
  if (z.size() != n.size()) throw std::runtime_error("tail_slope_fit: length mismatch");
  if (!(z_min > 0) || !(z_max > z_min))
    throw std::runtime_error("tail_slope_fit: need 0 < z_min < z_max");
  TailFit fit;
  for (int side = 0; side < 2; ++side) {
    std::vector<double> x, y;
    for (size_t i = 0; i < z.size(); ++i) {
      const double az = std::abs(z[i]);
      if (az < z_min || az > z_max) continue;
      if ((side == 0 && z[i] >= 0) || (side == 1 && z[i] <= 0)) continue;
      if (n[i] <= 0)
        throw std::runtime_error("tail_slope_fit: non-positive bin at z = " +
                                 std::to_string(z[i]) + "; shrink the window");
      x.push_back(std::log(az));
      y.push_back(std::log(n[i]));
    }
    const int npts = static_cast<int>(x.size());
    double slope = 0, se = 0;
    if (npts >= 2) {
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      for (int i = 0; i < npts; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
      }
      const double denom = npts * sxx - sx * sx;
      if (denom > 1e-14) {
        slope = (npts * sxy - sx * sy) / denom;
        const double intercept = (sy - slope * sx) / npts;
        double ss = 0;
        for (int i = 0; i < npts; ++i) {
          const double r = y[i] - slope * x[i] - intercept;
          ss += r * r;
        }
        if (npts > 2) se = std::sqrt(ss / (npts - 2) * npts / denom);
      }
    }
    if (side == 0) {
      fit.slope_left = slope;
      fit.stderr_left = se;
      fit.points_left = npts;
    } else {
      fit.slope_right = slope;
      fit.stderr_right = se;
      fit.points_right = npts;
    }
  }
  return fit;
}

}  // namespace solspeck
