#pragma once
#include <atomic>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "solspeck/config.hpp"

namespace solspeck {

// Disorder-averaged runs. One record directory per seed under out_dir:
//   seed_<s>/config.cfg       canonical config the record was produced from
//   seed_<s>/manifest.json    status, config hash, diagnostics
//   seed_<s>/speckle.csv      z, V
//   seed_<s>/density.csv      t, z, n with sum n(z) delta = N
//   seed_<s>/entropy.csv      t, S_max, bond
//   seed_<s>/obdm_initial.csv z, zp, re, im (ground state, before the quench)
//   seed_<s>/obdm.csv         z, zp, re, im (final time)
//   seed_<s>/samples.ndjson   projective samples of the final state
//   seed_<s>/eob_density.csv  t, q, n with sum n(q) delta = 1 (c.o.m. cross-check)
// Densities are per unit length; the obdm files store the site-operator
// matrix <adag_l a_j> on the labeled grid, so its diagonal sums to N.
// A record is complete only once its manifest says so; anything else is
// rerun from scratch on resume. Records that threw are moved aside to
// seed_<s>.failed so the wreckage stays inspectable.

enum class SeedStatus { kComplete, kSkipped, kPartial, kFailed };

struct SeedOutcome {
  uint64_t seed = 0;
  SeedStatus status = SeedStatus::kFailed;
  std::string dir;
  std::string error;
  double wall_seconds = 0;
};

struct EnsembleReport {
  std::vector<SeedOutcome> outcomes;
  int completed = 0, skipped = 0, partial = 0, failed = 0;
  bool aborted = false;      // more than 20% of seeds failed; launching stopped
  bool interrupted = false;
};

using LogFn = std::function<void(const std::string&)>;

// speckle -> trapped ground state (no disorder) -> quench (trap off,
// disorder on) -> evolve with streaming observers -> final OBDM and samples
// -> center-of-mass cross-check. Partial results are flagged, not deleted.
SeedOutcome run_seed(const ExperimentConfig& cfg, uint64_t seed, const std::string& dir,
                     const LogFn& log = {}, const std::atomic<bool>* interrupt = nullptr);

// Worker pool over the seed list; completed records are skipped, stale ones
// rerun. The ensemble manifest is rewritten after every seed so a crash
// loses at most the seed in flight.
EnsembleReport run_ensemble(const ExperimentConfig& cfg, const LogFn& log = {},
                            const std::atomic<bool>* interrupt = nullptr);

struct RecordInfo {
  uint64_t seed = 0;
  std::string status;       // "complete", "partial", "failed"
  std::string config_hash;
  std::string dir;
};

RecordInfo read_record_manifest(const std::string& dir);

// seed_* record directories under an ensemble root, sorted by seed
std::vector<std::string> list_record_dirs(const std::string& out_dir);

struct DensitySeries {
  std::vector<double> t;
  std::vector<double> z;
  std::vector<std::vector<double>> n;  // [time][site]
};

DensitySeries read_density_csv(const std::string& path, std::string* hash_out = nullptr);

struct EntropySeries {
  std::vector<double> t;
  std::vector<double> s_max;
  std::vector<int> bond;
};

EntropySeries read_entropy_csv(const std::string& path, std::string* hash_out = nullptr);

void write_obdm_csv(const std::string& path, const Eigen::MatrixXcd& obdm, double delta,
                    const std::string& config_hash);
Eigen::MatrixXcd read_obdm_csv(const std::string& path, std::string* hash_out = nullptr);

enum class AggregateMode {
  kAtomic,  // mean of the raw site densities, no recentering; integrates to N
  kCom,     // probability density of the center of mass, histogrammed from
            // the projective samples pooled over records; integrates to 1
};

struct AggregateResult {
  std::vector<double> t;                    // kCom: single (final) time
  std::vector<double> z;
  std::vector<std::vector<double>> density; // [time][z]
  int records = 0;
  long samples = 0;                         // kCom only
  std::string config_hash;
};

// Refuses to mix records with different config hashes or records that are
// not complete.
AggregateResult aggregate_density(const std::vector<std::string>& record_dirs,
                                  AggregateMode mode, double bin_width = 0);

// Mean S_max(t) over records (bond left at -1).
EntropySeries aggregate_entropy(const std::vector<std::string>& record_dirs);

struct TailFit {
  double slope_left = 0, slope_right = 0;     // d ln n / d ln|z|
  double stderr_left = 0, stderr_right = 0;
  int points_left = 0, points_right = 0;
};

// Least-squares slope of ln n against ln |z| on each side of the origin for
// z_min <= |z| <= z_max; a window containing non-positive bins is rejected
// (ln is undefined there; shrink the window instead). An exponential profile
// drifts ever steeper with |z|, algebraic decay n ~ |z|^-a settles at -a.
TailFit tail_slope_fit(const std::vector<double>& z, const std::vector<double>& n,
                       double z_min, double z_max);

}  // namespace solspeck
