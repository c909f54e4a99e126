#pragma once
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "solspeck/measurement.hpp"
#include "solspeck/model.hpp"

namespace solspeck {

// Flat sectioned key=value experiment configuration. Grammar:
//   [section] headers, key = value lines, '#' comments (full-line or
//   trailing), blank lines ignored. Unknown sections or keys are errors.
// All quantities are in soliton units (lengths xi, times xi^2, energies
// 1/xi^2; hbar = mass = 1). Every key has a default, so a preset only
// needs to override what it changes.

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& file, int line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
        file_(file),
        line_(line) {}
  const std::string& file() const { return file_; }
  int line() const { return line_; }

 private:
  std::string file_;
  int line_;
};

struct ExperimentConfig {
  // [physics] n, g (or xi), omega, v0, sigma0
  int n = 25;
  double g = -0.08;  // attractive; xi = -2/(n g)
  double omega = 0.025;
  double v0 = 2.5e-4;
  double sigma0 = 0.4;
  // [lattice] m, delta, nmax
  int m = 1921;
  double delta = 0.2;
  int nmax = 0;  // 0 = default cap from the cluster estimate
  // [ground_state] chi, schedule, tolerance, max_steps
  int gs_chi = 30;
  std::vector<double> schedule = {0.05, 0.01, 0.002};
  double gs_tolerance = 1e-8;
  long gs_max_steps = 100000;
  // [evolution] dt, t_max, chi, observe_stride, checkpoint_every,
  //             discarded_budget, obdm_every
  double dt = 0.008;
  double t_max = 10.0;
  int chi = 30;
  long observe_stride = 125;     // steps between observations
  long checkpoint_every = 0;     // steps; 0 = never
  double discarded_budget = 1e-6;
  long obdm_every = 0;           // observations between OBDM dumps; 0 = final only
  // [measurement] samples, direction, bin_width
  long samples = 200;
  SweepDirection direction = SweepDirection::kLeftToRight;
  double bin_width = 0.25;
  // [eob] enabled, dt, t_max, box_factor, tm_realizations, k_points
  bool eob_enabled = true;
  double eob_dt = 0.02;
  double eob_t_max = 0;  // 0 = follow [evolution] t_max
  double box_factor = 3.0;
  int tm_realizations = 200;
  std::vector<double> k_points = {0.75, 1.25};
  // [ensemble] seeds, workers
  std::vector<uint64_t> seeds = {1};
  int workers = 1;
  // [output] out_dir
  std::string out_dir = "runs/out";

  double xi() const { return g == 0 ? std::numeric_limits<double>::infinity() : -2.0 / (n * g); }
  ContinuumParams continuum() const;
  int effective_nmax() const;
  double eob_horizon() const { return eob_t_max > 0 ? eob_t_max : t_max; }
};

ExperimentConfig parse_config_text(const std::string& text, const std::string& name);
ExperimentConfig parse_config_file(const std::string& path);

// Full canonical rendering: fixed section/key order, every key present.
std::string canonical_config(const ExperimentConfig& cfg);

// FNV-1a hash (16 hex digits) of the canonical rendering minus run identity
// (out_dir, workers, seeds), so the same physics shares a hash across
// machines and seed partitions.
std::string config_hash(const ExperimentConfig& cfg);

// Accepts a path to a config file or a preset name looked up in ./presets
// and the build-time preset directory. Throws with the searched locations.
std::string resolve_preset(const std::string& name_or_path);

// "1..96" or "3,5,9..12" style seed lists.
std::vector<uint64_t> parse_seed_list(const std::string& text);

}  // namespace solspeck
