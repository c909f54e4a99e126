#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "solspeck/mps.hpp"
#include "solspeck/rng.hpp"

namespace solspeck {

// Projective sampling of all atom positions in one shot: sweep the chain,
// draw each site's occupation from the conditional distribution given the
// outcomes already fixed, project, renormalize. The joint distribution is
// exactly |<i_1..i_M|psi>|^2 (up to truncation leakage, which is monitored).

struct MeasurementSample {
  std::vector<int> occupations;  // length M, sum = N exactly
  uint64_t seed = 0;
  double com = 0;  // sum_l z_l i_l / N
};

enum class SweepDirection { kLeftToRight, kRightToLeft };

struct SamplerDiagnostics {
  long renormalized_draws = 0;  // conditional sums below 1 - 1e-6
  double min_prob_sum = 1.0;    // worst conditional sum seen
};

// One sample; conditional sums below 1-1e-3 abort with an error. The particle
// budget is clamped site by site so every sample closes at exactly N.
MeasurementSample sample_configuration(const MPSState& psi, double delta, SplitMix64& rng,
                                       SweepDirection dir = SweepDirection::kLeftToRight,
                                       SamplerDiagnostics* diag = nullptr);

// Independent samples with per-sample seeds derived from base_seed; the
// recorded seed replays any single sample.
std::vector<MeasurementSample> draw_samples(const MPSState& psi, double delta, int count,
                                            uint64_t base_seed,
                                            SweepDirection dir = SweepDirection::kLeftToRight,
                                            SamplerDiagnostics* diag = nullptr);

double center_of_mass(const std::vector<int>& occupations, double delta);

struct DensityHistogram {
  double bin_width = 0;
  std::vector<double> centers;
  std::vector<double> density;  // per unit length; integrates to N
};

// Particle positions shifted by each sample's own center of mass, averaged
// over samples; removes center-of-mass wander so the frozen internal
// profile survives the disorder average.
DensityHistogram relative_density_histogram(const std::vector<MeasurementSample>& samples,
                                            double delta, double bin_width);

// One JSON object per line: {"seed":...,"com":...,"occ":[[value,run],...]}.
// A nonempty config_hash adds a leading {"kind":"header",...} line; the
// reader skips header lines.
void write_samples_ndjson(const std::string& path, const std::vector<MeasurementSample>& samples,
                          bool append = false, const std::string& config_hash = "");
std::vector<MeasurementSample> read_samples_ndjson(const std::string& path);

}  // namespace solspeck
