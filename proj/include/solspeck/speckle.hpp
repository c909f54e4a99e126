#pragma once
#include <cstdint>
#include <string>
#include <vector>

namespace solspeck {

struct SpeckleField {
  std::vector<double> values;  // potential samples on the grid
  uint64_t seed = 0;
  double V0 = 0;
  double sigma0 = 0;
  double delta = 0;
};

enum class SpeckleSign { zero_mean, blue, red };

// Band-limited speckle: complex Gaussian field with flat spectrum on
// |k| <= 1/sigma0, intensity I = |A|^2, V = V0 (I/<I> - 1).
// Autocorrelation V0^2 sinc^2(dz/sigma0) with sinc x = sin(x)/x, so the
// potential power spectrum is supported on |k| <= 2/sigma0.
// Deterministic in (seed, M, delta, V0, sigma0, sign).
SpeckleField generate_speckle(int M, double delta, double V0, double sigma0,
                              uint64_t seed, SpeckleSign sign = SpeckleSign::zero_mean);

// C(j*delta) averaged over sites and realizations, j = 0..max_lag
std::vector<double> autocorrelation_estimate(const std::vector<SpeckleField>& fields,
                                             int max_lag);

// two-column CSV (z, V); extra_header lines are emitted as leading comments
void write_speckle_csv(const SpeckleField& f, const std::string& path,
                       const std::string& extra_header = "");

}  // namespace solspeck
