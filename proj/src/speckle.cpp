#include "solspeck/speckle.hpp"

#include <cmath>
#include <complex>
#include <fstream>
#include <stdexcept>

#include "fft_util.hpp"
#include "solspeck/rng.hpp"

namespace solspeck {

SpeckleField generate_speckle(int M, double delta, double V0, double sigma0,
                              uint64_t seed, SpeckleSign sign) {
  if (M < 1) throw std::invalid_argument("speckle: M must be >= 1");
  if (!(delta > 0)) throw std::invalid_argument("speckle: delta must be > 0");
  if (!(sigma0 > 0)) throw std::invalid_argument("speckle: sigma0 must be > 0");
  if (delta > sigma0)
    throw std::invalid_argument("speckle: grid spacing above sigma0 cannot resolve the disorder");
  if (V0 < 0) throw std::invalid_argument("speckle: V0 must be >= 0");

  SpeckleField f;
  f.seed = seed;
  f.V0 = V0;
  f.sigma0 = sigma0;
  f.delta = delta;
  f.values.assign(M, 0.0);
  if (V0 == 0.0 || M == 1) return f;

  const double kc = 1.0 / sigma0;
  const double dk = 2.0 * M_PI / (M * delta);
  SplitMix64 rng(seed);
  std::vector<std::complex<double>> modes(M, {0.0, 0.0});
  for (int j = 0; j < M; ++j) {
    int jw = (j <= M / 2) ? j : j - M;
    double k = jw * dk;
    if (std::abs(k) <= kc * (1.0 + 1e-12)) {
      double re = rng.gaussian();
      double im = rng.gaussian();
      modes[j] = {re, im};
    }
  }

  Fft1D fft(M);
  fft.inverse(modes);  // unnormalized; the intensity is normalized by its mean below

  std::vector<double> I(M);
  double mean = 0.0;
  for (int j = 0; j < M; ++j) {
    I[j] = std::norm(modes[j]);
    mean += I[j];
  }
  mean /= M;
  if (!(mean > 0)) throw std::runtime_error("speckle: degenerate intensity field");

  for (int j = 0; j < M; ++j) {
    double ratio = I[j] / mean;
    switch (sign) {
      case SpeckleSign::zero_mean: f.values[j] = V0 * (ratio - 1.0); break;
      case SpeckleSign::blue: f.values[j] = V0 * ratio; break;
      case SpeckleSign::red: f.values[j] = -V0 * ratio; break;
    }
  }
  return f;
}

std::vector<double> autocorrelation_estimate(const std::vector<SpeckleField>& fields,
                                             int max_lag) {
  if (fields.empty()) throw std::invalid_argument("autocorrelation: need at least one field");
  const size_t M = fields[0].values.size();
  const double delta = fields[0].delta;
  for (const auto& f : fields)
    if (f.values.size() != M || f.delta != delta)
      throw std::invalid_argument("autocorrelation: mismatched grids");
  if (max_lag < 0 || static_cast<size_t>(max_lag) >= M)
    throw std::invalid_argument("autocorrelation: lag out of range");

  std::vector<double> C(max_lag + 1, 0.0);
  for (const auto& f : fields) {
    for (int j = 0; j <= max_lag; ++j) {
      double acc = 0.0;
      for (size_t l = 0; l + j < M; ++l) acc += f.values[l] * f.values[l + j];
      C[j] += acc / static_cast<double>(M - j);
    }
  }
  for (auto& c : C) c /= static_cast<double>(fields.size());
  return C;
}

void write_speckle_csv(const SpeckleField& f, const std::string& path,
                       const std::string& extra_header) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  if (!extra_header.empty()) out << extra_header;
  out << "# seed=" << f.seed << " V0=" << f.V0 << " sigma0=" << f.sigma0
      << " delta=" << f.delta << "\n";
  out << "z,V\n";
  const long K = static_cast<long>(f.values.size()) / 2;
  out.precision(12);
  for (size_t l = 0; l < f.values.size(); ++l)
    out << (static_cast<long>(l) - K) * f.delta << "," << f.values[l] << "\n";
}

}  // namespace solspeck
