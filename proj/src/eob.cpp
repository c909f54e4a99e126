#include "solspeck/eob.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "fft_util.hpp"
#include "solspeck/rng.hpp"
#include "solspeck/speckle.hpp"

namespace solspeck {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// sech^2(y) = 1e-12 at y = acosh(1e6); the kernel is cut there.
double kernel_halfwidth(double xi) { return std::acosh(1e6) * xi; }

}  // namespace

std::vector<double> effective_potential(const std::vector<double>& V, double delta,
                                        const ContinuumParams& params) {
  const int M = static_cast<int>(V.size());
  if (M < 1) throw std::invalid_argument("effective_potential: empty disorder");
  if (!(delta > 0)) throw std::invalid_argument("effective_potential: delta must be > 0");
  if (!std::isfinite(params.xi) || !(params.xi > 0))
    throw std::invalid_argument("effective_potential: finite soliton width required");
  if (delta > 0.5 * params.sigma0)
    throw std::invalid_argument("effective_potential: grid too coarse for the disorder "
                                "(delta > sigma0/2)");
  if (delta > params.xi / 5.0)
    throw std::invalid_argument("effective_potential: grid too coarse for the soliton "
                                "(delta > xi/5)");
  const int J = static_cast<int>(std::ceil(kernel_halfwidth(params.xi) / delta));
  if (2 * J + 1 > M)
    throw std::invalid_argument("effective_potential: grid shorter than the kernel support (" +
                                std::to_string(2 * J + 1) + " sites needed)");
  // Truncated sech^2 kernel, renormalized so that a constant C maps to N*C.
  std::vector<double> w(J + 1);
  double sum = 0;
  for (int j = 0; j <= J; ++j) {
    w[j] = 1.0 / std::pow(std::cosh(j * delta / params.xi), 2);
    sum += j == 0 ? w[j] : 2 * w[j];
  }
  const double scale = params.N / sum;

  std::vector<std::complex<double>> a(M), b(M, 0.0);
  for (int l = 0; l < M; ++l) a[l] = V[l];
  b[0] = scale * w[0];
  for (int j = 1; j <= J; ++j) {
    b[j] = scale * w[j];
    b[M - j] = scale * w[j];
  }
  Fft1D fft(M);
  fft.forward(a);
  fft.forward(b);
  for (int l = 0; l < M; ++l) a[l] *= b[l];
  fft.inverse(a);
  std::vector<double> out(M);
  for (int l = 0; l < M; ++l) out[l] = a[l].real() / M;
  return out;
}

EOBModel build_eob_model(const std::vector<double>& V, double delta,
                         const ContinuumParams& params) {
  EOBModel m;
  m.mass = params.N;
  m.delta = delta;
  m.veff = effective_potential(V, delta, params);
  const int M = static_cast<int>(V.size());
  const int K = M / 2;
  m.q.resize(M);
  for (int l = 0; l < M; ++l) m.q[l] = (l - K) * delta;
  return m;
}

double COMWavepacket::norm() const {
  double s = 0;
  for (const auto& c : amp) s += std::norm(c);
  return std::sqrt(s * delta);
}

COMWavepacket initial_com_state(const ContinuumParams& params, const EOBModel& model) {
  if (!(params.omega > 0))
    throw std::invalid_argument("initial_com_state: omega must be positive");
  const double dq = 1.0 / std::sqrt(2.0 * params.N * params.omega);
  COMWavepacket psi;
  psi.delta = model.delta;
  psi.amp.resize(model.q.size());
  for (size_t l = 0; l < model.q.size(); ++l)
    psi.amp[l] = std::exp(-model.q[l] * model.q[l] / (4 * dq * dq));
  const double n = psi.norm();
  for (auto& c : psi.amp) c /= n;
  return psi;
}

EobEvolveResult eob_evolve(const EOBModel& model, COMWavepacket psi, double dt, long steps,
                           long stride) {
  const int M = static_cast<int>(model.veff.size());
  if (static_cast<int>(psi.amp.size()) != M)
    throw std::invalid_argument("eob_evolve: wavepacket/grid mismatch");
  if (steps < 0) throw std::invalid_argument("eob_evolve: negative step count");
  EobEvolveResult res;
  res.times.push_back(0);
  res.density.emplace_back(M);
  for (int l = 0; l < M; ++l) res.density.back()[l] = std::norm(psi.amp[l]);

  std::vector<std::complex<double>> vhalf(M), kfull(M);
  for (int l = 0; l < M; ++l)
    vhalf[l] = std::exp(std::complex<double>(0, -0.5 * model.veff[l] * dt));
  const double dk = 2 * M_PI / (M * model.delta);
  for (int j = 0; j < M; ++j) {
    const int jw = j <= M / 2 ? j : j - M;
    const double k = jw * dk;
    kfull[j] = std::exp(std::complex<double>(0, -k * k * dt / (2 * model.mass)));
  }
  Fft1D fft(M);
  const double inv_m = 1.0 / M;
  for (long s = 0; s < steps; ++s) {
    for (int l = 0; l < M; ++l) psi.amp[l] *= vhalf[l];
    fft.forward(psi.amp);
    for (int j = 0; j < M; ++j) psi.amp[j] *= kfull[j];
    fft.inverse(psi.amp);
    for (int l = 0; l < M; ++l) psi.amp[l] *= inv_m;
    for (int l = 0; l < M; ++l) psi.amp[l] *= vhalf[l];
    const bool last = s + 1 == steps;
    if ((s + 1) % 100 == 0 || last) {
      const double dev = std::abs(1.0 - psi.norm());
      res.max_norm_dev = std::max(res.max_norm_dev, dev);
      if (dev > 1e-6)
        throw std::runtime_error("eob_evolve: norm drift " + std::to_string(dev) +
                                 " exceeds 1e-6; reduce the step size");
    }
    if ((stride > 0 && (s + 1) % stride == 0) || last) {
      res.times.push_back((s + 1) * dt);
      res.density.emplace_back(M);
      for (int l = 0; l < M; ++l) res.density.back()[l] = std::norm(psi.amp[l]);
    }
  }
  res.psi = std::move(psi);
  return res;
}

double eob_energy(const EOBModel& model, const COMWavepacket& psi) {
  const int M = static_cast<int>(model.veff.size());
  double pot = 0;
  for (int l = 0; l < M; ++l) pot += model.veff[l] * std::norm(psi.amp[l]) * psi.delta;
  std::vector<std::complex<double>> a = psi.amp;
  Fft1D fft(M);
  fft.forward(a);
  const double dk = 2 * M_PI / (M * model.delta);
  double kin = 0;
  for (int j = 0; j < M; ++j) {
    const int jw = j <= M / 2 ? j : j - M;
    const double k = jw * dk;
    kin += k * k / (2 * model.mass) * std::norm(a[j]);
  }
  kin *= psi.delta / M;
  return pot + kin;
}

double localization_length(double k, const ContinuumParams& params, bool* k_zero_flag) {
  if (k_zero_flag) *k_zero_flag = false;
  if (!(k >= 0)) throw std::invalid_argument("localization_length: k must be >= 0");
  if (!std::isfinite(params.xi) || !(params.xi > 0))
    throw std::invalid_argument("localization_length: finite soliton width required");
  if (k == 0) {
    if (k_zero_flag) *k_zero_flag = true;
    return 0;
  }
  if (k * params.sigma0 >= 1.0 || params.V0 == 0) return kInf;
  const double sh = std::sinh(M_PI * k * params.xi);
  const double inv_l = std::pow(params.N, 4) * params.xi * params.xi * std::pow(M_PI, 3) *
                       params.sigma0 * params.V0 * params.V0 * (1.0 - k * params.sigma0) /
                       (sh * sh);
  return 1.0 / inv_l;
}

double localization_length_single(double kappa, const ContinuumParams& params,
                                  bool* k_zero_flag) {
  if (k_zero_flag) *k_zero_flag = false;
  if (!(kappa >= 0))
    throw std::invalid_argument("localization_length_single: kappa must be >= 0");
  if (kappa == 0) {
    if (k_zero_flag) *k_zero_flag = true;
    return 0;
  }
  if (kappa * params.sigma0 >= 1.0 || params.V0 == 0) return kInf;
  return kappa * kappa /
         (M_PI * params.sigma0 * params.V0 * params.V0 * (1.0 - kappa * params.sigma0));
}

double localization_ratio(double k, const ContinuumParams& params) {
  if (!(k >= 0)) throw std::invalid_argument("localization_ratio: k must be >= 0");
  if (k * params.sigma0 >= 1.0)
    throw std::invalid_argument("localization_ratio: k sigma0 >= 1 is outside the stated "
                                "validity range");
  if (!std::isfinite(params.xi) || !(params.xi > 0))
    throw std::invalid_argument("localization_ratio: finite soliton width required");
  const double n = params.N;
  if (k == 0) return n * n;
  const double x = M_PI * k * params.xi;
  const double f = x / std::sinh(x);
  return n * n * f * f * (1.0 - k * params.sigma0) / (1.0 - k * params.sigma0 / n);
}

TransferMatrixResult transfer_matrix_loclen(double k, const ContinuumParams& params,
                                            int realizations,
                                            const TransferMatrixOptions& opts) {
  if (!(k > 0)) throw std::invalid_argument("transfer_matrix_loclen: k must be positive");
  if (realizations < 1)
    throw std::invalid_argument("transfer_matrix_loclen: need at least one realization");
  if (!std::isfinite(params.xi) || !(params.xi > 0))
    throw std::invalid_argument("transfer_matrix_loclen: finite soliton width required");
  TransferMatrixResult res;
  res.realizations = realizations;
  if (params.V0 == 0) {
    res.L = kInf;
    return res;
  }
  double delta = opts.delta;
  if (delta <= 0)
    delta = std::min({params.sigma0 / 3.0, params.xi / 5.0, 2 * M_PI / k / 12.0});
  const double l_ref = localization_length(k, params);
  double chain = opts.chain_length;
  if (chain <= 0) {
    chain = std::isfinite(l_ref) ? 25.0 * l_ref : 4000.0 * params.xi;
    chain = std::max(chain, 500.0 * params.xi);
  }
  long sites = static_cast<long>(std::ceil(chain / delta));
  const long max_sites = 4000000;
  if (sites > max_sites) sites = max_sites;
  const int min_sites = 2 * static_cast<int>(std::ceil(kernel_halfwidth(params.xi) / delta)) + 2;
  if (sites < min_sites) sites = min_sites;

  const double energy = (1.0 - std::cos(k * delta)) / (params.N * delta * delta);
  const long warm = sites / 20;
  std::vector<double> gammas(realizations);
  double born_acc = 0;
  for (int r = 0; r < realizations; ++r) {
    const uint64_t seed = SplitMix64::derive(opts.seed, static_cast<uint64_t>(r));
    const SpeckleField field = generate_speckle(static_cast<int>(sites), delta, params.V0,
                                                params.sigma0, seed, SpeckleSign::zero_mean);
    const std::vector<double> veff = effective_potential(field.values, delta, params);
    double rms = 0;
    for (double v : veff) rms += v * v;
    born_acc += std::sqrt(rms / sites) / energy;

    double p0 = 1.0, p1 = 1.0, logacc = 0.0;
    const double pref = 2.0 * params.N * delta * delta;
    for (long j = 1; j + 1 < sites; ++j) {
      const double p2 = (2.0 + pref * (veff[j] - energy)) * p1 - p0;
      p0 = p1;
      p1 = p2;
      if (j % 32 == 0 || j + 2 == sites) {
        const double s = std::sqrt(p0 * p0 + p1 * p1);
        if (j > warm) logacc += std::log(s);
        p0 /= s;
        p1 /= s;
      }
      if (j == warm) {  // reset at the end of warmup
        const double s = std::sqrt(p0 * p0 + p1 * p1);
        p0 /= s;
        p1 /= s;
        logacc = 0;
      }
    }
    gammas[r] = logacc / ((sites - 2 - warm) * delta);
  }
  double mean = 0;
  for (double g : gammas) mean += g;
  mean /= realizations;
  double var = 0;
  for (double g : gammas) var += (g - mean) * (g - mean);
  var = realizations > 1 ? var / (realizations - 1) : 0.0;
  const double sd = std::sqrt(var);
  res.gamma = mean;
  res.gamma_stderr = sd / std::sqrt(static_cast<double>(realizations));
  res.relative_spread = mean != 0 ? sd / std::abs(mean) : kInf;
  res.non_self_averaging = res.relative_spread > 0.5;
  res.born_ratio = born_acc / realizations;
  if (mean > 0) {
    res.L = 1.0 / (2.0 * mean);
    res.L_stderr = res.gamma_stderr / (2.0 * mean * mean);
  } else {
    res.L = kInf;
    res.L_stderr = kInf;
    res.non_self_averaging = true;
  }
  return res;
}

}  // namespace solspeck
