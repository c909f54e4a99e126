#pragma once
#include <complex>
#include <cstdint>
#include <vector>

#include "solspeck/model.hpp"

namespace solspeck {

// Effective one-body picture: the soliton center of mass q moves as a single
// particle of mass N in the disorder smoothed by the soliton density,
//   H_q = p_q^2/(2N) + Veff(q),  Veff(q) = sum_z |phi0(z-q)|^2 V(z) dz,
// with |phi0|^2 normalized to N. Analytic localization lengths for this
// problem and a transfer-matrix estimator validate each other.

// Circular convolution of the disorder samples with the soliton density
// kernel (truncated where sech^2 < 1e-12, then renormalized so a constant
// potential C maps to exactly N*C). Requires delta <= sigma0/2 and
// delta <= xi/5 so both the disorder and the kernel are resolved.
std::vector<double> effective_potential(const std::vector<double>& V, double delta,
                                        const ContinuumParams& params);

struct EOBModel {
  double mass = 1;            // = N
  double delta = 0;           // grid spacing
  std::vector<double> q;      // positions, centered on 0
  std::vector<double> veff;   // effective potential samples
};

EOBModel build_eob_model(const std::vector<double>& V, double delta,
                         const ContinuumParams& params);

struct COMWavepacket {
  double delta = 0;
  std::vector<std::complex<double>> amp;  // sum |amp|^2 delta = 1
  double norm() const;
};

// Gaussian ground state of the mass-N oscillator: rms width (2 N omega)^(-1/2).
COMWavepacket initial_com_state(const ContinuumParams& params, const EOBModel& model);

struct EobEvolveResult {
  COMWavepacket psi;
  std::vector<double> times;                  // observation times
  std::vector<std::vector<double>> density;   // |amp|^2 snapshots
  double max_norm_dev = 0;
};

// Order-2 split-step spectral propagation on the periodic box; throws if the
// norm drifts beyond 1e-6. stride = steps between density snapshots
// (0 = final only).
EobEvolveResult eob_evolve(const EOBModel& model, COMWavepacket psi, double dt, long steps,
                           long stride = 0);

double eob_energy(const EOBModel& model, const COMWavepacket& psi);

// Localization length of the soliton center of mass at wavevector k:
//   1/L_N = N^4 xi^2 pi^3 sigma0 V0^2 (1 - k sigma0) / sinh^2(pi k xi)
// for k sigma0 < 1; infinite beyond the disorder spectral cutoff. k = 0
// returns 0 with *k_zero_flag set (the formula's 1/k^2 divergence).
double localization_length(double k, const ContinuumParams& params,
                           bool* k_zero_flag = nullptr);

// Single-particle localization length in the bare speckle at wavevector
// kappa: 1/L_1 = pi sigma0 V0^2 (1 - kappa sigma0) / kappa^2 for
// kappa sigma0 < 1. Fixed by the exact identity
// L_1(k/N) / L_N(k) = localization_ratio(k).
double localization_length_single(double kappa, const ContinuumParams& params,
                                  bool* k_zero_flag = nullptr);

// N^2 [pi k xi / sinh(pi k xi)]^2 (1 - k sigma0) / (1 - k sigma0 / N);
// rejects k sigma0 >= 1.
double localization_ratio(double k, const ContinuumParams& params);

struct TransferMatrixOptions {
  double delta = 0;         // 0 = auto from sigma0, xi and the wavelength
  double chain_length = 0;  // 0 = auto from the analytic length
  uint64_t seed = 777;
};

struct TransferMatrixResult {
  double L = 0;
  double L_stderr = 0;
  double gamma = 0;         // amplitude Lyapunov exponent; L = 1/(2 gamma)
  double gamma_stderr = 0;
  double relative_spread = 0;
  bool non_self_averaging = false;  // relative spread above 50%
  double born_ratio = 0;    // rms(Veff) / (k^2/2N); Born regime wants << 1
  int realizations = 0;
};

// Lyapunov-exponent estimate for a mass-N particle at energy k^2/(2N) in the
// soliton-convolved speckle, averaged over disorder realizations. The first
// 5% of each chain is treated as warmup and excluded.
TransferMatrixResult transfer_matrix_loclen(double k, const ContinuumParams& params,
                                            int realizations,
                                            const TransferMatrixOptions& opts = {});

}  // namespace solspeck
