#pragma once
#include <stdexcept>
#include <string>
#include <vector>

namespace solspeck {

// Units: hbar = 1, particle mass = 1, lengths in xi, times/energies in xi^2, xi^-2.

struct ContinuumParams {
  int N = 1;          // particle count
  double g = -1.0;    // interaction strength, g <= 0 (g > 0 rejected)
  double xi = 1.0;    // soliton size, xi = -2/(N g)
  double omega = 0.0; // trap frequency
  double V0 = 0.0;    // disorder rms amplitude
  double sigma0 = 0.0;// speckle correlation length

  // one of g, xi is given, the other derived; g = 0 leaves xi infinite
  static ContinuumParams from_g(int N, double g, double omega = 0.0,
                                double V0 = 0.0, double sigma0 = 0.0);
  static ContinuumParams from_xi(int N, double xi, double omega = 0.0,
                                 double V0 = 0.0, double sigma0 = 0.0);
};

// |phi0(z)|^2 = N/(2 xi) sech^2(z/xi), integrates to N
double soliton_profile(double z, const ContinuumParams& p);

// mu = -N^2 g^2 / 8; the internal excitation gap is -mu
double chemical_potential(const ContinuumParams& p);
double internal_gap(const ContinuumParams& p);

struct LatticeModel {
  int M = 0;        // site count; grid z_l = (l - M/2) delta
  double delta = 0; // grid spacing
  double J = 0;     // hopping, 1/(2 delta^2)
  double U = 0;     // on-site interaction, g/delta
  std::vector<double> V;  // per-site potential V(z_l)
  int Nmax = 0;     // local occupation cutoff
  int N = 0;        // total particle number carried along for cutoff checks

  int K() const { return (M - 1) / 2; }
  int d() const { return Nmax + 1; }
  double z(int l) const { return (l - K()) * delta; }  // l in [0, M)
};

// default local cutoff min(N, ceil(N delta / (2 xi)) + 12)
int default_nmax(const ContinuumParams& p, double delta);

// Bose-Hubbard coefficients from the continuum model; the constant 1/delta^2
// per particle dropped from the on-site energy is NOT stored (add it back only
// when comparing against continuum energies).
LatticeModel discretize(const ContinuumParams& p, double delta, int M,
                        const std::vector<double>& V, int Nmax);

// V(z) = omega^2 z^2 / 2 sampled on the centered grid
std::vector<double> trap_potential(const ContinuumParams& p, double delta, int M);

}  // namespace solspeck
