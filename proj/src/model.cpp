#include "solspeck/model.hpp"

#include <cmath>
#include <limits>

namespace solspeck {

static void check_common(int N, double omega, double V0, double sigma0) {
  if (N < 1) throw std::invalid_argument("particle count must be >= 1");
  if (omega < 0) throw std::invalid_argument("trap frequency must be >= 0");
  if (V0 < 0) throw std::invalid_argument("disorder amplitude must be >= 0");
  if (sigma0 < 0) throw std::invalid_argument("correlation length must be >= 0");
}

ContinuumParams ContinuumParams::from_g(int N, double g, double omega,
                                        double V0, double sigma0) {
  check_common(N, omega, V0, sigma0);
  if (g > 0) throw std::invalid_argument("repulsive interaction (g > 0) not supported");
  ContinuumParams p;
  p.N = N;
  p.g = g;
  p.xi = (g < 0) ? -2.0 / (N * g) : std::numeric_limits<double>::infinity();
  p.omega = omega;
  p.V0 = V0;
  p.sigma0 = sigma0;
  return p;
}

ContinuumParams ContinuumParams::from_xi(int N, double xi, double omega,
                                         double V0, double sigma0) {
  check_common(N, omega, V0, sigma0);
  if (!(xi > 0)) throw std::invalid_argument("soliton size must be > 0");
  ContinuumParams p;
  p.N = N;
  p.xi = xi;
  p.g = -2.0 / (N * xi);
  p.omega = omega;
  p.V0 = V0;
  p.sigma0 = sigma0;
  return p;
}

double soliton_profile(double z, const ContinuumParams& p) {
  if (!std::isfinite(p.xi)) throw std::invalid_argument("soliton profile needs g < 0");
  double s = 1.0 / std::cosh(z / p.xi);
  return p.N / (2.0 * p.xi) * s * s;
}

double chemical_potential(const ContinuumParams& p) {
  return -p.N * p.N * p.g * p.g / 8.0;
}

double internal_gap(const ContinuumParams& p) { return -chemical_potential(p); }

int default_nmax(const ContinuumParams& p, double delta) {
  if (!std::isfinite(p.xi)) return p.N;
  int floor_occ = static_cast<int>(std::ceil(p.N * delta / (2.0 * p.xi)));
  return std::min(p.N, floor_occ + 12);
}

LatticeModel discretize(const ContinuumParams& p, double delta, int M,
                        const std::vector<double>& V, int Nmax) {
  if (!(delta > 0)) throw std::invalid_argument("grid spacing must be > 0");
  if (M < 1) throw std::invalid_argument("site count must be >= 1");
  if (static_cast<int>(V.size()) != M)
    throw std::invalid_argument("potential sample count must equal M");
  if (Nmax < 1) throw std::invalid_argument("occupation cutoff must be >= 1");
  if (Nmax > p.N) throw std::invalid_argument("occupation cutoff above particle number");
  if (std::isfinite(p.xi)) {
    int min_cut = static_cast<int>(std::ceil(p.N * delta / (2.0 * p.xi))) + 2;
    min_cut = std::min(min_cut, p.N);
    if (Nmax < min_cut)
      throw std::invalid_argument("occupation cutoff too tight for the peak density: need Nmax >= " +
                                  std::to_string(min_cut));
  }
  LatticeModel m;
  m.M = M;
  m.delta = delta;
  m.J = 1.0 / (2.0 * delta * delta);
  m.U = p.g / delta;
  m.V = V;
  m.Nmax = Nmax;
  m.N = p.N;
  return m;
}

std::vector<double> trap_potential(const ContinuumParams& p, double delta, int M) {
  std::vector<double> V(M);
  int K = (M - 1) / 2;
  for (int l = 0; l < M; ++l) {
    double z = (l - K) * delta;
    V[l] = 0.5 * p.omega * p.omega * z * z;
  }
  return V;
}

}  // namespace solspeck
