#pragma once
#include <complex>
#include <map>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "solspeck/model.hpp"

namespace solspeck {

// Dense/sparse exact-diagonalization reference for tiny lattices. Everything
// here works in the number-conserving sector: occupation tuples with
// sum = N and per-site cap Nmax, enumerated in ascending lexicographic order.

struct FockBasis {
  int M = 0, N = 0, Nmax = 0;
  std::vector<std::vector<int>> states;
  std::map<std::vector<int>, long> index;

  size_t size() const { return states.size(); }
  long index_of(const std::vector<int>& occ) const;  // throws if absent
};

// Throws if the sector holds more than 2e5 tuples.
FockBasis enumerate_fock_basis(int M, int N, int Nmax);

// H = sum_l [ -J (b+_l b_{l+1} + h.c.) + U/2 n_l(n_l-1) + V_l n_l ]
Eigen::SparseMatrix<double> build_hamiltonian(const LatticeModel& model, const FockBasis& basis);

struct EdGroundState {
  double energy = 0;
  Eigen::VectorXd vec;
};

// Lowest eigenpair; dense solver up to dim 3000, Lanczos with full
// reorthogonalization beyond that. Rejects dim > 1e5.
EdGroundState ed_ground_state(const LatticeModel& model, const FockBasis& basis);

// exp(-iHt) with the spectral decomposition cached (dense, dim <= 3000) or a
// Chebyshev expansion with Gershgorin bounds (sparse, dim <= 2e4).
class EdPropagator {
 public:
  enum class Method { kAuto, kDense, kChebyshev };
  EdPropagator(const LatticeModel& model, const FockBasis& basis, Method method = Method::kAuto);
  Eigen::VectorXcd apply(const Eigen::VectorXcd& state, double t) const;

 private:
  Method method_;
  Eigen::VectorXd evals_;
  Eigen::MatrixXd evecs_;
  Eigen::SparseMatrix<double> H_;
  double center_ = 0, halfwidth_ = 1;
};

Eigen::VectorXcd ed_evolve(const LatticeModel& model, const FockBasis& basis,
                           const Eigen::VectorXcd& state, double t);

// |c_s|^2 per basis tuple; input must be normalized to 1e-8.
std::vector<double> ed_born_probabilities(const Eigen::VectorXcd& state, const FockBasis& basis);

std::vector<double> ed_site_densities(const Eigen::VectorXcd& state, const FockBasis& basis);

// Maps between sector coefficients and the full d^M product basis used by
// dense_from_mps (index = sum_l occ_l d^{M-1-l}).
Eigen::VectorXcd embed_in_product_space(const Eigen::VectorXcd& coeffs, const FockBasis& basis,
                                        int d);
Eigen::VectorXcd restrict_to_basis(const Eigen::VectorXcd& full, const FockBasis& basis, int d);

}  // namespace solspeck
