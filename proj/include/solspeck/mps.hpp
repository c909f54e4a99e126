#pragma once
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "solspeck/tensor3.hpp"

namespace solspeck {

// Matrix product state in Vidal form: site tensors gamma[0..M-1] and interior
// bond spectra lambda[0..M-2]. Every lambda is kept nonnegative, descending,
// and normalized to sum(lambda^2) = 1. The physical dimension d = Nmax+1 is
// uniform across sites; bond dimensions adapt per bond up to the cutoff chi.
//
// Gauge conventions used throughout:
//   A^{l,i} = diag(lambda^{l-1}) Gamma^{l,i}   (left-orthonormal when canonical)
//   B^{l,i} = Gamma^{l,i} diag(lambda^{l})     (right-orthonormal when canonical)
// with lambda = 1 on the open boundaries.
//
// Every bond state carries its left-block particle number in q, and gates,
// truncations, and canonicalization all act blockwise in that label. This
// keeps total number conserved exactly instead of to roundoff; without it,
// truncation noise seeds other number sectors and imaginary time amplifies
// whichever of them lies lower, which for an attractive gas is all of the
// fuller ones.

struct MPSDiagnostics {
  long lambda_clamps = 0;       // inverse-lambda evaluations hit the 1e-12 floor
  double discarded_weight = 0;  // cumulative sum(lambda^2) dropped by truncation
};

struct MPSState {
  int M = 0;     // number of sites
  int d = 0;     // local dimension, Nmax+1
  int chi = 0;   // configured bond cutoff
  std::vector<Tensor3> gamma;
  std::vector<Eigen::VectorXd> lambda;  // M-1 interior bonds
  // Particle count of the left block, one array per bond boundary 0..M.
  // q[0] = {0}, q[M] = {N}; interior q[b] is aligned with lambda[b-1].
  // Invariant: gamma[l](a,i,b) != 0 requires q[l+1][b] == q[l][a] + i.
  std::vector<std::vector<int>> q;
  MPSDiagnostics diag;

  // Bond dimension left of site l (1 at the boundaries).
  int chi_left(int l) const { return l == 0 ? 1 : static_cast<int>(lambda[l - 1].size()); }
  int chi_right(int l) const { return l == M - 1 ? 1 : static_cast<int>(lambda[l].size()); }
  int max_bond() const;
};

struct EntropyProfile {
  std::vector<double> S;  // von Neumann entropy per interior bond, natural log
  double S_max = 0;
  int argmax_bond = 0;    // 0-based bond index (bond b sits between sites b, b+1)
};

// Dense bosonic site operators on the d-dimensional truncated Fock space.
Eigen::MatrixXd boson_lower(int d);
Eigen::MatrixXd boson_raise(int d);
Eigen::MatrixXd boson_number(int d);

MPSState product_state(const std::vector<int>& occupations, int d, int chi);

// <O_l> for a hermitian single-site operator; warns on stderr and returns the
// real part if O is not hermitian.
double local_expectation(const MPSState& psi, int site, const Eigen::MatrixXcd& op);
std::complex<double> local_expectation_c(const MPSState& psi, int site,
                                         const Eigen::MatrixXcd& op);

// Single-site reduced density matrix. Throws if its trace deviates from 1 by
// more than 1e-6, which signals a corrupt canonical form upstream.
Eigen::MatrixXcd reduced_density_matrix(const MPSState& psi, int site);

std::vector<double> site_densities(const MPSState& psi);
double total_number(const MPSState& psi);

EntropyProfile entanglement_entropy(const MPSState& psi);

// <a^dag_l a_m> for all l, m. O(M^2 d chi^3).
Eigen::MatrixXcd one_body_density_matrix(const MPSState& psi);
// Largest OBDM eigenvalue over N.
double condensate_fraction(const Eigen::MatrixXcd& obdm, double n_total);

// Full contraction <psi|psi>; 1 up to truncation losses when canonical.
double norm_squared(const MPSState& psi);

// <occupations|psi>.
std::complex<double> amplitude(const MPSState& psi, const std::vector<int>& occupations);

// Max deviation from the per-site orthonormality identities in either gauge.
double canonical_defect(const MPSState& psi);

// Restore canonical form by a left-to-right QR sweep followed by a
// right-to-left SVD sweep. Lossless apart from rank trimming at relative
// singular-value level 1e-14; renormalizes the state.
void canonicalize(MPSState& psi);

// Dense state vector in the full d^M product basis (small systems only;
// throws if d^M > 2^22). Basis index = sum_l occ_l * d^{M-1-l}.
Eigen::VectorXcd dense_from_mps(const MPSState& psi);

}  // namespace solspeck
