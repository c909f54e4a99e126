#include "solspeck/mps.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <Eigen/Dense>

#include "svd_util.hpp"

namespace solspeck {

namespace {

constexpr double kLambdaFloor = 1e-12;
constexpr double kRankTrimRel = 1e-14;

Eigen::VectorXd lambda_left(const MPSState& psi, int l) {
  if (l == 0) return Eigen::VectorXd::Ones(1);
  return psi.lambda[l - 1];
}

Eigen::VectorXd lambda_right(const MPSState& psi, int l) {
  if (l == psi.M - 1) return Eigen::VectorXd::Ones(1);
  return psi.lambda[l];
}

// A^{l,i} = diag(lambda^{l-1}) Gamma^{l,i}
Eigen::MatrixXcd a_slice(const MPSState& psi, int l, int i) {
  Eigen::MatrixXcd A = psi.gamma[l].slice(i);
  if (l > 0) A.array().colwise() *= psi.lambda[l - 1].array();
  return A;
}

// rho_{ij} = sum_{ab} lamL_a^2 Gamma^i_{ab} conj(Gamma^j_{ab}) lamR_b^2
Eigen::MatrixXcd rdm_unchecked(const MPSState& psi, int site) {
  const int d = psi.d;
  const Eigen::VectorXd lamL = lambda_left(psi, site);
  const Eigen::VectorXd lamR = lambda_right(psi, site);
  const int nl = static_cast<int>(lamL.size());
  const int nr = static_cast<int>(lamR.size());
  Eigen::MatrixXcd stacked(static_cast<Eigen::Index>(nl) * nr, d);
  for (int i = 0; i < d; ++i) {
    Eigen::MatrixXcd X = psi.gamma[site].slice(i);
    X.array().colwise() *= lamL.array();
    X.array().rowwise() *= lamR.transpose().array();
    stacked.col(i) = Eigen::Map<const Eigen::VectorXcd>(X.data(), X.size());
  }
  Eigen::MatrixXcd rho = (stacked.adjoint() * stacked).transpose();
  return 0.5 * (rho + rho.adjoint().eval());
}

}  // namespace

int MPSState::max_bond() const {
  int b = 1;
  for (const auto& lam : lambda) b = std::max(b, static_cast<int>(lam.size()));
  return b;
}

Eigen::MatrixXd boson_lower(int d) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
  for (int n = 1; n < d; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

Eigen::MatrixXd boson_raise(int d) { return boson_lower(d).transpose(); }

Eigen::MatrixXd boson_number(int d) {
  Eigen::VectorXd n(d);
  for (int i = 0; i < d; ++i) n(i) = i;
  return n.asDiagonal();
}

MPSState product_state(const std::vector<int>& occupations, int d, int chi) {
  if (occupations.empty()) throw std::invalid_argument("product_state: empty occupation list");
  if (d < 1) throw std::invalid_argument("product_state: local dimension must be >= 1");
  if (chi < 1) throw std::invalid_argument("product_state: bond cutoff must be >= 1");
  MPSState psi;
  psi.M = static_cast<int>(occupations.size());
  psi.d = d;
  psi.chi = chi;
  psi.gamma.reserve(psi.M);
  for (int l = 0; l < psi.M; ++l) {
    const int occ = occupations[l];
    if (occ < 0 || occ >= d)
      throw std::invalid_argument("product_state: occupation out of range at site " +
                                  std::to_string(l));
    Tensor3 g(1, d, 1);
    g(0, occ, 0) = 1.0;
    psi.gamma.push_back(std::move(g));
  }
  psi.lambda.assign(psi.M - 1, Eigen::VectorXd::Ones(1));
  psi.q.resize(psi.M + 1);
  int running = 0;
  psi.q[0] = {0};
  for (int l = 0; l < psi.M; ++l) {
    running += occupations[l];
    psi.q[l + 1] = {running};
  }
  return psi;
}

Eigen::MatrixXcd reduced_density_matrix(const MPSState& psi, int site) {
  if (site < 0 || site >= psi.M) throw std::out_of_range("reduced_density_matrix: bad site");
  Eigen::MatrixXcd rho = rdm_unchecked(psi, site);
  const double tr = rho.trace().real();
  if (std::abs(tr - 1.0) > 1e-6)
    throw std::runtime_error(
        "reduced_density_matrix: trace deviates from 1 by " + std::to_string(std::abs(tr - 1.0)) +
        " at site " + std::to_string(site) + "; canonical form is corrupt");
  return rho;
}

std::complex<double> local_expectation_c(const MPSState& psi, int site,
                                         const Eigen::MatrixXcd& op) {
  if (op.rows() != psi.d || op.cols() != psi.d)
    throw std::invalid_argument("local_expectation: operator dimension mismatch");
  return (reduced_density_matrix(psi, site) * op).trace();
}

double local_expectation(const MPSState& psi, int site, const Eigen::MatrixXcd& op) {
  const double herm_dev = (op - op.adjoint()).cwiseAbs().maxCoeff();
  if (herm_dev > 1e-10 * (1.0 + op.cwiseAbs().maxCoeff()))
    std::fprintf(stderr,
                 "local_expectation: operator at site %d is not hermitian (dev %.3e), "
                 "returning real part\n",
                 site, herm_dev);
  return local_expectation_c(psi, site, op).real();
}

std::vector<double> site_densities(const MPSState& psi) {
  std::vector<double> n(psi.M);
  const Eigen::MatrixXcd num = boson_number(psi.d);
  for (int l = 0; l < psi.M; ++l) n[l] = (reduced_density_matrix(psi, l) * num).trace().real();
  return n;
}

double total_number(const MPSState& psi) {
  double s = 0;
  for (double v : site_densities(psi)) s += v;
  return s;
}

EntropyProfile entanglement_entropy(const MPSState& psi) {
  EntropyProfile prof;
  prof.S.reserve(psi.lambda.size());
  for (const auto& lam : psi.lambda) {
    double S = 0;
    for (int k = 0; k < lam.size(); ++k) {
      const double p = lam(k) * lam(k);
      if (p > 1e-300) S -= p * std::log(p);
    }
    prof.S.push_back(S);
  }
  for (size_t b = 0; b < prof.S.size(); ++b) {
    if (prof.S[b] > prof.S_max) {
      prof.S_max = prof.S[b];
      prof.argmax_bond = static_cast<int>(b);
    }
  }
  return prof;
}

double norm_squared(const MPSState& psi) {
  Eigen::MatrixXcd L = Eigen::MatrixXcd::Ones(1, 1);
  for (int l = 0; l < psi.M; ++l) {
    Eigen::MatrixXcd Lnew =
        Eigen::MatrixXcd::Zero(psi.chi_right(l), psi.chi_right(l));
    for (int i = 0; i < psi.d; ++i) {
      const Eigen::MatrixXcd A = a_slice(psi, l, i);
      Lnew.noalias() += A.adjoint() * L * A;
    }
    L = std::move(Lnew);
  }
  return L(0, 0).real();
}

std::complex<double> amplitude(const MPSState& psi, const std::vector<int>& occupations) {
  if (static_cast<int>(occupations.size()) != psi.M)
    throw std::invalid_argument("amplitude: occupation list length mismatch");
  Eigen::RowVectorXcd v = Eigen::RowVectorXcd::Ones(1);
  for (int l = 0; l < psi.M; ++l) {
    const int occ = occupations[l];
    if (occ < 0 || occ >= psi.d)
      throw std::invalid_argument("amplitude: occupation out of range");
    v = v * psi.gamma[l].slice(occ);
    if (l < psi.M - 1) v.array() *= psi.lambda[l].transpose().array();
  }
  return v(0);
}

double canonical_defect(const MPSState& psi) {
  double worst = 0;
  for (int l = 0; l < psi.M; ++l) {
    const int cl = psi.chi_left(l);
    const int cr = psi.chi_right(l);
    Eigen::MatrixXcd left = Eigen::MatrixXcd::Zero(cr, cr);
    Eigen::MatrixXcd right = Eigen::MatrixXcd::Zero(cl, cl);
    const Eigen::VectorXd lamR = lambda_right(psi, l);
    for (int i = 0; i < psi.d; ++i) {
      const Eigen::MatrixXcd A = a_slice(psi, l, i);
      left.noalias() += A.adjoint() * A;
      Eigen::MatrixXcd B = psi.gamma[l].slice(i);
      B.array().rowwise() *= lamR.transpose().array();
      right.noalias() += B * B.adjoint();
    }
    left -= Eigen::MatrixXcd::Identity(cr, cr);
    right -= Eigen::MatrixXcd::Identity(cl, cl);
    worst = std::max(worst, left.cwiseAbs().maxCoeff());
    worst = std::max(worst, right.cwiseAbs().maxCoeff());
  }
  return worst;
}

void canonicalize(MPSState& psi) {
  const int M = psi.M;
  const int d = psi.d;
  if (static_cast<int>(psi.q.size()) != M + 1)
    throw std::logic_error("canonicalize: state carries no charge labels");

  // Left-to-right QR sweep: accumulate left-orthonormal tensors. Both sweeps
  // factorize blockwise in the bond charge, which threads the labels through
  // and projects away cross-sector roundoff.
  std::vector<Tensor3> aq(M);
  std::vector<std::vector<int>> qa(M + 1);  // boundary labels of the A chain
  qa[0] = psi.q[0];
  Eigen::MatrixXcd X = Eigen::MatrixXcd::Ones(1, 1);
  for (int l = 0; l < M; ++l) {
    const int xl = static_cast<int>(X.rows());
    const int cr = psi.chi_right(l);
    const Eigen::VectorXd lamR = lambda_right(psi, l);
    Eigen::MatrixXcd T(static_cast<Eigen::Index>(xl) * d, cr);
    std::vector<int> rowT(static_cast<size_t>(xl) * d);
    for (int i = 0; i < d; ++i) {
      Eigen::MatrixXcd B = psi.gamma[l].slice(i);
      B.array().rowwise() *= lamR.transpose().array();
      T.block(static_cast<Eigen::Index>(i) * xl, 0, xl, cr).noalias() = X * B;
      for (int a = 0; a < xl; ++a) rowT[static_cast<size_t>(i) * xl + a] = qa[l][a] + i;
    }
    ChargedQr qr = qr_thin_charged(T, rowT, psi.q[l + 1]);
    const int r = static_cast<int>(qr.charge.size());
    aq[l] = Tensor3(xl, d, r);
    for (int i = 0; i < d; ++i)
      aq[l].slice(i) = qr.Q.block(static_cast<Eigen::Index>(i) * xl, 0, xl, r);
    qa[l + 1] = std::move(qr.charge);
    X = std::move(qr.R);
  }
  // X is now 1x1 and carries the norm; dropping it renormalizes.

  // Right-to-left SVD sweep: extract Schmidt spectra and Vidal tensors.
  Eigen::MatrixXcd Y = Eigen::MatrixXcd::Ones(1, 1);
  std::vector<int> qy = qa[M];  // labels of Y's columns, boundary l+1
  for (int l = M - 1; l >= 0; --l) {
    const int rl = aq[l].dim_l();
    const int ry = static_cast<int>(Y.cols());
    Eigen::MatrixXcd W(rl, static_cast<Eigen::Index>(d) * ry);
    std::vector<int> colW(static_cast<size_t>(d) * ry);
    for (int i = 0; i < d; ++i) {
      W.block(0, static_cast<Eigen::Index>(i) * ry, rl, ry).noalias() =
          aq[l].slice(i) * Y;
      for (int y = 0; y < ry; ++y) colW[static_cast<size_t>(i) * ry + y] = qy[y] - i;
    }
    ChargedSvd svd = svd_thin_charged(W, qa[l], colW);
    int k = 1;
    const double cut = svd.s(0) * kRankTrimRel;
    while (k < svd.s.size() && svd.s(k) > cut) ++k;

    Eigen::VectorXd lamNew;
    if (l > 0) {
      lamNew = svd.s.head(k);
      lamNew /= lamNew.norm();
    }
    psi.gamma[l] = Tensor3(k, d, ry);
    for (int i = 0; i < d; ++i) {
      Eigen::MatrixXcd blk = svd.Vh.block(0, static_cast<Eigen::Index>(i) * ry, k, ry);
      if (l < M - 1) {
        for (int b = 0; b < ry; ++b) {
          double lam = psi.lambda[l](b);
          if (lam < kLambdaFloor) {
            lam = kLambdaFloor;
            ++psi.diag.lambda_clamps;
          }
          blk.col(b) /= lam;
        }
      }
      psi.gamma[l].slice(i) = blk;
    }
    qy.assign(svd.charge.begin(), svd.charge.begin() + k);
    if (l > 0) {
      psi.lambda[l - 1] = lamNew;
      psi.q[l] = qy;
    }
    Y = svd.U.leftCols(k) * svd.s.head(k).asDiagonal();
  }
}

Eigen::MatrixXcd one_body_density_matrix(const MPSState& psi) {
  const int M = psi.M;
  const int d = psi.d;
  const Eigen::MatrixXcd araise = boson_raise(d);
  const Eigen::MatrixXcd alower = boson_lower(d);
  Eigen::MatrixXcd obdm = Eigen::MatrixXcd::Zero(M, M);

  const Eigen::MatrixXcd num = boson_number(d);
  for (int l = 0; l < M; ++l)
    obdm(l, l) = (rdm_unchecked(psi, l) * num).trace().real();

  for (int l = 0; l < M; ++l) {
    // E after applying a^dag at site l against identity left environment.
    Eigen::MatrixXcd E;
    {
      const int cr = psi.chi_right(l);
      E = Eigen::MatrixXcd::Zero(cr, cr);
      for (int i = 0; i + 1 < d; ++i) {
        // <a^dag>: bra index i+1, ket index i, weight sqrt(i+1)
        const Eigen::MatrixXcd Aket = a_slice(psi, l, i);
        const Eigen::MatrixXcd Abra = a_slice(psi, l, i + 1);
        E.noalias() += std::sqrt(i + 1.0) * (Abra.adjoint() * Aket);
      }
    }
    for (int m = l + 1; m < M; ++m) {
      // close at m with a, right environment diag(lambda^m)^2
      const Eigen::VectorXd lamR = lambda_right(psi, m);
      std::complex<double> val = 0;
      for (int i = 1; i < d; ++i) {
        const Eigen::MatrixXcd Aket = a_slice(psi, m, i);
        const Eigen::MatrixXcd Abra = a_slice(psi, m, i - 1);
        const Eigen::MatrixXcd G = Abra.adjoint() * (E * Aket);
        for (int b = 0; b < G.rows(); ++b)
          val += std::sqrt(static_cast<double>(i)) * G(b, b) * lamR(b) * lamR(b);
      }
      obdm(l, m) = val;
      obdm(m, l) = std::conj(val);
      if (m < M - 1) {
        // identity transfer through site m
        Eigen::MatrixXcd Enew =
            Eigen::MatrixXcd::Zero(psi.chi_right(m), psi.chi_right(m));
        for (int i = 0; i < d; ++i) {
          const Eigen::MatrixXcd A = a_slice(psi, m, i);
          Enew.noalias() += A.adjoint() * (E * A);
        }
        E = std::move(Enew);
      }
    }
  }
  return obdm;
}

double condensate_fraction(const Eigen::MatrixXcd& obdm, double n_total) {
  if (n_total <= 0) throw std::invalid_argument("condensate_fraction: total number must be > 0");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (obdm + obdm.adjoint()));
  return es.eigenvalues().maxCoeff() / n_total;
}

Eigen::VectorXcd dense_from_mps(const MPSState& psi) {
  const double sz = std::pow(static_cast<double>(psi.d), psi.M);
  if (sz > static_cast<double>(1 << 22))
    throw std::invalid_argument("dense_from_mps: d^M too large for dense expansion");
  const auto dim = static_cast<Eigen::Index>(sz + 0.5);
  Eigen::MatrixXcd D = Eigen::MatrixXcd::Ones(1, 1);
  Eigen::Index prefixes = 1;
  for (int l = 0; l < psi.M; ++l) {
    const int cr = psi.chi_right(l);
    Eigen::MatrixXcd Dnew(prefixes * psi.d, cr);
    for (int i = 0; i < psi.d; ++i) {
      const Eigen::MatrixXcd tmp = D * a_slice(psi, l, i);
      for (Eigen::Index p = 0; p < prefixes; ++p) Dnew.row(p * psi.d + i) = tmp.row(p);
    }
    D = std::move(Dnew);
    prefixes *= psi.d;
  }
  if (D.rows() != dim || D.cols() != 1)
    throw std::logic_error("dense_from_mps: contraction shape error");
  return D.col(0);
}

}  // namespace solspeck
