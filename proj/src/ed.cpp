#include "solspeck/ed.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "solspeck/rng.hpp"

namespace solspeck {

namespace {

constexpr size_t kBasisHardCap = 200000;
constexpr int kDenseDimCap = 3000;

void enumerate_rec(int M, int remaining, int cap, std::vector<int>& cur,
                   std::vector<std::vector<int>>& out) {
  const int site = static_cast<int>(cur.size());
  if (site == M - 1) {
    if (remaining <= cap) {
      cur.push_back(remaining);
      out.push_back(cur);
      cur.pop_back();
    }
    return;
  }
  const int hi = std::min(cap, remaining);
  const int lo = std::max(0, remaining - cap * (M - 1 - site));
  for (int occ = lo; occ <= hi; ++occ) {
    cur.push_back(occ);
    enumerate_rec(M, remaining - occ, cap, cur, out);
    cur.pop_back();
    if (out.size() > kBasisHardCap)
      throw std::invalid_argument("enumerate_fock_basis: sector exceeds hard cap");
  }
}

Eigen::VectorXcd real_times_complex(const Eigen::MatrixXd& A, const Eigen::VectorXcd& v) {
  const Eigen::VectorXd vr = v.real(), vi = v.imag();
  Eigen::VectorXcd out(A.rows());
  out.real() = A * vr;
  out.imag() = A * vi;
  return out;
}

Eigen::VectorXcd real_times_complex(const Eigen::SparseMatrix<double>& A,
                                    const Eigen::VectorXcd& v) {
  const Eigen::VectorXd vr = v.real(), vi = v.imag();
  Eigen::VectorXcd out(A.rows());
  out.real() = A * vr;
  out.imag() = A * vi;
  return out;
}

}  // namespace

long FockBasis::index_of(const std::vector<int>& occ) const {
  auto it = index.find(occ);
  if (it == index.end())
    throw std::invalid_argument("FockBasis: occupation tuple not in sector");
  return it->second;
}

FockBasis enumerate_fock_basis(int M, int N, int Nmax) {
  if (M < 1 || N < 0 || Nmax < 0)
    throw std::invalid_argument("enumerate_fock_basis: bad dimensions");
  FockBasis basis;
  basis.M = M;
  basis.N = N;
  basis.Nmax = Nmax;
  std::vector<int> cur;
  cur.reserve(M);
  enumerate_rec(M, N, Nmax, cur, basis.states);
  if (basis.states.empty())
    throw std::invalid_argument("enumerate_fock_basis: empty sector (N > M*Nmax?)");
  for (size_t s = 0; s < basis.states.size(); ++s)
    basis.index[basis.states[s]] = static_cast<long>(s);
  return basis;
}

Eigen::SparseMatrix<double> build_hamiltonian(const LatticeModel& model, const FockBasis& basis) {
  if (model.M != basis.M || model.N != basis.N || model.Nmax != basis.Nmax)
    throw std::invalid_argument("build_hamiltonian: model/basis mismatch");
  const auto dim = static_cast<long>(basis.size());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(dim) * (model.M + 1));
  std::vector<int> tmp;
  for (long s = 0; s < dim; ++s) {
    const auto& occ = basis.states[s];
    double diag = 0;
    for (int l = 0; l < model.M; ++l) {
      const double n = occ[l];
      diag += 0.5 * model.U * n * (n - 1) + model.V[l] * n;
    }
    trip.emplace_back(s, s, diag);
    for (int l = 0; l + 1 < model.M; ++l) {
      // b+_{l+1} b_l : move one particle right
      if (occ[l] > 0 && occ[l + 1] < model.Nmax) {
        tmp = occ;
        --tmp[l];
        ++tmp[l + 1];
        const long s2 = basis.index_of(tmp);
        trip.emplace_back(s2, s, -model.J * std::sqrt(occ[l] * (occ[l + 1] + 1.0)));
      }
      // b+_l b_{l+1} : move one particle left
      if (occ[l + 1] > 0 && occ[l] < model.Nmax) {
        tmp = occ;
        ++tmp[l];
        --tmp[l + 1];
        const long s2 = basis.index_of(tmp);
        trip.emplace_back(s2, s, -model.J * std::sqrt(occ[l + 1] * (occ[l] + 1.0)));
      }
    }
  }
  Eigen::SparseMatrix<double> H(dim, dim);
  H.setFromTriplets(trip.begin(), trip.end());
  return H;
}

EdGroundState ed_ground_state(const LatticeModel& model, const FockBasis& basis) {
  const auto dim = static_cast<long>(basis.size());
  if (dim > 100000)
    throw std::invalid_argument("ed_ground_state: basis size " + std::to_string(dim) +
                                " exceeds 1e5");
  const Eigen::SparseMatrix<double> H = build_hamiltonian(model, basis);
  EdGroundState out;
  if (dim <= kDenseDimCap) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(H)};
    out.energy = es.eigenvalues()(0);
    out.vec = es.eigenvectors().col(0);
    return out;
  }
  // Lanczos with full reorthogonalization for the lowest eigenpair.
  const int max_iter = std::min<long>(dim, 500);
  Eigen::MatrixXd V(dim, max_iter);
  Eigen::VectorXd alpha(max_iter), beta(max_iter);
  SplitMix64 rng(12345);
  Eigen::VectorXd v(dim);
  for (long i = 0; i < dim; ++i) v(i) = rng.gaussian();
  v.normalize();
  V.col(0) = v;
  double prev_theta = 1e300;
  int k = 0;
  for (; k < max_iter; ++k) {
    Eigen::VectorXd w = H * V.col(k);
    alpha(k) = V.col(k).dot(w);
    w -= alpha(k) * V.col(k);
    if (k > 0) w -= beta(k - 1) * V.col(k - 1);
    // two-pass reorthogonalization
    for (int pass = 0; pass < 2; ++pass)
      w -= V.leftCols(k + 1) * (V.leftCols(k + 1).transpose() * w);
    beta(k) = w.norm();
    const bool breakdown = beta(k) < 1e-13;
    if ((k + 1) % 20 == 0 || k + 1 == max_iter || breakdown) {
      Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k + 1, k + 1);
      for (int j = 0; j <= k; ++j) {
        T(j, j) = alpha(j);
        if (j < k) T(j, j + 1) = T(j + 1, j) = beta(j);
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
      const double theta = es.eigenvalues()(0);
      const double resid = breakdown ? 0.0 : std::abs(beta(k) * es.eigenvectors()(k, 0));
      if (resid < 1e-11 * std::max(1.0, std::abs(theta)) ||
          std::abs(theta - prev_theta) < 1e-13 * std::max(1.0, std::abs(theta)) || breakdown) {
        out.energy = theta;
        out.vec = V.leftCols(k + 1) * es.eigenvectors().col(0);
        out.vec.normalize();
        return out;
      }
      prev_theta = theta;
    }
    if (breakdown) break;
    if (k + 1 < max_iter) V.col(k + 1) = w / beta(k);
  }
  throw std::runtime_error("ed_ground_state: Lanczos did not converge");
}

EdPropagator::EdPropagator(const LatticeModel& model, const FockBasis& basis, Method method) {
  const auto dim = static_cast<long>(basis.size());
  if (dim > 20000)
    throw std::invalid_argument("EdPropagator: basis size " + std::to_string(dim) +
                                " exceeds 2e4");
  H_ = build_hamiltonian(model, basis);
  if (method == Method::kAuto)
    method = dim <= kDenseDimCap ? Method::kDense : Method::kChebyshev;
  method_ = method;
  if (method_ == Method::kDense) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(H_)};
    evals_ = es.eigenvalues();
    evecs_ = es.eigenvectors();
  } else {
    // Gershgorin bounds on the spectrum
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(dim, 1e300);
    Eigen::VectorXd hi = Eigen::VectorXd::Constant(dim, -1e300);
    for (int col = 0; col < H_.outerSize(); ++col) {
      double diag = 0, offsum = 0;
      for (Eigen::SparseMatrix<double>::InnerIterator it(H_, col); it; ++it) {
        if (it.row() == col)
          diag = it.value();
        else
          offsum += std::abs(it.value());
      }
      lo(col) = diag - offsum;
      hi(col) = diag + offsum;
    }
    const double a = lo.minCoeff(), b = hi.maxCoeff();
    center_ = 0.5 * (a + b);
    halfwidth_ = 0.5 * (b - a) * (1 + 1e-9) + 1e-30;
  }
}

Eigen::VectorXcd EdPropagator::apply(const Eigen::VectorXcd& state, double t) const {
  using cxd = std::complex<double>;
  if (state.size() != H_.rows())
    throw std::invalid_argument("EdPropagator: state dimension mismatch");
  if (method_ == Method::kDense) {
    const Eigen::VectorXd sr = state.real(), si = state.imag();
    Eigen::VectorXcd coeff(state.size());
    coeff.real() = evecs_.transpose() * sr;
    coeff.imag() = evecs_.transpose() * si;
    for (long j = 0; j < coeff.size(); ++j)
      coeff(j) *= std::exp(cxd(0, -evals_(j) * t));
    return real_times_complex(evecs_, coeff);
  }
  // exp(-iHt) psi = e^{-ict} sum_k (2-d_{k0}) (-i)^k J_k(r t) T_k(Htilde) psi
  const double rt = std::abs(halfwidth_ * t);
  const int K = static_cast<int>(std::ceil(rt + 40 + 12 * std::log(2 + rt)));
  const double inv_r = 1.0 / halfwidth_;
  auto apply_scaled = [&](const Eigen::VectorXcd& v) -> Eigen::VectorXcd {
    return inv_r * (real_times_complex(H_, v) - center_ * v);
  };
  Eigen::VectorXcd tkm1 = state;
  Eigen::VectorXcd tk = apply_scaled(state);
  const double sgn_t = t >= 0 ? 1.0 : -1.0;
  Eigen::VectorXcd acc = std::cyl_bessel_j(0, rt) * tkm1;
  const cxd mi(0, -sgn_t);
  cxd phase = mi;
  acc += 2.0 * phase * std::cyl_bessel_j(1, rt) * tk;
  for (int k = 2; k <= K; ++k) {
    Eigen::VectorXcd tkp1 = 2.0 * apply_scaled(tk) - tkm1;
    tkm1 = std::move(tk);
    tk = std::move(tkp1);
    phase *= mi;
    const double jk = std::cyl_bessel_j(k, rt);
    acc += 2.0 * phase * jk * tk;
    if (k > rt && std::abs(jk) < 1e-17) break;
  }
  return std::exp(cxd(0, -center_ * t)) * acc;
}

Eigen::VectorXcd ed_evolve(const LatticeModel& model, const FockBasis& basis,
                           const Eigen::VectorXcd& state, double t) {
  return EdPropagator(model, basis).apply(state, t);
}

std::vector<double> ed_born_probabilities(const Eigen::VectorXcd& state, const FockBasis& basis) {
  if (state.size() != static_cast<long>(basis.size()))
    throw std::invalid_argument("ed_born_probabilities: dimension mismatch");
  if (std::abs(state.norm() - 1.0) > 1e-8)
    throw std::invalid_argument("ed_born_probabilities: state not normalized");
  std::vector<double> p(basis.size());
  for (size_t s = 0; s < basis.size(); ++s) p[s] = std::norm(state(static_cast<long>(s)));
  return p;
}

std::vector<double> ed_site_densities(const Eigen::VectorXcd& state, const FockBasis& basis) {
  if (state.size() != static_cast<long>(basis.size()))
    throw std::invalid_argument("ed_site_densities: dimension mismatch");
  std::vector<double> n(basis.M, 0.0);
  for (size_t s = 0; s < basis.size(); ++s) {
    const double w = std::norm(state(static_cast<long>(s)));
    for (int l = 0; l < basis.M; ++l) n[l] += w * basis.states[s][l];
  }
  return n;
}

Eigen::VectorXcd embed_in_product_space(const Eigen::VectorXcd& coeffs, const FockBasis& basis,
                                        int d) {
  if (coeffs.size() != static_cast<long>(basis.size()))
    throw std::invalid_argument("embed_in_product_space: dimension mismatch");
  if (d <= basis.Nmax) throw std::invalid_argument("embed_in_product_space: d must exceed Nmax");
  double dim = std::pow(static_cast<double>(d), basis.M);
  if (dim > static_cast<double>(1 << 22))
    throw std::invalid_argument("embed_in_product_space: d^M too large");
  Eigen::VectorXcd full = Eigen::VectorXcd::Zero(static_cast<long>(dim + 0.5));
  for (size_t s = 0; s < basis.size(); ++s) {
    long idx = 0;
    for (int l = 0; l < basis.M; ++l) idx = idx * d + basis.states[s][l];
    full(idx) = coeffs(static_cast<long>(s));
  }
  return full;
}

Eigen::VectorXcd restrict_to_basis(const Eigen::VectorXcd& full, const FockBasis& basis, int d) {
  double dim = std::pow(static_cast<double>(d), basis.M);
  if (full.size() != static_cast<long>(dim + 0.5))
    throw std::invalid_argument("restrict_to_basis: dimension mismatch");
  Eigen::VectorXcd coeffs(static_cast<long>(basis.size()));
  for (size_t s = 0; s < basis.size(); ++s) {
    long idx = 0;
    for (int l = 0; l < basis.M; ++l) idx = idx * d + basis.states[s][l];
    coeffs(static_cast<long>(s)) = full(idx);
  }
  return coeffs;
}

}  // namespace solspeck
