#pragma once
#include <algorithm>
#include <complex>
#include <map>
#include <stdexcept>
#include <tuple>
#include <vector>

#include <Eigen/Core>
#include <Eigen/QR>
#include <Eigen/SVD>

#ifdef SOLSPECK_USE_LAPACKE
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>
#endif

namespace solspeck {

struct SvdResult {
  Eigen::MatrixXcd U;   // m x r
  Eigen::VectorXd s;    // r, descending
  Eigen::MatrixXcd Vh;  // r x n
};

// Thin SVD, divide-and-conquer via LAPACK when available (this is the hot
// path of every gate application), Jacobi fallback otherwise or when the
// D&C iteration fails to converge.
inline SvdResult svd_thin(const Eigen::MatrixXcd& A) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  const int r = std::min(m, n);
  SvdResult out;
#ifdef SOLSPECK_USE_LAPACKE
  {
    Eigen::MatrixXcd work = A;
    out.U.resize(m, r);
    out.Vh.resize(r, n);
    out.s.resize(r);
    const lapack_int info = LAPACKE_zgesdd(
        LAPACK_COL_MAJOR, 'S', m, n, work.data(), m, out.s.data(), out.U.data(),
        m, out.Vh.data(), r);
    if (info == 0) return out;
  }
#endif
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw std::runtime_error("SVD failed to converge");
  out.U = svd.matrixU();
  out.s = svd.singularValues();
  out.Vh = svd.matrixV().adjoint();
  return out;
}

struct ChargedSvd {
  Eigen::MatrixXcd U;       // m x r, rows outside each block's charge are zero
  Eigen::VectorXd s;        // r, globally descending
  Eigen::MatrixXcd Vh;      // r x n
  std::vector<int> charge;  // per singular value, aligned with s
};

// SVD of a matrix whose nonzero entries sit in blocks of matching row/column
// charge. Factorizes each block separately and merges the results into one
// globally sorted spectrum with zero-padded U and Vh, so callers can truncate
// across blocks exactly as for a dense SVD. Entries outside the blocks are
// ignored, which projects away cross-charge roundoff. Column charges with no
// matching row (or vice versa) contribute nothing.
inline ChargedSvd svd_thin_charged(const Eigen::MatrixXcd& A, const std::vector<int>& rowq,
                                   const std::vector<int>& colq) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  if (static_cast<int>(rowq.size()) != m || static_cast<int>(colq.size()) != n)
    throw std::invalid_argument("charge labels do not match matrix shape");
  std::map<int, std::vector<int>> rows, cols;
  for (int i = 0; i < m; ++i) rows[rowq[i]].push_back(i);
  for (int j = 0; j < n; ++j) cols[colq[j]].push_back(j);

  struct Block {
    int c;
    const std::vector<int>* r;
    const std::vector<int>* co;
    SvdResult svd;
  };
  std::vector<Block> blocks;
  int r_total = 0;
  for (auto& [c, rlist] : rows) {
    auto it = cols.find(c);
    if (it == cols.end()) continue;
    Eigen::MatrixXcd sub(rlist.size(), it->second.size());
    for (int jj = 0; jj < sub.cols(); ++jj)
      for (int ii = 0; ii < sub.rows(); ++ii) sub(ii, jj) = A(rlist[ii], it->second[jj]);
    Block blk{c, &rlist, &it->second, svd_thin(sub)};
    r_total += static_cast<int>(blk.svd.s.size());
    blocks.push_back(std::move(blk));
  }
  if (blocks.empty())
    throw std::runtime_error("no overlapping charge sector between rows and columns");

  std::vector<std::tuple<double, int, int>> order;  // (-sigma, block, local index)
  order.reserve(r_total);
  for (int b = 0; b < static_cast<int>(blocks.size()); ++b)
    for (int k = 0; k < blocks[b].svd.s.size(); ++k)
      order.emplace_back(-blocks[b].svd.s(k), b, k);
  std::sort(order.begin(), order.end());

  ChargedSvd out;
  out.U = Eigen::MatrixXcd::Zero(m, r_total);
  out.Vh = Eigen::MatrixXcd::Zero(r_total, n);
  out.s.resize(r_total);
  out.charge.resize(r_total);
  for (int t = 0; t < r_total; ++t) {
    const auto& [neg_s, b, k] = order[t];
    const Block& blk = blocks[b];
    out.s(t) = -neg_s;
    out.charge[t] = blk.c;
    for (int ii = 0; ii < static_cast<int>(blk.r->size()); ++ii)
      out.U((*blk.r)[ii], t) = blk.svd.U(ii, k);
    for (int jj = 0; jj < static_cast<int>(blk.co->size()); ++jj)
      out.Vh(t, (*blk.co)[jj]) = blk.svd.Vh(k, jj);
  }
  return out;
}

struct ChargedQr {
  Eigen::MatrixXcd Q;       // m x r, orthonormal columns, block aligned
  Eigen::MatrixXcd R;       // r x n
  std::vector<int> charge;  // per Q column / R row
};

// Blockwise thin QR under the same charge structure as svd_thin_charged.
// Columns are grouped by charge in ascending order; no rank trimming here,
// each block keeps min(rows, cols) columns of Q.
inline ChargedQr qr_thin_charged(const Eigen::MatrixXcd& A, const std::vector<int>& rowq,
                                 const std::vector<int>& colq) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  if (static_cast<int>(rowq.size()) != m || static_cast<int>(colq.size()) != n)
    throw std::invalid_argument("charge labels do not match matrix shape");
  std::map<int, std::vector<int>> rows, cols;
  for (int i = 0; i < m; ++i) rows[rowq[i]].push_back(i);
  for (int j = 0; j < n; ++j) cols[colq[j]].push_back(j);

  struct Block {
    int c;
    const std::vector<int>* r;
    const std::vector<int>* co;
    Eigen::MatrixXcd Q;
    Eigen::MatrixXcd R;
  };
  std::vector<Block> blocks;
  int r_total = 0;
  for (auto& [c, rlist] : rows) {
    auto it = cols.find(c);
    if (it == cols.end()) continue;
    const int bm = static_cast<int>(rlist.size());
    const int bn = static_cast<int>(it->second.size());
    Eigen::MatrixXcd sub(bm, bn);
    for (int jj = 0; jj < bn; ++jj)
      for (int ii = 0; ii < bm; ++ii) sub(ii, jj) = A(rlist[ii], it->second[jj]);
    const int br = std::min(bm, bn);
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(sub);
    Block blk{c, &rlist, &it->second, Eigen::MatrixXcd{}, Eigen::MatrixXcd{}};
    blk.Q = qr.householderQ() * Eigen::MatrixXcd::Identity(bm, br);
    blk.R = qr.matrixQR().topRows(br).triangularView<Eigen::Upper>();
    r_total += br;
    blocks.push_back(std::move(blk));
  }
  if (blocks.empty())
    throw std::runtime_error("no overlapping charge sector between rows and columns");

  ChargedQr out;
  out.Q = Eigen::MatrixXcd::Zero(m, r_total);
  out.R = Eigen::MatrixXcd::Zero(r_total, n);
  out.charge.resize(r_total);
  int t = 0;
  for (const Block& blk : blocks) {
    for (int k = 0; k < blk.Q.cols(); ++k, ++t) {
      out.charge[t] = blk.c;
      for (int ii = 0; ii < static_cast<int>(blk.r->size()); ++ii)
        out.Q((*blk.r)[ii], t) = blk.Q(ii, k);
      for (int jj = 0; jj < static_cast<int>(blk.co->size()); ++jj)
        out.R(t, (*blk.co)[jj]) = blk.R(k, jj);
    }
  }
  return out;
}

}  // namespace solspeck
