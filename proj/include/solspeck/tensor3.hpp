#pragma once
#include <complex>
#include <vector>

#include <Eigen/Core>

namespace solspeck {

// Rank-3 site tensor indexed (left bond a, physical s, right bond b).
// Flat layout: idx = s*nl*nr + b*nl + a, so slice(s) is a col-major (nl x nr)
// matrix over the bond indices. This layout is also the checkpoint layout.
class Tensor3 {
 public:
  using cxd = std::complex<double>;

  Tensor3() = default;
  Tensor3(int nl, int np, int nr)
      : nl_(nl), np_(np), nr_(nr), data_(static_cast<size_t>(nl) * np * nr) {}

  int dim_l() const { return nl_; }
  int dim_p() const { return np_; }
  int dim_r() const { return nr_; }

  cxd& operator()(int a, int s, int b) {
    return data_[static_cast<size_t>(s) * nl_ * nr_ + static_cast<size_t>(b) * nl_ + a];
  }
  const cxd& operator()(int a, int s, int b) const {
    return data_[static_cast<size_t>(s) * nl_ * nr_ + static_cast<size_t>(b) * nl_ + a];
  }

  Eigen::Map<Eigen::MatrixXcd> slice(int s) {
    return {data_.data() + static_cast<size_t>(s) * nl_ * nr_, nl_, nr_};
  }
  Eigen::Map<const Eigen::MatrixXcd> slice(int s) const {
    return {data_.data() + static_cast<size_t>(s) * nl_ * nr_, nl_, nr_};
  }

  cxd* data() { return data_.data(); }
  const cxd* data() const { return data_.data(); }
  size_t size() const { return data_.size(); }

 private:
  int nl_ = 0, np_ = 0, nr_ = 0;
  std::vector<cxd> data_;
};

}  // namespace solspeck
