#pragma once
#include <complex>
#include <cstring>
#include <mutex>
#include <vector>

#include <fftw3.h>

namespace solspeck {

// RAII wrapper for FFTW complex 1D transforms of a fixed length.
// Transforms are unnormalized (FFTW convention): inverse(forward(x)) = n*x.
// Plan creation/destruction is serialized globally; an instance owns its
// work buffer, so each thread needs its own Fft1D.
class Fft1D {
 public:
  explicit Fft1D(int n) : n_(n) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    buf_ = fftw_alloc_complex(static_cast<size_t>(n));
    fwd_ = fftw_plan_dft_1d(n, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_1d(n, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~Fft1D() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(buf_);
  }
  Fft1D(const Fft1D&) = delete;
  Fft1D& operator=(const Fft1D&) = delete;

  int size() const { return n_; }

  void forward(std::vector<std::complex<double>>& x) { run(x, fwd_); }
  void inverse(std::vector<std::complex<double>>& x) { run(x, bwd_); }

 private:
  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }
  void run(std::vector<std::complex<double>>& x, fftw_plan plan) {
    std::memcpy(buf_, x.data(), sizeof(fftw_complex) * static_cast<size_t>(n_));
    fftw_execute(plan);
    std::memcpy(x.data(), buf_, sizeof(fftw_complex) * static_cast<size_t>(n_));
  }
  int n_;
  fftw_complex* buf_;
  fftw_plan fwd_, bwd_;
};

}  // namespace solspeck
