#include <cmath>
#include <complex>
#include <numeric>

#include "doctest.h"
#include "solspeck/speckle.hpp"

using namespace solspeck;

TEST_CASE("speckle is deterministic in its seed") {
  auto a = generate_speckle(512, 0.1, 1.0, 0.4, 42);
  auto b = generate_speckle(512, 0.1, 1.0, 0.4, 42);
  auto c = generate_speckle(512, 0.1, 1.0, 0.4, 43);
  CHECK(a.values == b.values);
  bool differs = false;
  for (size_t j = 0; j < a.values.size(); ++j) differs |= a.values[j] != c.values[j];
  CHECK(differs);
}

TEST_CASE("one-point statistics: zero mean, rms V0, exponential floor") {
  const int fields = 100, M = 32768;
  double sum = 0, sum2 = 0, minv = 1e300;
  for (int f = 0; f < fields; ++f) {
    auto s = generate_speckle(M, 0.1, 1.0, 0.4, 1000 + f);
    for (double v : s.values) {
      sum += v;
      sum2 += v * v;
      minv = std::min(minv, v);
    }
  }
  const double n = double(fields) * M;
  CHECK(std::abs(sum / n) <= 0.02);
  const double rms = std::sqrt(sum2 / n);
  CHECK(rms >= 0.9);
  CHECK(rms <= 1.1);
  CHECK(minv >= -1.0 - 1e-12);  // V = V0 (I/<I> - 1) with I >= 0
}

TEST_CASE("sign conventions") {
  auto zm = generate_speckle(1024, 0.1, 0.5, 0.4, 7, SpeckleSign::zero_mean);
  auto blue = generate_speckle(1024, 0.1, 0.5, 0.4, 7, SpeckleSign::blue);
  auto red = generate_speckle(1024, 0.1, 0.5, 0.4, 7, SpeckleSign::red);
  for (int j = 0; j < 1024; ++j) {
    CHECK(blue.values[j] >= -1e-12);
    CHECK(red.values[j] <= 1e-12);
    CHECK(blue.values[j] == doctest::Approx(zm.values[j] + 0.5).epsilon(1e-12));
    CHECK(red.values[j] == doctest::Approx(-blue.values[j]).epsilon(1e-12));
  }
}

TEST_CASE("autocorrelation: sinc^2 value at sigma0 and first zero near pi sigma0") {
  const int fields = 200, M = 16384;
  std::vector<SpeckleField> batch;
  for (int f = 0; f < fields; ++f)
    batch.push_back(generate_speckle(M, 0.1, 1.0, 0.4, 5000 + f));
  auto C = autocorrelation_estimate(batch, 20);
  CHECK(C[0] == doctest::Approx(1.0).epsilon(0.05));  // V0^2
  // C(sigma0) / V0^2 = sinc^2(1) = sin(1)^2
  const double target = std::sin(1.0) * std::sin(1.0);
  CHECK(C[4] / C[0] == doctest::Approx(target).epsilon(0.15));
  // first zero of sinc^2(dz / sigma0) sits at dz = pi sigma0 = 12.57 lags
  int first_small = -1;
  for (int j = 1; j <= 20; ++j) {
    if (C[j] < 0.01 * C[0]) {
      first_small = j;
      break;
    }
  }
  CHECK(first_small >= 11);
  CHECK(first_small <= 14);
}

TEST_CASE("potential spectrum is confined to |k| <= 2/sigma0") {
  const int M = 2048;
  const double delta = 0.1, sigma0 = 0.4;
  auto s = generate_speckle(M, delta, 1.0, sigma0, 99);
  // discrete spectrum by direct summation; compare out-of-band power
  // against Parseval's total
  double total = 0;
  for (double v : s.values) total += v * v;
  total *= M;
  const double kcut = 2.0 / sigma0 * (1.0 + 1e-9);
  double out_of_band = 0;
  for (int j = 0; j < M; ++j) {
    const int jw = j <= M / 2 ? j : j - M;
    const double k = 2.0 * M_PI * jw / (M * delta);
    if (std::abs(k) <= kcut) continue;
    std::complex<double> acc = 0;
    for (int l = 0; l < M; ++l)
      acc += s.values[l] * std::exp(std::complex<double>(0, -2.0 * M_PI * j * l / M));
    out_of_band += std::norm(acc);
  }
  CHECK(out_of_band <= 1e-6 * total);
}

TEST_CASE("rejects a grid too coarse for the correlation length") {
  CHECK_THROWS(generate_speckle(128, 0.5, 1.0, 0.4, 1));  // delta > sigma0
  CHECK_NOTHROW(generate_speckle(128, 0.2, 1.0, 0.4, 1));
}
