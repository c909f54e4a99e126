// Scaling micro-benchmarks for the three hot kernels: two-site gate + SVD
// (chi^3 d^3), one-body density matrix (M^2 chi^3), projective sampling
// (M d chi^2). `--check` verifies the measured doubling ratios against the
// expected powers with wide tolerances; anything tighter flakes on shared
// machines.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "CLI11.hpp"

#include "solspeck/measurement.hpp"
#include "solspeck/mps.hpp"
#include "solspeck/rng.hpp"
#include "solspeck/tebd.hpp"

using namespace solspeck;

namespace {

Eigen::MatrixXcd random_unitary(int n, SplitMix64& rng) {
  Eigen::MatrixXcd a(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) a(i, j) = {rng.gaussian(), rng.gaussian()};
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a);
  return qr.householderQ() * Eigen::MatrixXcd::Identity(n, n);
}

// Number-conserving random two-site unitary: Haar block per i+j sector,
// matching the gate structure apply_gate requires.
Eigen::MatrixXcd random_conserving_gate(int d, SplitMix64& rng) {
  Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(d * d, d * d);
  for (int c = 0; c <= 2 * (d - 1); ++c) {
    std::vector<int> idx;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        if (i + j == c) idx.push_back(i * d + j);
    Eigen::MatrixXcd u = random_unitary(static_cast<int>(idx.size()), rng);
    for (size_t col = 0; col < idx.size(); ++col)
      for (size_t row = 0; row < idx.size(); ++row) g(idx[row], idx[col]) = u(row, col);
  }
  return g;
}

// Entangled state with saturated interior bonds: random two-site unitaries
// swept until the ranks stop growing. Stays exactly canonical, so every
// kernel under test sees realistic input.
MPSState saturated_state(int m, int d, int chi, uint64_t seed) {
  std::vector<int> occ(m, 0);
  for (int l = 0; l < m; l += 2) occ[l] = 1;
  MPSState psi = product_state(occ, d, chi);
  SplitMix64 rng(seed);
  const int sweeps = 4 + chi / d;
  for (int s = 0; s < sweeps; ++s)
    for (int b = s % 2; b < m - 1; b += 2)
      apply_gate(psi, b, random_conserving_gate(d, rng), chi);
  return psi;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

template <class F>
double time_median(int reps, F&& body) {
  body();  // warmup
  std::vector<double> times;
  for (int r = 0; r < reps; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    body();
    times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return median(std::move(times));
}

double bench_gate(int m, int d, int chi, int reps) {
  MPSState psi = saturated_state(m, d, chi, 11);
  SplitMix64 rng(12);
  auto gate = random_conserving_gate(d, rng);
  const double t = time_median(reps, [&] {
    for (int b = 0; b < m - 1; ++b) apply_gate(psi, b, gate, chi);
  });
  return t / (m - 1);  // per gate
}

double bench_obdm(int m, int d, int chi, int reps) {
  MPSState psi = saturated_state(m, d, chi, 21);
  return time_median(reps, [&] { (void)one_body_density_matrix(psi); });
}

double bench_sampling(int m, int d, int chi, int reps) {
  MPSState psi = saturated_state(m, d, chi, 31);
  SplitMix64 rng(32);
  return time_median(reps, [&] { (void)sample_configuration(psi, 0.2, rng); });
}

struct Row {
  std::string kernel, config;
  double seconds;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"solspeck kernel benchmarks"};
  bool check = false;
  int reps = 5;
  std::string csv;
  app.add_flag("--check", check, "verify doubling ratios, exit nonzero on violation");
  app.add_option("--reps", reps, "repetitions per point (median reported)");
  app.add_option("--csv", csv, "write results to this file");
  CLI11_PARSE(app, argc, argv);

  std::vector<Row> rows;
  auto record = [&](const std::string& kernel, const std::string& config, double s) {
    rows.push_back({kernel, config, s});
    std::printf("%-12s %-24s %12.6f ms\n", kernel.c_str(), config.c_str(), s * 1e3);
  };

  const double g1 = bench_gate(21, 4, 16, reps);
  const double g2 = bench_gate(21, 4, 32, reps);
  record("gate_svd", "M=21 d=4 chi=16", g1);
  record("gate_svd", "M=21 d=4 chi=32", g2);
  const double o1 = bench_obdm(40, 3, 12, reps);
  const double o2 = bench_obdm(80, 3, 12, reps);
  record("obdm", "M=40 d=3 chi=12", o1);
  record("obdm", "M=80 d=3 chi=12", o2);
  const double s1 = bench_sampling(60, 3, 16, std::max(reps, 20));
  const double s2 = bench_sampling(120, 3, 16, std::max(reps, 20));
  record("sampling", "M=60 d=3 chi=16", s1);
  record("sampling", "M=120 d=3 chi=16", s2);

  if (!csv.empty()) {
    std::ofstream os(csv, std::ios::trunc);
    os << "kernel,config,seconds\n";
    for (const auto& r : rows) os << r.kernel << ",\"" << r.config << "\"," << r.seconds << '\n';
  }

  int bad = 0;
  if (check) {
    auto gate_ratio = g2 / g1;
    auto obdm_ratio = o2 / o1;
    auto samp_ratio = s2 / s1;
    auto judge = [&](const char* name, double ratio, double lo, double hi) {
      const bool ok = ratio >= lo && ratio <= hi;
      std::printf("[%s] %-10s doubling ratio %.2f (want %.1f..%.1f)\n", ok ? "PASS" : "FAIL",
                  name, ratio, lo, hi);
      if (!ok) ++bad;
    };
    judge("gate_svd", gate_ratio, 6.0, 12.0);   // chi^3, SVD-dominated
    judge("obdm", obdm_ratio, 2.5, 6.0);        // M^2 with an M-linear floor
    judge("sampling", samp_ratio, 1.4, 2.6);    // linear in M
  }
  return bad;
}
