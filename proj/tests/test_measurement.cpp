#include <cmath>
#include <complex>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "solspeck/ed.hpp"
#include "solspeck/measurement.hpp"
#include "solspeck/model.hpp"
#include "solspeck/mps.hpp"
#include "solspeck/speckle.hpp"
#include "solspeck/tebd.hpp"

using namespace solspeck;

namespace {

MPSState entangled_pair_state(const LatticeModel& model, double t) {
  MPSState psi = product_state({0, 1, 1, 0}, model.d(), 64);
  auto gates = build_gates(model, 0.01, GateKind::kReal);
  const long steps = std::lround(t / 0.01);
  for (long s = 0; s < steps; ++s) trotter_step(psi, gates, 64);
  return psi;
}

LatticeModel pair_model() {
  auto p = ContinuumParams::from_xi(2, 1.0);
  auto wide = generate_speckle(64, 0.2, 0.02, 0.4, 7);
  std::vector<double> V(wide.values.begin() + 30, wide.values.begin() + 34);
  return discretize(p, 0.2, 4, V, 2);
}

}  // namespace

TEST_CASE("sampling a product state is deterministic") {
  MPSState psi = product_state({0, 2, 1, 0, 0}, 3, 8);
  SplitMix64 rng(123);
  for (int k = 0; k < 20; ++k) {
    auto s = sample_configuration(psi, 0.4, rng);
    CHECK(s.occupations == std::vector<int>{0, 2, 1, 0, 0});
    CHECK(s.com == doctest::Approx(-0.8 / 3.0).epsilon(1e-12));
  }
}

TEST_CASE("center of mass weighs occupations on the site grid") {
  CHECK(center_of_mass({0, 2, 1, 0, 0}, 0.4) == doctest::Approx(-0.8 / 3.0).epsilon(1e-14));
  CHECK(center_of_mass({1, 0, 0, 0, 1}, 1.0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK_THROWS(center_of_mass({0, 0, 0}, 1.0));
  CHECK_THROWS(center_of_mass({}, 1.0));
}

TEST_CASE("every sample carries exactly N particles") {
  auto model = pair_model();
  MPSState psi = entangled_pair_state(model, 0.4);
  SplitMix64 rng(5);
  for (int k = 0; k < 500; ++k) {
    auto s = sample_configuration(psi, model.delta, rng,
                                  k % 2 ? SweepDirection::kRightToLeft
                                        : SweepDirection::kLeftToRight);
    int total = 0;
    for (int o : s.occupations) total += o;
    CHECK(total == 2);
  }
}

TEST_CASE("sampled histogram reproduces the Born distribution") {
  auto model = pair_model();
  MPSState psi = entangled_pair_state(model, 0.4);
  auto basis = enumerate_fock_basis(4, 2, 2);
  auto restricted = restrict_to_basis(dense_from_mps(psi), basis, model.d());
  auto p_exact = ed_born_probabilities(restricted, basis);

  for (auto dir : {SweepDirection::kLeftToRight, SweepDirection::kRightToLeft}) {
    SamplerDiagnostics diag;
    auto samples = draw_samples(psi, model.delta, 20000, 99, dir, &diag);
    std::vector<double> hist(basis.size(), 0.0);
    for (const auto& s : samples) hist[basis.index_of(s.occupations)] += 1.0;
    double tv = 0;
    for (size_t i = 0; i < hist.size(); ++i)
      tv += std::abs(hist[i] / samples.size() - p_exact[i]);
    tv *= 0.5;
    CHECK(tv < 0.03);
    CHECK(diag.min_prob_sum > 0.999);
  }
}

TEST_CASE("sample means match the site densities") {
  auto model = pair_model();
  MPSState psi = entangled_pair_state(model, 0.4);
  auto dens = site_densities(psi);
  auto samples = draw_samples(psi, model.delta, 20000, 17);
  std::vector<double> mean(4, 0.0);
  for (const auto& s : samples)
    for (int l = 0; l < 4; ++l) mean[l] += s.occupations[l];
  for (int l = 0; l < 4; ++l) CHECK(std::abs(mean[l] / samples.size() - dens[l]) < 0.03);
}

TEST_CASE("draw_samples is reproducible and each sample replays from its seed") {
  auto model = pair_model();
  MPSState psi = entangled_pair_state(model, 0.4);
  auto a = draw_samples(psi, model.delta, 50, 4242);
  auto b = draw_samples(psi, model.delta, 50, 4242);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].occupations == b[i].occupations);
    CHECK(a[i].seed == b[i].seed);
  }
  // any single sample replays from its recorded seed alone
  for (size_t i : {size_t(0), size_t(13), size_t(49)}) {
    SplitMix64 rng(a[i].seed);
    auto replay = sample_configuration(psi, model.delta, rng);
    CHECK(replay.occupations == a[i].occupations);
  }
  // different base seeds decorrelate
  auto c = draw_samples(psi, model.delta, 50, 4243);
  int same = 0;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i].occupations == c[i].occupations) ++same;
  CHECK(same < 50);
}

TEST_CASE("relative density histogram integrates to N and centers the cloud") {
  MPSState psi = product_state({0, 0, 2, 0, 0}, 3, 8);
  auto samples = draw_samples(psi, 0.4, 100, 1);
  auto h = relative_density_histogram(samples, 0.4, 0.1);
  double integral = 0;
  for (double v : h.density) integral += v * h.bin_width;
  CHECK(integral == doctest::Approx(2.0).epsilon(1e-12));
  // all mass lands in the zero bin for a single occupied site
  double peak = 0;
  size_t peak_idx = 0;
  for (size_t i = 0; i < h.density.size(); ++i)
    if (h.density[i] > peak) { peak = h.density[i]; peak_idx = i; }
  CHECK(h.centers[peak_idx] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(peak == doctest::Approx(2.0 / 0.1).epsilon(1e-12));
}

TEST_CASE("relative histogram from an entangled state still integrates to N") {
  auto model = pair_model();
  MPSState psi = entangled_pair_state(model, 0.4);
  auto samples = draw_samples(psi, model.delta, 2000, 8);
  auto h = relative_density_histogram(samples, model.delta, 0.1);
  double integral = 0;
  for (double v : h.density) integral += v * h.bin_width;
  CHECK(integral == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("ndjson samples survive a round trip, with header and append") {
  auto model = pair_model();
  MPSState psi = entangled_pair_state(model, 0.3);
  auto a = draw_samples(psi, model.delta, 23, 11);
  auto b = draw_samples(psi, model.delta, 7, 12);

  const std::string path = "test_samples_roundtrip.ndjson";
  write_samples_ndjson(path, a, false, "0123456789abcdef");
  write_samples_ndjson(path, b, true);
  auto back = read_samples_ndjson(path);
  REQUIRE(back.size() == a.size() + b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(back[i].occupations == a[i].occupations);
    CHECK(back[i].seed == a[i].seed);
    CHECK(back[i].com == doctest::Approx(a[i].com).epsilon(1e-15));
  }
  for (size_t i = 0; i < b.size(); ++i)
    CHECK(back[a.size() + i].occupations == b[i].occupations);

  // header line is present and carries the hash
  std::FILE* f = std::fopen(path.c_str(), "r");
  REQUIRE(f != nullptr);
  char line[256];
  REQUIRE(std::fgets(line, sizeof line, f) != nullptr);
  std::fclose(f);
  CHECK(std::string(line).find("0123456789abcdef") != std::string::npos);
  std::remove(path.c_str());
}
