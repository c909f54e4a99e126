#include "solspeck/measurement.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace solspeck {

namespace {

// Conditional occupation draw shared by both sweep directions. `amp(i)` must
// return the boundary vector after projecting site occupation i; its squared
// norm is the unnormalized conditional probability.
template <typename AmpFn>
int draw_site(int lo, int hi, AmpFn&& amp, SplitMix64& rng, SamplerDiagnostics* diag,
              int site, std::vector<Eigen::VectorXcd>& w, Eigen::VectorXd& p) {
  double sum = 0;
  for (int i = lo; i <= hi; ++i) {
    w[i] = amp(i);
    p(i) = w[i].squaredNorm();
    sum += p(i);
  }
  if (sum < 1.0 - 1e-3)
    throw std::runtime_error(
        "sample_configuration: conditional probabilities sum to " + std::to_string(sum) +
        " at site " + std::to_string(site) + "; state is corrupt or budget clamp inconsistent");
  if (diag) {
    diag->min_prob_sum = std::min(diag->min_prob_sum, sum);
    if (sum < 1.0 - 1e-6) ++diag->renormalized_draws;
  }
  const double x = rng.uniform() * sum;
  double acc = 0;
  for (int i = lo; i <= hi; ++i) {
    acc += p(i);
    if (x < acc || i == hi) return i;
  }
  return hi;
}

MeasurementSample sweep(const MPSState& psi, double delta, int N, SplitMix64& rng,
                        SweepDirection dir, SamplerDiagnostics* diag) {
  const int M = psi.M;
  const int d = psi.d;
  const int nmax = d - 1;
  MeasurementSample out;
  out.occupations.assign(M, 0);
  std::vector<Eigen::VectorXcd> w(d);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(d);
  int remaining = N;

  if (dir == SweepDirection::kLeftToRight) {
    Eigen::RowVectorXcd v = Eigen::RowVectorXcd::Ones(1);
    for (int l = 0; l < M; ++l) {
      const int sites_after = M - 1 - l;
      const int lo = std::max(0, remaining - sites_after * nmax);
      const int hi = std::min(nmax, remaining);
      const Eigen::VectorXd lamR =
          l == M - 1 ? Eigen::VectorXd::Ones(1) : psi.lambda[l];
      auto amp = [&](int i) -> Eigen::VectorXcd {
        Eigen::RowVectorXcd wi = v * psi.gamma[l].slice(i);
        wi.array() *= lamR.transpose().array();
        return wi.transpose();
      };
      const int pick = draw_site(lo, hi, amp, rng, diag, l, w, p);
      out.occupations[l] = pick;
      remaining -= pick;
      v = w[pick].transpose() / std::sqrt(p(pick));
    }
  } else {
    Eigen::VectorXcd u = Eigen::VectorXcd::Ones(1);
    for (int l = M - 1; l >= 0; --l) {
      const int sites_before = l;
      const int lo = std::max(0, remaining - sites_before * nmax);
      const int hi = std::min(nmax, remaining);
      const Eigen::VectorXd lamL = l == 0 ? Eigen::VectorXd::Ones(1) : psi.lambda[l - 1];
      auto amp = [&](int i) -> Eigen::VectorXcd {
        Eigen::VectorXcd wi = psi.gamma[l].slice(i) * u;
        wi.array() *= lamL.array();
        return wi;
      };
      const int pick = draw_site(lo, hi, amp, rng, diag, l, w, p);
      out.occupations[l] = pick;
      remaining -= pick;
      u = w[pick] / std::sqrt(p(pick));
    }
  }
  if (remaining != 0)
    throw std::logic_error("sample_configuration: particle budget not closed");
  out.com = center_of_mass(out.occupations, delta);
  return out;
}

}  // namespace

MeasurementSample sample_configuration(const MPSState& psi, double delta, SplitMix64& rng,
                                       SweepDirection dir, SamplerDiagnostics* diag) {
  const double n = total_number(psi);
  const int N = static_cast<int>(std::lround(n));
  if (std::abs(n - N) > 1e-6)
    throw std::invalid_argument("sample_configuration: non-integer particle number " +
                                std::to_string(n));
  return sweep(psi, delta, N, rng, dir, diag);
}

std::vector<MeasurementSample> draw_samples(const MPSState& psi, double delta, int count,
                                            uint64_t base_seed, SweepDirection dir,
                                            SamplerDiagnostics* diag) {
  if (count < 0) throw std::invalid_argument("draw_samples: negative count");
  const double n = total_number(psi);
  const int N = static_cast<int>(std::lround(n));
  if (std::abs(n - N) > 1e-6)
    throw std::invalid_argument("draw_samples: non-integer particle number");
  std::vector<MeasurementSample> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    const uint64_t seed = SplitMix64::derive(base_seed, static_cast<uint64_t>(k));
    SplitMix64 rng(seed);
    MeasurementSample s = sweep(psi, delta, N, rng, dir, diag);
    s.seed = seed;
    out.push_back(std::move(s));
  }
  return out;
}

double center_of_mass(const std::vector<int>& occupations, double delta) {
  const int M = static_cast<int>(occupations.size());
  if (M == 0) throw std::invalid_argument("center_of_mass: empty sample");
  const int K = M / 2;
  long n = 0;
  double acc = 0;
  for (int l = 0; l < M; ++l) {
    n += occupations[l];
    acc += (l - K) * delta * occupations[l];
  }
  if (n == 0) throw std::invalid_argument("center_of_mass: empty configuration");
  return acc / static_cast<double>(n);
}

DensityHistogram relative_density_histogram(const std::vector<MeasurementSample>& samples,
                                            double delta, double bin_width) {
  if (samples.empty()) throw std::invalid_argument("relative_density_histogram: no samples");
  if (!(bin_width > 0)) throw std::invalid_argument("relative_density_histogram: bad bin width");
  const size_t M = samples[0].occupations.size();
  const int K = static_cast<int>(M) / 2;
  long lo = 0, hi = 0;
  bool first = true;
  for (const auto& s : samples) {
    if (s.occupations.size() != M)
      throw std::invalid_argument("relative_density_histogram: mixed sample lengths");
    for (size_t l = 0; l < M; ++l) {
      if (s.occupations[l] == 0) continue;
      const double off = (static_cast<int>(l) - K) * delta - s.com;
      const long b = std::lround(off / bin_width);
      if (first) {
        lo = hi = b;
        first = false;
      }
      lo = std::min(lo, b);
      hi = std::max(hi, b);
    }
  }
  DensityHistogram h;
  h.bin_width = bin_width;
  h.centers.resize(hi - lo + 1);
  h.density.assign(hi - lo + 1, 0.0);
  for (long b = lo; b <= hi; ++b) h.centers[b - lo] = b * bin_width;
  for (const auto& s : samples)
    for (size_t l = 0; l < M; ++l) {
      if (s.occupations[l] == 0) continue;
      const double off = (static_cast<int>(l) - K) * delta - s.com;
      h.density[std::lround(off / bin_width) - lo] += s.occupations[l];
    }
  const double norm = 1.0 / (static_cast<double>(samples.size()) * bin_width);
  for (auto& v : h.density) v *= norm;
  return h;
}

void write_samples_ndjson(const std::string& path, const std::vector<MeasurementSample>& samples,
                          bool append, const std::string& config_hash) {
  std::ofstream os(path, append ? std::ios::app : std::ios::trunc);
  if (!os) throw std::runtime_error("write_samples_ndjson: cannot open " + path);
  if (!config_hash.empty() && !append) {
    nlohmann::json hdr = {{"kind", "header"}, {"config_hash", config_hash}};
    os << hdr.dump() << '\n';
  }
  for (const auto& s : samples) {
    nlohmann::json rle = nlohmann::json::array();
    size_t l = 0;
    while (l < s.occupations.size()) {
      size_t run = 1;
      while (l + run < s.occupations.size() && s.occupations[l + run] == s.occupations[l]) ++run;
      rle.push_back({s.occupations[l], run});
      l += run;
    }
    nlohmann::json rec = {{"seed", s.seed}, {"com", s.com}, {"occ", std::move(rle)}};
    os << rec.dump() << '\n';
  }
  if (!os) throw std::runtime_error("write_samples_ndjson: write failed for " + path);
}

std::vector<MeasurementSample> read_samples_ndjson(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_samples_ndjson: cannot open " + path);
  std::vector<MeasurementSample> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      throw std::runtime_error("read_samples_ndjson: parse error at line " +
                               std::to_string(lineno) + ": " + e.what());
    }
    if (rec.contains("kind")) continue;  // header line
    MeasurementSample s;
    s.seed = rec.at("seed").get<uint64_t>();
    s.com = rec.at("com").get<double>();
    for (const auto& pair : rec.at("occ")) {
      const int value = pair.at(0).get<int>();
      const size_t run = pair.at(1).get<size_t>();
      s.occupations.insert(s.occupations.end(), run, value);
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace solspeck
