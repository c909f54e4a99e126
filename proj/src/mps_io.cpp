#include "solspeck/mps_io.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace solspeck {

namespace {

constexpr char kMagic[8] = {'S', 'S', 'P', 'K', 'M', 'P', 'S', '2'};

class HashingWriter {
 public:
  explicit HashingWriter(std::ostream& os) : os_(os) {}
  void raw(const void* p, size_t n) {
    os_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    const auto* b = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < n; ++i) {
      hash_ ^= b[i];
      hash_ *= 1099511628211ull;
    }
  }
  template <typename T>
  void put(T v) {
    raw(&v, sizeof(T));
  }
  uint64_t hash() const { return hash_; }

 private:
  std::ostream& os_;
  uint64_t hash_ = 14695981039346656037ull;
};

class HashingReader {
 public:
  explicit HashingReader(std::istream& is) : is_(is) {}
  void raw(void* p, size_t n) {
    is_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!is_) throw std::runtime_error("checkpoint: truncated file");
    const auto* b = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < n; ++i) {
      hash_ ^= b[i];
      hash_ *= 1099511628211ull;
    }
  }
  template <typename T>
  T get() {
    T v;
    raw(&v, sizeof(T));
    return v;
  }
  uint64_t hash() const { return hash_; }

 private:
  std::istream& is_;
  uint64_t hash_ = 14695981039346656037ull;
};

}  // namespace

void save_checkpoint(const MPSState& psi, const std::string& path, const std::string& meta) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  os.write(kMagic, sizeof(kMagic));
  HashingWriter w(os);
  w.put<uint32_t>(static_cast<uint32_t>(psi.M));
  w.put<uint32_t>(static_cast<uint32_t>(psi.d));
  w.put<uint32_t>(static_cast<uint32_t>(psi.chi));
  w.put<uint64_t>(static_cast<uint64_t>(psi.diag.lambda_clamps));
  w.put<double>(psi.diag.discarded_weight);
  w.put<uint32_t>(static_cast<uint32_t>(meta.size()));
  if (!meta.empty()) w.raw(meta.data(), meta.size());
  for (int l = 0; l < psi.M; ++l) {
    const Tensor3& g = psi.gamma[l];
    w.put<uint32_t>(static_cast<uint32_t>(g.dim_l()));
    w.put<uint32_t>(static_cast<uint32_t>(g.dim_r()));
    w.raw(g.data(), g.size() * sizeof(std::complex<double>));
  }
  for (const auto& lam : psi.lambda) {
    w.put<uint32_t>(static_cast<uint32_t>(lam.size()));
    w.raw(lam.data(), static_cast<size_t>(lam.size()) * sizeof(double));
  }
  if (psi.q.size() != static_cast<size_t>(psi.M) + 1)
    throw std::runtime_error("checkpoint: state carries no charge labels");
  for (const auto& labels : psi.q) {
    w.put<uint32_t>(static_cast<uint32_t>(labels.size()));
    for (int v : labels) w.put<int32_t>(static_cast<int32_t>(v));
  }
  const uint64_t h = w.hash();
  os.write(reinterpret_cast<const char*>(&h), sizeof(h));
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  HashingReader r(is);
  Checkpoint out;
  MPSState& psi = out.psi;
  psi.M = static_cast<int>(r.get<uint32_t>());
  psi.d = static_cast<int>(r.get<uint32_t>());
  psi.chi = static_cast<int>(r.get<uint32_t>());
  psi.diag.lambda_clamps = static_cast<long>(r.get<uint64_t>());
  psi.diag.discarded_weight = r.get<double>();
  if (psi.M < 1 || psi.M > 100000 || psi.d < 1 || psi.d > 1024 || psi.chi < 1)
    throw std::runtime_error("checkpoint: implausible header dimensions");
  const auto meta_len = r.get<uint32_t>();
  if (meta_len > (1u << 20)) throw std::runtime_error("checkpoint: oversized metadata block");
  out.meta.resize(meta_len);
  if (meta_len) r.raw(out.meta.data(), meta_len);
  std::vector<uint32_t> chiL(psi.M), chiR(psi.M);
  psi.gamma.reserve(psi.M);
  for (int l = 0; l < psi.M; ++l) {
    chiL[l] = r.get<uint32_t>();
    chiR[l] = r.get<uint32_t>();
    if (chiL[l] < 1 || chiR[l] < 1 || chiL[l] > (1u << 16) || chiR[l] > (1u << 16))
      throw std::runtime_error("checkpoint: implausible bond dimension at site " +
                               std::to_string(l));
    Tensor3 g(static_cast<int>(chiL[l]), psi.d, static_cast<int>(chiR[l]));
    r.raw(g.data(), g.size() * sizeof(std::complex<double>));
    psi.gamma.push_back(std::move(g));
  }
  if (chiL[0] != 1 || chiR[psi.M - 1] != 1)
    throw std::runtime_error("checkpoint: boundary bond dimension must be 1");
  for (int l = 0; l + 1 < psi.M; ++l)
    if (chiR[l] != chiL[l + 1])
      throw std::runtime_error("checkpoint: bond dimension mismatch between sites " +
                               std::to_string(l) + " and " + std::to_string(l + 1));
  psi.lambda.resize(psi.M - 1);
  for (int b = 0; b + 1 < psi.M; ++b) {
    const auto len = r.get<uint32_t>();
    if (len != chiR[b])
      throw std::runtime_error("checkpoint: bond spectrum length mismatch at bond " +
                               std::to_string(b));
    psi.lambda[b].resize(len);
    r.raw(psi.lambda[b].data(), static_cast<size_t>(len) * sizeof(double));
    double sum = 0;
    for (uint32_t k = 0; k < len; ++k) {
      const double v = psi.lambda[b](k);
      if (!std::isfinite(v) || v < 0)
        throw std::runtime_error("checkpoint: invalid bond spectrum at bond " +
                                 std::to_string(b));
      if (k > 0 && v > psi.lambda[b](k - 1) + 1e-12)
        throw std::runtime_error("checkpoint: bond spectrum not descending at bond " +
                                 std::to_string(b));
      sum += v * v;
    }
    if (std::abs(sum - 1.0) > 1e-8)
      throw std::runtime_error("checkpoint: bond spectrum not normalized at bond " +
                               std::to_string(b));
  }
  psi.q.resize(static_cast<size_t>(psi.M) + 1);
  for (int bnd = 0; bnd <= psi.M; ++bnd) {
    const auto len = r.get<uint32_t>();
    const uint32_t want = bnd == 0 ? 1 : (bnd == psi.M ? 1 : chiL[bnd]);
    if (len != want)
      throw std::runtime_error("checkpoint: charge label count mismatch at boundary " +
                               std::to_string(bnd));
    psi.q[bnd].resize(len);
    for (uint32_t k = 0; k < len; ++k) {
      const auto v = r.get<int32_t>();
      if (v < 0 || v > 1000000)
        throw std::runtime_error("checkpoint: implausible charge label at boundary " +
                                 std::to_string(bnd));
      psi.q[bnd][k] = static_cast<int>(v);
    }
  }
  if (psi.q[0][0] != 0)
    throw std::runtime_error("checkpoint: left boundary charge must be 0");
  const uint64_t expect = r.hash();
  uint64_t stored = 0;
  is.read(reinterpret_cast<char*>(&stored), sizeof(stored));
  if (!is || stored != expect) throw std::runtime_error("checkpoint: checksum mismatch in " + path);
  return out;
}

}  // namespace solspeck
