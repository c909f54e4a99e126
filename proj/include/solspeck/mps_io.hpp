#pragma once
#include <string>

#include "solspeck/mps.hpp"

namespace solspeck {

// Binary checkpoint of an MPS, versioned by magic string.
//
// Layout (little-endian, no padding):
//   char[8]  magic "SSPKMPS1"
//   u32      M, u32 d, u32 chi, u64 lambda_clamps, f64 discarded_weight
//   u32      meta_len, byte[meta_len] opaque metadata (config hash etc)
//   per site l = 0..M-1:
//     u32 chiL, u32 chiR, then chiL*d*chiR complex<double> in Tensor3 flat
//     order (left bond fastest, then right bond, then physical index)
//   per interior bond b = 0..M-2:
//     u32 len, f64[len]
//   u64      FNV-1a hash of every preceding byte after the magic
//
// The loader validates the magic, dimension consistency across neighboring
// sites, the checksum, and the bond spectra (finite, nonnegative, descending,
// normalized); it throws on any mismatch rather than returning a bad state.

void save_checkpoint(const MPSState& psi, const std::string& path,
                     const std::string& meta = "");

struct Checkpoint {
  MPSState psi;
  std::string meta;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace solspeck
