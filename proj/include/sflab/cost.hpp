#pragma once

#include <cstdint>

#include "sflab/rns.hpp"

namespace sflab {

// Per-parameter upload cost in bits for one client, plus derived ratios.
// The 32-bit float upload is the reference point.
struct CostReport {
  uint64_t clients = 0;
  uint32_t precision = 0;
  uint64_t bits_unary = 0;       // sum of moduli
  uint64_t bits_rle = 0;         // sum of ceil(log2 m)
  uint32_t bits_vanilla = 32;
  uint64_t bits_secure_agg = 0;  // pairwise-masked shares across n - 1 peers
  double expansion_unary = 0.0;  // bits_unary / 32
  double expansion_rle = 0.0;
  size_t shuffle_rounds = 0;     // one bit-channel pass per modulus
};

uint64_t cost_unary_bits(const RnsContext& ctx);
uint64_t cost_rle_bits(const RnsContext& ctx);

// each of n - 1 shares is wide enough for any signed sum of n quantized values
uint64_t cost_secure_agg_bits(uint64_t clients, uint32_t precision);

size_t shuffle_rounds(const RnsContext& ctx);

CostReport make_cost_report(const RnsContext& ctx);

}  // namespace sflab
