#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sflab {

using u128 = unsigned __int128;
using i128 = __int128;

std::string u128_str(u128 v);
std::string i128_str(i128 v);

enum class ModuliStrategy { ConsecutivePrimes, MinSumSearch };

// Residue number system over pairwise-coprime moduli.  A context fixes the
// moduli, the decimal precision r used for fixed-point quantization, and the
// client count n whose sums must stay inside the signed range.
struct RnsContext {
  std::vector<uint64_t> moduli;  // strictly ascending, pairwise coprime
  u128 product = 1;              // M = prod(moduli)
  uint32_t precision = 1;        // r, decimal digits retained by quantization
  uint64_t clients = 1;          // n, worst-case number of summands
  uint64_t value_max = 9;        // 10^r - 1, largest quantized magnitude

  u128 signed_max() const { return (product - 1) / 2; }    // floor((M-1)/2)
  u128 signed_min_mag() const { return product / 2; }      // floor(M/2), magnitude of the most negative value
  bool admissible() const;                                 // n * value_max < signed_max

  bool operator==(const RnsContext&) const = default;
};

// validates coprimality, ordering, and the signed-sum bound
RnsContext make_context(std::vector<uint64_t> moduli, uint32_t precision, uint64_t clients);

// smallest moduli set (per strategy) admitting sums of n values below 10^r
RnsContext select_moduli(uint64_t clients, uint32_t precision,
                         ModuliStrategy strategy = ModuliStrategy::ConsecutivePrimes);

struct ResidueVector {
  std::vector<uint64_t> residues;      // residues[i] in [0, moduli[i])
  const RnsContext* context = nullptr; // non-owning; the context outlives the vector
};

// x must lie in [-floor(M/2), floor((M-1)/2)]; negatives map to (m - |x| mod m) mod m
ResidueVector rns_encode(i128 x, const RnsContext& ctx);

// CRT reconstruction into [0, M)
u128 crt_solve(const ResidueVector& rv);

// symmetric decode: values above floor((M-1)/2) come back negative
i128 rns_decode_signed(const ResidueVector& rv);

// componentwise modular addition; contexts must match
ResidueVector rns_add(const ResidueVector& a, const ResidueVector& b);

// floor(p * 10^r) for p in (-1, 1); OutOfRange otherwise
int64_t scale_quantize(double p, uint32_t precision);

uint64_t pow10_u64(uint32_t r);  // r <= 18

}  // namespace sflab
