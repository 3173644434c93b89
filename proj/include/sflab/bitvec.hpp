#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace sflab {

// Bit vector packed LSB-first into 64-bit words.  Bits past size() are kept
// zero so popcount and equality can work on whole words.
class PackedBits {
 public:
  PackedBits() = default;
  explicit PackedBits(size_t nbits) : words_((nbits + 63) / 64, 0), nbits_(nbits) {}

  size_t size() const { return nbits_; }
  bool get(size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1; }
  void set(size_t i, bool v) {
    uint64_t mask = 1ull << (i & 63);
    if (v) words_[i >> 6] |= mask;
    else words_[i >> 6] &= ~mask;
  }
  void append(bool v) {
    if ((nbits_ & 63) == 0) words_.push_back(0);
    if (v) words_.back() |= 1ull << (nbits_ & 63);
    ++nbits_;
  }
  void append_run(bool v, size_t count);
  void append_bits(const PackedBits& other);

  uint64_t popcount() const;
  void shuffle(std::mt19937_64& rng);  // uniform permutation of bit positions

  const std::vector<uint64_t>& words() const { return words_; }
  std::vector<uint8_t> bytes_le() const;  // ceil(size/8) bytes, LSB-first

  bool operator==(const PackedBits&) const = default;

 private:
  std::vector<uint64_t> words_;
  size_t nbits_ = 0;
};

// canonical unary codeword: x ones followed by capacity - x zeros
struct UnaryBits {
  PackedBits bits;
  uint64_t capacity = 0;
};

UnaryBits unary_encode(uint64_t x, uint64_t capacity);  // Overflow if x > capacity
uint64_t unary_sum(const PackedBits& bits);             // popcount; order-free

uint32_t rle_width(uint64_t modulus);  // ceil(log2 m), bits needed for a count below m

struct RleCount {
  uint64_t value = 0;   // the residue itself
  uint32_t width = 0;   // bits on the wire
};

RleCount rle_compress(uint64_t x, uint64_t modulus);          // Overflow if x >= m
UnaryBits rle_decompress(uint64_t count, uint64_t modulus);   // expands back to unary

// Per-parameter, per-modulus bit channels.  Channel (p, j) concatenates the
// n clients' unary codewords for parameter p under modulus j, so it holds
// exactly n_clients * moduli[j] bits.
struct BitChannelBatch {
  uint64_t n_clients = 0;
  std::vector<uint64_t> moduli;
  size_t param_count = 0;
  std::vector<PackedBits> channels;  // param-major: index = p * moduli.size() + j

  PackedBits& channel(size_t param, size_t j) { return channels[param * moduli.size() + j]; }
  const PackedBits& channel(size_t param, size_t j) const {
    return channels[param * moduli.size() + j];
  }
  uint64_t total_bits() const;
};

}  // namespace sflab
