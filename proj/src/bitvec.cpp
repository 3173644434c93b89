#include "sflab/bitvec.hpp"

#include <bit>

#include "sflab/errors.hpp"
#include "sflab/rng.hpp"

namespace sflab {

void PackedBits::append_run(bool v, size_t count) {
  for (size_t i = 0; i < count; ++i) append(v);
}

void PackedBits::append_bits(const PackedBits& other) {
  for (size_t i = 0; i < other.size(); ++i) append(other.get(i));
}

uint64_t PackedBits::popcount() const {
  uint64_t total = 0;
  for (uint64_t w : words_) total += static_cast<uint64_t>(std::popcount(w));
  return total;
}

void PackedBits::shuffle(std::mt19937_64& rng) {
  for (size_t i = nbits_; i > 1; --i) {
    size_t j = static_cast<size_t>(uniform_below(rng, i));
    bool a = get(i - 1), b = get(j);
    set(i - 1, b);
    set(j, a);
  }
}

std::vector<uint8_t> PackedBits::bytes_le() const {
  std::vector<uint8_t> out((nbits_ + 7) / 8, 0);
  for (size_t i = 0; i < out.size(); ++i) {
    uint64_t w = words_[i / 8];
    out[i] = static_cast<uint8_t>(w >> ((i % 8) * 8));
  }
  return out;
}

UnaryBits unary_encode(uint64_t x, uint64_t capacity) {
  if (x > capacity) throw Overflow("unary_encode: value exceeds codeword capacity");
  UnaryBits u;
  u.capacity = capacity;
  u.bits = PackedBits(capacity);
  for (uint64_t i = 0; i < x; ++i) u.bits.set(i, true);
  return u;
}

uint64_t unary_sum(const PackedBits& bits) { return bits.popcount(); }

uint32_t rle_width(uint64_t modulus) {
  if (modulus < 2) throw ConfigInvalid("rle_width: modulus below 2");
  return static_cast<uint32_t>(std::bit_width(modulus - 1));
}

RleCount rle_compress(uint64_t x, uint64_t modulus) {
  if (x >= modulus) throw Overflow("rle_compress: count not below its modulus");
  return RleCount{x, rle_width(modulus)};
}

UnaryBits rle_decompress(uint64_t count, uint64_t modulus) {
  if (count >= modulus) throw Overflow("rle_decompress: count not below its modulus");
  return unary_encode(count, modulus);
}

uint64_t BitChannelBatch::total_bits() const {
  uint64_t total = 0;
  for (const PackedBits& c : channels) total += c.size();
  return total;
}

}  // namespace sflab
