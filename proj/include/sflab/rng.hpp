#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace sflab {

// One experiment seed fans out into independent streams.  Every consumer asks
// for a stream by (base seed, label, up to two indices); equal requests yield
// equal streams, distinct requests are decorrelated via splitmix64 mixing.

uint64_t splitmix64_next(uint64_t& state);

uint64_t derive_seed(uint64_t base, std::string_view label, uint64_t a = 0, uint64_t b = 0);

std::mt19937_64 make_rng(uint64_t base, std::string_view label, uint64_t a = 0, uint64_t b = 0);

// unbiased integer in [0, n) by rejection; n must be > 0
uint64_t uniform_below(std::mt19937_64& rng, uint64_t n);

std::vector<uint32_t> random_permutation(size_t n, std::mt19937_64& rng);

template <typename T>
void fisher_yates(std::vector<T>& v, std::mt19937_64& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(uniform_below(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

double uniform_real(std::mt19937_64& rng);                  // [0, 1)
double normal(std::mt19937_64& rng);                        // standard normal, Box-Muller
std::vector<double> dirichlet(std::mt19937_64& rng, double alpha, size_t k);

// FNV-1a over a byte string, used for config digests and envelope tags
uint64_t fnv1a64(const void* data, size_t len, uint64_t seed = 14695981039346656037ull);

}  // namespace sflab
