#include "sflab/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sflab {

uint64_t splitmix64_next(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

uint64_t fnv1a64(const void* data, size_t len, uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = seed;
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

uint64_t derive_seed(uint64_t base, std::string_view label, uint64_t a, uint64_t b) {
  uint64_t state = base ^ fnv1a64(label.data(), label.size());
  splitmix64_next(state);
  state ^= 0x9e3779b97f4a7c15ull * (a + 1);
  splitmix64_next(state);
  state ^= 0xc2b2ae3d27d4eb4full * (b + 1);
  return splitmix64_next(state);
}

std::mt19937_64 make_rng(uint64_t base, std::string_view label, uint64_t a, uint64_t b) {
  return std::mt19937_64(derive_seed(base, label, a, b));
}

uint64_t uniform_below(std::mt19937_64& rng, uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_below: n must be positive");
  uint64_t threshold = (-n) % n;
  for (;;) {
    uint64_t x = rng();
    if (x >= threshold) return x % n;
  }
}

std::vector<uint32_t> random_permutation(size_t n, std::mt19937_64& rng) {
  std::vector<uint32_t> p(n);
  for (size_t i = 0; i < n; ++i) p[i] = static_cast<uint32_t>(i);
  fisher_yates(p, rng);
  return p;
}

double uniform_real(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double normal(std::mt19937_64& rng) {
  // Box-Muller; draws two uniforms per call so streams stay stateless
  double u1 = 1.0 - uniform_real(rng);  // (0, 1]
  double u2 = uniform_real(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

// Marsaglia-Tsang for shape >= 1; shape < 1 boosted via the U^(1/alpha) trick
double gamma_draw(std::mt19937_64& rng, double shape) {
  if (shape < 1.0) {
    double u = 1.0 - uniform_real(rng);  // avoid log(0)
    return gamma_draw(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  double d = shape - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal(rng);
    double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    double v = t * t * t;
    double u = uniform_real(rng);
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

}  // namespace

std::vector<double> dirichlet(std::mt19937_64& rng, double alpha, size_t k) {
  if (!(alpha > 0.0)) throw std::invalid_argument("dirichlet: alpha must be positive");
  std::vector<double> w(k);
  double total = 0.0;
  for (size_t i = 0; i < k; ++i) {
    w[i] = gamma_draw(rng, alpha);
    total += w[i];
  }
  if (total <= 0.0) {
    // all draws underflowed (tiny alpha); fall back to a single random winner
    w.assign(k, 0.0);
    w[uniform_below(rng, k)] = 1.0;
    return w;
  }
  for (double& x : w) x /= total;
  return w;
}

}  // namespace sflab
