#include "sflab/rns.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sflab/errors.hpp"

namespace sflab {

std::string u128_str(u128 v) {
  if (v == 0) return "0";
  std::string out;
  while (v > 0) {
    out.push_back(static_cast<char>('0' + static_cast<unsigned>(v % 10)));
    v /= 10;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::string i128_str(i128 v) {
  if (v < 0) {
    u128 mag = static_cast<u128>(-(v + 1)) + 1;
    return "-" + u128_str(mag);
  }
  return u128_str(static_cast<u128>(v));
}

uint64_t pow10_u64(uint32_t r) {
  if (r > 18) throw ConfigInvalid("pow10_u64: exponent above 18");
  uint64_t p = 1;
  for (uint32_t i = 0; i < r; ++i) p *= 10;
  return p;
}

bool RnsContext::admissible() const {
  return static_cast<u128>(clients) * value_max < signed_max();
}

RnsContext make_context(std::vector<uint64_t> moduli, uint32_t precision, uint64_t clients) {
  if (moduli.empty()) throw ConfigInvalid("context: empty moduli set");
  if (precision < 1 || precision > 18)
    throw ConfigInvalid("context: precision must be in [1, 18]");
  if (clients < 1) throw ConfigInvalid("context: clients must be >= 1");
  u128 product = 1;
  for (size_t i = 0; i < moduli.size(); ++i) {
    uint64_t m = moduli[i];
    if (m < 2) throw ConfigInvalid("context: modulus below 2");
    if (m > (1ull << 32)) throw ConfigInvalid("context: modulus above 2^32");
    if (i > 0 && moduli[i - 1] >= m)
      throw ConfigInvalid("context: moduli must be strictly ascending");
    if (product > std::numeric_limits<u128>::max() / m)
      throw ConfigInvalid("context: moduli product overflows 128 bits");
    product *= m;
  }
  for (size_t i = 0; i < moduli.size(); ++i)
    for (size_t j = i + 1; j < moduli.size(); ++j)
      if (std::gcd(moduli[i], moduli[j]) != 1)
        throw ConfigInvalid("context: moduli not pairwise coprime");
  RnsContext ctx;
  ctx.moduli = std::move(moduli);
  ctx.product = product;
  ctx.precision = precision;
  ctx.clients = clients;
  ctx.value_max = pow10_u64(precision) - 1;
  if (!ctx.admissible())
    throw ConfigInvalid("context: clients * (10^precision - 1) exceeds the signed sum range");
  return ctx;
}

namespace {

bool is_prime(uint64_t x) {
  if (x < 2) return false;
  for (uint64_t d = 2; d * d <= x; ++d)
    if (x % d == 0) return false;
  return true;
}

// smallest M satisfying n * v < floor((M - 1) / 2)
u128 product_floor(uint64_t clients, uint64_t value_max) {
  return 2 * static_cast<u128>(clients) * value_max + 3;
}

std::vector<uint64_t> consecutive_primes(uint64_t clients, uint64_t value_max) {
  std::vector<uint64_t> moduli;
  u128 need = product_floor(clients, value_max);
  u128 product = 1;
  uint64_t p = 2;
  while (product < need) {
    while (!is_prime(p)) ++p;
    moduli.push_back(p);
    product *= p;
    ++p;
  }
  return moduli;
}

struct MinSumState {
  std::vector<std::vector<uint64_t>> options;  // per prime: powers <= 64, ascending
  std::vector<u128> suffix_best;               // max achievable product from prime i on
  u128 need = 0;
  uint64_t best_sum = std::numeric_limits<uint64_t>::max();
  size_t best_count = 0;
  std::vector<uint64_t> best, current;

  void search(size_t i, uint64_t sum, u128 product) {
    if (product >= need) {
      if (sum < best_sum || (sum == best_sum && current.size() < best_count)) {
        best_sum = sum;
        best_count = current.size();
        best = current;
      }
      return;
    }
    if (i == options.size() || sum >= best_sum) return;
    u128 rest_needed = (need - 1) / product + 1;  // ceil(need / product)
    if (suffix_best[i] < rest_needed) return;
    search(i + 1, sum, product);  // skip this prime
    for (uint64_t m : options[i]) {
      // allow equal sums through: a tie can still win on fewer moduli
      if (sum + m > best_sum) break;
      current.push_back(m);
      search(i + 1, sum + m, product * m);
      current.pop_back();
    }
  }
};

std::vector<uint64_t> min_sum_moduli(uint64_t clients, uint64_t value_max) {
  MinSumState st;
  for (uint64_t p = 2; p <= 61; ++p) {
    if (!is_prime(p)) continue;
    std::vector<uint64_t> powers;
    for (u128 q = p; q <= 64; q *= p) powers.push_back(static_cast<uint64_t>(q));
    st.options.push_back(std::move(powers));
  }
  st.need = product_floor(clients, value_max);
  st.suffix_best.assign(st.options.size() + 1, 1);
  for (size_t i = st.options.size(); i-- > 0;) {
    u128 top = st.options[i].back();
    u128 prev = st.suffix_best[i + 1];
    // saturate instead of overflowing; need itself is far below the cap
    u128 cap = std::numeric_limits<u128>::max() / top;
    st.suffix_best[i] = prev > cap ? std::numeric_limits<u128>::max() : prev * top;
  }
  // seed the bound with the consecutive-primes solution
  st.best = consecutive_primes(clients, value_max);
  st.best_sum = 0;
  for (uint64_t m : st.best) st.best_sum += m;
  st.best_count = st.best.size();
  st.search(0, 0, 1);
  std::vector<uint64_t> out = st.best;
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

RnsContext select_moduli(uint64_t clients, uint32_t precision, ModuliStrategy strategy) {
  if (clients < 1) throw ConfigInvalid("select_moduli: clients must be >= 1");
  uint64_t value_max = pow10_u64(precision) - 1;
  std::vector<uint64_t> moduli = strategy == ModuliStrategy::ConsecutivePrimes
                                     ? consecutive_primes(clients, value_max)
                                     : min_sum_moduli(clients, value_max);
  return make_context(std::move(moduli), precision, clients);
}

ResidueVector rns_encode(i128 x, const RnsContext& ctx) {
  u128 mag = x < 0 ? static_cast<u128>(-(x + 1)) + 1 : static_cast<u128>(x);
  if (x >= 0 ? mag > ctx.signed_max() : mag > ctx.signed_min_mag())
    throw RangeExceeded("rns_encode: value outside the signed range of the context");
  ResidueVector rv;
  rv.context = &ctx;
  rv.residues.reserve(ctx.moduli.size());
  for (uint64_t m : ctx.moduli) {
    uint64_t r = static_cast<uint64_t>(mag % m);
    if (x < 0 && r != 0) r = m - r;
    rv.residues.push_back(r);
  }
  return rv;
}

namespace {

uint64_t mod_inverse(uint64_t a, uint64_t m) {
  // extended Euclid; a and m coprime by construction
  int64_t t = 0, new_t = 1;
  int64_t r = static_cast<int64_t>(m), new_r = static_cast<int64_t>(a % m);
  while (new_r != 0) {
    int64_t q = r / new_r;
    t = std::exchange(new_t, t - q * new_t);
    r = std::exchange(new_r, r - q * new_r);
  }
  if (r != 1) throw ContextMismatch("mod_inverse: arguments not coprime");
  return static_cast<uint64_t>(t < 0 ? t + static_cast<int64_t>(m) : t);
}

u128 mulmod_u128(u128 a, u128 b, u128 m) {
  if (m <= (u128{1} << 63)) return (a % m) * (b % m) % m;
  u128 result = 0;
  a %= m;
  b %= m;
  while (b > 0) {
    if (b & 1) {
      result += a;
      if (result >= m) result -= m;
    }
    a += a;
    if (a >= m) a -= m;
    b >>= 1;
  }
  return result;
}

void check_residues(const ResidueVector& rv) {
  if (rv.context == nullptr)
    throw ContextMismatch("residue vector has no context");
  const auto& moduli = rv.context->moduli;
  if (rv.residues.size() != moduli.size())
    throw ContextMismatch("residue vector length does not match its context");
  for (size_t i = 0; i < moduli.size(); ++i)
    if (rv.residues[i] >= moduli[i])
      throw ContextMismatch("residue out of range for its modulus");
}

}  // namespace

u128 crt_solve(const ResidueVector& rv) {
  check_residues(rv);
  const RnsContext& ctx = *rv.context;
  u128 M = ctx.product;
  u128 total = 0;
  for (size_t i = 0; i < ctx.moduli.size(); ++i) {
    uint64_t m = ctx.moduli[i];
    u128 Mi = M / m;
    uint64_t inv = mod_inverse(static_cast<uint64_t>(Mi % m), m);
    u128 term = mulmod_u128(static_cast<u128>(rv.residues[i]) * inv, Mi, M);
    total += term;
    if (total >= M) total -= M;
  }
  return total;
}

i128 rns_decode_signed(const ResidueVector& rv) {
  const RnsContext& ctx = *rv.context;
  u128 y = crt_solve(rv);
  if (y <= ctx.signed_max()) return static_cast<i128>(y);
  u128 mag = ctx.product - y;
  return -(static_cast<i128>(mag - 1) + 1);
}

ResidueVector rns_add(const ResidueVector& a, const ResidueVector& b) {
  check_residues(a);
  check_residues(b);
  if (!(*a.context == *b.context))
    throw ContextMismatch("rns_add: operands built under different contexts");
  ResidueVector out;
  out.context = a.context;
  out.residues.reserve(a.residues.size());
  const auto& moduli = a.context->moduli;
  for (size_t i = 0; i < moduli.size(); ++i)
    out.residues.push_back((a.residues[i] + b.residues[i]) % moduli[i]);
  return out;
}

int64_t scale_quantize(double p, uint32_t precision) {
  if (!(p > -1.0 && p < 1.0))
    throw OutOfRange("scale_quantize: input must lie in (-1, 1)");
  if (p == 0.0) return 0;
  // exact floor of the stored double times 10^r: write p as mant * 2^(exp-53)
  // and shift the 128-bit product, so no rounding can move the result across
  // an integer
  int exp = 0;
  double frac = std::frexp(p, &exp);
  auto mant = static_cast<i128>(std::ldexp(frac, 53));  // exact, |mant| < 2^53
  i128 num = mant * static_cast<i128>(pow10_u64(precision));
  int shift = 53 - exp;
  if (shift >= 127) return num < 0 ? -1 : 0;
  return static_cast<int64_t>(num >> shift);  // arithmetic shift floors
}

}  // namespace sflab
