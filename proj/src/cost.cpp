#include "sflab/cost.hpp"

#include <bit>

#include "sflab/bitvec.hpp"

namespace sflab {

uint64_t cost_unary_bits(const RnsContext& ctx) {
  uint64_t bits = 0;
  for (uint64_t m : ctx.moduli) bits += m;
  return bits;
}

uint64_t cost_rle_bits(const RnsContext& ctx) {
  uint64_t bits = 0;
  for (uint64_t m : ctx.moduli) bits += rle_width(m);
  return bits;
}

uint64_t cost_secure_agg_bits(uint64_t clients, uint32_t precision) {
  // signed sums span 2 * n * (10^r - 1) + 1 distinct values
  u128 span = 2 * static_cast<u128>(clients) * (pow10_u64(precision) - 1) + 1;
  uint32_t width = 0;
  while ((u128{1} << width) < span) ++width;
  return static_cast<uint64_t>(width) * (clients - 1);
}

size_t shuffle_rounds(const RnsContext& ctx) { return ctx.moduli.size(); }

CostReport make_cost_report(const RnsContext& ctx) {
  CostReport report;
  report.clients = ctx.clients;
  report.precision = ctx.precision;
  report.bits_unary = cost_unary_bits(ctx);
  report.bits_rle = cost_rle_bits(ctx);
  report.bits_secure_agg = cost_secure_agg_bits(ctx.clients, ctx.precision);
  report.expansion_unary = static_cast<double>(report.bits_unary) / 32.0;
  report.expansion_rle = static_cast<double>(report.bits_rle) / 32.0;
  report.shuffle_rounds = shuffle_rounds(ctx);
  return report;
}

}  // namespace sflab
