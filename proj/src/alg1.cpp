#include "sflab/alg1.hpp"

#include <algorithm>
#include <istream>

#include "sflab/detail/io.hpp"
#include "sflab/errors.hpp"
#include "sflab/rng.hpp"

namespace sflab {

namespace {

// Quantized residues for every client, flattened as [param * u + modulus].
// Shared by both wire formats; they differ only in how residues travel to
// the shuffler.
std::vector<std::vector<uint64_t>> quantize_clients(const std::vector<ModelParams>& clients,
                                                    const RnsContext& ctx) {
  if (clients.empty()) throw ConfigInvalid("run_alg1: no client models");
  require_same_layout(clients);
  if (ctx.clients != clients.size())
    throw ContextMismatch("run_alg1: context was built for a different client count");
  int64_t vmax = static_cast<int64_t>(ctx.value_max);
  size_t u = ctx.moduli.size();
  std::vector<std::vector<uint64_t>> residues(clients.size());
  for (size_t c = 0; c < clients.size(); ++c) {
    std::vector<double> flat = clip_params(clients[c]).flatten();
    residues[c].reserve(flat.size() * u);
    for (double p : flat) {
      int64_t q = scale_quantize(p, ctx.precision);
      // floor can land on -10^r at the clip edge; keep magnitudes symmetric
      q = std::max(q, -vmax);
      ResidueVector rv = rns_encode(q, ctx);
      residues[c].insert(residues[c].end(), rv.residues.begin(), rv.residues.end());
    }
  }
  return residues;
}

Alg1Result decode_channels(const std::vector<ModelParams>& clients, const RnsContext& ctx,
                           BitChannelBatch batch) {
  size_t n_params = batch.param_count;
  size_t u = ctx.moduli.size();
  std::vector<double> flat(n_params);
  Alg1Result result;
  result.sums.resize(n_params);
  double denom = static_cast<double>(pow10_u64(ctx.precision)) *
                 static_cast<double>(clients.size());
  for (size_t p = 0; p < n_params; ++p) {
    ResidueVector rv;
    rv.context = &ctx;
    rv.residues.resize(u);
    for (size_t j = 0; j < u; ++j)
      rv.residues[j] = batch.channel(p, j).popcount() % ctx.moduli[j];
    i128 sum = rns_decode_signed(rv);
    result.sums[p] = sum;
    flat[p] = static_cast<double>(sum) / denom;
  }
  result.aggregate = clients[0];
  result.aggregate.unflatten(flat);
  result.transcript = std::move(batch);
  return result;
}

void shuffle_batch(BitChannelBatch& batch, uint64_t seed, const ChannelShuffler& shuffler) {
  for (size_t p = 0; p < batch.param_count; ++p)
    for (size_t j = 0; j < batch.moduli.size(); ++j) {
      uint64_t channel_seed = derive_seed(seed, "alg1.channel", p, j);
      if (shuffler) {
        shuffler(batch.channel(p, j), channel_seed);
      } else {
        auto rng = std::mt19937_64(channel_seed);
        batch.channel(p, j).shuffle(rng);
      }
    }
}

}  // namespace

Alg1Result run_alg1(const std::vector<ModelParams>& clients, const RnsContext& ctx,
                    uint64_t seed, const ChannelShuffler& shuffler) {
  auto residues = quantize_clients(clients, ctx);
  size_t n_params = clients[0].param_count();
  size_t u = ctx.moduli.size();
  BitChannelBatch batch;
  batch.n_clients = clients.size();
  batch.moduli = ctx.moduli;
  batch.param_count = n_params;
  batch.channels.resize(n_params * u);
  for (size_t p = 0; p < n_params; ++p)
    for (size_t j = 0; j < u; ++j) {
      PackedBits& chan = batch.channel(p, j);
      chan = PackedBits(clients.size() * ctx.moduli[j]);
      for (size_t c = 0; c < clients.size(); ++c) {
        uint64_t r = residues[c][p * u + j];
        size_t off = c * ctx.moduli[j];
        for (uint64_t b = 0; b < r; ++b) chan.set(off + b, true);
      }
    }
  shuffle_batch(batch, seed, shuffler);
  return decode_channels(clients, ctx, std::move(batch));
}

Alg1Result run_alg1_rle(const std::vector<ModelParams>& clients, const RnsContext& ctx,
                        uint64_t seed, const ChannelShuffler& shuffler) {
  auto residues = quantize_clients(clients, ctx);
  size_t n_params = clients[0].param_count();
  size_t u = ctx.moduli.size();
  // clients transmit fixed-width counts; the shuffler expands them to unary
  BitChannelBatch batch;
  batch.n_clients = clients.size();
  batch.moduli = ctx.moduli;
  batch.param_count = n_params;
  batch.channels.resize(n_params * u);
  for (size_t p = 0; p < n_params; ++p)
    for (size_t j = 0; j < u; ++j) {
      PackedBits& chan = batch.channel(p, j);
      chan = PackedBits(clients.size() * ctx.moduli[j]);
      for (size_t c = 0; c < clients.size(); ++c) {
        RleCount count = rle_compress(residues[c][p * u + j], ctx.moduli[j]);
        UnaryBits unary = rle_decompress(count.value, ctx.moduli[j]);
        size_t off = c * ctx.moduli[j];
        for (uint64_t b = 0; b < unary.capacity; ++b)
          if (unary.bits.get(b)) chan.set(off + b, true);
      }
    }
  shuffle_batch(batch, seed, shuffler);
  return decode_channels(clients, ctx, std::move(batch));
}

uint64_t upload_bits_per_param(const RnsContext& ctx, bool rle) {
  uint64_t bits = 0;
  for (uint64_t m : ctx.moduli) bits += rle ? rle_width(m) : m;
  return bits;
}

namespace {
constexpr char kTranscriptMagic[9] = "SFLTRNS1";
}

void write_transcript(std::ostream& os, const BitChannelBatch& batch, Granularity g,
                      uint32_t precision) {
  detail::put_magic(os, kTranscriptMagic);
  detail::put<uint8_t>(os, static_cast<uint8_t>(g));
  detail::put<uint32_t>(os, precision);
  detail::put<uint64_t>(os, batch.n_clients);
  detail::put<uint64_t>(os, batch.param_count);
  detail::put<uint32_t>(os, static_cast<uint32_t>(batch.moduli.size()));
  for (uint64_t m : batch.moduli) detail::put<uint64_t>(os, m);
  for (const PackedBits& chan : batch.channels) {
    detail::put<uint64_t>(os, chan.size());
    std::vector<uint8_t> bytes = chan.bytes_le();
    os.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
  }
}

BitChannelBatch read_transcript(std::istream& is, Granularity& g, uint32_t& precision) {
  detail::expect_magic(is, kTranscriptMagic);
  g = static_cast<Granularity>(detail::get<uint8_t>(is));
  precision = detail::get<uint32_t>(is);
  BitChannelBatch batch;
  batch.n_clients = detail::get<uint64_t>(is);
  batch.param_count = detail::get<uint64_t>(is);
  batch.moduli.resize(detail::get<uint32_t>(is));
  for (uint64_t& m : batch.moduli) m = detail::get<uint64_t>(is);
  batch.channels.resize(batch.param_count * batch.moduli.size());
  for (PackedBits& chan : batch.channels) {
    uint64_t nbits = detail::get<uint64_t>(is);
    chan = PackedBits(nbits);
    for (uint64_t i = 0; i < (nbits + 7) / 8; ++i) {
      uint8_t byte = detail::get<uint8_t>(is);
      for (int b = 0; b < 8 && i * 8 + b < nbits; ++b)
        if ((byte >> b) & 1) chan.set(i * 8 + b, true);
    }
  }
  return batch;
}

uint64_t transcript_payload_bytes(const BitChannelBatch& batch) {
  uint64_t bytes = 0;
  for (const PackedBits& chan : batch.channels) bytes += (chan.size() + 7) / 8;
  return bytes;
}

}  // namespace sflab
