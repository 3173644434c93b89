#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <vector>

#include "sflab/bitvec.hpp"
#include "sflab/model.hpp"
#include "sflab/rns.hpp"
#include "sflab/shuffle.hpp"

namespace sflab {

// Pluggable permutation backend for one bit channel; the default is an
// in-place uniform shuffle seeded by the per-channel stream.
using ChannelShuffler = std::function<void(PackedBits& bits, uint64_t channel_seed)>;

struct Alg1Result {
  ModelParams aggregate;            // decoded sum / (10^r * n), input layout
  BitChannelBatch transcript;       // post-shuffle channels, param-major
  std::vector<i128> sums;           // decoded quantized sums, one per parameter
};

// Bit-level RNS pipeline: clip, quantize to r decimal digits, encode residues,
// expand each residue to unary, shuffle every (parameter, modulus) channel,
// then recover sums from popcounts and CRT.
Alg1Result run_alg1(const std::vector<ModelParams>& clients, const RnsContext& ctx,
                    uint64_t seed, const ChannelShuffler& shuffler = {});

// Same pipeline, but clients submit each residue as a ceil(log2 m)-bit count
// and the shuffler expands counts back to unary before permuting.  Given the
// same seed this matches run_alg1 bit for bit.
Alg1Result run_alg1_rle(const std::vector<ModelParams>& clients, const RnsContext& ctx,
                        uint64_t seed, const ChannelShuffler& shuffler = {});

// client -> shuffler traffic in bits for one parameter
uint64_t upload_bits_per_param(const RnsContext& ctx, bool rle);

void write_transcript(std::ostream& os, const BitChannelBatch& batch, Granularity g,
                      uint32_t precision);
BitChannelBatch read_transcript(std::istream& is, Granularity& g, uint32_t& precision);

// channel payload bytes as serialized, excluding headers
uint64_t transcript_payload_bytes(const BitChannelBatch& batch);

}  // namespace sflab
