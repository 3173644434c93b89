#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sflab/alg1.hpp"

namespace sflab {

enum class TrustLevel { FullyTrusted, SemiHonest, PartiallyMalicious };
enum class ServerBehavior { Honest, NoShuffle, TamperTrap };

struct MixServer {
  uint32_t id = 0;
  uint64_t key = 0;  // unseals one envelope layer
  ServerBehavior behavior = ServerBehavior::Honest;
};

struct MixnetConfig {
  std::vector<MixServer> servers;  // applied in order
  TrustLevel trust = TrustLevel::SemiHonest;
  std::vector<uint32_t> trap_labels;  // auditor-known decoys, verified when malicious servers are in scope
};

struct MixMessage {
  uint32_t label = 0;  // stand-in identity, visible for auditing; a real deployment would hide it
  std::vector<uint8_t> payload;
};

struct RouteVerdict {
  bool flagged = false;
  uint32_t server = 0;  // id of the hop the evidence points at
};

struct RouteResult {
  std::vector<MixMessage> messages;  // empty when flagged
  RouteVerdict verdict;
};

// Sequential mix cascade.  Outside FullyTrusted, payloads travel inside
// layered envelopes (keyed scramble + tag per hop, a deterministic
// non-cryptographic stand-in for onion encryption).  Under PartiallyMalicious
// trust, honest hops check trap envelopes against auditor expectations
// (per-layer tags plus an order-free multiset digest) and the exit point
// re-checks trap payloads, so tampering flags the offending hop's successor
// view of it: the immediate predecessor of wherever verification first fails.
RouteResult mixnet_route(std::vector<MixMessage> messages, const MixnetConfig& cfg,
                         uint64_t seed);

// distinct labels in [0, label_count), about fraction * label_count of them
// (at least one when fraction > 0)
std::vector<uint32_t> select_traps(uint32_t label_count, double fraction, uint64_t seed);

// Adapter: permute one bit channel by routing each bit as a message.  Throws
// MixAborted if the route comes back flagged.
ChannelShuffler mixnet_channel_shuffler(MixnetConfig cfg);

struct MixAborted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace sflab
