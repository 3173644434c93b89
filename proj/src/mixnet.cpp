#include "sflab/mixnet.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "sflab/errors.hpp"
#include "sflab/rng.hpp"

namespace sflab {

namespace {

void scramble(std::vector<uint8_t>& bytes, uint64_t key, uint32_t label) {
  uint64_t state = key ^ (0x9e3779b97f4a7c15ull * (label + 1));
  uint64_t word = 0;
  for (size_t i = 0; i < bytes.size(); ++i) {
    if (i % 8 == 0) word = splitmix64_next(state);
    bytes[i] ^= static_cast<uint8_t>(word >> ((i % 8) * 8));
  }
}

uint64_t layer_tag(const std::vector<uint8_t>& scrambled, uint64_t key, uint32_t label) {
  return fnv1a64(scrambled.data(), scrambled.size(), key ^ (0xc2b2ae3d27d4eb4full * (label + 1)));
}

// one envelope layer: 8-byte tag followed by the scrambled inner blob
std::vector<uint8_t> seal_layer(const std::vector<uint8_t>& inner, uint64_t key, uint32_t label) {
  std::vector<uint8_t> scrambled = inner;
  scramble(scrambled, key, label);
  uint64_t tag = layer_tag(scrambled, key, label);
  std::vector<uint8_t> out(8 + scrambled.size());
  for (int i = 0; i < 8; ++i) out[i] = static_cast<uint8_t>(tag >> (i * 8));
  std::copy(scrambled.begin(), scrambled.end(), out.begin() + 8);
  return out;
}

bool unseal_layer(std::vector<uint8_t>& blob, uint64_t key, uint32_t label) {
  if (blob.size() < 8) return false;
  uint64_t tag = 0;
  for (int i = 0; i < 8; ++i) tag |= static_cast<uint64_t>(blob[i]) << (i * 8);
  std::vector<uint8_t> scrambled(blob.begin() + 8, blob.end());
  bool ok = tag == layer_tag(scrambled, key, label);
  scramble(scrambled, key, label);  // XOR keystream is its own inverse
  blob = std::move(scrambled);
  return ok;
}

uint64_t blob_digest(const std::vector<uint8_t>& blob) {
  return fnv1a64(blob.data(), blob.size());
}

bool is_trap(const MixnetConfig& cfg, uint32_t label) {
  return std::find(cfg.trap_labels.begin(), cfg.trap_labels.end(), label) !=
         cfg.trap_labels.end();
}

}  // namespace

RouteResult mixnet_route(std::vector<MixMessage> messages, const MixnetConfig& cfg,
                         uint64_t seed) {
  if (cfg.servers.empty()) throw ConfigInvalid("mixnet: no servers");
  bool any_honest = false;
  for (const MixServer& s : cfg.servers) any_honest |= s.behavior == ServerBehavior::Honest;
  if (!any_honest) throw ConfigInvalid("mixnet: no honest server in the cascade");
  {
    std::unordered_set<uint32_t> labels;
    for (const MixMessage& m : messages)
      if (!labels.insert(m.label).second)
        throw ConfigInvalid("mixnet: duplicate message label");
    for (uint32_t t : cfg.trap_labels)
      if (!labels.count(t)) throw ConfigInvalid("mixnet: trap label with no message");
  }

  bool sealed = cfg.trust != TrustLevel::FullyTrusted;
  bool verify = cfg.trust == TrustLevel::PartiallyMalicious;

  // auditor-side expectations: trap payloads and, per depth, the multiset
  // digest of the trap envelopes as they should look entering that hop
  std::unordered_map<uint32_t, std::vector<uint8_t>> trap_plain;
  std::vector<uint64_t> expected_digest(cfg.servers.size() + 1, 0);
  if (verify)
    for (const MixMessage& m : messages)
      if (is_trap(cfg, m.label)) trap_plain[m.label] = m.payload;

  if (sealed) {
    for (MixMessage& m : messages) {
      std::vector<std::vector<uint8_t>> depth_blobs(cfg.servers.size() + 1);
      depth_blobs[cfg.servers.size()] = m.payload;
      for (size_t j = cfg.servers.size(); j-- > 0;)
        depth_blobs[j] = seal_layer(depth_blobs[j + 1], cfg.servers[j].key, m.label);
      if (verify && is_trap(cfg, m.label))
        for (size_t d = 0; d <= cfg.servers.size(); ++d)
          expected_digest[d] ^= blob_digest(depth_blobs[d]);
      m.payload = std::move(depth_blobs[0]);
    }
  }

  auto flag = [](uint32_t server_id) {
    RouteResult r;
    r.verdict.flagged = true;
    r.verdict.server = server_id;
    return r;
  };

  for (size_t j = 0; j < cfg.servers.size(); ++j) {
    const MixServer& server = cfg.servers[j];
    bool honest = server.behavior == ServerBehavior::Honest;

    if (verify && honest) {
      uint64_t digest = 0;
      for (const MixMessage& m : messages)
        if (is_trap(cfg, m.label)) digest ^= blob_digest(m.payload);
      if (digest != expected_digest[j])
        return flag(j > 0 ? cfg.servers[j - 1].id : server.id);
    }

    if (sealed) {
      for (MixMessage& m : messages) {
        bool tag_ok = unseal_layer(m.payload, server.key, m.label);
        if (verify && honest && !tag_ok && is_trap(cfg, m.label))
          return flag(j > 0 ? cfg.servers[j - 1].id : server.id);
      }
    }

    if (server.behavior != ServerBehavior::NoShuffle) {
      auto rng = make_rng(seed, "mixnet.hop", j);
      std::vector<uint32_t> perm = random_permutation(messages.size(), rng);
      std::vector<MixMessage> next;
      next.reserve(messages.size());
      for (uint32_t src : perm) next.push_back(std::move(messages[src]));
      messages = std::move(next);
    }

    if (server.behavior == ServerBehavior::TamperTrap) {
      MixMessage* victim = nullptr;
      for (MixMessage& m : messages)
        if (is_trap(cfg, m.label)) {
          victim = &m;
          break;
        }
      if (victim == nullptr && !messages.empty()) victim = &messages.front();
      // flip in the envelope body, past any tag prefix, so the damage
      // survives later unseals instead of vanishing with the tag
      if (victim != nullptr && !victim->payload.empty()) victim->payload.back() ^= 1;
    }
  }

  if (verify) {
    // exit check: the aggregator compares trap payloads against the auditor's copies
    for (const MixMessage& m : messages)
      if (is_trap(cfg, m.label) && m.payload != trap_plain[m.label])
        return flag(cfg.servers.back().id);
  }

  RouteResult result;
  result.messages = std::move(messages);
  return result;
}

std::vector<uint32_t> select_traps(uint32_t label_count, double fraction, uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0))
    throw ConfigInvalid("select_traps: fraction outside [0, 1]");
  if (label_count == 0 || fraction == 0.0) return {};
  auto k = static_cast<uint32_t>(fraction * label_count + 0.5);
  k = std::clamp<uint32_t>(k, 1, label_count);
  std::vector<uint32_t> labels(label_count);
  for (uint32_t i = 0; i < label_count; ++i) labels[i] = i;
  auto rng = make_rng(seed, "traps");
  for (uint32_t i = 0; i < k; ++i) {
    auto j = static_cast<uint32_t>(i + uniform_below(rng, label_count - i));
    std::swap(labels[i], labels[j]);
  }
  labels.resize(k);
  std::sort(labels.begin(), labels.end());
  return labels;
}

ChannelShuffler mixnet_channel_shuffler(MixnetConfig cfg) {
  return [cfg = std::move(cfg)](PackedBits& bits, uint64_t channel_seed) {
    std::vector<MixMessage> messages(bits.size());
    for (size_t i = 0; i < bits.size(); ++i) {
      messages[i].label = static_cast<uint32_t>(i);
      messages[i].payload = {static_cast<uint8_t>(bits.get(i) ? 1 : 0)};
    }
    RouteResult r = mixnet_route(std::move(messages), cfg, channel_seed);
    if (r.verdict.flagged)
      throw MixAborted("mixnet flagged server " + std::to_string(r.verdict.server));
    for (size_t i = 0; i < bits.size(); ++i) bits.set(i, r.messages[i].payload[0] != 0);
  };
}

}  // namespace sflab
