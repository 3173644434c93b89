#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sflab/aggregate.hpp"
#include "sflab/alg1.hpp"
#include "sflab/data.hpp"
#include "sflab/model.hpp"
#include "sflab/rns.hpp"
#include "sflab/shuffle.hpp"

namespace sflab {

enum class DefenseKind { None, ModelShuffle, LayerShuffle, ParamShuffle, BitRns, BitRnsRle };
enum class AttackKind { None, Sia, ReconModelSia, ReconLayerSia, ReconParamSia };

std::string defense_name(DefenseKind d);
std::string attack_name(AttackKind a);

// Attacker-side auxiliary data: a sample of the target's shard, optionally
// blurred with Gaussian feature noise.
struct ShadowDataset {
  uint32_t target = 0;
  std::vector<Record> records;
};

ShadowDataset build_shadow(const Dataset& ds, const Partition& part, uint32_t target,
                           double fraction, double noise_level, uint64_t seed);

// Guess which client a record came from: the candidate whose model gives the
// lowest cross-entropy on it wins, lowest label on a partial tie.  When every
// candidate looks identical the record carries no signal and the guess is
// uniform over [0, n_clients).
uint32_t sia_attack(const std::vector<std::pair<uint32_t, const ModelParams*>>& candidates,
                    const Record& rec, uint32_t n_clients, std::mt19937_64& rng);

struct ReconResult {
  ModelParams model;
  uint64_t shadow_evals = 0;  // model-on-record evaluations spent
};

// pick the shuffled model that scores best on the shadow set (n * |S| evals)
ReconResult recon_model(const std::vector<ModelParams>& shuffled,
                        const std::vector<Record>& shadow);

// per candidate final-layer slice, score mean-of-the-rest + slice (n * |S| evals)
ReconResult recon_layer(const ShuffledLayers& sl, const ModelParams& reference,
                        const std::vector<Record>& shadow);

// per final-layer index, score each candidate value swapped into the global
// model and keep the best (k * n * |S| evals for k final-layer parameters)
ReconResult recon_param(const ShuffledParameters& sp, const ModelParams& reference,
                        const std::vector<Record>& shadow);

// Everything one federation needs: data, training, defense, attack.  This is
// the science core; serialization and file layout live in the harness.
struct FederationPlan {
  uint64_t seed = 1;
  uint32_t n_clients = 10;
  double alpha = 0.1;
  uint32_t classes = 10;
  uint32_t dim = 20;
  size_t samples = 4000;
  size_t test_samples = 2000;
  uint32_t hidden = 32;
  uint32_t rounds = 3;
  TrainOptions train;  // per-client options; seed field is ignored (derived per round)
  DefenseKind defense = DefenseKind::None;
  uint32_t precision = 4;
  ModuliStrategy strategy = ModuliStrategy::ConsecutivePrimes;
  AttackKind attack = AttackKind::Sia;
  double shadow_fraction = 0.25;
  double shadow_noise = 0.0;
  uint32_t probes = 1000;
  ChannelShuffler channel_shuffler;  // optional bit-defense backend
};

struct RoundStats {
  uint32_t round = 0;
  double accuracy = 0.0;    // global model on the held-out split, post-aggregation
  double train_loss = 0.0;  // mean client loss on own shard, pre-aggregation
  uint64_t probes = 0;
  uint64_t hits = 0;
  double sia_rate = 0.0;
  uint64_t shadow_evals = 0;
  uint64_t upload_bits_per_param = 0;
};

struct ExperimentResult {
  std::vector<RoundStats> rounds;
  double final_accuracy = 0.0;
  double pooled_sia_rate = 0.0;  // all probes of all rounds together
  double best_sia_rate = 0.0;
  double baseline_rate = 0.0;  // 1 / n_clients
  uint64_t total_probes = 0;
  uint64_t total_hits = 0;
  std::optional<RnsContext> context;  // present for bit-level defenses
};

ExperimentResult run_sia_experiment(const FederationPlan& plan);

}  // namespace sflab
