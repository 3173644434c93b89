#include "sflab/attacks.hpp"

#include <algorithm>
#include <cmath>

#include "sflab/errors.hpp"
#include "sflab/rng.hpp"

namespace sflab {

std::string defense_name(DefenseKind d) {
  switch (d) {
    case DefenseKind::None: return "none";
    case DefenseKind::ModelShuffle: return "model_shuffle";
    case DefenseKind::LayerShuffle: return "layer_shuffle";
    case DefenseKind::ParamShuffle: return "param_shuffle";
    case DefenseKind::BitRns: return "bit_rns";
    case DefenseKind::BitRnsRle: return "bit_rns_rle";
  }
  throw ConfigInvalid("defense_name: unknown defense");
}

std::string attack_name(AttackKind a) {
  switch (a) {
    case AttackKind::None: return "none";
    case AttackKind::Sia: return "sia";
    case AttackKind::ReconModelSia: return "recon_model_sia";
    case AttackKind::ReconLayerSia: return "recon_layer_sia";
    case AttackKind::ReconParamSia: return "recon_param_sia";
  }
  throw ConfigInvalid("attack_name: unknown attack");
}

ShadowDataset build_shadow(const Dataset& ds, const Partition& part, uint32_t target,
                           double fraction, double noise_level, uint64_t seed) {
  if (target >= part.shards.size()) throw ConfigInvalid("build_shadow: no such client");
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw ConfigInvalid("build_shadow: fraction outside (0, 1]");
  if (noise_level < 0.0) throw ConfigInvalid("build_shadow: negative noise level");
  const auto& shard = part.shards[target];
  auto k = static_cast<size_t>(fraction * static_cast<double>(shard.size()) + 0.5);
  k = std::clamp<size_t>(k, 1, shard.size());
  std::vector<uint32_t> pool = shard;
  auto rng = make_rng(seed, "shadow", target);
  for (size_t i = 0; i < k; ++i) {
    size_t j = i + static_cast<size_t>(uniform_below(rng, pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  ShadowDataset shadow;
  shadow.target = target;
  shadow.records.reserve(k);
  for (size_t i = 0; i < k; ++i) {
    Record rec = ds.records[pool[i]];
    if (noise_level > 0.0)
      for (double& f : rec.features) f += noise_level * normal(rng);
    shadow.records.push_back(std::move(rec));
  }
  return shadow;
}

uint32_t sia_attack(const std::vector<std::pair<uint32_t, const ModelParams*>>& candidates,
                    const Record& rec, uint32_t n_clients, std::mt19937_64& rng) {
  if (candidates.empty()) throw ConfigInvalid("sia_attack: no candidates");
  if (n_clients == 0) throw ConfigInvalid("sia_attack: zero clients");
  std::vector<double> losses(candidates.size());
  for (size_t i = 0; i < candidates.size(); ++i)
    losses[i] = record_loss(*candidates[i].second, rec);
  double lo = *std::min_element(losses.begin(), losses.end());
  double hi = *std::max_element(losses.begin(), losses.end());
  if (candidates.size() == 1 || lo == hi)
    return static_cast<uint32_t>(uniform_below(rng, n_clients));
  uint32_t best_label = 0;
  bool seen = false;
  for (size_t i = 0; i < candidates.size(); ++i) {
    if (losses[i] != lo) continue;
    if (!seen || candidates[i].first < best_label) best_label = candidates[i].first;
    seen = true;
  }
  return best_label;
}

ReconResult recon_model(const std::vector<ModelParams>& shuffled,
                        const std::vector<Record>& shadow) {
  if (shuffled.empty()) throw ConfigInvalid("recon_model: no models");
  if (shadow.empty()) throw ConfigInvalid("recon_model: empty shadow set");
  ReconResult out;
  size_t best = 0;
  double best_acc = accuracy(shuffled[0], shadow);
  out.shadow_evals = shadow.size();
  for (size_t i = 1; i < shuffled.size(); ++i) {
    double acc = accuracy(shuffled[i], shadow);
    out.shadow_evals += shadow.size();
    if (acc > best_acc) {
      best_acc = acc;
      best = i;
    }
  }
  out.model = shuffled[best];
  return out;
}

ReconResult recon_layer(const ShuffledLayers& sl, const ModelParams& reference,
                        const std::vector<Record>& shadow) {
  if (sl.modules.empty()) throw ConfigInvalid("recon_layer: no modules");
  if (shadow.empty()) throw ConfigInvalid("recon_layer: empty shadow set");
  std::vector<LayerSlice> means = layer_means(sl);
  size_t final = sl.modules.size() - 1;
  const auto& slots = sl.slices[final];
  ReconResult out;
  std::vector<const LayerSlice*> parts(sl.modules.size());
  for (size_t m = 0; m < final; ++m) parts[m] = &means[m];
  size_t best = 0;
  double best_acc = -1.0;
  ModelParams best_model;
  for (size_t i = 0; i < slots.size(); ++i) {
    parts[final] = &slots[i];
    ModelParams candidate = assemble_model(reference, sl.modules, parts);
    double acc = accuracy(candidate, shadow);
    out.shadow_evals += shadow.size();
    if (acc > best_acc) {
      best_acc = acc;
      best = i;
      best_model = std::move(candidate);
    }
  }
  (void)best;
  out.model = std::move(best_model);
  return out;
}

ReconResult recon_param(const ShuffledParameters& sp, const ModelParams& reference,
                        const std::vector<Record>& shadow) {
  if (sp.values.empty()) throw ConfigInvalid("recon_param: no values");
  if (shadow.empty()) throw ConfigInvalid("recon_param: empty shadow set");
  ModelParams global = parameter_mean(sp, reference);
  std::vector<std::string> modules = module_names(reference);
  auto [first, last] = module_flat_range(reference, modules.back());
  ReconResult out;
  out.model = global;
  size_t n = sp.values[0].size();
  for (size_t p = first; p < last; ++p) {
    double mean_value = global.at_flat(p);
    double best_val = sp.values[p][0];
    double best_acc = -1.0;
    for (size_t j = 0; j < n; ++j) {
      global.at_flat(p) = sp.values[p][j];
      double acc = accuracy(global, shadow);
      out.shadow_evals += shadow.size();
      if (acc > best_acc) {
        best_acc = acc;
        best_val = sp.values[p][j];
      }
    }
    global.at_flat(p) = mean_value;  // candidates swap against the global base
    out.model.at_flat(p) = best_val;
  }
  return out;
}

namespace {

void validate_plan(const FederationPlan& plan) {
  std::vector<std::string> problems;
  if (plan.n_clients < 2) problems.push_back("need at least 2 clients");
  if (plan.rounds < 1) problems.push_back("need at least 1 round");
  bool recon = plan.attack == AttackKind::ReconModelSia ||
               plan.attack == AttackKind::ReconLayerSia ||
               plan.attack == AttackKind::ReconParamSia;
  if (plan.attack == AttackKind::Sia && plan.defense != DefenseKind::None &&
      plan.defense != DefenseKind::BitRns && plan.defense != DefenseKind::BitRnsRle)
    problems.push_back("plain sia needs labeled candidates; pair a recon attack with shuffles");
  if (plan.attack == AttackKind::ReconModelSia && plan.defense != DefenseKind::ModelShuffle)
    problems.push_back("recon_model_sia expects defense model_shuffle");
  if (plan.attack == AttackKind::ReconLayerSia && plan.defense != DefenseKind::LayerShuffle)
    problems.push_back("recon_layer_sia expects defense layer_shuffle");
  if (plan.attack == AttackKind::ReconParamSia && plan.defense != DefenseKind::ParamShuffle)
    problems.push_back("recon_param_sia expects defense param_shuffle");
  if (recon && !(plan.shadow_fraction > 0.0 && plan.shadow_fraction <= 1.0))
    problems.push_back("recon attacks need shadow_fraction in (0, 1]");
  if (!problems.empty()) {
    std::string msg = "federation plan invalid:";
    for (const auto& p : problems) msg += " " + p + ";";
    throw ConfigInvalid(msg);
  }
}

double shard_loss(const ModelParams& m, const Dataset& ds, const std::vector<uint32_t>& shard) {
  double total = 0.0;
  for (uint32_t idx : shard) total += record_loss(m, ds.records[idx]);
  return total / static_cast<double>(shard.size());
}

}  // namespace

ExperimentResult run_sia_experiment(const FederationPlan& plan) {
  validate_plan(plan);
  Dataset ds = gen_synthetic(plan.classes, plan.dim, plan.samples, derive_seed(plan.seed, "data"));
  auto test_rng = make_rng(plan.seed, "test");
  std::vector<Record> test = sample_records(ds, plan.test_samples, test_rng);
  Partition part = dirichlet_partition(ds, plan.n_clients, plan.alpha,
                                       derive_seed(plan.seed, "part"));
  ModelParams global = init_mlp({plan.dim, plan.hidden, plan.classes},
                                derive_seed(plan.seed, "init"));

  bool recon = plan.attack == AttackKind::ReconModelSia ||
               plan.attack == AttackKind::ReconLayerSia ||
               plan.attack == AttackKind::ReconParamSia;
  std::vector<ShadowDataset> shadows;
  if (recon)
    for (uint32_t x = 0; x < plan.n_clients; ++x)
      shadows.push_back(build_shadow(ds, part, x, plan.shadow_fraction, plan.shadow_noise,
                                     derive_seed(plan.seed, "shadow", x)));

  ExperimentResult result;
  result.baseline_rate = 1.0 / static_cast<double>(plan.n_clients);
  bool bit_defense = plan.defense == DefenseKind::BitRns ||
                     plan.defense == DefenseKind::BitRnsRle;
  if (bit_defense)
    result.context = select_moduli(plan.n_clients, plan.precision, plan.strategy);

  for (uint32_t round = 0; round < plan.rounds; ++round) {
    std::vector<ModelParams> locals;
    locals.reserve(plan.n_clients);
    double train_loss = 0.0;
    for (uint32_t i = 0; i < plan.n_clients; ++i) {
      TrainOptions opts = plan.train;
      opts.seed = derive_seed(plan.seed, "train", round, i);
      locals.push_back(train_local(global, ds, part.shards[i], opts));
      train_loss += shard_loss(locals.back(), ds, part.shards[i]);
    }
    train_loss /= static_cast<double>(plan.n_clients);

    RoundStats stats;
    stats.round = round;
    stats.train_loss = train_loss;

    uint64_t defense_seed = derive_seed(plan.seed, "defense", round);
    ModelParams next;
    std::vector<ModelParams> recon_models;
    std::optional<Alg1Result> protocol;
    std::vector<std::pair<uint32_t, const ModelParams*>> candidates;

    switch (plan.defense) {
      case DefenseKind::None: {
        next = fedavg(locals);
        if (plan.attack != AttackKind::None)
          for (uint32_t i = 0; i < plan.n_clients; ++i) candidates.emplace_back(i, &locals[i]);
        break;
      }
      case DefenseKind::ModelShuffle: {
        ShuffledModels sm = shuffle_models(locals, defense_seed);
        next = fedavg(sm.models);
        if (plan.attack == AttackKind::ReconModelSia) {
          recon_models.reserve(plan.n_clients);
          for (uint32_t x = 0; x < plan.n_clients; ++x) {
            ReconResult rr = recon_model(sm.models, shadows[x].records);
            stats.shadow_evals += rr.shadow_evals;
            recon_models.push_back(std::move(rr.model));
          }
          for (uint32_t x = 0; x < plan.n_clients; ++x)
            candidates.emplace_back(x, &recon_models[x]);
        }
        break;
      }
      case DefenseKind::LayerShuffle: {
        ShuffledLayers sl = shuffle_layers(locals, defense_seed);
        next = fedavg(locals);
        if (plan.attack == AttackKind::ReconLayerSia) {
          recon_models.reserve(plan.n_clients);
          for (uint32_t x = 0; x < plan.n_clients; ++x) {
            ReconResult rr = recon_layer(sl, global, shadows[x].records);
            stats.shadow_evals += rr.shadow_evals;
            recon_models.push_back(std::move(rr.model));
          }
          for (uint32_t x = 0; x < plan.n_clients; ++x)
            candidates.emplace_back(x, &recon_models[x]);
        }
        break;
      }
      case DefenseKind::ParamShuffle: {
        ShuffledParameters sp = shuffle_parameters(locals, defense_seed);
        next = fedavg(locals);
        if (plan.attack == AttackKind::ReconParamSia) {
          recon_models.reserve(plan.n_clients);
          for (uint32_t x = 0; x < plan.n_clients; ++x) {
            ReconResult rr = recon_param(sp, global, shadows[x].records);
            stats.shadow_evals += rr.shadow_evals;
            recon_models.push_back(std::move(rr.model));
          }
          for (uint32_t x = 0; x < plan.n_clients; ++x)
            candidates.emplace_back(x, &recon_models[x]);
        }
        break;
      }
      case DefenseKind::BitRns:
      case DefenseKind::BitRnsRle: {
        const RnsContext& ctx = *result.context;
        protocol = plan.defense == DefenseKind::BitRns
                       ? run_alg1(locals, ctx, defense_seed, plan.channel_shuffler)
                       : run_alg1_rle(locals, ctx, defense_seed, plan.channel_shuffler);
        next = protocol->aggregate;
        if (plan.attack != AttackKind::None)
          for (uint32_t i = 0; i < plan.n_clients; ++i)
            candidates.emplace_back(i, &protocol->aggregate);
        break;
      }
    }

    if (plan.attack != AttackKind::None && plan.probes > 0) {
      auto probe_rng = make_rng(plan.seed, "probe", round);
      for (uint32_t t = 0; t < plan.probes; ++t) {
        auto idx = static_cast<uint32_t>(uniform_below(probe_rng, ds.records.size()));
        uint32_t guess = sia_attack(candidates, ds.records[idx], plan.n_clients, probe_rng);
        stats.hits += guess == part.source_of[idx];
      }
      stats.probes = plan.probes;
      stats.sia_rate = static_cast<double>(stats.hits) / static_cast<double>(stats.probes);
    }

    stats.upload_bits_per_param =
        bit_defense ? upload_bits_per_param(*result.context,
                                            plan.defense == DefenseKind::BitRnsRle)
                    : 32;
    global = next;
    stats.accuracy = accuracy(global, test);
    result.rounds.push_back(stats);
  }

  result.final_accuracy = result.rounds.back().accuracy;
  for (const RoundStats& r : result.rounds) {
    result.total_probes += r.probes;
    result.total_hits += r.hits;
    result.best_sia_rate = std::max(result.best_sia_rate, r.sia_rate);
  }
  result.pooled_sia_rate =
      result.total_probes == 0
          ? 0.0
          : static_cast<double>(result.total_hits) / static_cast<double>(result.total_probes);
  return result;
}

}  // namespace sflab
