#include <doctest.h>

#include <cmath>
#include <map>

#include "sflab/attacks.hpp"
#include "sflab/errors.hpp"
#include "sflab/rng.hpp"

using namespace sflab;

namespace {

// model whose logits strongly prefer one class regardless of input
ModelParams biased_model(uint32_t dim, uint32_t classes, uint32_t favored) {
  ModelParams m = init_mlp({dim, 2, classes}, 7);
  for (auto& t : m.tensors)
    for (double& v : t.data) v = 0.0;
  m.tensors[3].data[favored] = 10.0;  // fc2.bias
  return m;
}

}  // namespace

TEST_CASE("names are stable identifiers") {
  CHECK(defense_name(DefenseKind::None) == "none");
  CHECK(defense_name(DefenseKind::ModelShuffle) == "model_shuffle");
  CHECK(defense_name(DefenseKind::LayerShuffle) == "layer_shuffle");
  CHECK(defense_name(DefenseKind::ParamShuffle) == "param_shuffle");
  CHECK(defense_name(DefenseKind::BitRns) == "bit_rns");
  CHECK(defense_name(DefenseKind::BitRnsRle) == "bit_rns_rle");
  CHECK(attack_name(AttackKind::Sia) == "sia");
  CHECK(attack_name(AttackKind::ReconModelSia) == "recon_model_sia");
  CHECK(attack_name(AttackKind::ReconLayerSia) == "recon_layer_sia");
  CHECK(attack_name(AttackKind::ReconParamSia) == "recon_param_sia");
}

TEST_CASE("shadow sets sample the target shard") {
  Dataset d = gen_synthetic(4, 6, 600, 11);
  Partition p = dirichlet_partition(d, 5, 1.0, 12);
  ShadowDataset s = build_shadow(d, p, 2, 0.5, 0.0, 99);
  CHECK(s.target == 2);
  size_t want = size_t(0.5 * double(p.shards[2].size()) + 0.5);
  CHECK(s.records.size() == std::clamp<size_t>(want, 1, p.shards[2].size()));
  // without noise every shadow record is an exact member of the shard
  for (const Record& r : s.records) {
    bool found = false;
    for (uint32_t idx : p.shards[2])
      if (d.records[idx].features == r.features && d.records[idx].label == r.label) found = true;
    CHECK(found);
  }
  ShadowDataset s2 = build_shadow(d, p, 2, 0.5, 0.0, 99);
  CHECK(s2.records.size() == s.records.size());
  CHECK(s2.records[0].features == s.records[0].features);
}

TEST_CASE("shadow noise perturbs features but keeps labels") {
  Dataset d = gen_synthetic(4, 6, 600, 11);
  Partition p = dirichlet_partition(d, 5, 1.0, 12);
  ShadowDataset clean = build_shadow(d, p, 1, 0.4, 0.0, 7);
  ShadowDataset noisy = build_shadow(d, p, 1, 0.4, 0.3, 7);
  REQUIRE(clean.records.size() == noisy.records.size());
  double total_shift = 0.0;
  for (size_t i = 0; i < clean.records.size(); ++i) {
    CHECK(clean.records[i].label == noisy.records[i].label);
    for (size_t k = 0; k < 6; ++k)
      total_shift += std::abs(clean.records[i].features[k] - noisy.records[i].features[k]);
  }
  CHECK(total_shift > 0.0);
  CHECK_THROWS_AS(build_shadow(d, p, 9, 0.5, 0.0, 1), ConfigInvalid);
  CHECK_THROWS_AS(build_shadow(d, p, 1, 0.0, 0.0, 1), ConfigInvalid);
  CHECK_THROWS_AS(build_shadow(d, p, 1, 0.5, -1.0, 1), ConfigInvalid);
}

TEST_CASE("source guess picks the lowest-loss candidate") {
  uint32_t dim = 4, classes = 3;
  ModelParams m0 = biased_model(dim, classes, 0);
  ModelParams m1 = biased_model(dim, classes, 1);
  ModelParams m2 = biased_model(dim, classes, 2);
  std::vector<std::pair<uint32_t, const ModelParams*>> cands{{0, &m0}, {1, &m1}, {2, &m2}};
  auto rng = make_rng(1, "sia");
  Record rec{{0.1, 0.2, 0.3, 0.4}, 1};  // class-1 record: m1 has by far the lowest loss
  CHECK(sia_attack(cands, rec, 3, rng) == 1);
  Record rec2{{0.5, 0.5, 0.5, 0.5}, 2};
  CHECK(sia_attack(cands, rec2, 3, rng) == 2);
}

TEST_CASE("partial loss ties resolve to the lowest label") {
  uint32_t dim = 4, classes = 3;
  ModelParams a = biased_model(dim, classes, 0);
  ModelParams b = a;  // identical losses
  ModelParams c = biased_model(dim, classes, 2);
  std::vector<std::pair<uint32_t, const ModelParams*>> cands{{5, &a}, {3, &b}, {8, &c}};
  auto rng = make_rng(2, "sia");
  Record rec{{0.1, 0.2, 0.3, 0.4}, 0};  // a and b tie at the minimum
  for (int i = 0; i < 10; ++i) CHECK(sia_attack(cands, rec, 9, rng) == 3);
}

TEST_CASE("full ties fall back to a uniform guess") {
  uint32_t dim = 4, classes = 3;
  ModelParams a = biased_model(dim, classes, 0);
  ModelParams b = a;
  std::vector<std::pair<uint32_t, const ModelParams*>> cands{{0, &a}, {1, &b}};
  Record rec{{0.1, 0.2, 0.3, 0.4}, 0};
  auto rng = make_rng(3, "sia");
  std::map<uint32_t, size_t> hist;
  for (int i = 0; i < 6000; ++i) ++hist[sia_attack(cands, rec, 6, rng)];
  CHECK(hist.size() == 6);  // guesses range over all clients, not just candidates
  for (const auto& [label, count] : hist) {
    CHECK(count > 6000 / 6.0 * 0.8);
    CHECK(count < 6000 / 6.0 * 1.2);
  }
  // single candidate carries no signal either
  std::vector<std::pair<uint32_t, const ModelParams*>> one{{4, &a}};
  std::map<uint32_t, size_t> hist1;
  for (int i = 0; i < 3000; ++i) ++hist1[sia_attack(one, rec, 3, rng)];
  CHECK(hist1.size() == 3);
}

TEST_CASE("model reconstruction recovers the planted best model") {
  Dataset d = gen_synthetic(3, 5, 300, 21);
  // shadow of pure class-1 records; the class-1-biased model must win
  std::vector<Record> shadow;
  for (const Record& r : d.records)
    if (r.label == 1 && shadow.size() < 40) shadow.push_back(r);
  std::vector<ModelParams> pool{biased_model(5, 3, 0), biased_model(5, 3, 2),
                                biased_model(5, 3, 1), biased_model(5, 3, 2)};
  ReconResult rr = recon_model(pool, shadow);
  CHECK(rr.model == pool[2]);
  CHECK(rr.shadow_evals == pool.size() * shadow.size());
}

TEST_CASE("layer reconstruction budget is candidates times shadow size") {
  Dataset d = gen_synthetic(3, 5, 200, 22);
  std::vector<ModelParams> locals;
  for (uint64_t s = 0; s < 4; ++s) locals.push_back(init_mlp({5, 4, 3}, 100 + s));
  ShuffledLayers sl = shuffle_layers(locals, 9);
  std::vector<Record> shadow(d.records.begin(), d.records.begin() + 25);
  ReconResult rr = recon_layer(sl, locals[0], shadow);
  CHECK(rr.shadow_evals == 4 * 25);
  CHECK(same_layout(rr.model, locals[0]));
}

TEST_CASE("parameter reconstruction budget scales with the final layer size") {
  std::vector<ModelParams> locals;
  for (uint64_t s = 0; s < 3; ++s) locals.push_back(init_mlp({5, 4, 3}, 200 + s));
  ShuffledParameters sp = shuffle_parameters(locals, 9);
  Dataset d = gen_synthetic(3, 5, 100, 23);
  std::vector<Record> shadow(d.records.begin(), d.records.begin() + 10);
  ReconResult rr = recon_param(sp, locals[0], shadow);
  auto [first, last] = module_flat_range(locals[0], "fc2");
  CHECK(rr.shadow_evals == uint64_t(last - first) * 3 * 10);
  CHECK(same_layout(rr.model, locals[0]));
  // non-final parameters keep the per-index mean
  ModelParams mean = parameter_mean(sp, locals[0]);
  for (size_t p = 0; p < first; ++p)
    CHECK(rr.model.at_flat(p) == doctest::Approx(mean.at_flat(p)));
  // every final-layer value is one of the submitted candidates
  for (size_t p = first; p < last; ++p) {
    bool member = false;
    for (double v : sp.values[p])
      if (v == rr.model.at_flat(p)) member = true;
    CHECK(member);
  }
}

TEST_CASE("plan validation rejects incoherent attack-defense pairs") {
  FederationPlan plan;
  plan.n_clients = 1;
  CHECK_THROWS_AS(run_sia_experiment(plan), ConfigInvalid);
  plan.n_clients = 4;
  plan.defense = DefenseKind::ModelShuffle;
  plan.attack = AttackKind::Sia;
  CHECK_THROWS_AS(run_sia_experiment(plan), ConfigInvalid);
  plan.attack = AttackKind::ReconLayerSia;
  CHECK_THROWS_AS(run_sia_experiment(plan), ConfigInvalid);
}

TEST_CASE("small undefended federation runs end to end") {
  FederationPlan plan;
  plan.seed = 5;
  plan.n_clients = 4;
  plan.alpha = 0.1;
  plan.classes = 4;
  plan.dim = 8;
  plan.samples = 400;
  plan.test_samples = 200;
  plan.hidden = 8;
  plan.rounds = 2;
  plan.train.epochs = 1;
  plan.train.lr = 0.05;
  plan.probes = 200;
  plan.defense = DefenseKind::None;
  plan.attack = AttackKind::Sia;
  ExperimentResult res = run_sia_experiment(plan);
  REQUIRE(res.rounds.size() == 2);
  CHECK(res.baseline_rate == doctest::Approx(0.25));
  CHECK(res.total_probes == 400);
  CHECK(res.final_accuracy > 0.3);  // 4 classes, chance is 0.25
  CHECK(res.pooled_sia_rate == doctest::Approx(double(res.total_hits) / 400.0));
  CHECK_FALSE(res.context.has_value());
  for (const auto& r : res.rounds) CHECK(r.upload_bits_per_param == 32);
  // deterministic end to end
  ExperimentResult res2 = run_sia_experiment(plan);
  CHECK(res2.total_hits == res.total_hits);
  CHECK(res2.final_accuracy == res.final_accuracy);
}

TEST_CASE("bit-level defense pushes the attack to the uniform floor") {
  FederationPlan plan;
  plan.seed = 6;
  plan.n_clients = 4;
  plan.alpha = 0.1;
  plan.classes = 4;
  plan.dim = 8;
  plan.samples = 400;
  plan.test_samples = 200;
  plan.hidden = 8;
  plan.rounds = 2;
  plan.train.epochs = 1;
  plan.probes = 400;
  plan.precision = 3;
  plan.defense = DefenseKind::BitRns;
  plan.attack = AttackKind::Sia;
  ExperimentResult res = run_sia_experiment(plan);
  REQUIRE(res.context.has_value());
  CHECK(res.context->precision == 3);
  CHECK(res.context->clients == 4);
  // all candidates identical -> uniform guessing -> near 1/n
  CHECK(res.pooled_sia_rate > 0.25 - 0.08);
  CHECK(res.pooled_sia_rate < 0.25 + 0.08);
  for (const auto& r : res.rounds)
    CHECK(r.upload_bits_per_param == upload_bits_per_param(*res.context, false));
}
