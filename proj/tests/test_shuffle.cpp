#include <doctest.h>

#include <algorithm>
#include <map>

#include "sflab/aggregate.hpp"
#include "sflab/model.hpp"
#include "sflab/shuffle.hpp"

using namespace sflab;

namespace {

// small two-module models whose entries identify the contributing slot
std::vector<ModelParams> tagged_models(size_t n) {
  std::vector<ModelParams> ms;
  for (size_t i = 0; i < n; ++i) {
    ModelParams m;
    double base = double(i + 1);
    m.tensors.push_back({"fc1.weight", {2}, {base, base + 0.1}});
    m.tensors.push_back({"fc1.bias", {1}, {base + 0.2}});
    m.tensors.push_back({"fc2.weight", {2}, {base + 0.3, base + 0.4}});
    ms.push_back(std::move(m));
  }
  return ms;
}

}  // namespace

TEST_CASE("granularity names are stable identifiers") {
  CHECK(granularity_name(Granularity::Model) == "model");
  CHECK(granularity_name(Granularity::Layer) == "layer");
  CHECK(granularity_name(Granularity::Parameter) == "parameter");
  CHECK(granularity_name(Granularity::BitRns) == "bit_rns");
  CHECK(granularity_name(Granularity::BitRnsRle) == "bit_rns_rle");
}

TEST_CASE("model shuffle permutes whole submissions") {
  std::vector<ModelParams> ms = tagged_models(6);
  ShuffledModels out = shuffle_models(ms, 17);
  REQUIRE(out.models.size() == 6);
  CHECK(out.seed_digest != 0);
  // every original model appears exactly once, intact
  std::vector<bool> found(6, false);
  for (const ModelParams& m : out.models) {
    double base = m.at_flat(0);
    size_t idx = size_t(base) - 1;
    REQUIRE(idx < 6);
    CHECK_FALSE(found[idx]);
    found[idx] = true;
    CHECK(m.flatten() == ms[idx].flatten());
  }
  ShuffledModels again = shuffle_models(ms, 17);
  for (size_t i = 0; i < 6; ++i) CHECK(again.models[i].at_flat(0) == out.models[i].at_flat(0));
}

TEST_CASE("layer shuffle permutes modules independently but keeps each intact") {
  std::vector<ModelParams> ms = tagged_models(8);
  ShuffledLayers out = shuffle_layers(ms, 23);
  REQUIRE(out.modules.size() == 2);
  CHECK(out.modules[0] == "fc1");
  CHECK(out.modules[1] == "fc2");
  REQUIRE(out.slices.size() == 2);
  // fc1 slices carry both tensors from a single source, fc2 one tensor
  std::vector<bool> seen1(8, false), seen2(8, false);
  bool module_orders_differ = false;
  for (size_t slot = 0; slot < 8; ++slot) {
    const LayerSlice& s1 = out.slices[0][slot];
    REQUIRE(s1.tensors.size() == 2);
    double base = s1.tensors[0].data[0];
    size_t src = size_t(base) - 1;
    CHECK(s1.tensors[0].data[1] == doctest::Approx(base + 0.1));
    CHECK(s1.tensors[1].data[0] == doctest::Approx(base + 0.2));
    CHECK_FALSE(seen1[src]);
    seen1[src] = true;

    const LayerSlice& s2 = out.slices[1][slot];
    REQUIRE(s2.tensors.size() == 1);
    size_t src2 = size_t(s2.tensors[0].data[0]) - 1;
    CHECK_FALSE(seen2[src2]);
    seen2[src2] = true;
    if (src != src2) module_orders_differ = true;
  }
  CHECK(module_orders_differ);  // cross-module linkage is broken
}

TEST_CASE("parameter shuffle permutes each flat index independently") {
  std::vector<ModelParams> ms = tagged_models(8);
  ShuffledParameters out = shuffle_parameters(ms, 31);
  REQUIRE(out.values.size() == ms[0].param_count());
  bool index_orders_differ = false;
  std::vector<size_t> first_order;
  for (size_t p = 0; p < out.values.size(); ++p) {
    REQUIRE(out.values[p].size() == 8);
    // slot values at index p are exactly the multiset of client values
    std::vector<double> got = out.values[p];
    std::vector<double> want;
    for (const auto& m : ms) want.push_back(m.at_flat(p));
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    CHECK(got == want);
    std::vector<size_t> order;
    for (double v : out.values[p]) order.push_back(size_t(v) - 1);
    if (p == 0)
      first_order = order;
    else if (order != first_order)
      index_orders_differ = true;
  }
  CHECK(index_orders_differ);
}

TEST_CASE("aggregation is invariant under every shuffle granularity") {
  std::vector<ModelParams> ms = tagged_models(7);
  ModelParams direct = fedavg(ms);

  ShuffledModels sm = shuffle_models(ms, 5);
  ModelParams via_model = fedavg(sm.models);
  for (size_t p = 0; p < direct.param_count(); ++p)
    CHECK(via_model.at_flat(p) == doctest::Approx(direct.at_flat(p)));

  ShuffledLayers sl = shuffle_layers(ms, 5);
  std::vector<LayerSlice> means = layer_means(sl);
  std::vector<const LayerSlice*> ptrs;
  for (const auto& s : means) ptrs.push_back(&s);
  ModelParams via_layer = assemble_model(ms[0], sl.modules, ptrs);
  for (size_t p = 0; p < direct.param_count(); ++p)
    CHECK(via_layer.at_flat(p) == doctest::Approx(direct.at_flat(p)));

  ShuffledParameters sp = shuffle_parameters(ms, 5);
  ModelParams via_param = parameter_mean(sp, ms[0]);
  for (size_t p = 0; p < direct.param_count(); ++p)
    CHECK(via_param.at_flat(p) == doctest::Approx(direct.at_flat(p)));
}

TEST_CASE("assemble_model substitutes only the named modules") {
  std::vector<ModelParams> ms = tagged_models(3);
  LayerSlice repl;
  repl.tensors.push_back({"fc2.weight", {2}, {-9.0, -8.0}});
  ModelParams out = assemble_model(ms[0], {"fc2"}, {&repl});
  CHECK(out.at_flat(0) == ms[0].at_flat(0));  // fc1 untouched
  CHECK(out.at_flat(3) == -9.0);
  CHECK(out.at_flat(4) == -8.0);
}

TEST_CASE("shuffles with distinct seeds produce distinct slot orders") {
  std::vector<ModelParams> ms = tagged_models(8);
  ShuffledModels a = shuffle_models(ms, 1);
  ShuffledModels b = shuffle_models(ms, 2);
  bool differ = false;
  for (size_t i = 0; i < 8; ++i)
    if (a.models[i].at_flat(0) != b.models[i].at_flat(0)) differ = true;
  CHECK(differ);
  CHECK(a.seed_digest != b.seed_digest);
}

TEST_CASE("slot permutations are roughly uniform over seeds") {
  // 3 models -> 6 permutations; count arrangement frequencies
  std::vector<ModelParams> ms = tagged_models(3);
  std::map<std::vector<size_t>, size_t> hist;
  const size_t trials = 3000;
  for (uint64_t s = 0; s < trials; ++s) {
    ShuffledModels out = shuffle_models(ms, 1000 + s);
    std::vector<size_t> perm;
    for (const auto& m : out.models) perm.push_back(size_t(m.at_flat(0)) - 1);
    ++hist[perm];
  }
  REQUIRE(hist.size() == 6);
  for (const auto& [perm, count] : hist) {
    CHECK(count > trials / 6.0 * 0.75);
    CHECK(count < trials / 6.0 * 1.25);
  }
}
