#include <doctest.h>

#include <cmath>

#include "sflab/data.hpp"
#include "sflab/errors.hpp"
#include "sflab/model.hpp"
#include "sflab/rng.hpp"

using namespace sflab;

namespace {

std::vector<uint32_t> full_shard(const Dataset& d) {
  std::vector<uint32_t> shard(d.records.size());
  for (size_t i = 0; i < shard.size(); ++i) shard[i] = static_cast<uint32_t>(i);
  return shard;
}

std::vector<Record> shard_records(const Dataset& d, const std::vector<uint32_t>& shard) {
  std::vector<Record> out;
  for (uint32_t i : shard) out.push_back(d.records[i]);
  return out;
}

}  // namespace

TEST_CASE("mlp layout and flatten round trip") {
  ModelParams m = init_mlp({6, 4, 3}, 5);
  REQUIRE(m.tensors.size() == 4);
  CHECK(m.tensors[0].name == "fc1.weight");
  CHECK(m.tensors[0].shape == std::vector<size_t>{4, 6});
  CHECK(m.tensors[1].name == "fc1.bias");
  CHECK(m.tensors[2].name == "fc2.weight");
  CHECK(m.tensors[2].shape == std::vector<size_t>{3, 4});
  CHECK(m.tensors[3].name == "fc2.bias");
  CHECK(m.param_count() == 6 * 4 + 4 + 4 * 3 + 3);
  MlpShape s = shape_of(m);
  CHECK(s.dim == 6);
  CHECK(s.hidden == 4);
  CHECK(s.classes == 3);

  std::vector<double> flat = m.flatten();
  CHECK(flat.size() == m.param_count());
  flat[0] = 123.0;
  flat[flat.size() - 1] = -7.0;
  ModelParams m2 = m;
  m2.unflatten(flat);
  CHECK(m2.tensors[0].data[0] == 123.0);
  CHECK(m2.tensors[3].data[2] == -7.0);
  CHECK(m2.at_flat(0) == 123.0);
  CHECK(m2.at_flat(flat.size() - 1) == -7.0);
  flat.pop_back();
  CHECK_THROWS_AS(m2.unflatten(flat), LayoutMismatch);
}

TEST_CASE("module grouping follows name prefixes") {
  ModelParams m = init_mlp({6, 4, 3}, 5);
  std::vector<std::string> mods = module_names(m);
  REQUIRE(mods.size() == 2);
  CHECK(mods[0] == "fc1");
  CHECK(mods[1] == "fc2");
  auto idx1 = module_tensor_indices(m, "fc1");
  CHECK(idx1 == std::vector<size_t>{0, 1});
  auto [lo, hi] = module_flat_range(m, "fc2");
  CHECK(lo == 6 * 4 + 4);
  CHECK(hi == m.param_count());
}

TEST_CASE("init draws stay within the fan-in bound") {
  ModelParams m = init_mlp({20, 32, 10}, 9);
  double bound1 = 1.0 / std::sqrt(20.0);
  double bound2 = 1.0 / std::sqrt(32.0);
  for (double v : m.tensors[0].data) CHECK(std::abs(v) <= bound1);
  for (double v : m.tensors[1].data) CHECK(std::abs(v) <= bound1);
  for (double v : m.tensors[2].data) CHECK(std::abs(v) <= bound2);
  bool any_nonzero = false;
  for (double v : m.tensors[0].data)
    if (v != 0.0) any_nonzero = true;
  CHECK(any_nonzero);
  ModelParams m2 = init_mlp({20, 32, 10}, 9);
  CHECK(m == m2);
}

TEST_CASE("forward pass matches a hand computation") {
  // 2-2-2 network with fixed weights; relu hidden, logits out
  ModelParams m;
  m.tensors.push_back({"fc1.weight", {2, 2}, {1.0, 0.0, -1.0, 2.0}});
  m.tensors.push_back({"fc1.bias", {2}, {0.5, -0.5}});
  m.tensors.push_back({"fc2.weight", {2, 2}, {1.0, 1.0, 0.0, -1.0}});
  m.tensors.push_back({"fc2.bias", {2}, {0.0, 1.0}});
  std::vector<double> x{2.0, 1.0};
  // h = relu([1*2+0*1+0.5, -1*2+2*1-0.5]) = relu([2.5, -0.5]) = [2.5, 0]
  // logits = [2.5*1+0*1+0, 2.5*0+0*(-1)+1] = [2.5, 1.0]
  std::vector<double> logits = forward_logits(m, x);
  REQUIRE(logits.size() == 2);
  CHECK(logits[0] == doctest::Approx(2.5));
  CHECK(logits[1] == doctest::Approx(1.0));
  Record r{x, 0};
  double expect = std::log(std::exp(2.5) + std::exp(1.0)) - 2.5;
  CHECK(record_loss(m, r) == doctest::Approx(expect));
}

TEST_CASE("analytic gradient agrees with finite differences") {
  ModelParams m = init_mlp({5, 4, 3}, 31);
  Dataset d = gen_synthetic(3, 5, 16, 32);
  std::vector<uint32_t> shard = full_shard(d);
  std::vector<Record> recs = shard_records(d, shard);
  ModelParams grad = gradient_on(m, d, shard);
  CHECK(same_layout(m, grad));
  std::vector<double> flat = m.flatten();
  const double h = 1e-6;
  // spot-check a spread of coordinates
  for (size_t p : {size_t{0}, size_t{7}, size_t{20}, size_t{24}, size_t{30}, flat.size() - 1}) {
    ModelParams plus = m, minus = m;
    std::vector<double> fp = flat, fm = flat;
    fp[p] += h;
    fm[p] -= h;
    plus.unflatten(fp);
    minus.unflatten(fm);
    double numeric = (mean_loss(plus, recs) - mean_loss(minus, recs)) / (2 * h);
    CHECK(grad.at_flat(p) == doctest::Approx(numeric).epsilon(1e-4));
  }
}

TEST_CASE("local training reduces loss deterministically") {
  Dataset d = gen_synthetic(4, 8, 400, 77);
  std::vector<uint32_t> shard = full_shard(d);
  std::vector<Record> recs = shard_records(d, shard);
  ModelParams m = init_mlp({8, 16, 4}, 78);
  double before = mean_loss(m, recs);
  TrainOptions opt;
  opt.epochs = 3;
  opt.lr = 0.05;
  opt.seed = 5;
  ModelParams trained = train_local(m, d, shard, opt);
  double after = mean_loss(trained, recs);
  CHECK(after < before - 0.05);
  ModelParams trained2 = train_local(m, d, shard, opt);
  CHECK(trained == trained2);
}

TEST_CASE("proximal variant stays closer to the starting point") {
  Dataset d = gen_synthetic(4, 8, 300, 55);
  std::vector<uint32_t> shard = full_shard(d);
  ModelParams m = init_mlp({8, 16, 4}, 56);
  TrainOptions plain;
  plain.epochs = 4;
  plain.lr = 0.05;
  plain.seed = 3;
  TrainOptions prox = plain;
  prox.variant = TrainVariant::Prox;
  prox.prox_mu = 1.0;
  auto dist = [&](const ModelParams& t) {
    double s = 0.0;
    std::vector<double> a = t.flatten(), b = m.flatten();
    for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
  };
  double d_plain = dist(train_local(m, d, shard, plain));
  double d_prox = dist(train_local(m, d, shard, prox));
  CHECK(d_prox < d_plain);
}

TEST_CASE("clip pins parameters strictly inside the unit interval") {
  ModelParams m = init_mlp({3, 2, 2}, 1);
  std::vector<double> flat = m.flatten();
  flat[0] = 5.0;
  flat[1] = -5.0;
  flat[2] = 1.0;
  flat[3] = 0.25;
  m.unflatten(flat);
  ModelParams clipped = clip_params(m);
  CHECK(clipped.at_flat(0) == doctest::Approx(1.0 - 1e-6));
  CHECK(clipped.at_flat(1) == doctest::Approx(-1.0 + 1e-6));
  CHECK(clipped.at_flat(2) == doctest::Approx(1.0 - 1e-6));
  CHECK(clipped.at_flat(3) == 0.25);
  for (const auto& t : clipped.tensors)
    for (double v : t.data) {
      CHECK(v > -1.0);
      CHECK(v < 1.0);
    }
  CHECK(m.at_flat(0) == 5.0);  // input untouched
}

TEST_CASE("accuracy beats chance after training") {
  Dataset train = gen_synthetic(3, 10, 900, 101);
  auto rng = make_rng(500, "heldout");
  std::vector<Record> test = sample_records(train, 300, rng);
  std::vector<uint32_t> shard = full_shard(train);
  ModelParams m = init_mlp({10, 16, 3}, 102);
  TrainOptions opt;
  opt.epochs = 5;
  opt.lr = 0.1;
  opt.seed = 6;
  ModelParams trained = train_local(m, train, shard, opt);
  CHECK(accuracy(trained, test) > 0.6);
  CHECK(accuracy(trained, train, shard) > 0.6);
}

TEST_CASE("layout mismatch is detected") {
  ModelParams a = init_mlp({3, 2, 2}, 1);
  ModelParams b = init_mlp({3, 3, 2}, 1);
  CHECK(same_layout(a, a));
  CHECK_FALSE(same_layout(a, b));
  CHECK_THROWS_AS(require_same_layout({a, b}), LayoutMismatch);
}
