#include "sflab/model.hpp"

#include <algorithm>
#include <cmath>

#include "sflab/errors.hpp"
#include "sflab/rng.hpp"

namespace sflab {

size_t ModelParams::param_count() const {
  size_t n = 0;
  for (const Tensor& t : tensors) n += t.size();
  return n;
}

std::vector<double> ModelParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(param_count());
  for (const Tensor& t : tensors) flat.insert(flat.end(), t.data.begin(), t.data.end());
  return flat;
}

void ModelParams::unflatten(const std::vector<double>& flat) {
  if (flat.size() != param_count())
    throw LayoutMismatch("unflatten: flat size does not match parameter count");
  size_t off = 0;
  for (Tensor& t : tensors) {
    std::copy(flat.begin() + off, flat.begin() + off + t.size(), t.data.begin());
    off += t.size();
  }
}

double& ModelParams::at_flat(size_t i) {
  for (Tensor& t : tensors) {
    if (i < t.size()) return t.data[i];
    i -= t.size();
  }
  throw LayoutMismatch("at_flat: index past parameter count");
}

double ModelParams::at_flat(size_t i) const {
  return const_cast<ModelParams*>(this)->at_flat(i);
}

bool same_layout(const ModelParams& a, const ModelParams& b) {
  if (a.tensors.size() != b.tensors.size()) return false;
  for (size_t i = 0; i < a.tensors.size(); ++i)
    if (a.tensors[i].name != b.tensors[i].name || a.tensors[i].shape != b.tensors[i].shape)
      return false;
  return true;
}

void require_same_layout(const std::vector<ModelParams>& models) {
  for (size_t i = 1; i < models.size(); ++i)
    if (!same_layout(models[0], models[i]))
      throw LayoutMismatch("models disagree on tensor names or shapes");
}

std::vector<std::string> module_names(const ModelParams& m) {
  std::vector<std::string> names;
  for (const Tensor& t : m.tensors) {
    std::string module = t.name.substr(0, t.name.find('.'));
    if (std::find(names.begin(), names.end(), module) == names.end())
      names.push_back(module);
  }
  return names;
}

std::vector<size_t> module_tensor_indices(const ModelParams& m, const std::string& module) {
  std::vector<size_t> idx;
  for (size_t i = 0; i < m.tensors.size(); ++i)
    if (m.tensors[i].name.substr(0, m.tensors[i].name.find('.')) == module) idx.push_back(i);
  if (idx.empty()) throw LayoutMismatch("no tensors in module " + module);
  return idx;
}

std::pair<size_t, size_t> module_flat_range(const ModelParams& m, const std::string& module) {
  size_t off = 0, first = 0, last = 0;
  bool seen = false;
  for (const Tensor& t : m.tensors) {
    bool mine = t.name.substr(0, t.name.find('.')) == module;
    if (mine && !seen) {
      first = off;
      seen = true;
    }
    if (mine) last = off + t.size();
    off += t.size();
  }
  if (!seen) throw LayoutMismatch("no tensors in module " + module);
  return {first, last};
}

ModelParams init_mlp(MlpShape s, uint64_t seed) {
  if (s.dim == 0 || s.hidden == 0 || s.classes < 2)
    throw ConfigInvalid("init_mlp: degenerate shape");
  auto rng = make_rng(seed, "model.init");
  ModelParams m;
  auto uniform_tensor = [&](std::string name, std::vector<size_t> shape, double bound) {
    Tensor t;
    t.name = std::move(name);
    t.shape = std::move(shape);
    size_t n = 1;
    for (size_t d : t.shape) n *= d;
    t.data.resize(n);
    for (double& w : t.data) w = bound * (2.0 * uniform_real(rng) - 1.0);
    m.tensors.push_back(std::move(t));
  };
  double b1 = 1.0 / std::sqrt(static_cast<double>(s.dim));
  double b2 = 1.0 / std::sqrt(static_cast<double>(s.hidden));
  uniform_tensor("fc1.weight", {s.hidden, s.dim}, b1);
  uniform_tensor("fc1.bias", {s.hidden}, b1);
  uniform_tensor("fc2.weight", {s.classes, s.hidden}, b2);
  uniform_tensor("fc2.bias", {s.classes}, b2);
  return m;
}

MlpShape shape_of(const ModelParams& m) {
  if (m.tensors.size() != 4 || m.tensors[0].shape.size() != 2 || m.tensors[2].shape.size() != 2)
    throw LayoutMismatch("shape_of: not a two-layer MLP");
  MlpShape s;
  s.hidden = static_cast<uint32_t>(m.tensors[0].shape[0]);
  s.dim = static_cast<uint32_t>(m.tensors[0].shape[1]);
  s.classes = static_cast<uint32_t>(m.tensors[2].shape[0]);
  return s;
}

namespace {

struct Forward {
  std::vector<double> z1, a1, logits;
};

Forward run_forward(const ModelParams& m, const std::vector<double>& x) {
  const Tensor& w1 = m.tensors[0];
  const Tensor& b1 = m.tensors[1];
  const Tensor& w2 = m.tensors[2];
  const Tensor& b2 = m.tensors[3];
  size_t h = w1.shape[0], d = w1.shape[1], c = w2.shape[0];
  Forward f;
  f.z1.resize(h);
  f.a1.resize(h);
  f.logits.resize(c);
  for (size_t i = 0; i < h; ++i) {
    double acc = b1.data[i];
    const double* row = &w1.data[i * d];
    for (size_t j = 0; j < d; ++j) acc += row[j] * x[j];
    f.z1[i] = acc;
    f.a1[i] = acc > 0.0 ? acc : 0.0;
  }
  for (size_t i = 0; i < c; ++i) {
    double acc = b2.data[i];
    const double* row = &w2.data[i * h];
    for (size_t j = 0; j < h; ++j) acc += row[j] * f.a1[j];
    f.logits[i] = acc;
  }
  return f;
}

double log_sum_exp(const std::vector<double>& z) {
  double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - zmax);
  return zmax + std::log(sum);
}

// accumulates d(mean loss)/d(params) for one record, scaled by 1/batch
void accumulate_gradient(const ModelParams& m, const Record& rec, double inv_batch,
                         ModelParams& grad) {
  const Tensor& w2 = m.tensors[2];
  size_t h = m.tensors[0].shape[0], d = m.tensors[0].shape[1], c = w2.shape[0];
  Forward f = run_forward(m, rec.features);
  double lse = log_sum_exp(f.logits);
  std::vector<double> dz2(c);
  for (size_t i = 0; i < c; ++i)
    dz2[i] = (std::exp(f.logits[i] - lse) - (i == rec.label ? 1.0 : 0.0)) * inv_batch;
  Tensor& gw1 = grad.tensors[0];
  Tensor& gb1 = grad.tensors[1];
  Tensor& gw2 = grad.tensors[2];
  Tensor& gb2 = grad.tensors[3];
  for (size_t i = 0; i < c; ++i) {
    double* grow = &gw2.data[i * h];
    for (size_t j = 0; j < h; ++j) grow[j] += dz2[i] * f.a1[j];
    gb2.data[i] += dz2[i];
  }
  for (size_t j = 0; j < h; ++j) {
    if (f.z1[j] <= 0.0) continue;
    double da = 0.0;
    for (size_t i = 0; i < c; ++i) da += w2.data[i * h + j] * dz2[i];
    double* grow = &gw1.data[j * d];
    for (size_t k = 0; k < d; ++k) grow[k] += da * rec.features[k];
    gb1.data[j] += da;
  }
}

ModelParams zeros_like(const ModelParams& m) {
  ModelParams z = m;
  for (Tensor& t : z.tensors) std::fill(t.data.begin(), t.data.end(), 0.0);
  return z;
}

}  // namespace

ModelParams train_local(const ModelParams& start, const Dataset& ds,
                        const std::vector<uint32_t>& shard, const TrainOptions& opts) {
  if (shard.empty()) throw ConfigInvalid("train_local: empty shard");
  if (opts.batch_size == 0) throw ConfigInvalid("train_local: batch_size must be positive");
  ModelParams w = start;
  ModelParams velocity = zeros_like(start);
  auto rng = make_rng(opts.seed, "train.order");
  std::vector<uint32_t> order = shard;
  for (uint32_t epoch = 0; epoch < opts.epochs; ++epoch) {
    fisher_yates(order, rng);
    for (size_t begin = 0; begin < order.size(); begin += opts.batch_size) {
      size_t end = std::min(begin + opts.batch_size, order.size());
      double inv_batch = 1.0 / static_cast<double>(end - begin);
      ModelParams grad = zeros_like(start);
      for (size_t i = begin; i < end; ++i)
        accumulate_gradient(w, ds.records[order[i]], inv_batch, grad);
      if (opts.variant == TrainVariant::Prox && opts.prox_mu != 0.0) {
        for (size_t t = 0; t < w.tensors.size(); ++t)
          for (size_t i = 0; i < w.tensors[t].data.size(); ++i)
            grad.tensors[t].data[i] +=
                opts.prox_mu * (w.tensors[t].data[i] - start.tensors[t].data[i]);
      }
      for (size_t t = 0; t < w.tensors.size(); ++t)
        for (size_t i = 0; i < w.tensors[t].data.size(); ++i) {
          double& v = velocity.tensors[t].data[i];
          v = opts.momentum * v + grad.tensors[t].data[i];
          w.tensors[t].data[i] -= opts.lr * v;
        }
    }
  }
  return w;
}

ModelParams gradient_on(const ModelParams& m, const Dataset& ds,
                        const std::vector<uint32_t>& shard) {
  if (shard.empty()) throw ConfigInvalid("gradient_on: empty shard");
  ModelParams grad = zeros_like(m);
  double inv = 1.0 / static_cast<double>(shard.size());
  for (uint32_t idx : shard) accumulate_gradient(m, ds.records[idx], inv, grad);
  return grad;
}

ModelParams clip_params(const ModelParams& m, double eps) {
  ModelParams out = m;
  double lo = -1.0 + eps, hi = 1.0 - eps;
  for (Tensor& t : out.tensors)
    for (double& v : t.data) v = std::clamp(v, lo, hi);
  return out;
}

std::vector<double> forward_logits(const ModelParams& m, const std::vector<double>& x) {
  return run_forward(m, x).logits;
}

double record_loss(const ModelParams& m, const Record& rec) {
  Forward f = run_forward(m, rec.features);
  return log_sum_exp(f.logits) - f.logits[rec.label];
}

double mean_loss(const ModelParams& m, const std::vector<Record>& records) {
  double total = 0.0;
  for (const Record& rec : records) total += record_loss(m, rec);
  return records.empty() ? 0.0 : total / static_cast<double>(records.size());
}

double accuracy(const ModelParams& m, const std::vector<Record>& records) {
  if (records.empty()) return 0.0;
  size_t hits = 0;
  for (const Record& rec : records) {
    std::vector<double> z = forward_logits(m, rec.features);
    size_t best = std::max_element(z.begin(), z.end()) - z.begin();
    hits += best == rec.label;
  }
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

double accuracy(const ModelParams& m, const Dataset& ds, const std::vector<uint32_t>& idx) {
  if (idx.empty()) return 0.0;
  size_t hits = 0;
  for (uint32_t i : idx) {
    std::vector<double> z = forward_logits(m, ds.records[i].features);
    size_t best = std::max_element(z.begin(), z.end()) - z.begin();
    hits += best == ds.records[i].label;
  }
  return static_cast<double>(hits) / static_cast<double>(idx.size());
}

}  // namespace sflab
