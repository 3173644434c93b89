#include "sflab/aggregate.hpp"

#include <algorithm>

#include "sflab/errors.hpp"

namespace sflab {

namespace {

void check_inputs(const std::vector<ModelParams>& models, const std::vector<uint64_t>& weights) {
  if (models.empty()) throw ConfigInvalid("aggregate: no models");
  require_same_layout(models);
  if (!weights.empty()) {
    if (weights.size() != models.size())
      throw ConfigInvalid("aggregate: weight count does not match model count");
    uint64_t total = 0;
    for (uint64_t w : weights) total += w;
    if (total == 0) throw ConfigInvalid("aggregate: weights sum to zero");
  }
}

}  // namespace

ModelParams fedavg(const std::vector<ModelParams>& models, const std::vector<uint64_t>& weights) {
  check_inputs(models, weights);
  double total = 0.0;
  if (weights.empty()) total = static_cast<double>(models.size());
  else
    for (uint64_t w : weights) total += static_cast<double>(w);
  ModelParams out = models[0];
  for (Tensor& t : out.tensors) std::fill(t.data.begin(), t.data.end(), 0.0);
  for (size_t m = 0; m < models.size(); ++m) {
    double w = weights.empty() ? 1.0 : static_cast<double>(weights[m]);
    double frac = w / total;
    for (size_t t = 0; t < out.tensors.size(); ++t)
      for (size_t i = 0; i < out.tensors[t].data.size(); ++i)
        out.tensors[t].data[i] += frac * models[m].tensors[t].data[i];
  }
  return out;
}

ModelParams fedsgd_step(const ModelParams& global, const std::vector<ModelParams>& grads,
                        const std::vector<uint64_t>& weights, double lr) {
  check_inputs(grads, weights);
  if (!same_layout(global, grads[0]))
    throw LayoutMismatch("fedsgd_step: gradients do not match the global model");
  ModelParams mean_grad = fedavg(grads, weights);
  ModelParams out = global;
  for (size_t t = 0; t < out.tensors.size(); ++t)
    for (size_t i = 0; i < out.tensors[t].data.size(); ++i)
      out.tensors[t].data[i] -= lr * mean_grad.tensors[t].data[i];
  return out;
}

ModelParams fedmedian_clustered(const std::vector<ModelParams>& models, size_t k) {
  check_inputs(models, {});
  if (k < 1 || k > models.size())
    throw InvalidCluster("fedmedian_clustered: cluster count outside [1, n]");
  size_t base = models.size() / k;
  std::vector<ModelParams> means;
  means.reserve(k);
  size_t off = 0;
  for (size_t c = 0; c < k; ++c) {
    size_t len = c + 1 == k ? models.size() - off : base;
    std::vector<ModelParams> cluster(models.begin() + off, models.begin() + off + len);
    means.push_back(fedavg(cluster));
    off += len;
  }
  ModelParams out = means[0];
  std::vector<double> column(k);
  for (size_t t = 0; t < out.tensors.size(); ++t)
    for (size_t i = 0; i < out.tensors[t].data.size(); ++i) {
      for (size_t c = 0; c < k; ++c) column[c] = means[c].tensors[t].data[i];
      std::sort(column.begin(), column.end());
      out.tensors[t].data[i] =
          k % 2 == 1 ? column[k / 2] : 0.5 * (column[k / 2 - 1] + column[k / 2]);
    }
  return out;
}

}  // namespace sflab
