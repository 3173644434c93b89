#pragma once

#include <cstdint>
#include <vector>

#include "sflab/model.hpp"

namespace sflab {

// Weighted parameter mean.  Empty weights means equal weights; otherwise one
// weight per model (shard sizes, typically).
ModelParams fedavg(const std::vector<ModelParams>& models,
                   const std::vector<uint64_t>& weights = {});

// one server-side SGD step on the weighted mean gradient
ModelParams fedsgd_step(const ModelParams& global, const std::vector<ModelParams>& grads,
                        const std::vector<uint64_t>& weights, double lr);

// Models are grouped in submission order into k clusters (the last cluster
// absorbs the remainder), each cluster is averaged, and the result is the
// elementwise median across cluster means (even k: mean of the middle two).
// k = 1 degenerates to fedavg with equal weights.
ModelParams fedmedian_clustered(const std::vector<ModelParams>& models, size_t k);

}  // namespace sflab
