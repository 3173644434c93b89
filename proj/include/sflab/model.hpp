#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sflab/data.hpp"

namespace sflab {

struct Tensor {
  std::string name;            // "<module>.<role>", e.g. "fc1.weight"
  std::vector<size_t> shape;   // row-major
  std::vector<double> data;

  size_t size() const { return data.size(); }
  bool operator==(const Tensor&) const = default;
};

struct ModelParams {
  std::vector<Tensor> tensors;

  size_t param_count() const;
  std::vector<double> flatten() const;
  void unflatten(const std::vector<double>& flat);  // LayoutMismatch on size change
  double& at_flat(size_t i);
  double at_flat(size_t i) const;

  bool operator==(const ModelParams&) const = default;
};

// true iff tensor names and shapes agree position by position
bool same_layout(const ModelParams& a, const ModelParams& b);
void require_same_layout(const std::vector<ModelParams>& models);

// module = name prefix before '.', in first-appearance order
std::vector<std::string> module_names(const ModelParams& m);
std::vector<size_t> module_tensor_indices(const ModelParams& m, const std::string& module);
// flat index range [first, last) covered by a module's tensors
std::pair<size_t, size_t> module_flat_range(const ModelParams& m, const std::string& module);

struct MlpShape {
  uint32_t dim = 0;
  uint32_t hidden = 0;
  uint32_t classes = 0;
};

// two-layer relu MLP: fc1.weight, fc1.bias, fc2.weight, fc2.bias
ModelParams init_mlp(MlpShape shape, uint64_t seed);
MlpShape shape_of(const ModelParams& m);

enum class TrainVariant { Plain, Prox };

struct TrainOptions {
  uint32_t epochs = 1;
  uint32_t batch_size = 64;
  double lr = 0.01;
  double momentum = 0.9;
  TrainVariant variant = TrainVariant::Plain;
  double prox_mu = 0.0;  // proximal pull toward the round's starting point
  uint64_t seed = 0;
};

ModelParams train_local(const ModelParams& start, const Dataset& ds,
                        const std::vector<uint32_t>& shard, const TrainOptions& opts);

// full-batch mean gradient over a shard, shaped like the model
ModelParams gradient_on(const ModelParams& m, const Dataset& ds,
                        const std::vector<uint32_t>& shard);

// componentwise clamp into [-1 + eps, 1 - eps] so values quantize cleanly
ModelParams clip_params(const ModelParams& m, double eps = 1e-6);

std::vector<double> forward_logits(const ModelParams& m, const std::vector<double>& x);
double record_loss(const ModelParams& m, const Record& rec);  // cross-entropy

double mean_loss(const ModelParams& m, const std::vector<Record>& records);
double accuracy(const ModelParams& m, const std::vector<Record>& records);
double accuracy(const ModelParams& m, const Dataset& ds, const std::vector<uint32_t>& idx);

}  // namespace sflab
