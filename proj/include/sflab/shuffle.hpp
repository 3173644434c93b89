#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sflab/model.hpp"

namespace sflab {

enum class Granularity { Model, Layer, Parameter, BitRns, BitRnsRle };

std::string granularity_name(Granularity g);

// one module's tensors from one submission slot
struct LayerSlice {
  std::vector<Tensor> tensors;
};

struct ShuffledModels {
  std::vector<ModelParams> models;  // whole models, order randomized
  uint64_t seed_digest = 0;         // opaque commitment to the shuffler's randomness
};

struct ShuffledLayers {
  std::vector<std::string> modules;             // module names, model order
  std::vector<std::vector<LayerSlice>> slices;  // [module][slot]; slots permuted per module
  uint64_t seed_digest = 0;
};

struct ShuffledParameters {
  std::vector<std::vector<double>> values;  // [flat index][slot]; slots permuted per index
  uint64_t seed_digest = 0;
};

ShuffledModels shuffle_models(const std::vector<ModelParams>& models, uint64_t seed);
ShuffledLayers shuffle_layers(const std::vector<ModelParams>& models, uint64_t seed);
ShuffledParameters shuffle_parameters(const std::vector<ModelParams>& models, uint64_t seed);

// module means across slots (permutation-free marginals of a layer shuffle)
std::vector<LayerSlice> layer_means(const ShuffledLayers& sl);

// model with the given modules replaced; reference provides layout and the
// values of any module not supplied
ModelParams assemble_model(const ModelParams& reference,
                           const std::vector<std::string>& modules,
                           const std::vector<const LayerSlice*>& slices);

// per-index mean of a parameter shuffle, shaped like reference
ModelParams parameter_mean(const ShuffledParameters& sp, const ModelParams& reference);

}  // namespace sflab
