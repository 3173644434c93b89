#include "sflab/shuffle.hpp"

#include "sflab/errors.hpp"
#include "sflab/rng.hpp"

namespace sflab {

std::string granularity_name(Granularity g) {
  switch (g) {
    case Granularity::Model: return "model";
    case Granularity::Layer: return "layer";
    case Granularity::Parameter: return "parameter";
    case Granularity::BitRns: return "bit_rns";
    case Granularity::BitRnsRle: return "bit_rns_rle";
  }
  throw ConfigInvalid("granularity_name: unknown granularity");
}

ShuffledModels shuffle_models(const std::vector<ModelParams>& models, uint64_t seed) {
  if (models.empty()) throw ConfigInvalid("shuffle_models: no models");
  require_same_layout(models);
  auto rng = make_rng(seed, "shuffle.model");
  std::vector<uint32_t> perm = random_permutation(models.size(), rng);
  ShuffledModels out;
  out.seed_digest = derive_seed(seed, "shuffle.commit");
  out.models.reserve(models.size());
  for (uint32_t src : perm) out.models.push_back(models[src]);
  return out;
}

ShuffledLayers shuffle_layers(const std::vector<ModelParams>& models, uint64_t seed) {
  if (models.empty()) throw ConfigInvalid("shuffle_layers: no models");
  require_same_layout(models);
  ShuffledLayers out;
  out.seed_digest = derive_seed(seed, "shuffle.commit");
  out.modules = module_names(models[0]);
  out.slices.resize(out.modules.size());
  for (size_t m = 0; m < out.modules.size(); ++m) {
    std::vector<size_t> idx = module_tensor_indices(models[0], out.modules[m]);
    auto rng = make_rng(seed, "shuffle.layer", m);
    std::vector<uint32_t> perm = random_permutation(models.size(), rng);
    out.slices[m].reserve(models.size());
    for (uint32_t src : perm) {
      LayerSlice slice;
      for (size_t t : idx) slice.tensors.push_back(models[src].tensors[t]);
      out.slices[m].push_back(std::move(slice));
    }
  }
  return out;
}

ShuffledParameters shuffle_parameters(const std::vector<ModelParams>& models, uint64_t seed) {
  if (models.empty()) throw ConfigInvalid("shuffle_parameters: no models");
  require_same_layout(models);
  std::vector<std::vector<double>> flats;
  flats.reserve(models.size());
  for (const ModelParams& m : models) flats.push_back(m.flatten());
  ShuffledParameters out;
  out.seed_digest = derive_seed(seed, "shuffle.commit");
  out.values.resize(flats[0].size());
  for (size_t p = 0; p < flats[0].size(); ++p) {
    auto rng = make_rng(seed, "shuffle.param", p);
    std::vector<uint32_t> perm = random_permutation(models.size(), rng);
    out.values[p].reserve(models.size());
    for (uint32_t src : perm) out.values[p].push_back(flats[src][p]);
  }
  return out;
}

std::vector<LayerSlice> layer_means(const ShuffledLayers& sl) {
  std::vector<LayerSlice> means;
  means.reserve(sl.modules.size());
  for (const auto& slots : sl.slices) {
    if (slots.empty()) throw ConfigInvalid("layer_means: empty module");
    LayerSlice mean = slots[0];
    for (Tensor& t : mean.tensors) std::fill(t.data.begin(), t.data.end(), 0.0);
    double inv = 1.0 / static_cast<double>(slots.size());
    for (const LayerSlice& slot : slots)
      for (size_t t = 0; t < mean.tensors.size(); ++t)
        for (size_t i = 0; i < mean.tensors[t].data.size(); ++i)
          mean.tensors[t].data[i] += inv * slot.tensors[t].data[i];
    means.push_back(std::move(mean));
  }
  return means;
}

ModelParams assemble_model(const ModelParams& reference,
                           const std::vector<std::string>& modules,
                           const std::vector<const LayerSlice*>& slices) {
  if (modules.size() != slices.size())
    throw LayoutMismatch("assemble_model: module and slice counts differ");
  ModelParams out = reference;
  for (size_t m = 0; m < modules.size(); ++m) {
    std::vector<size_t> idx = module_tensor_indices(reference, modules[m]);
    const LayerSlice& slice = *slices[m];
    if (slice.tensors.size() != idx.size())
      throw LayoutMismatch("assemble_model: slice does not match module layout");
    for (size_t t = 0; t < idx.size(); ++t) {
      if (slice.tensors[t].shape != out.tensors[idx[t]].shape)
        throw LayoutMismatch("assemble_model: tensor shape mismatch in " + modules[m]);
      out.tensors[idx[t]].data = slice.tensors[t].data;
    }
  }
  return out;
}

ModelParams parameter_mean(const ShuffledParameters& sp, const ModelParams& reference) {
  if (sp.values.size() != reference.param_count())
    throw LayoutMismatch("parameter_mean: value count does not match layout");
  ModelParams out = reference;
  std::vector<double> flat(sp.values.size());
  for (size_t p = 0; p < sp.values.size(); ++p) {
    double acc = 0.0;
    for (double v : sp.values[p]) acc += v;
    flat[p] = acc / static_cast<double>(sp.values[p].size());
  }
  out.unflatten(flat);
  return out;
}

}  // namespace sflab
