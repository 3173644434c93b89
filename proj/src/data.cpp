#include "sflab/data.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "sflab/detail/io.hpp"
#include "sflab/errors.hpp"
#include "sflab/rng.hpp"

namespace sflab::detail {

void atomic_write_file(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp);
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!os) throw std::runtime_error("short write to " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("cannot rename " + tmp + " to " + path);
}

}  // namespace sflab::detail

namespace sflab {

namespace {

constexpr double kMeanScale = 2.0;

Record draw_record(const Dataset& ds, std::mt19937_64& rng) {
  Record rec;
  rec.label = static_cast<uint32_t>(uniform_below(rng, ds.classes));
  rec.features.resize(ds.dim);
  const auto& mean = ds.class_means[rec.label];
  for (uint32_t d = 0; d < ds.dim; ++d)
    rec.features[d] = mean[d] + ds.class_std * normal(rng);
  return rec;
}

}  // namespace

Dataset gen_synthetic(uint32_t classes, uint32_t dim, size_t n_samples, uint64_t seed) {
  if (classes < 2) throw ConfigInvalid("gen_synthetic: need at least 2 classes");
  if (dim < 1) throw ConfigInvalid("gen_synthetic: need at least 1 feature");
  if (n_samples < classes) throw ConfigInvalid("gen_synthetic: fewer samples than classes");
  Dataset ds;
  ds.classes = classes;
  ds.dim = dim;
  ds.class_std = 1.0;
  auto rng = make_rng(seed, "data.means");
  ds.class_means.assign(classes, std::vector<double>(dim));
  for (auto& mean : ds.class_means)
    for (double& m : mean) m = kMeanScale * normal(rng);
  auto rec_rng = make_rng(seed, "data.records");
  ds.records.reserve(n_samples);
  for (size_t i = 0; i < n_samples; ++i) ds.records.push_back(draw_record(ds, rec_rng));
  return ds;
}

std::vector<Record> sample_records(const Dataset& ds, size_t count, std::mt19937_64& rng) {
  std::vector<Record> out;
  out.reserve(count);
  for (size_t i = 0; i < count; ++i) out.push_back(draw_record(ds, rng));
  return out;
}

Partition dirichlet_partition(const Dataset& ds, uint32_t n_clients, double alpha, uint64_t seed) {
  if (n_clients < 1) throw ConfigInvalid("dirichlet_partition: need at least 1 client");
  if (!(alpha > 0.0)) throw ConfigInvalid("dirichlet_partition: alpha must be positive");
  if (ds.records.size() < n_clients)
    throw ConfigInvalid("dirichlet_partition: fewer records than clients");

  std::vector<std::vector<uint32_t>> by_class(ds.classes);
  for (uint32_t i = 0; i < ds.records.size(); ++i)
    by_class[ds.records[i].label].push_back(i);

  auto rng = make_rng(seed, "partition");
  constexpr int kMaxTries = 100;
  for (int attempt = 0; attempt < kMaxTries; ++attempt) {
    Partition part;
    part.alpha = alpha;
    part.shards.assign(n_clients, {});
    part.source_of.assign(ds.records.size(), 0);
    for (uint32_t c = 0; c < ds.classes; ++c) {
      std::vector<double> props = dirichlet(rng, alpha, n_clients);
      std::vector<double> cumulative(n_clients);
      double acc = 0.0;
      for (uint32_t k = 0; k < n_clients; ++k) cumulative[k] = (acc += props[k]);
      for (uint32_t idx : by_class[c]) {
        double u = uniform_real(rng) * acc;
        uint32_t k = 0;
        while (k + 1 < n_clients && u >= cumulative[k]) ++k;
        part.shards[k].push_back(idx);
        part.source_of[idx] = k;
      }
    }
    bool any_empty = false;
    for (const auto& shard : part.shards) any_empty |= shard.empty();
    if (!any_empty) return part;
  }
  throw ConfigInvalid("dirichlet_partition: could not fill every client; raise alpha or samples");
}

namespace {
constexpr char kDataMagic[9] = "SFLDATA1";
constexpr char kPartMagic[9] = "SFLPART1";
}  // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ostringstream os(std::ios::binary);
  detail::put_magic(os, kDataMagic);
  detail::put<uint32_t>(os, ds.classes);
  detail::put<uint32_t>(os, ds.dim);
  detail::put<uint64_t>(os, ds.records.size());
  detail::put<double>(os, ds.class_std);
  for (const auto& mean : ds.class_means)
    for (double m : mean) detail::put<double>(os, m);
  for (const auto& rec : ds.records) {
    detail::put<uint32_t>(os, rec.label);
    for (double f : rec.features) detail::put<double>(os, f);
  }
  detail::atomic_write_file(path, os.str());
}

Dataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  detail::expect_magic(is, kDataMagic);
  Dataset ds;
  ds.classes = detail::get<uint32_t>(is);
  ds.dim = detail::get<uint32_t>(is);
  uint64_t n = detail::get<uint64_t>(is);
  ds.class_std = detail::get<double>(is);
  ds.class_means.assign(ds.classes, std::vector<double>(ds.dim));
  for (auto& mean : ds.class_means)
    for (double& m : mean) m = detail::get<double>(is);
  ds.records.resize(n);
  for (auto& rec : ds.records) {
    rec.label = detail::get<uint32_t>(is);
    rec.features.resize(ds.dim);
    for (double& f : rec.features) f = detail::get<double>(is);
  }
  return ds;
}

void save_partition(const Partition& part, const std::string& path) {
  std::ostringstream os(std::ios::binary);
  detail::put_magic(os, kPartMagic);
  detail::put<double>(os, part.alpha);
  detail::put<uint32_t>(os, static_cast<uint32_t>(part.shards.size()));
  detail::put<uint64_t>(os, part.source_of.size());
  for (uint32_t owner : part.source_of) detail::put<uint32_t>(os, owner);
  for (const auto& shard : part.shards) {
    detail::put<uint64_t>(os, shard.size());
    for (uint32_t idx : shard) detail::put<uint32_t>(os, idx);
  }
  detail::atomic_write_file(path, os.str());
}

Partition load_partition(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  detail::expect_magic(is, kPartMagic);
  Partition part;
  part.alpha = detail::get<double>(is);
  uint32_t n_clients = detail::get<uint32_t>(is);
  uint64_t n_records = detail::get<uint64_t>(is);
  part.source_of.resize(n_records);
  for (uint32_t& owner : part.source_of) owner = detail::get<uint32_t>(is);
  part.shards.resize(n_clients);
  for (auto& shard : part.shards) {
    shard.resize(detail::get<uint64_t>(is));
    for (uint32_t& idx : shard) idx = detail::get<uint32_t>(is);
  }
  return part;
}

}  // namespace sflab
