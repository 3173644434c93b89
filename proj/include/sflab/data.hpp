#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace sflab {

struct Record {
  std::vector<double> features;
  uint32_t label = 0;
};

// Synthetic Gaussian class blobs.  The generator parameters stay attached so
// fresh records (test splits, attacker shadow data) can be drawn from the
// same population later.
struct Dataset {
  uint32_t classes = 0;
  uint32_t dim = 0;
  std::vector<Record> records;
  std::vector<std::vector<double>> class_means;  // [class][dim]
  double class_std = 1.0;
};

Dataset gen_synthetic(uint32_t classes, uint32_t dim, size_t n_samples, uint64_t seed);

// fresh draws from the dataset's generating distribution
std::vector<Record> sample_records(const Dataset& ds, size_t count, std::mt19937_64& rng);

// Disjoint client shards covering all records.  Heterogeneity is controlled by
// alpha: per class, client proportions are drawn from Dirichlet(alpha) and each
// record lands on a client sampled from them.
struct Partition {
  double alpha = 1.0;
  std::vector<std::vector<uint32_t>> shards;  // [client] -> record indices
  std::vector<uint32_t> source_of;            // [record] -> owning client
};

// resamples (bounded retries) until every client is non-empty
Partition dirichlet_partition(const Dataset& ds, uint32_t n_clients, double alpha, uint64_t seed);

void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);
void save_partition(const Partition& part, const std::string& path);
Partition load_partition(const std::string& path);

}  // namespace sflab
