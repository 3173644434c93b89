#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sflab/attacks.hpp"
#include "sflab/cost.hpp"
#include "sflab/mixnet.hpp"

namespace sflab {

inline constexpr const char* kVersion = "0.1.0";

struct ExperimentConfig {
  uint64_t seed = 1;
  uint32_t clients = 10;
  double alpha = 0.1;
  uint32_t classes = 10;
  uint32_t dim = 20;
  size_t samples = 4000;
  size_t test_samples = 2000;
  uint32_t hidden = 32;
  uint32_t rounds = 3;
  uint32_t local_epochs = 2;
  uint32_t batch_size = 64;
  double lr = 0.01;
  double momentum = 0.9;
  TrainVariant variant = TrainVariant::Plain;
  double prox_mu = 0.0;
  DefenseKind defense = DefenseKind::None;
  uint32_t precision = 4;
  ModuliStrategy strategy = ModuliStrategy::ConsecutivePrimes;
  TrustLevel trust = TrustLevel::FullyTrusted;
  double trap_fraction = 0.05;  // used when trust is partially_malicious
  AttackKind attack = AttackKind::Sia;
  double shadow_fraction = 0.25;
  double shadow_noise = 0.0;
  uint32_t probes = 1000;
  std::string output_dir = "out";
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);

// empty means valid; entries are human-readable problems
std::vector<std::string> validate(const ExperimentConfig& cfg);

// 16-hex-digit digest of the canonical config JSON
std::string config_hash(const ExperimentConfig& cfg);

FederationPlan plan_from_config(const ExperimentConfig& cfg);

struct ExperimentReport {
  ExperimentConfig config;
  ExperimentResult result;
  std::optional<CostReport> cost;  // present for bit-level defenses
  std::string rounds_csv_path;
  std::string summary_json_path;
};

// runs the federation and writes rounds.csv + summary.json under output_dir
ExperimentReport run_experiment(const ExperimentConfig& cfg);

// one run per value of the swept field ("alpha", "clients", "precision" or
// "seed"), each in its own subdirectory, plus sweep_summary.csv at the top
std::vector<ExperimentReport> run_sweep(const ExperimentConfig& base, const std::string& axis,
                                        const std::vector<double>& values);

nlohmann::json summary_json(const ExperimentReport& report);

}  // namespace sflab
