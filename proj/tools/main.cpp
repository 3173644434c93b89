#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sflab/errors.hpp"
#include "sflab/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

void print_round_table(const sflab::ExperimentResult& result) {
  std::printf("%5s %10s %10s %8s %8s %9s\n", "round", "accuracy", "loss", "probes", "hits",
              "sia_rate");
  for (const auto& r : result.rounds)
    std::printf("%5u %10.4f %10.4f %8llu %8llu %9.4f\n", r.round, r.accuracy, r.train_loss,
                static_cast<unsigned long long>(r.probes),
                static_cast<unsigned long long>(r.hits), r.sia_rate);
}

int cmd_run(const std::string& config_path, const std::string& out_override,
            long long seed_override) {
  sflab::ExperimentConfig cfg = sflab::load_config(config_path);
  if (!out_override.empty()) cfg.output_dir = out_override;
  if (seed_override >= 0) cfg.seed = static_cast<uint64_t>(seed_override);
  sflab::ExperimentReport report = sflab::run_experiment(cfg);
  print_round_table(report.result);
  std::printf("pooled sia rate %.4f (baseline %.4f), final accuracy %.4f\n",
              report.result.pooled_sia_rate, report.result.baseline_rate,
              report.result.final_accuracy);
  std::printf("wrote %s and %s\n", report.rounds_csv_path.c_str(),
              report.summary_json_path.c_str());
  return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::string& axis,
              const std::vector<double>& values, const std::string& out_override) {
  sflab::ExperimentConfig cfg = sflab::load_config(config_path);
  if (!out_override.empty()) cfg.output_dir = out_override;
  auto reports = sflab::run_sweep(cfg, axis, values);
  std::printf("%10s %14s %15s\n", axis.c_str(), "final_accuracy", "pooled_sia_rate");
  for (size_t i = 0; i < reports.size(); ++i)
    std::printf("%10g %14.4f %15.4f\n", values[i], reports[i].result.final_accuracy,
                reports[i].result.pooled_sia_rate);
  std::printf("wrote %s/sweep_summary.csv\n", cfg.output_dir.c_str());
  return kExitOk;
}

int cmd_cost(uint64_t clients, uint32_t precision, const std::string& strategy_name) {
  sflab::ModuliStrategy strategy = strategy_name == "min_sum_search"
                                       ? sflab::ModuliStrategy::MinSumSearch
                                       : sflab::ModuliStrategy::ConsecutivePrimes;
  if (strategy_name != "min_sum_search" && strategy_name != "consecutive_primes")
    throw sflab::ConfigInvalid("unknown strategy " + strategy_name);
  sflab::RnsContext ctx = sflab::select_moduli(clients, precision, strategy);
  sflab::CostReport cost = sflab::make_cost_report(ctx);
  std::printf("moduli:");
  for (uint64_t m : ctx.moduli) std::printf(" %llu", static_cast<unsigned long long>(m));
  std::printf("\nproduct: %s\n", sflab::u128_str(ctx.product).c_str());
  std::printf("per-parameter upload bits\n");
  std::printf("  unary channels : %llu (%.4fx of a 32-bit float)\n",
              static_cast<unsigned long long>(cost.bits_unary), cost.expansion_unary);
  std::printf("  rle counts     : %llu (%.4fx)\n",
              static_cast<unsigned long long>(cost.bits_rle), cost.expansion_rle);
  std::printf("  vanilla float  : %u\n", cost.bits_vanilla);
  std::printf("  secure agg     : %llu across %llu peer shares\n",
              static_cast<unsigned long long>(cost.bits_secure_agg),
              static_cast<unsigned long long>(clients - 1));
  std::printf("shuffle passes: %zu (one per modulus)\n", cost.shuffle_rounds);
  return kExitOk;
}

int cmd_demo_crt() {
  using namespace sflab;
  RnsContext ctx = make_context({3, 5, 7}, 1, 1);
  std::printf("moduli {3, 5, 7}, product %s\n", u128_str(ctx.product).c_str());
  ResidueVector rv;
  rv.context = &ctx;
  rv.residues = {1, 0, 6};
  std::printf("residues (1, 0, 6) reconstruct to %s\n", u128_str(crt_solve(rv)).c_str());
  ResidueVector enc = rns_encode(-17, ctx);
  std::printf("-17 encodes to (%llu, %llu, %llu)\n",
              static_cast<unsigned long long>(enc.residues[0]),
              static_cast<unsigned long long>(enc.residues[1]),
              static_cast<unsigned long long>(enc.residues[2]));
  std::printf("-17 decodes back to %s\n", i128_str(rns_decode_signed(enc)).c_str());
  ResidueVector a = rns_encode(50, ctx);
  ResidueVector wrapped = rns_add(a, a);
  std::printf("50 + 50 wraps around to %s (signed range is [-%s, %s])\n",
              i128_str(rns_decode_signed(wrapped)).c_str(), u128_str(ctx.signed_min_mag()).c_str(),
              u128_str(ctx.signed_max()).c_str());
  return kExitOk;
}

int cmd_validate(const std::string& config_path) {
  sflab::ExperimentConfig cfg = sflab::load_config(config_path);
  std::vector<std::string> problems = sflab::validate(cfg);
  if (problems.empty()) {
    std::printf("config ok (hash %s)\n", sflab::config_hash(cfg).c_str());
    return kExitOk;
  }
  for (const auto& p : problems) std::fprintf(stderr, "problem: %s\n", p.c_str());
  return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shuffle-model federated learning lab"};
  app.require_subcommand(1);

  std::string config_path, out_override, axis = "alpha";
  long long seed_override = -1;
  std::vector<double> values;
  uint64_t clients = 10000;
  uint32_t precision = 8;
  std::string strategy = "consecutive_primes";

  auto* run = app.add_subcommand("run", "run one experiment from a JSON config");
  run->add_option("--config", config_path, "config file")->required();
  run->add_option("--out", out_override, "override output directory");
  run->add_option("--seed", seed_override, "override experiment seed");

  auto* sweep = app.add_subcommand("sweep", "run the config across an axis of values");
  sweep->add_option("--config", config_path, "config file")->required();
  sweep->add_option("--axis", axis, "alpha, clients, precision or seed");
  sweep->add_option("--values", values, "axis values")->required()->delimiter(',');
  sweep->add_option("--out", out_override, "override output directory");

  auto* cost = app.add_subcommand("cost", "print the per-parameter communication table");
  cost->add_option("--clients", clients, "federation size");
  cost->add_option("--precision", precision, "decimal digits kept");
  cost->add_option("--strategy", strategy, "consecutive_primes or min_sum_search");

  app.add_subcommand("demo-crt", "walk through residue encode/decode on a toy context");

  auto* check = app.add_subcommand("validate", "check a config without running it");
  check->add_option("--config", config_path, "config file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, out_override, seed_override);
    if (sweep->parsed()) return cmd_sweep(config_path, axis, values, out_override);
    if (cost->parsed()) return cmd_cost(clients, precision, strategy);
    if (app.get_subcommand("demo-crt")->parsed()) return cmd_demo_crt();
    if (check->parsed()) return cmd_validate(config_path);
  } catch (const sflab::ConfigInvalid& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitOk;
}
