#include "sflab/experiment.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sflab/detail/io.hpp"
#include "sflab/errors.hpp"
#include "sflab/rng.hpp"

namespace sflab {

namespace {

template <typename T>
T enum_from_string(const std::string& s,
                   const std::vector<std::pair<const char*, T>>& table,
                   const char* what) {
  for (const auto& [name, value] : table)
    if (s == name) return value;
  throw ConfigInvalid(std::string("unknown ") + what + ": " + s);
}

template <typename T>
std::string enum_to_string(T v, const std::vector<std::pair<const char*, T>>& table) {
  for (const auto& [name, value] : table)
    if (v == value) return name;
  throw ConfigInvalid("unmapped enum value");
}

const std::vector<std::pair<const char*, TrainVariant>> kVariants = {
    {"plain", TrainVariant::Plain}, {"prox", TrainVariant::Prox}};
const std::vector<std::pair<const char*, DefenseKind>> kDefenses = {
    {"none", DefenseKind::None},
    {"model_shuffle", DefenseKind::ModelShuffle},
    {"layer_shuffle", DefenseKind::LayerShuffle},
    {"param_shuffle", DefenseKind::ParamShuffle},
    {"bit_rns", DefenseKind::BitRns},
    {"bit_rns_rle", DefenseKind::BitRnsRle}};
const std::vector<std::pair<const char*, AttackKind>> kAttacks = {
    {"none", AttackKind::None},
    {"sia", AttackKind::Sia},
    {"recon_model_sia", AttackKind::ReconModelSia},
    {"recon_layer_sia", AttackKind::ReconLayerSia},
    {"recon_param_sia", AttackKind::ReconParamSia}};
const std::vector<std::pair<const char*, ModuliStrategy>> kStrategies = {
    {"consecutive_primes", ModuliStrategy::ConsecutivePrimes},
    {"min_sum_search", ModuliStrategy::MinSumSearch}};
const std::vector<std::pair<const char*, TrustLevel>> kTrustLevels = {
    {"fully_trusted", TrustLevel::FullyTrusted},
    {"semi_honest", TrustLevel::SemiHonest},
    {"partially_malicious", TrustLevel::PartiallyMalicious}};

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  cfg.seed = j.value("seed", cfg.seed);
  cfg.clients = j.value("clients", cfg.clients);
  cfg.alpha = j.value("alpha", cfg.alpha);
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    cfg.classes = d.value("classes", cfg.classes);
    cfg.dim = d.value("dim", cfg.dim);
    cfg.samples = d.value("samples", cfg.samples);
    cfg.test_samples = d.value("test_samples", cfg.test_samples);
  }
  if (j.contains("model")) cfg.hidden = j.at("model").value("hidden", cfg.hidden);
  if (j.contains("training")) {
    const auto& t = j.at("training");
    cfg.rounds = t.value("rounds", cfg.rounds);
    cfg.local_epochs = t.value("local_epochs", cfg.local_epochs);
    cfg.batch_size = t.value("batch_size", cfg.batch_size);
    cfg.lr = t.value("lr", cfg.lr);
    cfg.momentum = t.value("momentum", cfg.momentum);
    if (t.contains("variant"))
      cfg.variant = enum_from_string<TrainVariant>(t.at("variant"), kVariants, "variant");
    cfg.prox_mu = t.value("prox_mu", cfg.prox_mu);
  }
  if (j.contains("defense")) {
    const auto& d = j.at("defense");
    if (d.contains("kind"))
      cfg.defense = enum_from_string<DefenseKind>(d.at("kind"), kDefenses, "defense");
    cfg.precision = d.value("precision", cfg.precision);
    if (d.contains("strategy"))
      cfg.strategy = enum_from_string<ModuliStrategy>(d.at("strategy"), kStrategies, "strategy");
    if (d.contains("trust"))
      cfg.trust = enum_from_string<TrustLevel>(d.at("trust"), kTrustLevels, "trust");
    cfg.trap_fraction = d.value("trap_fraction", cfg.trap_fraction);
  }
  if (j.contains("attack")) {
    const auto& a = j.at("attack");
    if (a.contains("kind"))
      cfg.attack = enum_from_string<AttackKind>(a.at("kind"), kAttacks, "attack");
    cfg.shadow_fraction = a.value("shadow_fraction", cfg.shadow_fraction);
    cfg.shadow_noise = a.value("shadow_noise", cfg.shadow_noise);
    cfg.probes = a.value("probes", cfg.probes);
  }
  cfg.output_dir = j.value("output_dir", cfg.output_dir);
  return cfg;
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["seed"] = cfg.seed;
  j["clients"] = cfg.clients;
  j["alpha"] = cfg.alpha;
  j["dataset"] = {{"classes", cfg.classes},
                  {"dim", cfg.dim},
                  {"samples", cfg.samples},
                  {"test_samples", cfg.test_samples}};
  j["model"] = {{"hidden", cfg.hidden}};
  j["training"] = {{"rounds", cfg.rounds},
                   {"local_epochs", cfg.local_epochs},
                   {"batch_size", cfg.batch_size},
                   {"lr", cfg.lr},
                   {"momentum", cfg.momentum},
                   {"variant", enum_to_string(cfg.variant, kVariants)},
                   {"prox_mu", cfg.prox_mu}};
  j["defense"] = {{"kind", enum_to_string(cfg.defense, kDefenses)},
                  {"precision", cfg.precision},
                  {"strategy", enum_to_string(cfg.strategy, kStrategies)},
                  {"trust", enum_to_string(cfg.trust, kTrustLevels)},
                  {"trap_fraction", cfg.trap_fraction}};
  j["attack"] = {{"kind", enum_to_string(cfg.attack, kAttacks)},
                 {"shadow_fraction", cfg.shadow_fraction},
                 {"shadow_noise", cfg.shadow_noise},
                 {"probes", cfg.probes}};
  j["output_dir"] = cfg.output_dir;
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigInvalid("cannot open config " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigInvalid("config " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

std::vector<std::string> validate(const ExperimentConfig& cfg) {
  std::vector<std::string> problems;
  if (cfg.clients < 2) problems.push_back("clients must be at least 2");
  if (cfg.classes < 2) problems.push_back("dataset.classes must be at least 2");
  if (cfg.dim < 1) problems.push_back("dataset.dim must be at least 1");
  if (cfg.samples < cfg.clients) problems.push_back("dataset.samples must cover every client");
  if (cfg.hidden < 1) problems.push_back("model.hidden must be at least 1");
  if (cfg.rounds < 1) problems.push_back("training.rounds must be at least 1");
  if (cfg.local_epochs < 1) problems.push_back("training.local_epochs must be at least 1");
  if (cfg.batch_size < 1) problems.push_back("training.batch_size must be at least 1");
  if (!(cfg.lr > 0.0)) problems.push_back("training.lr must be positive");
  if (cfg.momentum < 0.0 || cfg.momentum >= 1.0)
    problems.push_back("training.momentum must lie in [0, 1)");
  if (cfg.variant == TrainVariant::Prox && cfg.prox_mu < 0.0)
    problems.push_back("training.prox_mu must be non-negative");
  if (!(cfg.alpha > 0.0)) problems.push_back("alpha must be positive");
  bool bit_defense =
      cfg.defense == DefenseKind::BitRns || cfg.defense == DefenseKind::BitRnsRle;
  if (bit_defense && (cfg.precision < 1 || cfg.precision > 16))
    problems.push_back("defense.precision must lie in [1, 16]");
  if (!bit_defense && cfg.trust != TrustLevel::FullyTrusted)
    problems.push_back("defense.trust other than fully_trusted needs a bit-level defense");
  if (cfg.trap_fraction < 0.0 || cfg.trap_fraction > 1.0)
    problems.push_back("defense.trap_fraction must lie in [0, 1]");
  bool recon = cfg.attack == AttackKind::ReconModelSia ||
               cfg.attack == AttackKind::ReconLayerSia ||
               cfg.attack == AttackKind::ReconParamSia;
  if (cfg.attack == AttackKind::Sia && cfg.defense != DefenseKind::None && !bit_defense)
    problems.push_back("attack sia with a shuffle defense needs the matching recon attack");
  if (cfg.attack == AttackKind::ReconModelSia && cfg.defense != DefenseKind::ModelShuffle)
    problems.push_back("attack recon_model_sia needs defense model_shuffle");
  if (cfg.attack == AttackKind::ReconLayerSia && cfg.defense != DefenseKind::LayerShuffle)
    problems.push_back("attack recon_layer_sia needs defense layer_shuffle");
  if (cfg.attack == AttackKind::ReconParamSia && cfg.defense != DefenseKind::ParamShuffle)
    problems.push_back("attack recon_param_sia needs defense param_shuffle");
  if (recon && !(cfg.shadow_fraction > 0.0 && cfg.shadow_fraction <= 1.0))
    problems.push_back("attack.shadow_fraction must lie in (0, 1]");
  if (cfg.shadow_noise < 0.0) problems.push_back("attack.shadow_noise must be non-negative");
  if (cfg.attack != AttackKind::None && cfg.probes < 1)
    problems.push_back("attack.probes must be at least 1");
  if (cfg.output_dir.empty()) problems.push_back("output_dir must not be empty");
  return problems;
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::string canon = config_to_json(cfg).dump();
  uint64_t h = fnv1a64(canon.data(), canon.size());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

FederationPlan plan_from_config(const ExperimentConfig& cfg) {
  FederationPlan plan;
  plan.seed = cfg.seed;
  plan.n_clients = cfg.clients;
  plan.alpha = cfg.alpha;
  plan.classes = cfg.classes;
  plan.dim = cfg.dim;
  plan.samples = cfg.samples;
  plan.test_samples = cfg.test_samples;
  plan.hidden = cfg.hidden;
  plan.rounds = cfg.rounds;
  plan.train.epochs = cfg.local_epochs;
  plan.train.batch_size = cfg.batch_size;
  plan.train.lr = cfg.lr;
  plan.train.momentum = cfg.momentum;
  plan.train.variant = cfg.variant;
  plan.train.prox_mu = cfg.prox_mu;
  plan.defense = cfg.defense;
  plan.precision = cfg.precision;
  plan.strategy = cfg.strategy;
  plan.attack = cfg.attack;
  plan.shadow_fraction = cfg.shadow_fraction;
  plan.shadow_noise = cfg.shadow_noise;
  plan.probes = cfg.probes;
  if (cfg.trust != TrustLevel::FullyTrusted) {
    MixnetConfig mix;
    mix.trust = cfg.trust;
    for (uint32_t i = 0; i < 3; ++i)
      mix.servers.push_back({i, derive_seed(cfg.seed, "mixnet.key", i), ServerBehavior::Honest});
    double traps = cfg.trust == TrustLevel::PartiallyMalicious ? cfg.trap_fraction : 0.0;
    plan.channel_shuffler = [mix, traps](PackedBits& bits, uint64_t channel_seed) {
      MixnetConfig with_traps = mix;
      with_traps.trap_labels =
          select_traps(static_cast<uint32_t>(bits.size()), traps, channel_seed);
      mixnet_channel_shuffler(with_traps)(bits, channel_seed);
    };
  }
  return plan;
}

nlohmann::json summary_json(const ExperimentReport& report) {
  nlohmann::json j;
  j["version"] = kVersion;
  j["config_hash"] = config_hash(report.config);
  j["config"] = config_to_json(report.config);
  nlohmann::json res;
  res["final_accuracy"] = report.result.final_accuracy;
  res["pooled_sia_rate"] = report.result.pooled_sia_rate;
  res["best_sia_rate"] = report.result.best_sia_rate;
  res["baseline_rate"] = report.result.baseline_rate;
  res["total_probes"] = report.result.total_probes;
  res["total_hits"] = report.result.total_hits;
  res["rounds"] = report.result.rounds.size();
  j["results"] = res;
  if (report.result.context) {
    const RnsContext& ctx = *report.result.context;
    j["context"] = {{"moduli", ctx.moduli},
                    {"product", u128_str(ctx.product)},
                    {"precision", ctx.precision},
                    {"clients", ctx.clients}};
  } else {
    j["context"] = nullptr;
  }
  if (report.cost) {
    const CostReport& c = *report.cost;
    j["cost"] = {{"bits_unary", c.bits_unary},
                 {"bits_rle", c.bits_rle},
                 {"bits_vanilla", c.bits_vanilla},
                 {"bits_secure_agg", c.bits_secure_agg},
                 {"expansion_unary", c.expansion_unary},
                 {"expansion_rle", c.expansion_rle},
                 {"shuffle_rounds", c.shuffle_rounds}};
  } else {
    j["cost"] = nullptr;
  }
  return j;
}

namespace {

std::string rounds_csv(const ExperimentResult& result) {
  std::ostringstream os;
  os << "round,accuracy,train_loss,probes,hits,sia_rate,shadow_evals,upload_bits_per_param\n";
  for (const RoundStats& r : result.rounds) {
    os << r.round << ',' << fmt_double(r.accuracy) << ',' << fmt_double(r.train_loss) << ','
       << r.probes << ',' << r.hits << ',' << fmt_double(r.sia_rate) << ',' << r.shadow_evals
       << ',' << r.upload_bits_per_param << '\n';
  }
  return os.str();
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  std::vector<std::string> problems = validate(cfg);
  if (!problems.empty()) {
    std::string msg = "config invalid:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigInvalid(msg);
  }
  ExperimentReport report;
  report.config = cfg;
  report.result = run_sia_experiment(plan_from_config(cfg));
  if (report.result.context) report.cost = make_cost_report(*report.result.context);

  std::filesystem::create_directories(cfg.output_dir);
  report.rounds_csv_path = cfg.output_dir + "/rounds.csv";
  report.summary_json_path = cfg.output_dir + "/summary.json";
  detail::atomic_write_file(report.rounds_csv_path, rounds_csv(report.result));
  detail::atomic_write_file(report.summary_json_path, summary_json(report).dump(2) + "\n");
  return report;
}

std::vector<ExperimentReport> run_sweep(const ExperimentConfig& base, const std::string& axis,
                                        const std::vector<double>& values) {
  if (values.empty()) throw ConfigInvalid("sweep: no values");
  std::vector<ExperimentReport> reports;
  std::ostringstream summary;
  summary << axis << ",final_accuracy,pooled_sia_rate,best_sia_rate,baseline_rate\n";
  for (double v : values) {
    ExperimentConfig cfg = base;
    if (axis == "alpha") {
      cfg.alpha = v;
    } else if (axis == "clients") {
      cfg.clients = static_cast<uint32_t>(v);
    } else if (axis == "precision") {
      cfg.precision = static_cast<uint32_t>(v);
    } else if (axis == "seed") {
      cfg.seed = static_cast<uint64_t>(v);
    } else {
      throw ConfigInvalid("sweep: unsupported axis " + axis);
    }
    char tag[64];
    std::snprintf(tag, sizeof tag, "%s_%g", axis.c_str(), v);
    cfg.output_dir = base.output_dir + "/" + tag;
    reports.push_back(run_experiment(cfg));
    const ExperimentResult& r = reports.back().result;
    summary << fmt_double(v) << ',' << fmt_double(r.final_accuracy) << ','
            << fmt_double(r.pooled_sia_rate) << ',' << fmt_double(r.best_sia_rate) << ','
            << fmt_double(r.baseline_rate) << '\n';
  }
  std::filesystem::create_directories(base.output_dir);
  detail::atomic_write_file(base.output_dir + "/sweep_summary.csv", summary.str());
  return reports;
}

}  // namespace sflab
