// bvm: calibrate, estimate evidence, compare models and rerun the reference studies.
//
// Exit codes: 0 success, 1 configuration or input error, 2 infeasible chain start.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bvm/bvm.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitInfeasible = 2;

struct RunOptions {
  std::vector<std::string> configs;
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> iterations;
  std::optional<double> epsilon;
  std::optional<std::string> out;
  std::optional<std::size_t> evidence_draws;
};

// Thrown with the pipeline stage that failed, so messages can name it.
struct StageError {
  std::string stage;
  std::string message;
  int code;
};

std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("BVM_SEED");
  if (v == nullptr || *v == '\0') return std::nullopt;
  try {
    std::size_t used = 0;
    const auto s = std::stoull(v, &used);
    if (used != std::string_view(v).size()) throw std::invalid_argument(v);
    return s;
  } catch (const std::exception&) {
    throw StageError{"config", std::string("BVM_SEED is not an unsigned integer: ") + v, kExitConfig};
  }
}

// Flag beats BVM_SEED, which beats the config file.
std::optional<std::uint64_t> effective_seed(const RunOptions& o) { return o.seed ? o.seed : env_seed(); }

bvm::RunConfig resolve_config(const RunOptions& o, const std::string& config_path) {
  try {
    bvm::RunConfig cfg;
    const auto seed = effective_seed(o);
    if (!config_path.empty()) {
      cfg = bvm::load_run_config(config_path);
      if (seed) cfg.mcmc.seed = *seed;
    } else if (!o.scenario.empty()) {
      cfg = bvm::find_scenario(o.scenario, seed.value_or(1)).config;
    } else {
      throw bvm::ConfigError("give --config PATH or --scenario NAME");
    }
    if (o.iterations) cfg.mcmc.iterations = *o.iterations;
    if (o.epsilon) cfg.kernel = cfg.kernel.with_tolerance(*o.epsilon);
    if (o.evidence_draws) cfg.evidence_draws = *o.evidence_draws;
    if (o.out) cfg.output = *o.out;
    cfg.check();
    return cfg;
  } catch (const bvm::Error& e) {
    throw StageError{"config", e.what(), kExitConfig};
  }
}

void write_json(const std::filesystem::path& dir, const std::string& file, const nlohmann::json& j) {
  try {
    std::filesystem::create_directories(dir);
    bvm::io::write_file((dir / file).string(), j.dump(2) + "\n");
  } catch (const std::exception& e) {
    throw StageError{"output", e.what(), kExitConfig};
  }
}

int cmd_calibrate(const RunOptions& o) {
  const auto cfg = resolve_config(o, o.configs.empty() ? "" : o.configs.front());
  bvm::CalibrationResult res;
  try {
    res = bvm::calibrate(cfg);
  } catch (const bvm::InfeasibleStartError& e) {
    std::cerr << "bvm calibrate: [mcmc] " << e.what() << "\n";
    std::cerr << "  best state:";
    for (double v : e.best_state()) std::cerr << ' ' << bvm::io::format_double(v);
    std::cerr << "\n  nearest-miss residual: " << bvm::io::format_double(e.nearest_miss()) << "\n";
    return kExitInfeasible;
  } catch (const bvm::Error& e) {
    throw StageError{"calibrate", e.what(), kExitConfig};
  }
  try {
    bvm::write_artifacts(res, cfg.output);
  } catch (const bvm::Error& e) {
    throw StageError{"output", e.what(), kExitConfig};
  }
  std::cout << "run " << cfg.name << " seed " << cfg.mcmc.seed << "\n";
  std::cout << "acceptance rate " << bvm::io::format_double(res.chain.acceptance_rate()) << " ("
            << res.chain.accepted << "/" << res.chain.proposed << ")\n";
  for (std::size_t i = 0; i < res.summary.mean.size(); ++i)
    std::cout << "  " << res.summary.names[i] << " mean " << bvm::io::format_double(res.summary.mean[i]) << " sd "
              << bvm::io::format_double(res.summary.sd[i]) << "\n";
  if (res.evidence)
    std::cout << "evidence " << bvm::io::format_double(res.evidence->value) << " +/- "
              << bvm::io::format_double(res.evidence->std_error) << "\n";
  if (res.reliability) std::cout << "reliability score " << bvm::io::format_double(*res.reliability) << "\n";
  std::cout << "artifacts in " << cfg.output << "\n";
  return kExitOk;
}

bvm::EvidenceEstimate evidence_for(const bvm::RunConfig& cfg) {
  try {
    return bvm::run_evidence(cfg, cfg.evidence_draws);
  } catch (const bvm::Error& e) {
    throw StageError{"evidence", e.what(), kExitConfig};
  }
}

int cmd_evidence(const RunOptions& o) {
  const auto cfg = resolve_config(o, o.configs.empty() ? "" : o.configs.front());
  const auto ev = evidence_for(cfg);
  std::cout << "evidence " << bvm::io::format_double(ev.value) << " +/- " << bvm::io::format_double(ev.std_error)
            << " (" << ev.draws << " prior draws)\n";
  write_json(cfg.output, "evidence.json",
             {{"name", cfg.name},
              {"seed", cfg.mcmc.seed},
              {"dataset_hash", bvm::dataset_hash(cfg.dataset)},
              {"likelihood", bvm::to_json(cfg.kernel)},
              {"evidence", bvm::to_json(ev)}});
  return kExitOk;
}

int cmd_select(const RunOptions& o) {
  if (o.configs.size() != 2) throw StageError{"config", "select needs exactly two --config files", kExitConfig};
  const auto a = resolve_config(o, o.configs[0]);
  const auto b = resolve_config(o, o.configs[1]);
  if (!(a.kernel.agreement() == b.kernel.agreement()) || a.kernel.kind() != b.kernel.kind())
    throw StageError{"config", "the two configs use different likelihood kernels or agreement definitions",
                     kExitConfig};
  if (bvm::dataset_hash(a.dataset) != bvm::dataset_hash(b.dataset))
    throw StageError{"config", "the two configs use different datasets", kExitConfig};
  const auto za = evidence_for(a);
  const auto zb = evidence_for(b);
  std::cout << "Z_A (" << a.model << ") " << bvm::io::format_double(za.value) << " +/- "
            << bvm::io::format_double(za.std_error) << "\n";
  std::cout << "Z_B (" << b.model << ") " << bvm::io::format_double(zb.value) << " +/- "
            << bvm::io::format_double(zb.std_error) << "\n";
  nlohmann::json report{{"A", {{"config", o.configs[0]}, {"model", a.model}, {"evidence", bvm::to_json(za)}}},
                        {"B", {{"config", o.configs[1]}, {"model", b.model}, {"evidence", bvm::to_json(zb)}}}};
  try {
    const auto k = bvm::bvm_factor(za.value, zb.value);
    if (k.decisive) {
      std::cout << "K = inf: model A decisively favored (Z_B = 0)\n";
      report["factor"] = "inf";
      report["favored"] = "A";
      report["decisive"] = true;
    } else {
      const char* favored = k.value > 1.0 ? "A" : (k.value < 1.0 ? "B" : "neither");
      std::cout << "K = " << bvm::io::format_double(k.value) << ", favored: " << favored << "\n";
      report["factor"] = k.value;
      report["favored"] = favored;
      report["decisive"] = false;
    }
  } catch (const bvm::UndefinedComparisonError& e) {
    std::cout << "K undefined: " << e.what() << "\n";
    report["factor"] = nullptr;
    report["favored"] = nullptr;
  }
  if (o.out) write_json(*o.out, "selection.json", report);
  return kExitOk;
}

int cmd_reproduce(const std::string& name, const RunOptions& o) {
  const auto seed = effective_seed(o).value_or(1);
  bvm::Report report;
  if (name == "monod") report = bvm::reproduce_monod(seed);
  else if (name == "toy") report = bvm::reproduce_toy({seed, seed + 1, seed + 2, seed + 3, seed + 4});
  else if (name == "smallwood") report = bvm::reproduce_smallwood({seed, seed + 1, seed + 2, seed + 3, seed + 4});
  else if (name == "matrix") report = bvm::reproduce_matrix(seed);
  else throw StageError{"config", "unknown study '" + name + "' (monod, toy, smallwood, matrix)", kExitConfig};
  std::cout << bvm::format_report(report);
  if (o.out) write_json(*o.out, "reproduce_" + name + ".json", bvm::to_json(report));
  return report.all_pass() ? kExitOk : kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalized Bayesian calibration with model-data agreement Booleans"};
  app.require_subcommand(1);
  RunOptions o;
  std::string study;

  auto add_run_flags = [&](CLI::App* sub, bool many_configs) {
    if (many_configs)
      sub->add_option("--config", o.configs, "Run config or manifest (JSON); give twice")->expected(2);
    else
      sub->add_option("--config", o.configs, "Run config or manifest (JSON)")->expected(1);
    sub->add_option("--scenario", o.scenario, "Built-in scenario: " + [] {
      std::string s;
      for (const auto& n : bvm::scenario_names()) s += (s.empty() ? "" : ", ") + n;
      return s;
    }());
    sub->add_option("--seed", o.seed, "Seed (overrides BVM_SEED and the config)");
    sub->add_option("--iterations", o.iterations, "MCMC iterations");
    sub->add_option("--epsilon", o.epsilon, "Agreement tolerance");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--evidence-draws", o.evidence_draws, "Prior draws for the evidence estimate");
  };

  auto* calibrate = app.add_subcommand("calibrate", "Run a calibration and write its artifacts");
  add_run_flags(calibrate, false);
  auto* evidence = app.add_subcommand("evidence", "Estimate the evidence by prior Monte Carlo");
  add_run_flags(evidence, false);
  auto* select = app.add_subcommand("select", "Compare two models by their evidence ratio");
  add_run_flags(select, true);
  auto* reproduce = app.add_subcommand("reproduce", "Rerun a reference study and check its expectations");
  reproduce->add_option("study", study, "monod, toy, smallwood or matrix")->required();
  reproduce->add_option("--seed", o.seed, "Base seed");
  reproduce->add_option("--out", o.out, "Directory for the JSON verdict");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (calibrate->parsed()) return cmd_calibrate(o);
    if (evidence->parsed()) return cmd_evidence(o);
    if (select->parsed()) return cmd_select(o);
    if (reproduce->parsed()) return cmd_reproduce(study, o);
  } catch (const StageError& e) {
    std::cerr << "bvm: [" << e.stage << "] " << e.message << "\n";
    return e.code;
  } catch (const bvm::InfeasibleStartError& e) {
    std::cerr << "bvm: [mcmc] " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "bvm: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
