#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "bvm/config.hpp"
#include "bvm/pipeline.hpp"
#include "bvm/scenarios.hpp"

using namespace bvm;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kConfigs = fs::path(BVM_SOURCE_DIR) / "configs";

json minimal() {
  return json::parse(R"({
    "dataset": {"reference": "monod"},
    "model": "monod",
    "prior": [{"kind": "gaussian", "name": "a1", "mean": 0.17, "sd": 0.025},
              {"kind": "gaussian", "name": "a2", "mean": 47.5, "sd": 3}],
    "likelihood": {"kernel": "bvm_certain_eps", "agreement": {"kind": "epsilon", "epsilon": 0.03}},
    "mcmc": {"iterations": 500, "seed": 3},
    "evidence_draws": 1000,
    "envelope": {"subsample": 100, "points": 20}
  })");
}

fs::path scratch(const std::string& name) {
  auto d = fs::temp_directory_path() / ("bvm_test_config_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Config, ShippedConfigsLoad) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(kConfigs)) {
    if (e.path().extension() != ".json") continue;
    EXPECT_NO_THROW(load_run_config(e.path().string())) << e.path();
    ++n;
  }
  EXPECT_GE(n, 5u);
  EXPECT_EQ(load_run_config((kConfigs / "monod.json").string()).dataset.y, scenario_monod().config.dataset.y);
  EXPECT_EQ(to_json(load_run_config((kConfigs / "toy.json").string())), to_json(scenario_toy(1).config));
}

TEST(Config, MinimalDefaults) {
  const auto c = run_config_from_json(minimal());
  EXPECT_EQ(c.name, "run");
  EXPECT_EQ(c.start, StartMode::PriorMean);
  EXPECT_EQ(c.mcmc.burn_in_fraction, 0.1);
  EXPECT_EQ(c.envelope.band, BandMethod::StdDev);
}

TEST(Config, RejectsUnknownAndMissingFields) {
  for (const char* ptr : {"/colour", "/mcmc/thin", "/envelope/width"}) {
    auto j = minimal();
    j[json::json_pointer(ptr)] = 1;
    EXPECT_THROW(run_config_from_json(j), ConfigError) << ptr;
  }
  for (const char* key : {"dataset", "model", "prior", "likelihood"}) {
    auto j = minimal();
    j.erase(key);
    EXPECT_THROW(run_config_from_json(j), ConfigError) << key;
  }
}

TEST(Config, RejectsInconsistentSettings) {
  auto bad = [](auto edit) {
    auto j = minimal();
    edit(j);
    return j;
  };
  EXPECT_THROW(run_config_from_json(bad([](json& j) { j["model"] = "toy6"; })), ConfigError);
  EXPECT_THROW(run_config_from_json(bad([](json& j) { j["model"] = "quadratic"; })), ConfigError);
  EXPECT_THROW(run_config_from_json(bad([](json& j) { j["envelope"]["subsample"] = 10; })), ConfigError);
  EXPECT_THROW(run_config_from_json(bad([](json& j) { j["mcmc"]["start"] = "middle"; })), ConfigError);
  EXPECT_THROW(run_config_from_json(bad([](json& j) { j["mcmc"]["iterations"] = -5; })), ConfigError);
  EXPECT_THROW(run_config_from_json(bad([](json& j) { j["likelihood"] = {{"kernel", "classic_gaussian"}}; })),
               KindMismatchError);
  EXPECT_THROW(run_config_from_json(bad([](json& j) {
                 j["likelihood"]["agreement"] = {{"kind", "mean_epsilon_alpha"}, {"mean_epsilon", 0.7}};
               })),
               ConfigError);
}

TEST(Config, DatasetSources) {
  const auto dir = scratch("sources");
  save_dataset(reference::monod_data(), (dir / "d.json").string(), DataFormat::Json);
  for (json src : {json{{"path", "d.json"}}, json{{"path", (dir / "d.json").string()}},
                   json{{"path", "d.json"}, {"format", "json"}}}) {
    auto j = minimal();
    j["dataset"] = src;
    EXPECT_EQ(run_config_from_json(j, dir).dataset.y, reference::monod_data().y) << src;
  }
  auto j = minimal();
  j["dataset"] = {{"path", "absent.csv"}};
  EXPECT_THROW(run_config_from_json(j, dir), ConfigError);
  j["dataset"] = {{"reference", "nowhere"}};
  EXPECT_THROW(run_config_from_json(j), ConfigError);
  j["dataset"] = {{"reference", "toy"}, {"seed", 2}, {"points", 10}};
  j["model"] = "linear";
  EXPECT_THROW(run_config_from_json(j), KindMismatchError);  // certain kernel on gaussian rows
  j["likelihood"]["kernel"] = "bvm_gaussian_eps";
  EXPECT_EQ(run_config_from_json(j).dataset, reference::toy_data(2, 10));
  j["dataset"] = {{"label", "inline"}, {"rows", json::array({{{"x", 1.0}, {"kind", "certain"}, {"value", 2.0}}})}};
  j["likelihood"]["kernel"] = "bvm_certain_eps";
  EXPECT_EQ(run_config_from_json(j).dataset.size(), 1u);
}

TEST(Config, InvalidJsonFile) {
  const auto dir = scratch("invalid");
  std::ofstream(dir / "c.json") << "{ not json";
  EXPECT_THROW(load_run_config((dir / "c.json").string()), ConfigError);
  EXPECT_THROW(load_run_config((dir / "missing.json").string()), ConfigError);
}

TEST(Manifest, RerunReproducesChainBitForBit) {
  const auto dir = scratch("rerun");
  const auto cfg = run_config_from_json(minimal());
  const auto first = calibrate(cfg);
  write_artifacts(first, dir / "a");

  const auto again = calibrate(load_run_config((dir / "a" / "manifest.json").string()));
  write_artifacts(again, dir / "b");
  EXPECT_EQ(slurp(dir / "a" / "chain.csv"), slurp(dir / "b" / "chain.csv"));
  EXPECT_EQ(slurp(dir / "a" / "envelope.csv"), slurp(dir / "b" / "envelope.csv"));
  EXPECT_EQ(slurp(dir / "a" / "summary.json"), slurp(dir / "b" / "summary.json"));

  const auto m = json::parse(slurp(dir / "a" / "manifest.json"));
  EXPECT_EQ(m.at("kind"), "bvm-run-manifest");
  EXPECT_EQ(m.at("seed"), 3);
  EXPECT_EQ(m.at("dataset_hash"), dataset_hash(cfg.dataset));
  EXPECT_GT(m.at("evidence").at("value").get<double>(), 0.0);
}

TEST(Manifest, DatasetHashMismatchIsRejected) {
  const auto dir = scratch("hash");
  auto cfg = run_config_from_json(minimal());
  cfg.mcmc.iterations = 200;
  write_artifacts(calibrate(cfg), dir);
  auto m = json::parse(slurp(dir / "manifest.json"));
  m["dataset_hash"] = "0000000000000000";
  std::ofstream(dir / "manifest.json") << m.dump();
  EXPECT_THROW(load_run_config((dir / "manifest.json").string()), ConfigError);
}

TEST(Manifest, ChainCsvLayout) {
  PosteriorChain c;
  c.names = {"a", "b"};
  c.samples = {{{1.0, 2.5}, -0.5, true}, {{1.0, 2.5}, -0.5, false}};
  EXPECT_EQ(chain_to_csv(c), "iteration,accepted,a,b,log_likelihood\n0,1,1,2.5,-0.5\n1,0,1,2.5,-0.5\n");
}

TEST(Config, SchemaListsLoaderFields) {
  const auto schema = json::parse(slurp(fs::path(BVM_SOURCE_DIR) / "docs" / "run_config.schema.json"));
  std::set<std::string> keys;
  for (const auto& [k, _] : schema.at("properties").items()) keys.insert(k);
  EXPECT_EQ(keys, (std::set<std::string>{"name", "provenance", "dataset", "model", "prior", "latent_prior",
                                         "likelihood", "mcmc", "evidence_draws", "reliability_subsample",
                                         "envelope", "output"}));
  // Every field the schema allows in mcmc is accepted by the loader.
  for (const auto& [k, _] : schema.at("properties").at("mcmc").at("properties").items()) {
    auto j = minimal();
    if (k == "start") j["mcmc"][k] = "prior_mean";
    else if (k == "proposal_scales") j["mcmc"][k] = {0.01, 1.0};
    else if (k == "burn_in_fraction") j["mcmc"][k] = 0.2;
    else j["mcmc"][k] = 100;
    EXPECT_NO_THROW(run_config_from_json(j)) << k;
  }
}
