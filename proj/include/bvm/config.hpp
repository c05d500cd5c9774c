#pragma once

// Run configuration: the JSON document the command-line tool consumes.
// The accepted shape is published in docs/run_config.schema.json.

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bvm/analysis.hpp"
#include "bvm/data.hpp"
#include "bvm/errors.hpp"
#include "bvm/likelihood.hpp"
#include "bvm/models.hpp"
#include "bvm/reference_data.hpp"
#include "bvm/sampler.hpp"
#include "json.hpp"

namespace bvm {

enum class StartMode { PriorMean, LeastSquares, Explicit };

struct EnvelopeOptions {
  std::size_t points = 200;
  double extend = 0.05;
  std::size_t subsample = 200;
  BandMethod band = BandMethod::StdDev;

  bool operator==(const EnvelopeOptions&) const = default;
};

struct RunConfig {
  std::string name = "run";
  nlohmann::json provenance = nlohmann::json::object();
  DataSet dataset;
  std::string model = "linear";
  Prior prior;
  std::optional<Prior> latent_prior;
  LikelihoodKernel kernel{KernelKind::Flat, AgreementSpec::exact()};
  McmcConfig mcmc;
  StartMode start = StartMode::PriorMean;
  std::size_t evidence_draws = 10000;
  // 0 disables the posterior-averaged reliability score.
  std::size_t reliability_subsample = 0;
  EnvelopeOptions envelope;
  std::string output = "bvm_out";

  // Model parameters followed by latent agreement coordinates.
  Prior full_prior() const { return latent_prior ? prior.extended(*latent_prior) : prior; }

  void check() const {
    dataset.validate();
    const auto m = make_model(model);
    if (prior.dim() != m.dim())
      throw ConfigError("prior has " + std::to_string(prior.dim()) + " components, model '" + model +
                        "' has " + std::to_string(m.dim()) + " parameters");
    if (kernel.latent_dim() > 0 && !latent_prior)
      throw ConfigError("this agreement needs a latent_prior for the half-width c");
    if (kernel.latent_dim() == 0 && latent_prior) throw ConfigError("latent_prior given but agreement has no latent");
    if (latent_prior && latent_prior->dim() != kernel.latent_dim()) throw ConfigError("latent_prior has wrong size");
    kernel.check_compatible(dataset);
    mcmc.check(full_prior().dim());
    if (start == StartMode::Explicit && mcmc.start.empty()) throw ConfigError("explicit start needs values");
    if (envelope.subsample < 30) throw ConfigError("envelope.subsample must be at least 30");
    if (envelope.points < 2) throw ConfigError("envelope.points must be at least 2");
    if (!(envelope.extend >= 0.0)) throw ConfigError("envelope.extend must be >= 0");
  }
};

namespace detail {

inline void only_keys(const nlohmann::json& j, std::string_view where, std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto k : keys) ok = ok || key == k;
    if (!ok) throw ConfigError(std::string(where) + ": unknown field '" + key + "'");
  }
}

template <class T>
T get_as(const nlohmann::json& j, std::string_view what) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string(what) + " has the wrong type");
  }
}

inline std::size_t get_count(const nlohmann::json& j, std::string_view what) {
  if (!j.is_number_integer() || j.get<long long>() < 0)
    throw ConfigError(std::string(what) + " must be a nonnegative integer");
  return j.get<std::size_t>();
}

inline std::uint64_t get_seed(const nlohmann::json& j) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<long long>() >= 0) return static_cast<std::uint64_t>(j.get<long long>());
  throw ConfigError("seed must be a nonnegative integer");
}

inline std::string_view band_name(BandMethod b) { return b == BandMethod::StdDev ? "sd" : "quantile"; }

inline std::string_view start_name(StartMode s) {
  switch (s) {
    case StartMode::PriorMean: return "prior_mean";
    case StartMode::LeastSquares: return "least_squares";
    case StartMode::Explicit: return "explicit";
  }
  return "?";
}

}  // namespace detail

/// Dataset source: {"path", "format"}, inline {"label", "rows"}, or a
/// reference set {"reference": "monod" | "smallwood" | "toy" | "matrix_*", "seed", "points"}.
/// Relative paths resolve against `base_dir`.
inline DataSet dataset_source_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("dataset must be an object");
  if (j.contains("path")) {
    detail::only_keys(j, "dataset", {"path", "format"});
    std::filesystem::path p = detail::get_as<std::string>(j.at("path"), "dataset.path");
    if (p.is_relative()) p = base_dir / p;
    DataFormat fmt = format_from_path(p.string());
    if (j.contains("format")) {
      const auto f = detail::get_as<std::string>(j.at("format"), "dataset.format");
      if (f == "csv") fmt = DataFormat::Csv;
      else if (f == "json") fmt = DataFormat::Json;
      else throw ConfigError("dataset.format must be csv or json");
    }
    if (!std::filesystem::exists(p)) throw ConfigError("dataset file not found: " + p.string());
    return load_dataset(p.string(), fmt);
  }
  if (j.contains("reference")) {
    detail::only_keys(j, "dataset", {"reference", "seed", "points"});
    const auto name = detail::get_as<std::string>(j.at("reference"), "dataset.reference");
    if (name == "monod") return reference::monod_data();
    if (name == "smallwood") return reference::smallwood_data();
    if (name == "toy") {
      const std::uint64_t seed = j.contains("seed") ? detail::get_seed(j.at("seed")) : 1;
      const std::size_t n = j.contains("points") ? detail::get_count(j.at("points"), "dataset.points")
                                                 : reference::kToyPoints;
      return reference::toy_data(seed, n);
    }
    if (name == "matrix_gaussian") return reference::matrix_data(ObservationKind::Gaussian);
    if (name == "matrix_uniform") return reference::matrix_data(ObservationKind::Uniform);
    if (name == "matrix_certain") return reference::matrix_data(ObservationKind::Certain);
    throw ConfigError("unknown reference dataset '" + name + "'");
  }
  if (j.contains("rows")) return dataset_from_json(j);
  throw ConfigError("dataset needs one of 'path', 'rows' or 'reference'");
}

inline nlohmann::json to_json(const McmcConfig& m, StartMode start) {
  nlohmann::json j{{"iterations", m.iterations},
                   {"burn_in_fraction", m.burn_in_fraction},
                   {"seed", m.seed},
                   {"max_start_draws", m.max_start_draws}};
  if (!m.proposal_scales.empty()) j["proposal_scales"] = m.proposal_scales;
  if (start == StartMode::Explicit) j["start"] = m.start;
  else j["start"] = std::string(detail::start_name(start));
  return j;
}

inline nlohmann::json to_json(const EnvelopeOptions& e) {
  return {{"points", e.points}, {"extend", e.extend}, {"subsample", e.subsample},
          {"band", std::string(detail::band_name(e.band))}};
}

/// Serialized form; the dataset is always written inline so the document
/// is self-contained.
inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j{{"name", c.name},
                   {"dataset", to_json(c.dataset)},
                   {"model", c.model},
                   {"prior", to_json(c.prior)},
                   {"likelihood", to_json(c.kernel)},
                   {"mcmc", to_json(c.mcmc, c.start)},
                   {"evidence_draws", c.evidence_draws},
                   {"reliability_subsample", c.reliability_subsample},
                   {"envelope", to_json(c.envelope)},
                   {"output", c.output}};
  if (!c.provenance.empty()) j["provenance"] = c.provenance;
  if (c.latent_prior) j["latent_prior"] = to_json(*c.latent_prior);
  return j;
}

inline RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = ".") {
  detail::only_keys(j, "config",
                    {"name", "provenance", "dataset", "model", "prior", "latent_prior", "likelihood", "mcmc",
                     "evidence_draws", "reliability_subsample", "envelope", "output"});
  for (const char* req : {"dataset", "model", "prior", "likelihood"})
    if (!j.contains(req)) throw ConfigError(std::string("config is missing required field '") + req + "'");

  RunConfig c;
  if (j.contains("name")) c.name = detail::get_as<std::string>(j.at("name"), "name");
  if (j.contains("provenance")) {
    c.provenance = j.at("provenance");
    if (!c.provenance.is_object()) throw ConfigError("provenance must be an object");
  }
  c.dataset = dataset_source_from_json(j.at("dataset"), base_dir);
  c.model = detail::get_as<std::string>(j.at("model"), "model");
  c.prior = prior_from_json(j.at("prior"));
  if (j.contains("latent_prior")) c.latent_prior = prior_from_json(j.at("latent_prior"));
  c.kernel = kernel_from_json(j.at("likelihood"));

  if (j.contains("mcmc")) {
    const auto& m = j.at("mcmc");
    detail::only_keys(m, "mcmc",
                      {"iterations", "burn_in_fraction", "proposal_scales", "seed", "start", "max_start_draws"});
    if (m.contains("iterations")) c.mcmc.iterations = detail::get_count(m.at("iterations"), "mcmc.iterations");
    if (m.contains("burn_in_fraction"))
      c.mcmc.burn_in_fraction = detail::get_as<double>(m.at("burn_in_fraction"), "mcmc.burn_in_fraction");
    if (m.contains("proposal_scales"))
      c.mcmc.proposal_scales = detail::get_as<std::vector<double>>(m.at("proposal_scales"), "mcmc.proposal_scales");
    if (m.contains("seed")) c.mcmc.seed = detail::get_seed(m.at("seed"));
    if (m.contains("max_start_draws"))
      c.mcmc.max_start_draws = detail::get_count(m.at("max_start_draws"), "mcmc.max_start_draws");
    if (m.contains("start")) {
      const auto& s = m.at("start");
      if (s.is_array()) {
        c.start = StartMode::Explicit;
        c.mcmc.start = detail::get_as<std::vector<double>>(s, "mcmc.start");
      } else {
        const auto mode = detail::get_as<std::string>(s, "mcmc.start");
        if (mode == "prior_mean") c.start = StartMode::PriorMean;
        else if (mode == "least_squares") c.start = StartMode::LeastSquares;
        else throw ConfigError("mcmc.start must be prior_mean, least_squares or an array");
      }
    }
  }
  if (j.contains("evidence_draws")) c.evidence_draws = detail::get_count(j.at("evidence_draws"), "evidence_draws");
  if (j.contains("reliability_subsample"))
    c.reliability_subsample = detail::get_count(j.at("reliability_subsample"), "reliability_subsample");
  if (j.contains("envelope")) {
    const auto& e = j.at("envelope");
    detail::only_keys(e, "envelope", {"points", "extend", "subsample", "band"});
    if (e.contains("points")) c.envelope.points = detail::get_count(e.at("points"), "envelope.points");
    if (e.contains("extend")) c.envelope.extend = detail::get_as<double>(e.at("extend"), "envelope.extend");
    if (e.contains("subsample")) c.envelope.subsample = detail::get_count(e.at("subsample"), "envelope.subsample");
    if (e.contains("band")) {
      const auto b = detail::get_as<std::string>(e.at("band"), "envelope.band");
      if (b == "sd") c.envelope.band = BandMethod::StdDev;
      else if (b == "quantile") c.envelope.band = BandMethod::Quantile;
      else throw ConfigError("envelope.band must be sd or quantile");
    }
  }
  if (j.contains("output")) c.output = detail::get_as<std::string>(j.at("output"), "output");
  c.check();
  return c;
}

inline constexpr std::string_view kManifestKind = "bvm-run-manifest";

/// Reads a config file, or the config embedded in a run manifest.
inline RunConfig load_run_config(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
  const auto base = std::filesystem::path(path).parent_path();
  if (j.is_object() && j.contains("kind") && j.at("kind") == kManifestKind) {
    auto c = run_config_from_json(j.at("config"), base);
    if (j.contains("dataset_hash") && j.at("dataset_hash").get<std::string>() != dataset_hash(c.dataset))
      throw ConfigError(path + ": dataset does not match the manifest's dataset_hash");
    return c;
  }
  return run_config_from_json(j, base);
}

}  // namespace bvm
