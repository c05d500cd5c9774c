#pragma once

// End-to-end calibration run: chain, summaries, envelope, evidence, manifest.

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bvm/analysis.hpp"
#include "bvm/config.hpp"
#include "bvm/io.hpp"
#include "bvm/sampler.hpp"
#include "json.hpp"

namespace bvm {

// Random streams derived from the run seed.
enum Stream : std::uint64_t { kEvidenceStream = 2, kEnvelopeStream = 4, kReliabilityStream = 5 };

struct CalibrationResult {
  RunConfig config;
  PosteriorChain chain;
  PosteriorSummary summary;
  PredictiveEnvelope envelope;
  std::optional<EvidenceEstimate> evidence;
  std::optional<double> reliability;
  std::optional<LeastSquaresResult> least_squares;
  double wall_seconds = 0.0;
};

/// Least-squares fit from the prior center: simplex edge of one prior sd,
/// start jitter of a tenth of that.
inline LeastSquaresResult least_squares_from_prior(const ParametricModel& model, const DataSet& data,
                                                   const Prior& prior, std::uint64_t seed) {
  LeastSquaresOptions opt;
  opt.seed = seed;
  for (const auto& p : prior.components()) {
    opt.initial_step.push_back(p.spread());
    opt.jitter.push_back(0.1 * p.spread());
  }
  return least_squares_fit(model, data, prior.center(), opt);
}

inline EvidenceEstimate run_evidence(const RunConfig& cfg, std::size_t draws) {
  Rng rng = make_rng(cfg.mcmc.seed, kEvidenceStream);
  return estimate_evidence(cfg.kernel, cfg.full_prior(), make_model(cfg.model), cfg.dataset, draws, rng);
}

inline CalibrationResult calibrate(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.check();
  CalibrationResult r;
  r.config = cfg;
  const auto model = make_model(cfg.model);
  const Prior prior = cfg.full_prior();

  McmcConfig mcmc = cfg.mcmc;
  if (cfg.start == StartMode::LeastSquares) {
    r.least_squares = least_squares_from_prior(model, cfg.dataset, cfg.prior, cfg.mcmc.seed);
    mcmc.start = r.least_squares->alpha;
  } else if (cfg.start == StartMode::PriorMean) {
    mcmc.start.clear();
  }

  r.chain = run_mcmc(cfg.kernel, prior, model, cfg.dataset, mcmc);
  r.summary = posterior_summary(r.chain);

  Rng env_rng = make_rng(cfg.mcmc.seed, kEnvelopeStream);
  const auto grid = default_grid(cfg.dataset, cfg.envelope.points, cfg.envelope.extend);
  const std::size_t s = std::min(cfg.envelope.subsample, r.chain.post_burn_in().size());
  if (s >= 30) r.envelope = predictive_envelope(r.chain, model, grid, s, env_rng, cfg.envelope.band);

  if (cfg.evidence_draws > 0) r.evidence = run_evidence(cfg, cfg.evidence_draws);
  if (cfg.reliability_subsample > 0) {
    Rng rel_rng = make_rng(cfg.mcmc.seed, kReliabilityStream);
    r.reliability = reliability_score(cfg.kernel, r.chain, model, cfg.dataset, cfg.reliability_subsample, rel_rng);
  }
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

inline std::string chain_to_csv(const PosteriorChain& chain) {
  std::string out = "iteration,accepted";
  for (const auto& n : chain.names) out += ',' + n;
  out += ",log_likelihood\n";
  for (std::size_t i = 0; i < chain.samples.size(); ++i) {
    const auto& s = chain.samples[i];
    out += std::to_string(i) + ',' + (s.accepted ? "1" : "0");
    for (double v : s.state) out += ',' + io::format_double(v);
    out += ',' + io::format_double(s.log_likelihood) + '\n';
  }
  return out;
}

inline nlohmann::json to_json(const EvidenceEstimate& e) {
  return {{"value", e.value}, {"std_error", e.std_error}, {"draws", e.draws}};
}

inline nlohmann::json manifest_json(const CalibrationResult& r) {
  nlohmann::json m{{"kind", std::string(kManifestKind)},
                   {"config", to_json(r.config)},
                   {"seed", r.config.mcmc.seed},
                   {"dataset_hash", dataset_hash(r.config.dataset)},
                   {"acceptance_rate", r.chain.acceptance_rate()},
                   {"accepted", r.chain.accepted},
                   {"proposed", r.chain.proposed},
                   {"burn_in", r.chain.burn_in},
                   {"start_state", r.chain.samples.empty() ? std::vector<double>{} : r.chain.samples.front().state},
                   {"wall_time_seconds", r.wall_seconds},
                   {"artifacts", {{"chain", "chain.csv"}, {"summary", "summary.json"}, {"envelope", "envelope.csv"}}}};
  m["evidence"] = r.evidence ? to_json(*r.evidence) : nlohmann::json(nullptr);
  m["reliability_score"] = r.reliability ? nlohmann::json(*r.reliability) : nlohmann::json(nullptr);
  if (r.least_squares)
    m["least_squares"] = {{"alpha", r.least_squares->alpha}, {"objective", r.least_squares->objective}};
  return m;
}

/// Writes chain.csv, summary.json, envelope.csv and manifest.json under `dir`.
inline void write_artifacts(const CalibrationResult& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
  io::write_file((dir / "chain.csv").string(), chain_to_csv(r.chain));
  nlohmann::json summary = to_json(r.summary);
  summary["acceptance_rate"] = r.chain.acceptance_rate();
  summary["posterior_mean_model"] = posterior_mean(r.chain);
  io::write_file((dir / "summary.json").string(), summary.dump(2) + "\n");
  io::write_file((dir / "envelope.csv").string(), envelope_to_csv(r.envelope));
  io::write_file((dir / "manifest.json").string(), manifest_json(r).dump(2) + "\n");
}

}  // namespace bvm
