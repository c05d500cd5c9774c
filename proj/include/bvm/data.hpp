#pragma once

// Uncertain observations, datasets and their CSV/JSON encodings.

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bvm/errors.hpp"
#include "bvm/io.hpp"
#include "bvm/normal.hpp"
#include "json.hpp"

namespace bvm {

enum class ObservationKind { Certain, Uniform, Gaussian };

inline std::string_view to_string(ObservationKind k) {
  switch (k) {
    case ObservationKind::Certain: return "certain";
    case ObservationKind::Uniform: return "uniform";
    case ObservationKind::Gaussian: return "gaussian";
  }
  return "?";
}

inline ObservationKind observation_kind_from_string(std::string_view s) {
  if (s == "certain") return ObservationKind::Certain;
  if (s == "uniform") return ObservationKind::Uniform;
  if (s == "gaussian") return ObservationKind::Gaussian;
  throw ValidationError("unknown observation kind '" + std::string(s) + "'");
}

/// One data point described by a distribution: a point mass, a uniform
/// interval [low, high], or a Gaussian (mean, sigma).
class UncertainObservation {
 public:
  static UncertainObservation certain(double value) {
    if (!std::isfinite(value)) throw ValidationError("certain value must be finite");
    return {ObservationKind::Certain, value, 0.0};
  }

  static UncertainObservation uniform(double low, double high) {
    if (!std::isfinite(low) || !std::isfinite(high) || !(low < high))
      throw ValidationError("uniform observation requires low < high (got " + io::format_double(low) +
                            ", " + io::format_double(high) + ")");
    return {ObservationKind::Uniform, low, high};
  }

  static UncertainObservation gaussian(double mean, double sigma) {
    if (!std::isfinite(mean) || !std::isfinite(sigma) || !(sigma > 0.0))
      throw ValidationError("gaussian observation requires sigma > 0 (got " + io::format_double(sigma) +
                            ")");
    return {ObservationKind::Gaussian, mean, sigma};
  }

  ObservationKind kind() const noexcept { return kind_; }

  double value() const { return require(ObservationKind::Certain), p1_; }
  double low() const { return require(ObservationKind::Uniform), p1_; }
  double high() const { return require(ObservationKind::Uniform), p2_; }
  double mean() const { return require(ObservationKind::Gaussian), p1_; }
  double sigma() const { return require(ObservationKind::Gaussian), p2_; }

  // Representative point: the certain value, interval midpoint, or mean.
  double point_value() const noexcept {
    return kind_ == ObservationKind::Uniform ? 0.5 * (p1_ + p2_) : p1_;
  }

  bool operator==(const UncertainObservation&) const = default;

 private:
  UncertainObservation(ObservationKind k, double p1, double p2) : kind_(k), p1_(p1), p2_(p2) {}

  void require(ObservationKind k) const {
    if (kind_ != k)
      throw KindMismatchError("observation is " + std::string(to_string(kind_)) + ", not " +
                              std::string(to_string(k)));
  }

  ObservationKind kind_;
  double p1_;
  double p2_;
};

// Point masses have no density; use the indicator paths instead.
inline double density(const UncertainObservation& obs, double y) {
  switch (obs.kind()) {
    case ObservationKind::Uniform:
      return (y >= obs.low() && y <= obs.high()) ? 1.0 / (obs.high() - obs.low()) : 0.0;
    case ObservationKind::Gaussian:
      return normal::pdf(y, obs.mean(), obs.sigma());
    case ObservationKind::Certain:
      break;
  }
  throw UnsupportedOperationError("density is undefined for a certain (point-mass) observation");
}

inline double cdf(const UncertainObservation& obs, double y) {
  switch (obs.kind()) {
    case ObservationKind::Certain:
      return y >= obs.value() ? 1.0 : 0.0;
    case ObservationKind::Uniform:
      return std::clamp((y - obs.low()) / (obs.high() - obs.low()), 0.0, 1.0);
    case ObservationKind::Gaussian:
      return normal::cdf((y - obs.mean()) / obs.sigma());
  }
  return 0.0;
}

template <class Rng>
double sample_observation(const UncertainObservation& obs, Rng& rng) {
  switch (obs.kind()) {
    case ObservationKind::Certain:
      return obs.value();
    case ObservationKind::Uniform:
      return std::uniform_real_distribution<double>(obs.low(), obs.high())(rng);
    case ObservationKind::Gaussian:
      return std::normal_distribution<double>(obs.mean(), obs.sigma())(rng);
  }
  return 0.0;
}

/// Inputs paired with independent uncertain observations.
struct DataSet {
  std::string label;
  std::vector<double> x;
  std::vector<UncertainObservation> y;

  std::size_t size() const noexcept { return x.size(); }

  void validate() const {
    if (x.size() != y.size())
      throw ValidationError("dataset has " + std::to_string(x.size()) + " inputs but " +
                            std::to_string(y.size()) + " observations");
    if (x.empty()) throw ValidationError("dataset must contain at least one observation");
    for (double v : x)
      if (!std::isfinite(v)) throw ValidationError("dataset input is not finite");
  }

  bool all_of_kind(ObservationKind k) const {
    return std::all_of(y.begin(), y.end(), [k](const auto& o) { return o.kind() == k; });
  }

  std::vector<double> point_values() const {
    std::vector<double> out;
    out.reserve(y.size());
    for (const auto& o : y) out.push_back(o.point_value());
    return out;
  }

  bool operator==(const DataSet&) const = default;
};

inline DataSet make_dataset(std::string label, std::vector<double> x,
                            std::vector<UncertainObservation> y) {
  DataSet d{std::move(label), std::move(x), std::move(y)};
  d.validate();
  return d;
}

// Concatenation of two datasets; used for factorization checks.
inline DataSet concat(const DataSet& a, const DataSet& b) {
  DataSet out = a;
  out.label = a.label + "+" + b.label;
  out.x.insert(out.x.end(), b.x.begin(), b.x.end());
  out.y.insert(out.y.end(), b.y.begin(), b.y.end());
  return out;
}

enum class DataFormat { Csv, Json };

// CSV rows are (x, p1, p2, kind); certain rows may omit p2. A non-numeric
// first row is a header. Blank lines and lines starting with '#' are skipped.
inline DataSet parse_csv_dataset(std::string_view text, std::string label = "csv") {
  DataSet d;
  d.label = std::move(label);
  std::size_t line_no = 0;
  std::size_t start = 0;
  bool first_content = true;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string line = io::trim(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    auto fields = io::split(line, ',');
    for (auto& f : fields) f = io::trim(f);
    if (first_content) {
      first_content = false;
      if (!io::parse_double(fields[0])) continue;  // header
    }
    if (fields.size() < 3 || fields.size() > 4)
      throw ParseError(line_no, "expected 3 or 4 comma-separated fields, got " +
                                    std::to_string(fields.size()));
    const std::string& kind_text = fields.back();
    ObservationKind kind;
    try {
      kind = observation_kind_from_string(kind_text);
    } catch (const ValidationError&) {
      throw ParseError(line_no, "unknown kind '" + kind_text + "'");
    }
    const auto x = io::parse_double(fields[0]);
    const auto p1 = io::parse_double(fields[1]);
    if (!x || !p1) throw ParseError(line_no, "non-numeric x or first parameter");
    if (kind == ObservationKind::Certain) {
      if (fields.size() == 4 && !fields[2].empty())
        throw ParseError(line_no, "certain rows take a single value");
      d.x.push_back(*x);
      d.y.push_back(UncertainObservation::certain(*p1));
      continue;
    }
    if (fields.size() != 4) throw ParseError(line_no, "uniform/gaussian rows need two parameters");
    const auto p2 = io::parse_double(fields[2]);
    if (!p2) throw ParseError(line_no, "non-numeric second parameter");
    d.x.push_back(*x);
    try {
      d.y.push_back(kind == ObservationKind::Uniform ? UncertainObservation::uniform(*p1, *p2)
                                                     : UncertainObservation::gaussian(*p1, *p2));
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  d.validate();
  return d;
}

inline std::string to_csv(const DataSet& d) {
  std::string out = "x,p1,p2,kind\n";
  for (std::size_t j = 0; j < d.size(); ++j) {
    const auto& o = d.y[j];
    out += io::format_double(d.x[j]);
    out += ',';
    switch (o.kind()) {
      case ObservationKind::Certain:
        out += io::format_double(o.value()) + ",,certain";
        break;
      case ObservationKind::Uniform:
        out += io::format_double(o.low()) + ',' + io::format_double(o.high()) + ",uniform";
        break;
      case ObservationKind::Gaussian:
        out += io::format_double(o.mean()) + ',' + io::format_double(o.sigma()) + ",gaussian";
        break;
    }
    out += '\n';
  }
  return out;
}

inline nlohmann::json observation_to_json(double x, const UncertainObservation& o) {
  nlohmann::json row{{"x", x}, {"kind", std::string(to_string(o.kind()))}};
  switch (o.kind()) {
    case ObservationKind::Certain: row["value"] = o.value(); break;
    case ObservationKind::Uniform:
      row["low"] = o.low();
      row["high"] = o.high();
      break;
    case ObservationKind::Gaussian:
      row["mean"] = o.mean();
      row["sigma"] = o.sigma();
      break;
  }
  return row;
}

inline nlohmann::json to_json(const DataSet& d) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t j = 0; j < d.size(); ++j) rows.push_back(observation_to_json(d.x[j], d.y[j]));
  return {{"label", d.label}, {"rows", rows}};
}

// Accepts either {"label": ..., "rows": [...]} or a bare array of rows.
inline DataSet dataset_from_json(const nlohmann::json& j, std::string default_label = "json") {
  const nlohmann::json* rows = &j;
  DataSet d;
  d.label = std::move(default_label);
  if (j.is_object()) {
    for (const auto& [key, _] : j.items())
      if (key != "label" && key != "rows") throw ConfigError("unknown dataset field '" + key + "'");
    if (!j.contains("rows")) throw ConfigError("dataset object needs a 'rows' array");
    if (j.contains("label")) d.label = j.at("label").get<std::string>();
    rows = &j.at("rows");
  }
  if (!rows->is_array()) throw ConfigError("dataset rows must be an array");
  std::size_t idx = 0;
  for (const auto& r : *rows) {
    ++idx;
    auto num = [&](const char* key) -> double {
      if (!r.contains(key) || !r.at(key).is_number())
        throw ParseError(idx, std::string("missing numeric field '") + key + "'");
      return r.at(key).get<double>();
    };
    if (!r.is_object() || !r.contains("kind") || !r.at("kind").is_string())
      throw ParseError(idx, "row needs a string 'kind'");
    const auto kind_text = r.at("kind").get<std::string>();
    ObservationKind kind;
    try {
      kind = observation_kind_from_string(kind_text);
    } catch (const ValidationError&) {
      throw ParseError(idx, "unknown kind '" + kind_text + "'");
    }
    const char* allowed[3] = {"value", nullptr, nullptr};
    if (kind == ObservationKind::Uniform) allowed[0] = "low", allowed[1] = "high";
    if (kind == ObservationKind::Gaussian) allowed[0] = "mean", allowed[1] = "sigma";
    for (const auto& [key, _] : r.items()) {
      if (key == "x" || key == "kind") continue;
      if ((allowed[0] && key == allowed[0]) || (allowed[1] && key == allowed[1])) continue;
      throw ParseError(idx, "unexpected field '" + key + "' for kind " + kind_text);
    }
    const double x = num("x");
    d.x.push_back(x);
    switch (kind) {
      case ObservationKind::Certain: d.y.push_back(UncertainObservation::certain(num("value"))); break;
      case ObservationKind::Uniform:
        d.y.push_back(UncertainObservation::uniform(num("low"), num("high")));
        break;
      case ObservationKind::Gaussian:
        d.y.push_back(UncertainObservation::gaussian(num("mean"), num("sigma")));
        break;
    }
  }
  d.validate();
  return d;
}

inline DataSet load_dataset(const std::string& path, DataFormat format) {
  const std::string text = io::read_file(path);
  if (format == DataFormat::Csv) return parse_csv_dataset(text, path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, std::string("invalid JSON: ") + e.what());
  }
  return dataset_from_json(j, path);
}

inline DataFormat format_from_path(std::string_view path) {
  return path.ends_with(".json") ? DataFormat::Json : DataFormat::Csv;
}

inline void save_dataset(const DataSet& d, const std::string& path, DataFormat format) {
  io::write_file(path, format == DataFormat::Csv ? to_csv(d) : to_json(d).dump(2) + "\n");
}

// Identity of the numeric content (label excluded).
inline std::string dataset_hash(const DataSet& d) { return io::fnv1a_hex(to_csv(d)); }

}  // namespace bvm
