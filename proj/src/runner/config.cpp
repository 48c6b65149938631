#include "rdiff/runner/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>

#include "rdiff/errors.hpp"

namespace rdiff::runner {
namespace {

using nlohmann::json;

template <typename E>
E parse_enum(const std::string& key, const json& value, const std::map<std::string, E>& names) {
  if (!value.is_string()) throw ConfigError(key, "expected a string");
  const auto it = names.find(value.get<std::string>());
  if (it == names.end()) {
    std::string allowed;
    for (const auto& [name, _] : names) allowed += (allowed.empty() ? "" : ", ") + name;
    throw ConfigError(key, "unknown value '" + value.get<std::string>() + "' (expected one of " + allowed + ")");
  }
  return it->second;
}

const std::map<std::string, ExperimentKind> kKinds{
    {"synthetic_rpca", ExperimentKind::kSyntheticRpca},
    {"mnist_rpca", ExperimentKind::kMnistRpca},
    {"euclid_quadratic", ExperimentKind::kEuclidQuadratic},
    {"agreement_only", ExperimentKind::kAgreementOnly},
};
const std::map<std::string, WeightRule> kRules{
    {"metropolis", WeightRule::kMetropolis},
    {"uniform", WeightRule::kUniform},
};
const std::map<std::string, InitMode> kInits{
    {"shared", InitMode::kShared},
    {"per_agent", InitMode::kPerAgent},
};

std::size_t as_count(const std::string& key, const json& v) {
  if (!v.is_number_integer()) throw ConfigError(key, "expected an integer");
  if (v.is_number_unsigned()) return v.get<std::size_t>();
  const auto i = v.get<std::int64_t>();
  if (i < 0) throw ConfigError(key, "must be non-negative");
  return static_cast<std::size_t>(i);
}

double as_real(const std::string& key, const json& v) {
  if (!v.is_number()) throw ConfigError(key, "expected a number");
  return v.get<double>();
}

bool as_bool(const std::string& key, const json& v) {
  if (!v.is_boolean()) throw ConfigError(key, "expected true or false");
  return v.get<bool>();
}

std::string as_string(const std::string& key, const json& v) {
  if (!v.is_string()) throw ConfigError(key, "expected a string");
  return v.get<std::string>();
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const json&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table{
      {"experiment", [](auto& c, auto& k, auto& v) { c.experiment = parse_enum(k, v, kKinds); }},
      {"K", [](auto& c, auto& k, auto& v) { c.K = as_count(k, v); }},
      {"n", [](auto& c, auto& k, auto& v) { c.n = as_count(k, v); }},
      {"p", [](auto& c, auto& k, auto& v) { c.p = as_count(k, v); }},
      {"T", [](auto& c, auto& k, auto& v) { c.T = as_count(k, v); }},
      {"mc_runs", [](auto& c, auto& k, auto& v) { c.mc_runs = as_count(k, v); }},
      {"mu", [](auto& c, auto& k, auto& v) { c.mu = as_real(k, v); }},
      {"alpha", [](auto& c, auto& k, auto& v) { c.alpha = as_real(k, v); }},
      {"delta", [](auto& c, auto& k, auto& v) { c.delta = as_real(k, v); }},
      {"graph", [](auto& c, auto& k, auto& v) { c.graph = parse_enum(k, v, kRules); }},
      {"edge_prob", [](auto& c, auto& k, auto& v) { c.edge_prob = as_real(k, v); }},
      {"seed", [](auto& c, auto& k, auto& v) { c.seed = as_count(k, v); }},
      {"init_mode", [](auto& c, auto& k, auto& v) { c.init_mode = parse_enum(k, v, kInits); }},
      {"metrics",
       [](auto& c, auto& k, auto& v) {
         if (!v.is_array()) throw ConfigError(k, "expected an array of metric names");
         std::set<std::string> names;
         for (const auto& item : v) {
           const std::string name = as_string(k, item);
           const auto& known = metric_names();
           if (std::find(known.begin(), known.end(), name) == known.end()) {
             throw ConfigError(k, "unknown metric '" + name + "'");
           }
           names.insert(name);
         }
         c.metrics = std::move(names);
       }},
      {"output_path", [](auto& c, auto& k, auto& v) { c.output_path = as_string(k, v); }},
      {"outliers", [](auto& c, auto& k, auto& v) { c.outliers = as_count(k, v); }},
      {"spectrum_lambda", [](auto& c, auto& k, auto& v) { c.spectrum_lambda = as_real(k, v); }},
      {"sample_scale", [](auto& c, auto& k, auto& v) { c.sample_scale = as_real(k, v); }},
      {"redraw_topology", [](auto& c, auto& k, auto& v) { c.redraw_topology = as_bool(k, v); }},
      {"noise_sigma", [](auto& c, auto& k, auto& v) { c.noise_sigma = as_real(k, v); }},
      {"diameter", [](auto& c, auto& k, auto& v) { c.diameter = as_real(k, v); }},
      {"mnist_images", [](auto& c, auto& k, auto& v) { c.mnist_images = as_string(k, v); }},
      {"mnist_labels", [](auto& c, auto& k, auto& v) { c.mnist_labels = as_string(k, v); }},
  };
  return table;
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key, what);
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  for (const auto& [name, k] : kKinds) if (k == kind) return name;
  return "unknown";
}
std::string to_string(WeightRule rule) {
  for (const auto& [name, r] : kRules) if (r == rule) return name;
  return "unknown";
}
std::string to_string(InitMode mode) {
  for (const auto& [name, m] : kInits) if (m == mode) return name;
  return "unknown";
}

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names{"msd", "frechet_variance", "consensus_bias", "cost",
                                              "grad_norm_sq"};
  return names;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"synthetic-metropolis", "synthetic-uniform", "mnist-metropolis",
                                              "mnist-uniform",        "euclid-quadratic",  "agreement"};
  return names;
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;  // defaults are the synthetic Metropolis setup
  if (name == "synthetic-metropolis") return c;
  if (name == "synthetic-uniform") {
    c.graph = WeightRule::kUniform;
    c.mu = 0.13;
    return c;
  }
  if (name == "mnist-metropolis" || name == "mnist-uniform") {
    c.experiment = ExperimentKind::kMnistRpca;
    c.n = 784;
    c.T = 3000;
    c.mu = 0.006;
    c.alpha = name == "mnist-metropolis" ? 0.005 : 0.001;
    c.graph = name == "mnist-metropolis" ? WeightRule::kMetropolis : WeightRule::kUniform;
    c.outliers = 0;
    return c;
  }
  if (name == "euclid-quadratic") {
    c.experiment = ExperimentKind::kEuclidQuadratic;
    c.K = 10;
    c.n = 2;
    c.p = 1;
    c.T = 2000;
    c.mu = 0.02;
    c.alpha = 0.5;
    c.outliers = 0;
    c.metrics = {"msd", "frechet_variance", "cost"};
    return c;
  }
  if (name == "agreement") {
    c.experiment = ExperimentKind::kAgreementOnly;
    c.T = 500;
    c.metrics = {"frechet_variance", "consensus_bias"};
    return c;
  }
  throw ConfigError("preset", "unknown preset '" + name + "'");
}

void apply_json(ExperimentConfig& config, const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("<root>", "config must be a flat JSON object");
  if (doc.contains("preset")) config = preset(as_string("preset", doc.at("preset")));
  for (const auto& [key, value] : doc.items()) {
    if (key == "preset") continue;
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(key, "unknown key");
    it->second(config, key, value);
  }
}

ExperimentConfig load_config_file(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), e.byte);
  }
  apply_json(base, doc);
  return base;
}

void validate(const ExperimentConfig& c) {
  require(c.K >= 2, "K", "need at least two agents");
  require(c.n >= 1, "n", "must be positive");
  require(c.T >= 1, "T", "must be positive");
  require(c.mc_runs >= 1, "mc_runs", "must be at least 1");
  require(c.mu > 0.0, "mu", "must be positive");
  require(c.alpha >= 0.0, "alpha", "must be non-negative");
  require(c.delta > 0.0, "delta", "must be positive");
  require(c.edge_prob > 0.0 && c.edge_prob <= 1.0, "edge_prob", "must lie in (0, 1]");
  require(!c.metrics.empty(), "metrics", "must name at least one metric");
  require(c.diameter > 0.0, "diameter", "must be positive");
  require(c.noise_sigma >= 0.0, "noise_sigma", "must be non-negative");
  require(c.sample_scale > 0.0, "sample_scale", "must be positive");
  require(!c.output_path.empty(), "output_path", "must not be empty");
  const bool grassmann = c.experiment != ExperimentKind::kEuclidQuadratic;
  if (grassmann) {
    require(c.p >= 1 && c.p < c.n, "p", "need 1 <= p < n");
    require(c.spectrum_lambda > 0.0 && c.spectrum_lambda < 1.0, "spectrum_lambda", "must lie in (0, 1)");
  }
  if (c.experiment == ExperimentKind::kSyntheticRpca || c.experiment == ExperimentKind::kAgreementOnly) {
    require(c.T * c.K >= c.n, "T", "T*K must be at least n");
    require(c.outliers <= c.T, "outliers", "cannot exceed T");
  }
  if (c.experiment == ExperimentKind::kMnistRpca) {
    require(!c.mnist_images.empty(), "mnist_images", "path to the IDX image file is required");
    require(c.n == 784, "n", "MNIST images have n = 784 pixels");
  }
  if (c.experiment == ExperimentKind::kAgreementOnly) {
    require(!c.metrics.contains("msd"), "metrics", "agreement_only has no reference point, drop msd");
  }
}

nlohmann::json to_json(const ExperimentConfig& c) {
  return {
      {"experiment", to_string(c.experiment)},
      {"K", c.K},
      {"n", c.n},
      {"p", c.p},
      {"T", c.T},
      {"mc_runs", c.mc_runs},
      {"mu", c.mu},
      {"alpha", c.alpha},
      {"delta", c.delta},
      {"graph", to_string(c.graph)},
      {"edge_prob", c.edge_prob},
      {"seed", c.seed},
      {"init_mode", to_string(c.init_mode)},
      {"metrics", std::vector<std::string>(c.metrics.begin(), c.metrics.end())},
      {"output_path", c.output_path.string()},
      {"outliers", c.outliers},
      {"spectrum_lambda", c.spectrum_lambda},
      {"sample_scale", c.sample_scale},
      {"redraw_topology", c.redraw_topology},
      {"noise_sigma", c.noise_sigma},
      {"diameter", c.diameter},
      {"mnist_images", c.mnist_images},
      {"mnist_labels", c.mnist_labels},
  };
}

}  // namespace rdiff::runner
