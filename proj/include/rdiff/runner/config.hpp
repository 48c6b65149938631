#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace rdiff::runner {

enum class ExperimentKind { kSyntheticRpca, kMnistRpca, kEuclidQuadratic, kAgreementOnly };
enum class WeightRule { kMetropolis, kUniform };
enum class InitMode { kShared, kPerAgent };

std::string to_string(ExperimentKind kind);
std::string to_string(WeightRule rule);
std::string to_string(InitMode mode);

/// Names accepted in ExperimentConfig::metrics.
const std::vector<std::string>& metric_names();

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kSyntheticRpca;
  std::size_t K = 20;
  std::size_t n = 10;
  std::size_t p = 5;
  std::size_t T = 1500;
  std::size_t mc_runs = 20;
  double mu = 0.12;
  double alpha = 0.4;
  double delta = 0.1;
  WeightRule graph = WeightRule::kMetropolis;
  double edge_prob = 0.3;
  std::uint64_t seed = 1;
  InitMode init_mode = InitMode::kShared;
  std::set<std::string> metrics{"msd", "frechet_variance"};
  std::filesystem::path output_path = "out";

  std::size_t outliers = 100;
  double spectrum_lambda = 0.8;
  // Multiplies the synthetic inlier samples before outliers are injected.
  // 1 keeps the generated matrix's spectrum as is.
  double sample_scale = 1.0;
  bool redraw_topology = false;
  double noise_sigma = 0.1;  // euclid_quadratic only
  double diameter = 0.5;     // region size assumed by the step-size diagnostic
  std::string mnist_images;
  std::string mnist_labels;
};

/// Named parameter sets; throws ConfigError for an unknown name.
ExperimentConfig preset(const std::string& name);
const std::vector<std::string>& preset_names();

/// Applies the keys of a flat JSON object. A "preset" key, if present, is
/// applied first. Unknown keys and type mismatches throw ConfigError.
void apply_json(ExperimentConfig& config, const nlohmann::json& doc);

/// Reads a JSON config file on top of `base`.
ExperimentConfig load_config_file(const std::filesystem::path& path, ExperimentConfig base = {});

/// Throws ConfigError naming the first offending key.
void validate(const ExperimentConfig& config);

nlohmann::json to_json(const ExperimentConfig& config);

}  // namespace rdiff::runner
