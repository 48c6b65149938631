#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rdiff/cost_oracle.hpp"
#include "rdiff/network.hpp"
#include "rdiff/runner/config.hpp"
#include "rdiff/runner/trace_io.hpp"

namespace rdiff::runner {

inline constexpr const char* kDiffusion = "diffusion";
inline constexpr const char* kNoncooperative = "noncooperative";

struct RunFailure {
  std::size_t run = 0;
  std::string stage;  // "setup", "reference", or an algorithm name
  std::optional<std::size_t> round;
  std::string message;
};

struct ExperimentResult {
  ExperimentConfig config;
  NetworkTopology topology;       // the experiment-wide graph (run 0's when redrawn)
  std::vector<RunTrace> traces;   // successful runs only, ordered by (run, algorithm)
  std::vector<RunFailure> failures;
};

/// Seed that keys every random stream of Monte Carlo run `run`.
std::uint64_t run_seed(std::uint64_t seed, std::size_t run);

/// Graph and weights for the configured rule. `draw` selects the stream.
NetworkTopology make_topology(const ExperimentConfig& config, std::uint64_t draw);

/// Everything one Monte Carlo run needs before the algorithms start.
struct RunSetup {
  std::unique_ptr<CostOracle> oracle;
  std::vector<ManifoldPoint> init;
  std::optional<ManifoldPoint> reference;
};

/// Builds the data, oracle, initialization and reference point of a run.
/// `mnist` is the loaded image matrix for mnist_rpca and ignored otherwise.
RunSetup prepare_run(const ExperimentConfig& config, std::size_t run, const Matrix* mnist);

/// Runs all Monte Carlo repetitions on min(RD_THREADS, mc_runs) workers.
/// Output does not depend on the worker count.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// trace.csv, summary.csv, topology.json, config.json and failures.log under `dir`.
void write_outputs(const ExperimentResult& result, const std::filesystem::path& dir);

/// Worker count: RD_THREADS when set to a positive integer, else the
/// hardware concurrency (at least 1).
std::size_t worker_count();

}  // namespace rdiff::runner
