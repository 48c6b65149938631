#include "rdiff/runner/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <thread>

#include <spdlog/spdlog.h>

#include "rdiff/diffusion.hpp"
#include "rdiff/errors.hpp"
#include "rdiff/quadratic.hpp"
#include "rdiff/random.hpp"
#include "rdiff/rpca.hpp"

namespace rdiff::runner {
namespace {

constexpr std::uint64_t kRunStream = 0x52554e;  // "RUN"

std::uint64_t tag(StreamTag t) { return static_cast<std::uint64_t>(t); }

MetricHooks hooks_for(const ExperimentConfig& config, const RunSetup& setup,
                      const NetworkTopology& topology) {
  MetricHooks hooks;
  hooks.msd = config.metrics.contains("msd");
  hooks.frechet_variance = config.metrics.contains("frechet_variance");
  hooks.consensus_bias = config.metrics.contains("consensus_bias");
  hooks.cost = config.metrics.contains("cost");
  hooks.grad_norm_sq = config.metrics.contains("grad_norm_sq");
  hooks.reference = setup.reference;
  hooks.topology = &topology;
  return hooks;
}

struct RunOutcome {
  std::vector<RunTrace> traces;
  std::vector<RunFailure> failures;
};

RunOutcome simulate(const ExperimentConfig& config, std::size_t run, const NetworkTopology& shared,
                    const Matrix* mnist) {
  RunOutcome out;
  const std::uint64_t rs = run_seed(config.seed, run);
  std::optional<NetworkTopology> own;
  RunSetup setup;
  try {
    if (config.redraw_topology) own = make_topology(config, rs);
    setup = prepare_run(config, run, mnist);
  } catch (const ConvergenceError& e) {
    out.failures.push_back({run, "reference", std::nullopt, e.what()});
    return out;
  } catch (const std::exception& e) {
    out.failures.push_back({run, "setup", std::nullopt, e.what()});
    return out;
  }
  const NetworkTopology& topology = own ? *own : shared;
  MetricHooks hooks = hooks_for(config, setup, topology);

  // Both algorithms see the same data, initialization and gradient noise.
  for (const char* algorithm : {kDiffusion, kNoncooperative}) {
    try {
      MetricTrace trace;
      if (std::string_view(algorithm) == kDiffusion) {
        MetricHooks h = hooks;
        if (config.experiment != ExperimentKind::kEuclidQuadratic) h.diameter_bound = config.diameter;
        trace = run_diffusion(*setup.oracle, topology, setup.init, {config.mu, config.alpha}, config.T,
                              rs, h);
      } else {
        trace = run_noncooperative(*setup.oracle, setup.init, config.mu, config.T, rs, hooks);
      }
      out.traces.push_back({run, algorithm, std::move(trace)});
    } catch (const AgentStepError& e) {
      out.failures.push_back({run, algorithm, e.round(), e.what()});
    } catch (const std::exception& e) {
      out.failures.push_back({run, algorithm, std::nullopt, e.what()});
    }
  }
  // A run counts only if both algorithms finished, so pairs stay comparable.
  if (!out.failures.empty()) out.traces.clear();
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

std::uint64_t run_seed(std::uint64_t seed, std::size_t run) {
  return keyed_rng({seed, kRunStream, run})();
}

NetworkTopology make_topology(const ExperimentConfig& config, std::uint64_t draw) {
  const AgentGraph graph =
      random_connected_graph(config.K, config.edge_prob, keyed_rng({draw, tag(StreamTag::kTopology)})());
  if (config.graph == WeightRule::kMetropolis) return metropolis_weights(graph);
  return sinkhorn_uniform_weights(graph, keyed_rng({draw, tag(StreamTag::kTopology), 1})());
}

RunSetup prepare_run(const ExperimentConfig& config, std::size_t run, const Matrix* mnist) {
  const std::uint64_t rs = run_seed(config.seed, run);
  RunSetup setup;
  switch (config.experiment) {
    case ExperimentKind::kSyntheticRpca:
    case ExperimentKind::kAgreementOnly: {
      rpca::SyntheticData data = rpca::synth_data(static_cast<Eigen::Index>(config.n), config.K, config.T,
                                                  config.spectrum_lambda, rs);
      if (config.sample_scale != 1.0) data.dataset.samples *= config.sample_scale;
      setup.oracle = std::make_unique<rpca::RobustPcaOracle>(
          rpca::inject_outliers(std::move(data.dataset), config.outliers, rs),
          static_cast<Eigen::Index>(config.p), config.delta);
      break;
    }
    case ExperimentKind::kMnistRpca: {
      if (mnist == nullptr) throw ContractViolation("prepare_run: MNIST data not loaded");
      rpca::AgentDataset ds = rpca::partition_mnist(*mnist, config.K, rs);
      if (config.outliers > 0) ds = rpca::inject_outliers(std::move(ds), config.outliers, rs);
      setup.oracle = std::make_unique<rpca::RobustPcaOracle>(std::move(ds), static_cast<Eigen::Index>(config.p),
                                                             config.delta);
      break;
    }
    case ExperimentKind::kEuclidQuadratic: {
      QuadraticTestbedConfig qc;
      qc.agents = config.K;
      qc.dim = static_cast<Eigen::Index>(config.n);
      qc.noise_sigma = config.noise_sigma;
      setup.oracle = std::make_unique<QuadraticOracle>(make_quadratic_testbed(qc, rs));
      break;
    }
  }

  const Manifold& manifold = setup.oracle->manifold();
  std::mt19937_64 init_rng = keyed_rng({rs, tag(StreamTag::kInit)});
  const ManifoldPoint shared = manifold.random_point(init_rng);
  for (std::size_t k = 0; k < config.K; ++k) {
    if (config.init_mode == InitMode::kShared) {
      setup.init.push_back(shared);
    } else {
      std::mt19937_64 rng = keyed_rng({rs, tag(StreamTag::kInit), k + 1});
      setup.init.push_back(manifold.random_point(rng));
    }
  }

  if (config.experiment == ExperimentKind::kEuclidQuadratic) {
    setup.reference = static_cast<const QuadraticOracle&>(*setup.oracle).pooled_minimizer();
  } else if (config.experiment != ExperimentKind::kAgreementOnly && config.metrics.contains("msd")) {
    setup.reference = solve_reference(*setup.oracle, setup.init.front()).point;
  }
  return setup;
}

std::size_t worker_count() {
  if (const char* env = std::getenv("RD_THREADS")) {
    std::size_t n = 0;
    const char* end = env + std::char_traits<char>::length(env);
    const auto res = std::from_chars(env, end, n);
    if (res.ec == std::errc() && res.ptr == end && n > 0) return n;
    spdlog::warn("ignoring RD_THREADS={} (expected a positive integer)", env);
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  validate(config);
  ExperimentResult result;
  result.config = config;
  result.topology = make_topology(config, config.redraw_topology ? run_seed(config.seed, 0) : config.seed);

  if (config.experiment != ExperimentKind::kEuclidQuadratic &&
      !alpha_admissible(GrassmannManifold(static_cast<Eigen::Index>(config.n), static_cast<Eigen::Index>(config.p)),
                        config.alpha, config.diameter)) {
    spdlog::warn("alpha = {} lies outside (0, zeta2/zeta1) for diameter {}", config.alpha, config.diameter);
  }

  std::optional<Matrix> mnist;
  if (config.experiment == ExperimentKind::kMnistRpca) {
    std::optional<std::filesystem::path> labels;
    if (!config.mnist_labels.empty()) labels = config.mnist_labels;
    mnist = rpca::load_mnist(config.mnist_images, labels);
  }

  std::vector<RunOutcome> outcomes(config.mc_runs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < config.mc_runs; r = next++) {
      outcomes[r] = simulate(config, r, result.topology, mnist ? &*mnist : nullptr);
    }
  };
  const std::size_t workers = std::min(worker_count(), config.mc_runs);
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < workers; ++i) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  // Merge in run order, independent of completion order.
  for (RunOutcome& o : outcomes) {
    for (RunTrace& t : o.traces) result.traces.push_back(std::move(t));
    for (RunFailure& f : o.failures) {
      spdlog::error("run {} ({}) failed: {}", f.run, f.stage, f.message);
      result.failures.push_back(std::move(f));
    }
  }
  return result;
}

void write_outputs(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  if (!result.traces.empty()) {
    write_trace_csv(result.traces, dir / "trace.csv");
    write_summary_csv(summarize(result.traces), dir / "summary.csv");
  }
  write_text(dir / "topology.json", to_json(result.topology).dump(2) + "\n");
  write_text(dir / "config.json", to_json(result.config).dump(2) + "\n");
  std::string log;
  for (const RunFailure& f : result.failures) {
    log += "run=" + std::to_string(f.run) + " stage=" + f.stage;
    log += " round=" + (f.round ? std::to_string(*f.round) : std::string("-"));
    log += " error=" + f.message + "\n";
  }
  write_text(dir / "failures.log", log);
}

}  // namespace rdiff::runner
