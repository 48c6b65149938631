// rdiff: run experiments, certify gradients, emit topologies.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "rdiff/errors.hpp"
#include "rdiff/kernels/huber.hpp"
#include "rdiff/network.hpp"
#include "rdiff/runner/certificate.hpp"
#include "rdiff/runner/config.hpp"
#include "rdiff/runner/experiment.hpp"

namespace {

using namespace rdiff;
using namespace rdiff::runner;

struct RunFlags {
  std::string config_path;
  std::string preset_name;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> mc_runs;
  std::optional<double> mu;
  std::optional<double> alpha;
  std::string graph;
  bool paper = false;
};

int cmd_run(const RunFlags& f) {
  ExperimentConfig config = f.preset_name.empty() ? ExperimentConfig{} : preset(f.preset_name);
  if (!f.config_path.empty()) config = load_config_file(f.config_path, config);
  nlohmann::json overrides = nlohmann::json::object();
  if (f.paper) overrides["mc_runs"] = 100;
  if (f.seed) overrides["seed"] = *f.seed;
  if (!f.out.empty()) overrides["output_path"] = f.out;
  if (f.mc_runs) overrides["mc_runs"] = *f.mc_runs;
  if (f.mu) overrides["mu"] = *f.mu;
  if (f.alpha) overrides["alpha"] = *f.alpha;
  if (!f.graph.empty()) overrides["graph"] = f.graph;
  apply_json(config, overrides);
  validate(config);

  spdlog::info("{}: K={} T={} mc_runs={} mu={} alpha={} graph={} (kernel: {}, workers: {})",
               to_string(config.experiment), config.K, config.T, config.mc_runs, config.mu, config.alpha,
               to_string(config.graph), kernels::to_string(kernels::active_isa()),
               std::min(worker_count(), config.mc_runs));
  const ExperimentResult result = run_experiment(config);
  write_outputs(result, config.output_path);
  spdlog::info("wrote {} ({} of {} runs succeeded)", config.output_path.string(),
               config.mc_runs - [&] {
                 std::set<std::size_t> failed;
                 for (const auto& fl : result.failures) failed.insert(fl.run);
                 return failed.size();
               }(),
               config.mc_runs);
  return result.failures.empty() ? 0 : 1;
}

int cmd_gradcheck(const CertificateOptions& options, double tolerance) {
  bool ok = true;
  for (const CertificateCase& c : gradient_certificate(options)) {
    const bool pass = c.max_rel_error <= tolerance;
    ok = ok && pass;
    std::printf("%-28s points=%zu max_rel_error=%.3e %s\n", c.name.c_str(), c.points, c.max_rel_error,
                pass ? "PASS" : "FAIL");
  }
  return ok ? 0 : 1;
}

int cmd_topology(std::size_t agents, double edge_prob, const std::string& rule, std::uint64_t seed,
                 const std::string& out) {
  ExperimentConfig config;
  config.K = agents;
  config.edge_prob = edge_prob;
  apply_json(config, {{"graph", rule}});
  const NetworkTopology topology = make_topology(config, seed);
  const std::string text = to_json(topology).dump(2) + "\n";
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    std::ofstream file(out);
    if (!(file << text)) throw std::runtime_error("cannot write " + out);
  }
  spdlog::info("{} graph: {} agents, {} edges, lambda = {:.6f}", rule, agents, topology.graph.edges().size(),
               topology.lambda);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Riemannian diffusion adaptation simulator"};
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "Monte Carlo experiment: diffusion vs non-cooperative");
  run->add_option("--config", run_flags.config_path, "flat JSON config file")->check(CLI::ExistingFile);
  run->add_option("--preset", run_flags.preset_name, "named parameter set")
      ->check(CLI::IsMember(preset_names()));
  run->add_option("--seed", run_flags.seed, "master seed");
  run->add_option("--out", run_flags.out, "output directory");
  run->add_option("--mc-runs", run_flags.mc_runs, "Monte Carlo repetitions");
  run->add_option("--mu", run_flags.mu, "adaptation step size");
  run->add_option("--alpha", run_flags.alpha, "combination step size");
  run->add_option("--graph", run_flags.graph, "weight rule")->check(CLI::IsMember({"metropolis", "uniform"}));
  run->add_flag("--paper", run_flags.paper, "100 Monte Carlo runs instead of 20");

  CertificateOptions cert;
  double tolerance = 1e-5;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient certificate");
  gradcheck->add_option("--seed", cert.seed, "seed");
  gradcheck->add_option("--points", cert.points, "random points per case");
  gradcheck->add_option("--directions", cert.directions, "random directions per point");
  gradcheck->add_option("--step", cert.h, "geodesic finite-difference step h");
  gradcheck->add_option("--tol", tolerance, "maximum relative error");

  std::size_t agents = 20;
  double edge_prob = 0.3;
  std::string rule = "metropolis";
  std::uint64_t topo_seed = 1;
  std::string topo_out;
  auto* topology = app.add_subcommand("topology", "random connected graph with combination weights");
  topology->add_option("--agents,-K", agents, "number of agents");
  topology->add_option("--edge-prob", edge_prob, "Erdos-Renyi edge probability");
  topology->add_option("--graph", rule, "weight rule")->check(CLI::IsMember({"metropolis", "uniform"}));
  topology->add_option("--seed", topo_seed, "seed");
  topology->add_option("--out", topo_out, "output file (stdout if omitted)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(run_flags);
    if (*gradcheck) return cmd_gradcheck(cert, tolerance);
    if (*topology) return cmd_topology(agents, edge_prob, rule, topo_seed, topo_out);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 0;
}
