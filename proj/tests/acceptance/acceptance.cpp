// Runs the acceptance criteria, one PASS/FAIL line each. Exit code is the
// number of failed criteria (capped at 1 for ctest).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sys/wait.h>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "rdiff/diffusion.hpp"
#include "rdiff/gradient_check.hpp"
#include "rdiff/grassmann.hpp"
#include "rdiff/metrics.hpp"
#include "rdiff/network.hpp"
#include "rdiff/quadratic.hpp"
#include "rdiff/random.hpp"
#include "rdiff/rpca.hpp"
#include "rdiff/runner/certificate.hpp"
#include "rdiff/runner/config.hpp"
#include "rdiff/runner/experiment.hpp"
#include "rdiff/runner/trace_io.hpp"

namespace fs = std::filesystem;
using namespace rdiff;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Matrix random_orthogonal(Eigen::Index p, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(p, p, rng));
  return qr.householderQ() * Matrix::Identity(p, p);
}

// Horizontal tangent at u with the given spectral norm.
TangentVector tangent_with_spectral_norm(const GrassmannManifold& g, const ManifoldPoint& u, double s,
                                         std::mt19937_64& rng) {
  Matrix xi = grassmann::project(u.coords(), gaussian_matrix(g.n(), g.p(), rng));
  xi *= s / Eigen::JacobiSVD<Matrix>(xi).singularValues()(0);
  return TangentVector(u, xi);
}

// ---------------------------------------------------------------------------

Verdict geometry_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  GrassmannManifold g(10, 5);
  std::mt19937_64 rng(20261018);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double roundtrip = 0, consistency = 0, invariance = 0, isometry = 0;
  for (int i = 0; i < 1000; ++i) {
    const ManifoldPoint u1 = g.random_point(rng);
    // Pair within distance 1 for the roundtrip.
    Matrix xi = tangent_with_spectral_norm(g, u1, 1.0, rng).components();
    xi *= unit(rng) / xi.norm();
    const ManifoldPoint near = g.exp(u1, TangentVector(u1, xi));
    roundtrip = std::max(roundtrip, g.dist(g.exp(u1, g.log(u1, near)), near));

    // Pair with every principal angle below pi/2 - 0.05.
    const ManifoldPoint u2 =
        g.exp(u1, tangent_with_spectral_norm(g, u1, unit(rng) * (std::numbers::pi / 2 - 0.05), rng));
    const TangentVector lg = g.log(u1, u2);
    const double d = g.dist(u1, u2);
    consistency = std::max(consistency, std::abs(d - lg.norm()));

    const ManifoldPoint u2o(u2.coords() * random_orthogonal(5, rng));
    invariance = std::max({invariance, std::abs(g.dist(u1, u2o) - d), std::abs(g.log(u1, u2o).norm() - lg.norm())});

    const TangentVector v = tangent_with_spectral_norm(g, u1, 0.1 + unit(rng), rng);
    isometry = std::max(isometry, std::abs(g.transport(u1, u2o, v).norm() - v.norm()));
  }
  const double secs = seconds_since(t0);
  const bool ok = roundtrip <= 1e-8 && consistency <= 1e-8 && invariance <= 1e-10 && isometry <= 1e-10 && secs < 10;
  return {ok, "roundtrip " + fmt(roundtrip) + " (<=1e-8), |dist-|log|| " + fmt(consistency) +
                  " (<=1e-8), invariance " + fmt(invariance) + " (<=1e-10), isometry " + fmt(isometry) +
                  " (<=1e-10), " + fmt(secs) + " s (<10)"};
}

Verdict gradient_certificate() {
  const auto t0 = std::chrono::steady_clock::now();
  runner::CertificateOptions opts;  // 10 points, 20 directions, h = 1e-6, kink margin 1e-4
  double worst = 0;
  std::string cases;
  for (const auto& c : runner::gradient_certificate(opts)) {
    if (c.name.rfind("robust_pca", 0) != 0) continue;
    worst = std::max(worst, c.max_rel_error);
    cases += c.name + " " + fmt(c.max_rel_error) + ", ";
  }
  // Same check on data drawn exactly as the synthetic preset draws it.
  const runner::ExperimentConfig cfg = runner::preset("synthetic-metropolis");
  const runner::RunSetup setup = runner::prepare_run(cfg, 0, nullptr);
  const auto& oracle = dynamic_cast<const rpca::RobustPcaOracle&>(*setup.oracle);
  std::mt19937_64 rng(7);
  double preset_worst = 0;
  for (int pts = 0; pts < 10;) {
    const ManifoldPoint x = oracle.manifold().random_point(rng);
    if (oracle.kink_distance(x) < 1e-4) continue;
    preset_worst = std::max(preset_worst, check_gradient(oracle, x, 20, 1e-6, static_cast<std::uint64_t>(pts)));
    ++pts;
  }
  worst = std::max(worst, preset_worst);
  const double secs = seconds_since(t0);
  return {worst <= 1e-5 && secs < 10, cases + "preset data " + fmt(preset_worst) + " (<=1e-5), " + fmt(secs) + " s (<10)"};
}

Verdict euclidean_equivalence() {
  QuadraticTestbedConfig qc;
  qc.agents = 5;
  const QuadraticOracle o = make_quadratic_testbed(qc, 3);
  const NetworkTopology topo = metropolis_weights(random_connected_graph(5, 0.4, 3));
  std::mt19937_64 rng(4);
  const std::vector<ManifoldPoint> init(5, o.manifold().random_point(rng));
  const StepSizes s{0.05, 0.5};
  const std::uint64_t seed = 5;

  std::vector<std::vector<Vector>> lib;
  MetricHooks hooks;
  hooks.observer = [&](std::size_t, std::span<const ManifoldPoint>, std::span<const ManifoldPoint> w) {
    std::vector<Vector> row;
    for (const auto& p : w) row.push_back(p.coords().col(0));
    lib.push_back(std::move(row));
  };
  run_diffusion(o, topo, init, s, 100, seed, hooks);

  // Flat recursion on plain vectors.
  std::vector<Vector> w(5, init[0].coords().col(0));
  double worst = 0;
  for (std::size_t t = 1; t <= 100; ++t) {
    std::vector<Vector> phi(5);
    for (std::size_t k = 0; k < 5; ++k) {
      phi[k] = w[k] - s.mu * o.stochastic_rgrad(k, t, ManifoldPoint(w[k]), seed).components().col(0);
    }
    for (std::size_t k = 0; k < 5; ++k) {
      Vector pull = Vector::Zero(phi[k].size());
      for (std::size_t l = 0; l < 5; ++l) {
        pull += topo.weights(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) * (phi[l] - phi[k]);
      }
      w[k] = phi[k] + s.alpha * pull;
      worst = std::max(worst, (lib[t - 1][k] - w[k]).cwiseAbs().maxCoeff());
    }
  }
  return {lib.size() == 100 && worst <= 1e-12, "max deviation over 100 rounds, K=5: " + fmt(worst) + " (<=1e-12)"};
}

Verdict combination_contraction() {
  runner::ExperimentConfig cfg = runner::preset("synthetic-metropolis");
  cfg.T = 500;
  const runner::RunSetup setup = runner::prepare_run(cfg, 0, nullptr);
  const NetworkTopology topo = runner::make_topology(cfg, cfg.seed);
  const Manifold& m = setup.oracle->manifold();
  std::size_t violations = 0, rounds = 0;
  double worst = -1e300;
  std::optional<ManifoldPoint> warm_phi, warm_w;
  MetricHooks hooks;
  hooks.observer = [&](std::size_t, std::span<const ManifoldPoint> phi, std::span<const ManifoldPoint> w) {
    FrechetSummary sp = frechet_summary(m, phi, {}, warm_phi ? &*warm_phi : nullptr);
    FrechetSummary sw = frechet_summary(m, w, {}, warm_w ? &*warm_w : nullptr);
    worst = std::max(worst, sw.variance - sp.variance);
    if (sw.variance > sp.variance + 1e-9) ++violations;
    ++rounds;
    warm_phi = std::move(sp.mean);
    warm_w = std::move(sw.mean);
  };
  run_diffusion(*setup.oracle, topo, setup.init, {cfg.mu, cfg.alpha}, cfg.T, runner::run_seed(cfg.seed, 0), hooks);
  return {rounds == 500 && violations == 0,
          std::to_string(violations) + " of " + std::to_string(rounds) +
              " rounds with V_F(w) > V_F(phi) + 1e-9; max V_F(w) - V_F(phi) = " + fmt(worst)};
}

// Mean over Monte Carlo runs of one recorded metric, per round.
std::vector<double> mean_curve(const runner::ExperimentConfig& cfg, const StepSizes& steps,
                               const std::function<double(const MetricRecord&)>& pick, MetricHooks hooks) {
  const NetworkTopology topo = runner::make_topology(cfg, cfg.seed);
  std::vector<double> mean(cfg.T, 0.0);
  for (std::size_t r = 0; r < cfg.mc_runs; ++r) {
    const runner::RunSetup setup = runner::prepare_run(cfg, r, nullptr);
    const MetricTrace tr = run_diffusion(*setup.oracle, topo, setup.init, steps, cfg.T, runner::run_seed(cfg.seed, r), hooks);
    for (std::size_t t = 0; t < cfg.T; ++t) mean[t] += pick(tr[t]) / static_cast<double>(cfg.mc_runs);
  }
  return mean;
}

double tail_mean(const std::vector<double>& v, double fraction) {
  const auto start = static_cast<std::size_t>(static_cast<double>(v.size()) * (1.0 - fraction));
  double s = 0;
  for (std::size_t i = start; i < v.size(); ++i) s += v[i];
  return s / static_cast<double>(v.size() - start);
}

runner::ExperimentConfig quadratic_testbed() {
  runner::ExperimentConfig cfg = runner::preset("euclid-quadratic");  // K=10, T=2000, mu=0.02, sigma=0.1
  cfg.mc_runs = 20;
  return cfg;
}

Verdict variance_scaling() {
  const auto t0 = std::chrono::steady_clock::now();
  const runner::ExperimentConfig cfg = quadratic_testbed();
  MetricHooks hooks;
  hooks.frechet_variance = true;
  const auto vf = [](const MetricRecord& r) { return *r.frechet_variance; };
  const double full = tail_mean(mean_curve(cfg, {cfg.mu, cfg.alpha}, vf, hooks), 0.2);
  const double half = tail_mean(mean_curve(cfg, {cfg.mu / 2, cfg.alpha}, vf, hooks), 0.2);
  const double ratio = full / half;
  const double secs = seconds_since(t0);
  return {ratio >= 2.5 && ratio <= 6.0 && secs < 60,
          "steady V_F " + fmt(full) + " at mu=" + fmt(cfg.mu) + " vs " + fmt(half) + " at mu/2, ratio " + fmt(ratio) +
              " (in [2.5, 6]), " + fmt(secs) + " s (<60)"};
}

Verdict plateau_scaling() {
  // Same testbed; alpha small enough that the pull between agents, not the
  // gradient noise, sets the plateau of the stacked cost.
  runner::ExperimentConfig cfg = quadratic_testbed();
  const double alpha = 0.005;
  MetricHooks hooks;
  hooks.cost = true;
  // J(w) = (1/K) sum_k J_k(w_k) is minimized by w_k = b_k, where every J_k vanishes.
  double j_star = 0;
  for (std::size_t r = 0; r < cfg.mc_runs; ++r) {
    const runner::RunSetup s = runner::prepare_run(cfg, r, nullptr);
    const auto& q = dynamic_cast<const QuadraticOracle&>(*s.oracle);
    for (std::size_t k = 0; k < cfg.K; ++k) j_star += q.local_cost(k, q.local_minimizer(k));
  }
  j_star /= static_cast<double>(cfg.mc_runs * cfg.K);
  const auto gap = [j_star](const MetricRecord& r) { return *r.cost - j_star; };

  std::string detail;
  bool monotone = true;
  double plateau[2];
  for (int i = 0; i < 2; ++i) {
    const double a = i == 0 ? alpha : alpha / 2;
    const std::vector<double> curve = mean_curve(cfg, {cfg.mu, a}, gap, hooks);
    plateau[i] = tail_mean(curve, 0.2);
    // Pre-plateau: rounds before the gap first falls within 1.5x of its plateau.
    std::size_t onset = 0;
    while (onset < curve.size() && curve[onset] > 1.5 * plateau[i]) ++onset;
    std::size_t up = 0;
    for (std::size_t t = 1; t < onset; ++t) up += std::log(curve[t]) > std::log(curve[t - 1]);
    const double frac = onset > 1 ? static_cast<double>(up) / static_cast<double>(onset - 1) : 0.0;
    monotone = monotone && onset > 1 && frac <= 0.05;
    detail += "alpha=" + fmt(a) + ": plateau " + fmt(plateau[i]) + ", " + std::to_string(up) + "/" +
              std::to_string(onset > 0 ? onset - 1 : 0) + " pre-plateau increases; ";
  }
  const double ratio = plateau[0] / plateau[1];
  return {monotone && ratio >= 2.5 && ratio <= 6.0,
          detail + "ratio " + fmt(ratio) + " (in [2.5, 6]), J* = " + fmt(j_star)};
}

int run_cli(const std::string& rdiff, const fs::path& out, const char* threads) {
  const std::string cmd = "RD_THREADS=" + std::string(threads) + " '" + rdiff +
                          "' run --preset synthetic-metropolis --seed 1 --out '" + out.string() + "' > '" +
                          out.string() + ".log' 2>&1";
  fs::create_directories(out.parent_path());
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

struct PresetRuns {
  int rc[2] = {-1, -1};
  double secs = 0;
  fs::path dirs[2];
};

Verdict figure_reproduction(const PresetRuns& runs) {
  if (runs.rc[0] != 0) return {false, "rdiff run exited with " + std::to_string(runs.rc[0])};
  const auto traces = runner::read_trace_csv(runs.dirs[0] / "trace.csv");
  std::map<std::string, std::map<std::size_t, std::pair<double, int>>> acc;
  std::set<std::size_t> run_ids;
  for (const auto& rt : traces) {
    run_ids.insert(rt.run);
    for (const auto& rec : rt.trace.records()) {
      if ((rec.t == 100 || rec.t == 1500) && rec.msd) {
        auto& [sum, n] = acc[rt.algorithm][rec.t];
        sum += *rec.msd;
        ++n;
      }
    }
  }
  const auto mean = [&](const char* alg, std::size_t t) {
    const auto& [sum, n] = acc[alg][t];
    return n ? sum / n : std::nan("");
  };
  const double d100 = mean(runner::kDiffusion, 100), d1500 = mean(runner::kDiffusion, 1500);
  const double n1500 = mean(runner::kNoncooperative, 1500);
  const bool ok = run_ids.size() == 20 && d1500 <= 0.5 * n1500 && d1500 < d100 && runs.secs < 300;
  return {ok, std::to_string(run_ids.size()) + " runs; final MSD diffusion " + fmt(d1500) + " vs non-cooperative " +
                  fmt(n1500) + " (ratio " + fmt(d1500 / n1500) + ", need <=0.5); diffusion t=100 " + fmt(d100) +
                  " -> t=1500 " + fmt(d1500) + "; " + fmt(runs.secs) + " s (<300)"};
}

Verdict network_suite() {
  double asym = 0, dev = 0, lambda_max = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const AgentGraph g = random_connected_graph(20, 0.3, seed);
    for (const NetworkTopology& t : {metropolis_weights(g), sinkhorn_uniform_weights(g, seed)}) {
      asym = std::max(asym, (t.weights - t.weights.transpose()).cwiseAbs().maxCoeff());
      dev = std::max(dev, stochastic_deviation(t.weights));
      lambda_max = std::max(lambda_max, t.lambda);
    }
  }
  const double path = metropolis_weights(path_graph(3)).lambda;
  const bool ok = asym <= 1e-10 && dev <= 1e-10 && lambda_max < 1.0 && std::abs(path - 2.0 / 3) <= 1e-12;
  return {ok, "100 weight matrices: asymmetry " + fmt(asym) + ", sum deviation " + fmt(dev) + " (<=1e-10), max lambda " +
                  fmt(lambda_max) + " (<1); path-3 |lambda - 2/3| = " + fmt(std::abs(path - 2.0 / 3)) + " (<=1e-12)"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Verdict determinism(const PresetRuns& runs) {
  if (runs.rc[0] != 0 || runs.rc[1] != 0) {
    return {false, "rdiff run exit codes " + std::to_string(runs.rc[0]) + ", " + std::to_string(runs.rc[1])};
  }
  const std::string a = slurp(runs.dirs[0] / "trace.csv"), b = slurp(runs.dirs[1] / "trace.csv");
  return {!a.empty() && a == b, std::to_string(a.size()) + " bytes; RD_THREADS=1 vs RD_THREADS=3 " +
                                    (a == b ? "identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string rdiff_path, workdir = "acceptance_out";
  std::set<int> only;
  app.add_option("--rdiff", rdiff_path, "path to the rdiff executable")->required();
  app.add_option("--workdir", workdir, "scratch directory for the preset runs");
  app.add_option("--only", only, "run only these criteria");
  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::err);

  const auto want = [&](int c) { return only.empty() || only.count(c) > 0; };
  PresetRuns preset;
  if (want(7) || want(9)) {
    preset.dirs[0] = fs::path(workdir) / "preset_a";
    preset.dirs[1] = fs::path(workdir) / "preset_b";
    const auto t0 = std::chrono::steady_clock::now();
    preset.rc[0] = run_cli(rdiff_path, preset.dirs[0], "1");
    preset.secs = seconds_since(t0);
    if (want(9)) preset.rc[1] = run_cli(rdiff_path, preset.dirs[1], "3");
  }

  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"grassmann geometry", geometry_suite},
      {"gradient certificate", gradient_certificate},
      {"flat oracle equivalence", euclidean_equivalence},
      {"combination contraction", combination_contraction},
      {"V_F scales with mu^2", variance_scaling},
      {"plateau scales with alpha^2", plateau_scaling},
      {"synthetic MSD separation", [&] { return figure_reproduction(preset); }},
      {"network weights", network_suite},
      {"determinism", [&] { return determinism(preset); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!want(id)) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("criterion %d %s: %s -- %s\n", id, v.pass ? "PASS" : "FAIL", criteria[i].first, v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
