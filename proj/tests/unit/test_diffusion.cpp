#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "helpers.hpp"
#include "rdiff/diffusion.hpp"
#include "rdiff/quadratic.hpp"
#include "rdiff/random.hpp"
#include "rdiff/rpca.hpp"

namespace rdiff {
namespace {

using test::vec;

// Fixed per-agent Euclidean gradients, independent of w and t.
class ConstantGradOracle final : public CostOracle {
 public:
  explicit ConstantGradOracle(Matrix grads) : manifold_(grads.rows()), grads_(std::move(grads)) {}
  const Manifold& manifold() const override { return manifold_; }
  std::size_t agents() const override { return static_cast<std::size_t>(grads_.cols()); }
  TangentVector stochastic_rgrad(std::size_t k, std::size_t, const ManifoldPoint& w,
                                 std::uint64_t) const override {
    return local_rgrad(k, w);
  }
  double local_cost(std::size_t k, const ManifoldPoint& w) const override {
    return grads_.col(static_cast<Eigen::Index>(k)).dot(w.coords().col(0));
  }
  TangentVector local_rgrad(std::size_t k, const ManifoldPoint& w) const override {
    return TangentVector(w, grads_.col(static_cast<Eigen::Index>(k)));
  }
  double batch_cost(const ManifoldPoint& w) const override {
    return grads_.rowwise().mean().dot(w.coords().col(0));
  }
  TangentVector batch_rgrad(const ManifoldPoint& w) const override {
    return TangentVector(w, grads_.rowwise().mean());
  }

 private:
  EuclideanManifold manifold_;
  Matrix grads_;
};

std::vector<ManifoldPoint> shared_init(const Manifold& m, std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return std::vector<ManifoldPoint>(k, m.random_point(rng));
}

rpca::RobustPcaOracle small_rpca(std::uint64_t seed, std::size_t agents = 6) {
  auto data = rpca::synth_data(6, agents, 40, 0.8, seed).dataset;
  // Scale so inliers are not all on the quadratic branch of the penalty.
  data.samples *= 20.0;
  return rpca::RobustPcaOracle(rpca::inject_outliers(std::move(data), 3, seed), 2, 0.1);
}

TEST(AdaptStep, ZeroGradientKeepsPoints) {
  ConstantGradOracle o(Matrix::Zero(2, 3));
  const auto w = shared_init(o.manifold(), 3, 1);
  const auto phi = adapt_step(o, w, 0.5, 1, 0);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(phi[k].coords(), w[k].coords());
}

TEST(AdaptStep, SingleEuclideanStep) {
  Matrix g(2, 1);
  g << 1, 0;
  ConstantGradOracle o(g);
  const std::vector<ManifoldPoint> w{vec({0, 0})};
  const auto phi = adapt_step(o, w, 0.1, 1, 0);
  EXPECT_NEAR(phi[0].coords()(0, 0), -0.1, 1e-16);
  EXPECT_EQ(phi[0].coords()(1, 0), 0.0);
}

TEST(AdaptStep, GrassmannStepLengthIsMuTimesGradient) {
  const auto o = small_rpca(1);
  const auto w = shared_init(o.manifold(), o.agents(), 2);
  const double mu = 0.05;
  const auto phi = adapt_step(o, w, mu, 3, 0);
  for (std::size_t k = 0; k < o.agents(); ++k) {
    const double g = o.stochastic_rgrad(k, 3, w[k], 0).norm();
    EXPECT_NEAR(o.manifold().dist(w[k], phi[k]), mu * g, 1e-8);
  }
}

TEST(AdaptStep, OversizedStepNamesTheAgent) {
  const auto o = small_rpca(1, 2);
  const auto w = shared_init(o.manifold(), 2, 3);
  try {
    adapt_step(o, w, 1e6, 1, 0);
    FAIL() << "expected AgentStepError";
  } catch (const AgentStepError& e) {
    EXPECT_EQ(e.agent(), 0u);
  }
}

TEST(CombineStep, EqualPointsStay) {
  GrassmannManifold g(5, 2);
  std::mt19937_64 rng(4);
  const std::vector<ManifoldPoint> phi(4, g.random_point(rng));
  const auto w = combine_step(g, phi, metropolis_weights(complete_graph(4)), 0.7);
  for (const auto& p : w) EXPECT_LT(g.dist(p, phi[0]), 1e-14);
}

TEST(CombineStep, FullAveragingOfTwo) {
  EuclideanManifold e(1);
  const std::vector<ManifoldPoint> phi{vec({0}), vec({2})};
  const auto w = combine_step(e, phi, metropolis_weights(complete_graph(2)), 1.0);
  EXPECT_NEAR(w[0].coords()(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(w[1].coords()(0, 0), 1.0, 1e-15);
}

TEST(CombineStep, MatchesFlatFormula) {
  EuclideanManifold e(3);
  std::mt19937_64 rng(5);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const NetworkTopology t = sinkhorn_uniform_weights(random_connected_graph(9, 0.4, seed), seed);
    std::vector<ManifoldPoint> phi;
    for (int k = 0; k < 9; ++k) phi.push_back(e.random_point(rng));
    const double alpha = 0.37;
    const auto w = combine_step(e, phi, t, alpha);
    for (int k = 0; k < 9; ++k) {
      Vector expect = phi[static_cast<std::size_t>(k)].coords().col(0);
      for (int l = 0; l < 9; ++l) {
        expect += alpha * t.weights(l, k) *
                  (phi[static_cast<std::size_t>(l)].coords().col(0) - phi[static_cast<std::size_t>(k)].coords().col(0));
      }
      EXPECT_LT((w[static_cast<std::size_t>(k)].coords().col(0) - expect).cwiseAbs().maxCoeff(), 1e-14);
    }
  }
}

TEST(CombineStep, CutLocusNamesThePair) {
  GrassmannManifold g(2, 1);
  Matrix a(2, 1), b(2, 1);
  a << 1, 0;
  b << 0, 1;
  const std::vector<ManifoldPoint> phi{ManifoldPoint(a), ManifoldPoint(b)};
  try {
    combine_step(g, phi, metropolis_weights(complete_graph(2)), 0.5);
    FAIL() << "expected AgentStepError";
  } catch (const AgentStepError& e) {
    EXPECT_EQ(e.agent(), 0u);
    ASSERT_TRUE(e.peer().has_value());
    EXPECT_EQ(*e.peer(), 1u);
  }
}

TEST(RunDiffusion, SingleRoundWithoutGradients) {
  ConstantGradOracle o(Matrix::Zero(2, 4));
  const auto init = shared_init(o.manifold(), 4, 6);
  MetricHooks hooks;
  hooks.msd = hooks.frechet_variance = true;
  hooks.reference = vec({1, 1});
  const MetricTrace tr = run_diffusion(o, metropolis_weights(complete_graph(4)), init, {0.1, 0.5}, 1, 0, hooks);
  ASSERT_EQ(tr.size(), 1u);
  EXPECT_EQ(tr[0].t, 1u);
  EXPECT_EQ(*tr[0].frechet_variance, 0.0);
  EXPECT_NEAR(*tr[0].msd, (init[0].coords() - hooks.reference->coords()).squaredNorm(), 1e-15);
}

TEST(RunDiffusion, MatchesStandaloneFlatImplementation) {
  QuadraticTestbedConfig qc;
  qc.agents = 2;
  const QuadraticOracle o = make_quadratic_testbed(qc, 11);
  const NetworkTopology t = metropolis_weights(complete_graph(2));
  const auto init = shared_init(o.manifold(), 2, 12);
  const StepSizes s{0.05, 0.6};
  const std::uint64_t seed = 13;

  std::vector<std::vector<Vector>> seen;
  MetricHooks hooks;
  hooks.observer = [&](std::size_t, std::span<const ManifoldPoint>, std::span<const ManifoldPoint> w) {
    std::vector<Vector> row;
    for (const auto& p : w) row.push_back(p.coords().col(0));
    seen.push_back(std::move(row));
  };
  run_diffusion(o, t, init, s, 100, seed, hooks);

  // Plain vector recursion: psi = w - mu g; w_k = psi_k + alpha sum_l c_lk (psi_l - psi_k).
  std::vector<Vector> w{init[0].coords().col(0), init[1].coords().col(0)};
  for (std::size_t r = 1; r <= 100; ++r) {
    std::vector<Vector> psi(2);
    for (std::size_t k = 0; k < 2; ++k) {
      psi[k] = w[k] - s.mu * o.stochastic_rgrad(k, r, ManifoldPoint(w[k]), seed).components().col(0);
    }
    for (std::size_t k = 0; k < 2; ++k) {
      Vector acc = Vector::Zero(psi[k].size());
      for (std::size_t l = 0; l < 2; ++l) {
        acc += t.weights(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) * (psi[l] - psi[k]);
      }
      w[k] = psi[k] + s.alpha * acc;
      EXPECT_LT((seen[r - 1][k] - w[k]).cwiseAbs().maxCoeff(), 1e-12) << "round " << r;
    }
  }
}

TEST(RunDiffusion, DeterministicTraces) {
  const auto o = small_rpca(7);
  const NetworkTopology t = metropolis_weights(random_connected_graph(o.agents(), 0.5, 7));
  const auto init = shared_init(o.manifold(), o.agents(), 8);
  MetricHooks hooks;
  hooks.frechet_variance = hooks.consensus_bias = hooks.cost = hooks.grad_norm_sq = true;
  hooks.topology = &t;
  const MetricTrace a = run_diffusion(o, t, init, {0.05, 0.4}, 30, 9, hooks);
  const MetricTrace b = run_diffusion(o, t, init, {0.05, 0.4}, 30, 9, hooks);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(*a[i].frechet_variance, *b[i].frechet_variance);
    EXPECT_EQ(*a[i].consensus_bias, *b[i].consensus_bias);
    EXPECT_EQ(*a[i].cost, *b[i].cost);
    EXPECT_EQ(*a[i].grad_norm_sq, *b[i].grad_norm_sq);
  }
}

TEST(RunDiffusion, MissingHookInputsAreRejected) {
  ConstantGradOracle o(Matrix::Zero(1, 2));
  const auto init = shared_init(o.manifold(), 2, 1);
  const NetworkTopology t = metropolis_weights(complete_graph(2));
  MetricHooks hooks;
  hooks.msd = true;
  EXPECT_THROW(run_diffusion(o, t, init, {0.1, 0.1}, 1, 0, hooks), ContractViolation);
  EXPECT_THROW(run_diffusion(o, t, init, {0.1, 0.1}, 0, 0), ContractViolation);
  EXPECT_THROW(run_diffusion(o, t, std::span(init).first(1), {0.1, 0.1}, 1, 0), ContractViolation);
}

TEST(RunDiffusion, CombinationNeverIncreasesFrechetVariance) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto o = small_rpca(seed);
    const NetworkTopology t = metropolis_weights(random_connected_graph(o.agents(), 0.4, seed));
    std::vector<ManifoldPoint> init;
    auto rng = keyed_rng({seed, 99});
    const ManifoldPoint c = o.manifold().random_point(rng);
    const auto& g = static_cast<const GrassmannManifold&>(o.manifold());
    for (std::size_t k = 0; k < o.agents(); ++k) init.push_back(g.exp(c, test::random_tangent(g, c, 0.3, rng)));
    MetricHooks hooks;
    hooks.observer = [&](std::size_t r, std::span<const ManifoldPoint> phi, std::span<const ManifoldPoint> w) {
      EXPECT_LE(frechet_variance(g, w), frechet_variance(g, phi) + 1e-9) << "round " << r;
    };
    run_diffusion(o, t, init, {0.05, 0.4}, 40, seed, hooks);
  }
}

TEST(RunNoncooperative, EqualsDiffusionWithZeroAlpha) {
  const auto o = small_rpca(3);
  const NetworkTopology t = metropolis_weights(complete_graph(o.agents()));
  const auto init = shared_init(o.manifold(), o.agents(), 4);
  std::vector<Matrix> a, b;
  MetricHooks ha, hb;
  ha.observer = [&](std::size_t, auto, std::span<const ManifoldPoint> w) { a.push_back(w.back().coords()); };
  hb.observer = [&](std::size_t, auto, std::span<const ManifoldPoint> w) { b.push_back(w.back().coords()); };
  run_noncooperative(o, init, 0.05, 25, 5, ha);
  run_diffusion(o, t, init, {0.05, 0.0}, 25, 5, hb);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(RunNoncooperative, TopologyPlaysNoRole) {
  // Swapping the network under a diffusion run with alpha = 0 changes nothing.
  const auto o = small_rpca(5);
  const auto init = shared_init(o.manifold(), o.agents(), 6);
  MetricHooks hooks;
  hooks.cost = true;
  const MetricTrace a = run_diffusion(o, metropolis_weights(path_graph(o.agents())), init, {0.05, 0.0}, 20, 1, hooks);
  const MetricTrace b = run_diffusion(o, metropolis_weights(complete_graph(o.agents())), init, {0.05, 0.0}, 20, 1, hooks);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(*a[i].cost, *b[i].cost);
}

TEST(RunNoncooperative, NoiselessAgentsReachTheirOwnMinimizers) {
  QuadraticTestbedConfig qc;
  qc.agents = 5;
  qc.dim = 3;
  qc.noise_sigma = 0.0;
  const QuadraticOracle o = make_quadratic_testbed(qc, 21);
  const auto init = shared_init(o.manifold(), 5, 22);
  std::vector<ManifoldPoint> last;
  MetricHooks hooks;
  hooks.observer = [&](std::size_t, auto, std::span<const ManifoldPoint> w) { last.assign(w.begin(), w.end()); };
  run_noncooperative(o, init, 0.3, 400, 0, hooks);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_LT(o.manifold().dist(last[k], o.local_minimizer(k)), 1e-10);
  }
}

TEST(SolveReference, StationaryInitIsReturned) {
  const QuadraticOracle o = make_quadratic_testbed({}, 31);
  const ManifoldPoint star = o.pooled_minimizer();
  const ReferenceSolution r = solve_reference(o, star);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 0u);
  EXPECT_EQ(r.point.coords(), star.coords());
}

TEST(SolveReference, QuadraticNormalEquations) {
  QuadraticTestbedConfig qc;
  qc.dim = 4;
  const QuadraticOracle o = make_quadratic_testbed(qc, 32);
  // Independent minimizer: sum_k H_k (w - b_k) = 0, i.e. w_i = sum h b / sum h.
  Vector num = Vector::Zero(4), den = Vector::Zero(4);
  for (std::size_t k = 0; k < qc.agents; ++k) {
    const Vector b = o.local_minimizer(k).coords().col(0);
    // Diagonal curvature recovered from the exact local gradient at b + e_i.
    for (Eigen::Index i = 0; i < 4; ++i) {
      Matrix probe = b;
      probe(i, 0) += 1.0;
      const double h = o.local_rgrad(k, ManifoldPoint(probe)).components()(i, 0);
      num(i) += h * b(i);
      den(i) += h;
    }
  }
  const Vector oracle = num.cwiseQuotient(den);
  ReferenceOptions opts;
  opts.grad_tol = 1e-10;  // curvatures >= 0.5, so the error is below 2e-10
  const ReferenceSolution r = solve_reference(o, ManifoldPoint(Matrix::Constant(4, 1, 5.0)), opts);
  EXPECT_TRUE(r.converged);
  EXPECT_LT((r.point.coords().col(0) - oracle).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(SolveReference, RobustPcaGradientCertificate) {
  const auto o = small_rpca(41);
  std::mt19937_64 rng(42);
  const ReferenceSolution r = solve_reference(o, o.manifold().random_point(rng));
  EXPECT_TRUE(r.converged);
  EXPECT_LE(o.batch_rgrad(r.point).norm(), 1e-6);
}

TEST(SolveReference, IterationCapIsReportedNotThrown) {
  const auto o = small_rpca(43);
  std::mt19937_64 rng(44);
  ReferenceOptions opts;
  opts.max_iter = 2;
  opts.grad_tol = 1e-14;
  const ReferenceSolution r = solve_reference(o, o.manifold().random_point(rng), opts);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 2u);
}

TEST(AlphaAdmissible, FlatAndCurved) {
  EXPECT_TRUE(alpha_admissible(EuclideanManifold(2), 0.9, 1.0));
  EXPECT_FALSE(alpha_admissible(EuclideanManifold(2), 1.0, 1.0));
  EXPECT_FALSE(alpha_admissible(EuclideanManifold(2), 0.0, 1.0));
  // Grassmann(10,5) at diameter 0.5: zeta2 = 0.5 sqrt2 cot(0.5 sqrt2) ~ 0.8157.
  const GrassmannManifold g(10, 5);
  const double b = 0.5 * std::sqrt(2.0);
  const double z2 = b / std::tan(b);
  EXPECT_TRUE(alpha_admissible(g, z2 - 1e-9, 0.5));
  EXPECT_FALSE(alpha_admissible(g, z2 + 1e-9, 0.5));
}

}  // namespace
}  // namespace rdiff
