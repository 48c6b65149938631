#include "rdiff/runner/certificate.hpp"

#include <algorithm>

#include "rdiff/errors.hpp"
#include "rdiff/gradient_check.hpp"
#include "rdiff/quadratic.hpp"
#include "rdiff/random.hpp"
#include "rdiff/rpca.hpp"

namespace rdiff::runner {

std::vector<CertificateCase> gradient_certificate(const CertificateOptions& options) {
  std::vector<CertificateCase> out;

  {
    rpca::SyntheticData data = rpca::synth_data(10, 4, 60, 0.8, options.seed);
    const rpca::RobustPcaOracle oracle(rpca::inject_outliers(std::move(data.dataset), 10, options.seed), 5, 0.1);
    std::mt19937_64 rng = keyed_rng({options.seed, static_cast<std::uint64_t>(StreamTag::kInit)});
    CertificateCase c{"robust_pca_grassmann_10x5", 0, 0.0};
    for (std::size_t attempts = 0; c.points < options.points; ++attempts) {
      if (attempts > 1000 * options.points) throw ConvergenceError("certificate: no point clear of the kink", 0.0);
      const ManifoldPoint x = oracle.manifold().random_point(rng);
      if (oracle.kink_distance(x) < options.kink_margin) continue;
      c.max_rel_error = std::max(c.max_rel_error, check_gradient(oracle, x, options.directions, options.h,
                                                                 options.seed + c.points));
      ++c.points;
    }
    out.push_back(c);
  }

  {
    QuadraticTestbedConfig qc;
    qc.agents = 5;
    qc.dim = 3;
    const QuadraticOracle oracle = make_quadratic_testbed(qc, options.seed);
    std::mt19937_64 rng = keyed_rng({options.seed, static_cast<std::uint64_t>(StreamTag::kInit), 1});
    CertificateCase c{"quadratic_euclidean_3", 0, 0.0};
    for (; c.points < options.points; ++c.points) {
      const ManifoldPoint x = oracle.manifold().random_point(rng);
      c.max_rel_error = std::max(c.max_rel_error, check_gradient(oracle, x, options.directions, options.h,
                                                                 options.seed + c.points));
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace rdiff::runner
