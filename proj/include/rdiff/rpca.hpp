#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "rdiff/cost_oracle.hpp"
#include "rdiff/grassmann.hpp"

namespace rdiff::rpca {

/// Huber-type penalty: p for p >= delta, p^2 / (2 delta) + delta / 2 below.
double q_delta(double p, double delta);

/// Euclidean gradient in U of -Q_delta(||U^T x||): -x (x^T U) / max(||U^T x||, delta).
Matrix euclid_grad(const Matrix& u, const Vector& x, double delta);

/// Projection of euclid_grad onto the horizontal space at U.
TangentVector stochastic_rgrad(const GrassmannManifold& manifold, const ManifoldPoint& u,
                               const Vector& x, double delta);

/// Samples of all agents, stored agent-major: agent k owns columns
/// offsets[k] .. offsets[k+1]-1 and consumes them in order, one per round,
/// wrapping around when the horizon exceeds its share.
struct AgentDataset {
  Matrix samples;                    // n x N
  std::vector<std::size_t> offsets;  // K + 1 entries, offsets[0] = 0, offsets[K] = N
  std::vector<bool> outlier_mask;    // N entries

  std::size_t agents() const { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::size_t agent_size(std::size_t k) const { return offsets[k + 1] - offsets[k]; }
  Eigen::Index dim() const { return samples.rows(); }
  /// Column index of x_{k,t} (t >= 1).
  std::size_t column(std::size_t k, std::size_t t) const;
  auto sample(std::size_t k, std::size_t t) const {
    return samples.col(static_cast<Eigen::Index>(column(k, t)));
  }
  auto agent_block(std::size_t k) const {
    return samples.middleCols(static_cast<Eigen::Index>(offsets[k]),
                              static_cast<Eigen::Index>(agent_size(k)));
  }
  std::size_t outlier_count(std::size_t k) const;
  /// Throws ContractViolation if offsets/mask are inconsistent with samples.
  void validate() const;
};

struct SyntheticData {
  Matrix shuffled;  // S' after the column shuffle, n x TK
  AgentDataset dataset;
};

/// Gaussian n x TK matrix rebuilt with singular values lambda^0..lambda^{n-1},
/// columns shuffled; round t hands column (t-1) K + k to agent k.
SyntheticData synth_data(Eigen::Index n, std::size_t agents, std::size_t horizon,
                         double spectrum_lambda, std::uint64_t seed);

/// Replaces `count` uniformly chosen samples of every agent with draws from
/// U[0,1]^n. Throws ContractViolation if an agent holds fewer samples.
AgentDataset inject_outliers(AgentDataset dataset, std::size_t count, std::uint64_t seed);

/// IDX image file (optionally gzip-compressed) as a 784 x N matrix (for 28x28
/// images), scaled to [0, 1] and centered per pixel. If a labels file is
/// given its magic and count are validated; labels are not returned.
Matrix load_mnist(const std::filesystem::path& images,
                  const std::optional<std::filesystem::path>& labels = std::nullopt);

/// Parses an in-memory IDX image buffer; raw pixels, no scaling.
Matrix parse_idx_images(const std::vector<unsigned char>& bytes);

/// Random near-equal split of the columns over K agents.
AgentDataset partition_mnist(const Matrix& data, std::size_t agents, std::uint64_t seed);

struct DatasetMeta {
  std::uint64_t seed = 0;
  Eigen::Index n = 0;
  Eigen::Index p = 0;
  std::size_t agents = 0;
  std::size_t horizon = 0;
  double spectrum_lambda = 0.0;
  std::size_t outliers = 0;
};

enum class DumpFormat { kBinary, kCsv };

/// Writes `<stem>.bin` or `<stem>.csv` plus the `<stem>.json` sidecar.
void save_dataset(const AgentDataset& dataset, const DatasetMeta& meta,
                  const std::filesystem::path& stem, DumpFormat format);

struct LoadedDataset {
  AgentDataset dataset;
  DatasetMeta meta;
};

LoadedDataset load_dataset(const std::filesystem::path& stem);

/// J_k(U) = -(1/N_k) sum_j Q_delta(||U^T x_j||) over agent k's samples, with
/// the single sample x_{k,t} as the stochastic gradient at round t. The
/// batch cost is (1/K) sum_k J_k.
class RobustPcaOracle final : public CostOracle {
 public:
  RobustPcaOracle(AgentDataset dataset, Eigen::Index p, double delta);

  const Manifold& manifold() const override { return manifold_; }
  std::size_t agents() const override { return dataset_.agents(); }

  TangentVector stochastic_rgrad(std::size_t agent, std::size_t t, const ManifoldPoint& w,
                                 std::uint64_t seed) const override;
  double local_cost(std::size_t agent, const ManifoldPoint& w) const override;
  TangentVector local_rgrad(std::size_t agent, const ManifoldPoint& w) const override;
  double batch_cost(const ManifoldPoint& w) const override;
  TangentVector batch_rgrad(const ManifoldPoint& w) const override;

  const AgentDataset& dataset() const noexcept { return dataset_; }
  double delta() const noexcept { return delta_; }

  /// min_j | ||U^T x_j|| - delta | over all samples.
  double kink_distance(const ManifoldPoint& w) const;

 private:
  // Cost of agent k's block and (optionally) its Euclidean gradient sum.
  double block(std::size_t agent, const Matrix& u, Matrix* egrad) const;

  GrassmannManifold manifold_;
  AgentDataset dataset_;
  double delta_;
};

}  // namespace rdiff::rpca
