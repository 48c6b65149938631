#include "rdiff/rpca.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "rdiff/errors.hpp"
#include "rdiff/kernels/huber.hpp"
#include "rdiff/random.hpp"

namespace rdiff::rpca {
namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
constexpr char kBinaryMagic[8] = {'R', 'D', 'M', 'A', 'T', 'F', '6', '4'};

std::uint64_t tag(StreamTag t) { return static_cast<std::uint64_t>(t); }

void check_delta(double delta) {
  if (!(delta > 0.0)) throw ContractViolation("robust pca: delta must be positive");
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                        const char* field) {
  if (bytes.size() < offset + 4) {
    throw ParseError(std::string("idx: file truncated while reading ") + field, bytes.size());
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void check_magic(std::uint32_t magic, std::uint32_t expected) {
  if (magic != expected) {
    std::ostringstream os;
    os << "idx: bad magic number 0x" << std::hex << magic << ", expected 0x" << expected;
    throw ParseError(os.str(), 0);
  }
}

// Whole file; gzread passes uncompressed input through unchanged.
std::vector<unsigned char> read_maybe_gzip(const std::filesystem::path& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (f == nullptr) throw std::runtime_error("cannot open " + path.string());
  std::vector<unsigned char> out;
  std::array<unsigned char, 1 << 16> buf{};
  for (;;) {
    const int got = gzread(f, buf.data(), static_cast<unsigned>(buf.size()));
    if (got < 0) {
      int errnum = 0;
      const std::string msg = gzerror(f, &errnum);
      gzclose(f);
      throw ParseError("gzip: " + msg + " in " + path.string(), out.size());
    }
    if (got == 0) break;
    out.insert(out.end(), buf.begin(), buf.begin() + got);
  }
  gzclose(f);
  return out;
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* ext) {
  std::filesystem::path p = stem;
  p += ext;
  return p;
}

}  // namespace

double q_delta(double p, double delta) {
  check_delta(delta);
  if (!(p >= 0.0)) throw ContractViolation("q_delta: argument must be non-negative");
  return p >= delta ? p : p * p / (2.0 * delta) + 0.5 * delta;
}

Matrix euclid_grad(const Matrix& u, const Vector& x, double delta) {
  check_delta(delta);
  if (x.size() != u.rows()) throw ContractViolation("euclid_grad: sample length differs from n");
  const Eigen::RowVectorXd xtu = x.transpose() * u;
  const double p = xtu.norm();
  return -(x * xtu) / std::max(p, delta);
}

TangentVector stochastic_rgrad(const GrassmannManifold& manifold, const ManifoldPoint& u,
                               const Vector& x, double delta) {
  return manifold.egrad_to_rgrad(u, euclid_grad(u.coords(), x, delta));
}

std::size_t AgentDataset::column(std::size_t k, std::size_t t) const {
  if (k >= agents()) throw ContractViolation("dataset: agent index out of range");
  if (t < 1) throw ContractViolation("dataset: rounds start at 1");
  const std::size_t size = agent_size(k);
  if (size == 0) throw ContractViolation("dataset: agent holds no samples");
  return offsets[k] + (t - 1) % size;
}

std::size_t AgentDataset::outlier_count(std::size_t k) const {
  return static_cast<std::size_t>(std::count(outlier_mask.begin() + static_cast<std::ptrdiff_t>(offsets[k]),
                                             outlier_mask.begin() + static_cast<std::ptrdiff_t>(offsets[k + 1]),
                                             true));
}

void AgentDataset::validate() const {
  if (offsets.size() < 2 || offsets.front() != 0) {
    throw ContractViolation("dataset: offsets must start at 0 and name at least one agent");
  }
  for (std::size_t k = 0; k + 1 < offsets.size(); ++k) {
    if (offsets[k + 1] <= offsets[k]) throw ContractViolation("dataset: every agent needs samples");
  }
  if (offsets.back() != static_cast<std::size_t>(samples.cols())) {
    throw ContractViolation("dataset: offsets do not cover the sample matrix");
  }
  if (outlier_mask.size() != static_cast<std::size_t>(samples.cols())) {
    throw ContractViolation("dataset: outlier mask length differs from the sample count");
  }
}

SyntheticData synth_data(Eigen::Index n, std::size_t agents, std::size_t horizon,
                         double spectrum_lambda, std::uint64_t seed) {
  if (n < 1 || agents < 1 || horizon < 1) throw ContractViolation("synth_data: sizes must be positive");
  if (!(spectrum_lambda > 0.0 && spectrum_lambda < 1.0)) {
    throw ContractViolation("synth_data: spectrum lambda must lie in (0, 1)");
  }
  const std::size_t total = agents * horizon;
  if (total < static_cast<std::size_t>(n)) {
    throw ContractViolation("synth_data: T*K = " + std::to_string(total) +
                            " columns cannot carry rank n = " + std::to_string(n));
  }
  std::mt19937_64 rng = keyed_rng({seed, tag(StreamTag::kData)});
  const Matrix s = gaussian_matrix(n, static_cast<Eigen::Index>(total), rng);
  Eigen::BDCSVD<Matrix> svd(s, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Vector spectrum(n);
  for (Eigen::Index i = 0; i < n; ++i) spectrum(i) = std::pow(spectrum_lambda, static_cast<double>(i));
  const Matrix rebuilt = svd.matrixU() * spectrum.asDiagonal() * svd.matrixV().transpose();

  std::vector<Eigen::Index> perm(total);
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);

  SyntheticData out;
  out.shuffled.resize(n, static_cast<Eigen::Index>(total));
  for (std::size_t j = 0; j < total; ++j) out.shuffled.col(static_cast<Eigen::Index>(j)) = rebuilt.col(perm[j]);

  AgentDataset& ds = out.dataset;
  ds.samples.resize(n, static_cast<Eigen::Index>(total));
  for (std::size_t k = 0; k < agents; ++k) {
    for (std::size_t t = 0; t < horizon; ++t) {
      ds.samples.col(static_cast<Eigen::Index>(k * horizon + t)) =
          out.shuffled.col(static_cast<Eigen::Index>(t * agents + k));
    }
  }
  ds.offsets.resize(agents + 1);
  for (std::size_t k = 0; k <= agents; ++k) ds.offsets[k] = k * horizon;
  ds.outlier_mask.assign(total, false);
  return out;
}

AgentDataset inject_outliers(AgentDataset dataset, std::size_t count, std::uint64_t seed) {
  dataset.validate();
  for (std::size_t k = 0; k < dataset.agents(); ++k) {
    if (count > dataset.agent_size(k)) {
      throw ContractViolation("inject_outliers: " + std::to_string(count) + " outliers exceed agent " +
                              std::to_string(k) + "'s " + std::to_string(dataset.agent_size(k)) +
                              " samples");
    }
  }
  if (count == 0) return dataset;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t k = 0; k < dataset.agents(); ++k) {
    std::mt19937_64 rng = keyed_rng({seed, tag(StreamTag::kOutliers), k});
    std::vector<std::size_t> all(dataset.agent_size(k));
    std::iota(all.begin(), all.end(), dataset.offsets[k]);
    std::vector<std::size_t> chosen;
    chosen.reserve(count);
    std::sample(all.begin(), all.end(), std::back_inserter(chosen), count, rng);
    for (std::size_t j : chosen) {
      auto col = dataset.samples.col(static_cast<Eigen::Index>(j));
      for (Eigen::Index i = 0; i < col.size(); ++i) col(i) = unit(rng);
      dataset.outlier_mask[j] = true;
    }
  }
  return dataset;
}

Matrix parse_idx_images(const std::vector<unsigned char>& bytes) {
  check_magic(read_be32(bytes, 0, "magic number"), kIdxImagesMagic);
  const std::uint32_t count = read_be32(bytes, 4, "image count");
  const std::uint32_t rows = read_be32(bytes, 8, "row count");
  const std::uint32_t cols = read_be32(bytes, 12, "column count");
  const std::size_t pixels = std::size_t{rows} * cols;
  const std::size_t need = 16 + pixels * count;
  if (bytes.size() < need) {
    throw ParseError("idx: file truncated, header declares " + std::to_string(count) + " images of " +
                         std::to_string(rows) + "x" + std::to_string(cols),
                     bytes.size());
  }
  Matrix out(static_cast<Eigen::Index>(pixels), static_cast<Eigen::Index>(count));
  const unsigned char* p = bytes.data() + 16;
  for (std::size_t j = 0; j < count; ++j) {
    for (std::size_t i = 0; i < pixels; ++i) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = p[j * pixels + i];
    }
  }
  return out;
}

Matrix load_mnist(const std::filesystem::path& images,
                  const std::optional<std::filesystem::path>& labels) {
  Matrix data = parse_idx_images(read_maybe_gzip(images));
  if (labels) {
    const std::vector<unsigned char> lb = read_maybe_gzip(*labels);
    check_magic(read_be32(lb, 0, "magic number"), kIdxLabelsMagic);
    const std::uint32_t count = read_be32(lb, 4, "label count");
    if (count != static_cast<std::uint32_t>(data.cols())) {
      throw ParseError("idx: label count " + std::to_string(count) + " differs from image count " +
                           std::to_string(data.cols()),
                       4);
    }
    if (lb.size() < 8 + std::size_t{count}) throw ParseError("idx: label file truncated", lb.size());
  }
  data /= 255.0;
  const Vector mean = data.rowwise().mean();
  data.colwise() -= mean;
  return data;
}

AgentDataset partition_mnist(const Matrix& data, std::size_t agents, std::uint64_t seed) {
  const auto total = static_cast<std::size_t>(data.cols());
  if (agents < 1 || total < agents) throw ContractViolation("partition: need at least one sample per agent");
  std::vector<Eigen::Index> perm(total);
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::mt19937_64 rng = keyed_rng({seed, tag(StreamTag::kPartition)});
  std::shuffle(perm.begin(), perm.end(), rng);

  AgentDataset ds;
  ds.samples.resize(data.rows(), data.cols());
  for (std::size_t j = 0; j < total; ++j) ds.samples.col(static_cast<Eigen::Index>(j)) = data.col(perm[j]);
  ds.offsets.resize(agents + 1, 0);
  const std::size_t base = total / agents;
  const std::size_t extra = total % agents;
  for (std::size_t k = 0; k < agents; ++k) ds.offsets[k + 1] = ds.offsets[k] + base + (k < extra ? 1 : 0);
  ds.outlier_mask.assign(total, false);
  return ds;
}

void save_dataset(const AgentDataset& dataset, const DatasetMeta& meta,
                  const std::filesystem::path& stem, DumpFormat format) {
  dataset.validate();
  const std::filesystem::path data_path = with_suffix(stem, format == DumpFormat::kBinary ? ".bin" : ".csv");
  if (format == DumpFormat::kBinary) {
    std::ofstream out(data_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + data_path.string());
    const std::uint64_t dims[2] = {static_cast<std::uint64_t>(dataset.samples.rows()),
                                   static_cast<std::uint64_t>(dataset.samples.cols())};
    out.write(kBinaryMagic, sizeof kBinaryMagic);
    out.write(reinterpret_cast<const char*>(dims), sizeof dims);
    out.write(reinterpret_cast<const char*>(dataset.samples.data()),
              static_cast<std::streamsize>(sizeof(double) * dataset.samples.size()));
    if (!out) throw std::runtime_error("write failed: " + data_path.string());
  } else {
    std::ofstream out(data_path);
    if (!out) throw std::runtime_error("cannot write " + data_path.string());
    // One sample per line.
    for (Eigen::Index j = 0; j < dataset.samples.cols(); ++j) {
      for (Eigen::Index i = 0; i < dataset.samples.rows(); ++i) {
        if (i > 0) out << ',';
        out << format_double(dataset.samples(i, j));
      }
      out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + data_path.string());
  }

  nlohmann::json doc;
  doc["seed"] = meta.seed;
  doc["n"] = meta.n;
  doc["p"] = meta.p;
  doc["K"] = meta.agents;
  doc["T"] = meta.horizon;
  doc["lambda"] = meta.spectrum_lambda;
  doc["outliers"] = meta.outliers;
  doc["format"] = format == DumpFormat::kBinary ? "binary" : "csv";
  doc["data_file"] = data_path.filename().string();
  doc["offsets"] = dataset.offsets;
  std::vector<std::size_t> outlier_columns;
  for (std::size_t j = 0; j < dataset.outlier_mask.size(); ++j) {
    if (dataset.outlier_mask[j]) outlier_columns.push_back(j);
  }
  doc["outlier_columns"] = outlier_columns;
  const std::filesystem::path json_path = with_suffix(stem, ".json");
  std::ofstream side(json_path);
  if (!side) throw std::runtime_error("cannot write " + json_path.string());
  side << doc.dump(2) << '\n';
}

LoadedDataset load_dataset(const std::filesystem::path& stem) {
  const std::filesystem::path json_path = with_suffix(stem, ".json");
  std::ifstream side(json_path);
  if (!side) throw std::runtime_error("cannot open " + json_path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(side);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("dataset sidecar: ") + e.what(), e.byte);
  }

  LoadedDataset out;
  DatasetMeta& meta = out.meta;
  meta.seed = doc.at("seed").get<std::uint64_t>();
  meta.n = doc.at("n").get<Eigen::Index>();
  meta.p = doc.at("p").get<Eigen::Index>();
  meta.agents = doc.at("K").get<std::size_t>();
  meta.horizon = doc.at("T").get<std::size_t>();
  meta.spectrum_lambda = doc.at("lambda").get<double>();
  meta.outliers = doc.at("outliers").get<std::size_t>();
  AgentDataset& ds = out.dataset;
  ds.offsets = doc.at("offsets").get<std::vector<std::size_t>>();
  const std::filesystem::path data_path = stem.parent_path() / doc.at("data_file").get<std::string>();

  if (doc.at("format").get<std::string>() == "binary") {
    std::ifstream in(data_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + data_path.string());
    char magic[8];
    std::uint64_t dims[2];
    in.read(magic, sizeof magic);
    if (!in || !std::equal(magic, magic + 8, kBinaryMagic)) throw ParseError("dataset: bad binary magic", 0);
    in.read(reinterpret_cast<char*>(dims), sizeof dims);
    if (!in) throw ParseError("dataset: truncated header", 8);
    ds.samples.resize(static_cast<Eigen::Index>(dims[0]), static_cast<Eigen::Index>(dims[1]));
    in.read(reinterpret_cast<char*>(ds.samples.data()),
            static_cast<std::streamsize>(sizeof(double) * ds.samples.size()));
    if (!in) throw ParseError("dataset: truncated matrix body", 24 + static_cast<std::size_t>(in.gcount()));
  } else {
    std::ifstream in(data_path);
    if (!in) throw std::runtime_error("cannot open " + data_path.string());
    std::vector<std::vector<double>> columns;
    std::string line;
    std::size_t offset = 0;
    while (std::getline(in, line)) {
      std::vector<double> col;
      const char* p = line.data();
      const char* end = p + line.size();
      while (p < end) {
        double v = 0.0;
        const auto res = std::from_chars(p, end, v);
        if (res.ec != std::errc()) throw ParseError("dataset csv: bad number", offset + static_cast<std::size_t>(p - line.data()));
        col.push_back(v);
        p = res.ptr;
        if (p < end && *p == ',') ++p;
      }
      if (!columns.empty() && col.size() != columns.front().size()) {
        throw ParseError("dataset csv: ragged row", offset);
      }
      columns.push_back(std::move(col));
      offset += line.size() + 1;
    }
    const auto rows = columns.empty() ? Eigen::Index{0} : static_cast<Eigen::Index>(columns.front().size());
    ds.samples.resize(rows, static_cast<Eigen::Index>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j) {
      ds.samples.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Vector>(columns[j].data(), rows);
    }
  }
  ds.outlier_mask.assign(static_cast<std::size_t>(ds.samples.cols()), false);
  for (std::size_t j : doc.at("outlier_columns").get<std::vector<std::size_t>>()) {
    if (j >= ds.outlier_mask.size()) throw ParseError("dataset sidecar: outlier column out of range", 0);
    ds.outlier_mask[j] = true;
  }
  ds.validate();
  return out;
}

RobustPcaOracle::RobustPcaOracle(AgentDataset dataset, Eigen::Index p, double delta)
    : manifold_(dataset.dim(), p), dataset_(std::move(dataset)), delta_(delta) {
  check_delta(delta_);
  dataset_.validate();
}

double RobustPcaOracle::block(std::size_t agent, const Matrix& u, Matrix* egrad) const {
  const auto x = dataset_.agent_block(agent);
  const Matrix proj = x.transpose() * u;  // N_k x p, column-major as the kernel expects
  Matrix weighted(proj.rows(), proj.cols());
  const double q = kernels::huber_weights(proj.data(), static_cast<std::size_t>(proj.rows()),
                                          static_cast<std::size_t>(proj.cols()), delta_, weighted.data());
  const double inv_n = 1.0 / static_cast<double>(proj.rows());
  if (egrad != nullptr) *egrad = -inv_n * (x * weighted);
  return -inv_n * q;
}

TangentVector RobustPcaOracle::stochastic_rgrad(std::size_t agent, std::size_t t,
                                                const ManifoldPoint& w, std::uint64_t) const {
  return rpca::stochastic_rgrad(manifold_, w, dataset_.sample(agent, t), delta_);
}

double RobustPcaOracle::local_cost(std::size_t agent, const ManifoldPoint& w) const {
  manifold_.check_point(w);
  return block(agent, w.coords(), nullptr);
}

TangentVector RobustPcaOracle::local_rgrad(std::size_t agent, const ManifoldPoint& w) const {
  Matrix g;
  manifold_.check_point(w);
  block(agent, w.coords(), &g);
  return manifold_.egrad_to_rgrad(w, g);
}

double RobustPcaOracle::batch_cost(const ManifoldPoint& w) const {
  manifold_.check_point(w);
  double total = 0.0;
  for (std::size_t k = 0; k < agents(); ++k) total += block(k, w.coords(), nullptr);
  return total / static_cast<double>(agents());
}

TangentVector RobustPcaOracle::batch_rgrad(const ManifoldPoint& w) const {
  manifold_.check_point(w);
  Matrix sum = Matrix::Zero(w.coords().rows(), w.coords().cols());
  Matrix g;
  for (std::size_t k = 0; k < agents(); ++k) {
    block(k, w.coords(), &g);
    sum += g;
  }
  return manifold_.egrad_to_rgrad(w, sum / static_cast<double>(agents()));
}

double RobustPcaOracle::kink_distance(const ManifoldPoint& w) const {
  const Eigen::VectorXd norms = (dataset_.samples.transpose() * w.coords()).rowwise().norm();
  return (norms.array() - delta_).abs().minCoeff();
}

}  // namespace rdiff::rpca
