#include "rdiff/runner/trace_io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "rdiff/errors.hpp"

namespace rdiff::runner {
namespace {

void put(std::string& out, const std::optional<double>& v) {
  out += ',';
  if (v) out += format_real(*v);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <typename T>
T parse_number(std::string_view field, std::size_t offset, const char* what) {
  T v{};
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw ParseError("trace csv: bad " + std::string(what) + " '" + std::string(field) + "'", offset);
  }
  return v;
}

std::optional<double> parse_optional(std::string_view field, std::size_t offset) {
  if (field.empty()) return std::nullopt;
  return parse_number<double>(field, offset, "metric value");
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

std::string format_real(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::string trace_csv(std::span<const RunTrace> traces) {
  if (traces.empty()) throw ContractViolation("write_trace_csv: no traces");
  std::vector<const RunTrace*> order;
  for (const RunTrace& r : traces) order.push_back(&r);
  std::stable_sort(order.begin(), order.end(), [](const RunTrace* a, const RunTrace* b) {
    return std::tie(a->run, a->algorithm) < std::tie(b->run, b->algorithm);
  });
  std::string out(kTraceHeader);
  out += '\n';
  for (const RunTrace* r : order) {
    for (const MetricRecord& rec : r->trace.records()) {
      out += std::to_string(r->run);
      out += ',';
      out += std::to_string(rec.t);
      out += ',';
      out += r->algorithm;
      put(out, rec.msd);
      put(out, rec.frechet_variance);
      put(out, rec.consensus_bias);
      put(out, rec.cost);
      put(out, rec.grad_norm_sq);
      out += '\n';
    }
  }
  return out;
}

void write_trace_csv(std::span<const RunTrace> traces, const std::filesystem::path& path) {
  write_file(path, trace_csv(traces));
}

std::vector<RunTrace> parse_trace_csv(std::string_view text) {
  std::vector<RunTrace> out;
  std::size_t offset = 0;
  bool header = true;
  while (offset < text.size()) {
    std::size_t end = text.find('\n', offset);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(offset, end - offset);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (header) {
      if (line != kTraceHeader) throw ParseError("trace csv: unexpected header", offset);
      header = false;
    } else if (!line.empty()) {
      const auto f = split(line);
      if (f.size() != 8) throw ParseError("trace csv: expected 8 fields, got " + std::to_string(f.size()), offset);
      MetricRecord rec;
      const auto run = parse_number<std::size_t>(f[0], offset, "run");
      rec.t = parse_number<std::size_t>(f[1], offset, "round");
      rec.msd = parse_optional(f[3], offset);
      rec.frechet_variance = parse_optional(f[4], offset);
      rec.consensus_bias = parse_optional(f[5], offset);
      rec.cost = parse_optional(f[6], offset);
      rec.grad_norm_sq = parse_optional(f[7], offset);
      if (out.empty() || out.back().run != run || out.back().algorithm != f[2]) {
        out.push_back(RunTrace{run, std::string(f[2]), {}});
      }
      try {
        out.back().trace.append(rec);
      } catch (const ContractViolation& e) {
        throw ParseError(std::string("trace csv: ") + e.what(), offset);
      }
    }
    offset = end + 1;
  }
  if (header) throw ParseError("trace csv: missing header", 0);
  return out;
}

std::vector<RunTrace> read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_trace_csv(ss.str());
}

std::vector<SummaryRow> summarize(std::span<const RunTrace> traces) {
  struct Acc {
    double msd = 0.0, vf = 0.0;
    std::size_t n_msd = 0, n_vf = 0;
  };
  std::map<std::pair<std::string, std::size_t>, Acc> acc;
  for (const RunTrace& r : traces) {
    for (const MetricRecord& rec : r.trace.records()) {
      Acc& a = acc[{r.algorithm, rec.t}];
      if (rec.msd) { a.msd += *rec.msd; ++a.n_msd; }
      if (rec.frechet_variance) { a.vf += *rec.frechet_variance; ++a.n_vf; }
    }
  }
  std::vector<SummaryRow> rows;
  rows.reserve(acc.size());
  for (const auto& [key, a] : acc) {
    SummaryRow row{key.second, key.first, std::nullopt, std::nullopt};
    if (a.n_msd > 0) row.mean_msd = a.msd / static_cast<double>(a.n_msd);
    if (a.n_vf > 0) row.mean_vf = a.vf / static_cast<double>(a.n_vf);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_summary_csv(std::span<const SummaryRow> rows, const std::filesystem::path& path) {
  std::string out(kSummaryHeader);
  out += '\n';
  for (const SummaryRow& row : rows) {
    out += std::to_string(row.t);
    out += ',';
    out += row.algorithm;
    put(out, row.mean_msd);
    put(out, row.mean_vf);
    out += '\n';
  }
  write_file(path, out);
}

}  // namespace rdiff::runner
