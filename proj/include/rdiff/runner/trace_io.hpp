#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rdiff/metrics.hpp"

namespace rdiff::runner {

inline constexpr std::string_view kTraceHeader =
    "run,t,algorithm,msd,frechet_variance,consensus_bias,cost,grad_norm_sq";
inline constexpr std::string_view kSummaryHeader = "t,algorithm,mean_msd,mean_vf";

/// Metric trace of one algorithm in one Monte Carlo run.
struct RunTrace {
  std::size_t run = 0;
  std::string algorithm;
  MetricTrace trace;
};

/// Shortest decimal string that parses back to exactly `v`.
std::string format_real(double v);

/// Rows ordered by (run, algorithm, t); absent metrics are empty fields.
/// Throws ContractViolation on an empty input, std::runtime_error on I/O failure.
void write_trace_csv(std::span<const RunTrace> traces, const std::filesystem::path& path);
std::string trace_csv(std::span<const RunTrace> traces);

/// Inverse of write_trace_csv. Throws ParseError on malformed input.
std::vector<RunTrace> read_trace_csv(const std::filesystem::path& path);
std::vector<RunTrace> parse_trace_csv(std::string_view text);

struct SummaryRow {
  std::size_t t = 0;
  std::string algorithm;
  std::optional<double> mean_msd;
  std::optional<double> mean_vf;
};

/// Per-(algorithm, t) arithmetic means across runs; a mean is empty when no
/// run recorded that metric.
std::vector<SummaryRow> summarize(std::span<const RunTrace> traces);
void write_summary_csv(std::span<const SummaryRow> rows, const std::filesystem::path& path);

}  // namespace rdiff::runner
