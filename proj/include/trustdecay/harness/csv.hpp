#pragma once

// CSV emission and parsing. Floats are written with 17 significant digits
// so that every value parses back to the identical double.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "trustdecay/distributed.hpp"
#include "trustdecay/environments.hpp"
#include "trustdecay/metrics.hpp"

namespace trustdecay {

// The columns of a trace file.
struct TraceRow {
  std::size_t t = 0;
  std::vector<double> loss;
  std::vector<double> stress;
  double epsilon = 0.0;
  bool switch_flag = false;
  int regime_id = 0;

  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

std::vector<TraceRow> trace_rows(const Trace& trace);

// t,loss_0..loss_{d-1},stress_0..stress_{d-1},epsilon,switch_flag,regime_id
void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows);
void write_trace_csv(std::ostream& out, const Trace& trace);
// Throws std::invalid_argument on a missing or malformed header or row.
std::vector<TraceRow> read_trace_csv(std::istream& in);

// t,instant_regret,cumulative_regret,lambda_t,epsilon_hat
void write_run_csv(std::ostream& out, const RunRecord& run);
// epsilon,fragility
void write_fragility_csv(std::ostream& out, const std::vector<std::pair<double, double>>& rows);
// delta,bandwidth ("inf" when unbounded)
void write_bandwidth_csv(std::ostream& out,
                         const std::vector<std::pair<double, Bandwidth>>& rows);
// round,consensus_error,mean_regret
void write_consensus_csv(std::ostream& out, const GossipResult& result);

// Writes `content` to `path`, creating parent directories. Throws
// std::runtime_error when the file cannot be written.
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace trustdecay
