#include "trustdecay/harness/csv.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "trustdecay/harness/config.hpp"

namespace trustdecay {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell, std::size_t line_no) {
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(cell.c_str(), &end);
  if (cell.empty() || end != cell.c_str() + cell.size() || errno == ERANGE) {
    throw std::invalid_argument("trace csv line " + std::to_string(line_no) + ": bad number '" +
                                cell + "'");
  }
  return v;
}

long long parse_integer(const std::string& cell, std::size_t line_no) {
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(cell.c_str(), &end, 10);
  if (cell.empty() || end != cell.c_str() + cell.size() || errno == ERANGE) {
    throw std::invalid_argument("trace csv line " + std::to_string(line_no) + ": bad integer '" +
                                cell + "'");
  }
  return v;
}

std::string trace_header(std::size_t d) {
  std::string h = "t";
  for (std::size_t i = 0; i < d; ++i) h += ",loss_" + std::to_string(i);
  for (std::size_t i = 0; i < d; ++i) h += ",stress_" + std::to_string(i);
  return h + ",epsilon,switch_flag,regime_id";
}

}  // namespace

std::vector<TraceRow> trace_rows(const Trace& trace) {
  std::vector<TraceRow> rows;
  rows.reserve(trace.rounds.size());
  for (const auto& r : trace.rounds) {
    rows.push_back(TraceRow{r.t,
                            {r.loss.values().begin(), r.loss.values().end()},
                            {r.stress.values().begin(), r.stress.values().end()},
                            r.epsilon_true, r.switch_flag, r.regime_id});
  }
  return rows;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows) {
  const std::size_t d = rows.empty() ? 0 : rows.front().loss.size();
  out << trace_header(d) << '\n';
  for (const auto& r : rows) {
    if (r.loss.size() != d || r.stress.size() != d) {
      throw std::invalid_argument("write_trace_csv: rows have inconsistent dimension");
    }
    out << r.t;
    for (double v : r.loss) out << ',' << format_double(v);
    for (double v : r.stress) out << ',' << format_double(v);
    out << ',' << format_double(r.epsilon) << ',' << (r.switch_flag ? 1 : 0) << ',' << r.regime_id
        << '\n';
  }
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
  write_trace_csv(out, trace_rows(trace));
}

std::vector<TraceRow> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("trace csv: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  if (header.size() < 6 || (header.size() - 4) % 2 != 0) {
    throw std::invalid_argument("trace csv: malformed header");
  }
  const std::size_t d = (header.size() - 4) / 2;
  if (line != trace_header(d)) throw std::invalid_argument("trace csv: unexpected header '" + line + "'");

  std::vector<TraceRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw std::invalid_argument("trace csv line " + std::to_string(line_no) +
                                  ": wrong number of columns");
    }
    TraceRow r;
    const long long t = parse_integer(cells[0], line_no);
    if (t < 1) throw std::invalid_argument("trace csv line " + std::to_string(line_no) + ": t < 1");
    r.t = static_cast<std::size_t>(t);
    for (std::size_t i = 0; i < d; ++i) r.loss.push_back(parse_cell(cells[1 + i], line_no));
    for (std::size_t i = 0; i < d; ++i) r.stress.push_back(parse_cell(cells[1 + d + i], line_no));
    r.epsilon = parse_cell(cells[1 + 2 * d], line_no);
    const long long flag = parse_integer(cells[2 + 2 * d], line_no);
    if (flag != 0 && flag != 1) {
      throw std::invalid_argument("trace csv line " + std::to_string(line_no) +
                                  ": switch_flag must be 0 or 1");
    }
    r.switch_flag = flag == 1;
    r.regime_id = static_cast<int>(parse_integer(cells[3 + 2 * d], line_no));
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_run_csv(std::ostream& out, const RunRecord& run) {
  out << "t,instant_regret,cumulative_regret,lambda_t,epsilon_hat\n";
  double cumulative = 0.0;
  for (std::size_t i = 0; i < run.rounds.size(); ++i) {
    const auto& r = run.rounds[i];
    cumulative += r.instant_regret;
    out << (i + 1) << ',' << format_double(r.instant_regret) << ',' << format_double(cumulative)
        << ',' << format_double(r.lambda) << ',' << format_double(r.epsilon_hat) << '\n';
  }
}

void write_fragility_csv(std::ostream& out, const std::vector<std::pair<double, double>>& rows) {
  out << "epsilon,fragility\n";
  for (const auto& [eps, frag] : rows) out << format_double(eps) << ',' << format_double(frag) << '\n';
}

void write_bandwidth_csv(std::ostream& out,
                         const std::vector<std::pair<double, Bandwidth>>& rows) {
  out << "delta,bandwidth\n";
  for (const auto& [delta, bw] : rows) out << format_double(delta) << ',' << bw.to_string() << '\n';
}

void write_consensus_csv(std::ostream& out, const GossipResult& result) {
  out << "round,consensus_error,mean_regret\n";
  for (std::size_t i = 0; i < result.consensus.size(); ++i) {
    out << (i + 1) << ',' << format_double(result.consensus[i]) << ','
        << format_double(result.mean_regret[i]) << '\n';
  }
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) {
      throw std::runtime_error("cannot create directory '" + path.parent_path().string() +
                               "': " + ec.message());
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
  out.flush();
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace trustdecay
