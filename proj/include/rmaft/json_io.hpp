#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "rmaft/checkpoint.hpp"
#include "rmaft/errors.hpp"
#include "rmaft/logging.hpp"
#include "rmaft/order_graph.hpp"
#include "rmaft/simulator.hpp"
#include "rmaft/topology.hpp"

namespace rmaft {

/// Malformed JSON text. Line and column are 1-based.
class JsonParseError : public ScenarioError {
 public:
  JsonParseError(const std::string& what, std::size_t line, std::size_t column)
      : ScenarioError(what), line_(line), column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Unknown keys and wrongly typed values are rejected with ScenarioError.
Scenario scenario_from_json(std::string_view text);
Scenario load_scenario(const std::string& path);
std::string scenario_to_json(const Scenario& s);

std::string report_to_json(const Report& r);

/// {"levels": [{"name": ..., "count": ..., "pdf": {"A": ..., "lambda": ...}}]}
FdHierarchy profile_from_json(std::string_view text);
std::string profile_to_json(const FdHierarchy& h);
/// A file path, or "tsubame2" for the built-in profile.
FdHierarchy load_profile(const std::string& spec);

/// One JSON object per line.
void write_trace_jsonl(std::ostream& out, const OrderGraph& graph);
void write_logs_jsonl(std::ostream& out, const FtLog& log);
void write_replay_jsonl(std::ostream& out, const std::vector<Determinant>& trace);

/// Flat little-endian words, no header.
void write_payload(std::ostream& out, std::span<const Word> payload);
std::vector<Word> read_payload(std::istream& in);

std::string read_file(const std::string& path);

}  // namespace rmaft
