#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dtnlab/harness.hpp"

namespace dtnlab {

// Provenance record written next to every report.
struct RunManifest {
  std::string scenario_path;
  std::vector<std::string> experiments;
  std::string out_dir;
  std::string timestamp;  // ISO 8601 UTC
  std::string tool_version;
  std::string config_hash;
  uint64_t seed = 0;
};

// Deterministic serializations: the report depends only on config + seed,
// so reruns are byte-identical; the manifest carries the timestamp.
std::string report_json(const std::vector<DiscrepancyReport>& reports);
std::string manifest_json(const RunManifest& m);

// tmp file in the same directory, then rename
void write_text_atomic(const std::string& path, const std::string& text);

// columns: node_index, arclength, t, re, im
void write_trace_csv(const std::string& path, const NeumannTrace& trace);

// raw doubles, i fastest, plus a JSON sidecar describing the layout
void write_grid(const std::string& base_path, const Grid& g, double h);
void write_grid(const std::string& base_path, const CGrid& g, double h);

struct RunArgs {
  std::string scenario_path;
  std::vector<std::string> experiments;  // empty = all
  std::string out_dir;
  bool force = false;
  std::optional<uint64_t> seed;
  std::optional<double> grid_h;
};

struct ConvergenceArgs {
  std::string scenario_path;
  std::vector<double> ladder;  // strictly decreasing h values
  std::string experiment = "theorem_forward";
};

// Exit codes: 0 all experiments pass, 1 experiment failure, 2 parse error,
// 3 invariant violation (named in the log).
int cmd_run(const RunArgs& args, std::ostream& log);
int cmd_convergence(const ConvergenceArgs& args, std::ostream& log);

extern const char* const kToolVersion;

}  // namespace dtnlab
