#include "dtnlab/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "dtnlab/scenario.hpp"
#include "json.hpp"

namespace dtnlab {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

const char* const kToolVersion = "0.1.0";

namespace {

std::string iso_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ordered_json report_entry(const DiscrepancyReport& r) {
  ordered_json e;
  e["experiment"] = r.experiment;
  e["pass"] = r.pass;
  e["max_discrepancy"] = r.max_discrepancy;
  e["threshold"] = r.threshold;
  e["per_source"] = r.per_source;
  if (!r.ladder_err.empty()) {
    ordered_json l;
    l["h"] = r.ladder_h;
    l["err"] = r.ladder_err;
    l["order"] = r.ladder_order;
    e["ladder"] = l;
  }
  ordered_json d = ordered_json::object();
  for (const auto& [k, v] : r.details) d[k] = v;
  e["details"] = d;
  e["config_hash"] = r.config_hash;
  e["seed"] = r.seed;
  return e;
}

void write_sidecar(const std::string& base, int nx, int ny, double h,
                   std::initializer_list<const char*> fields) {
  ordered_json s;
  s["nx"] = nx;
  s["ny"] = ny;
  s["h"] = h;
  s["dtype"] = "float64";
  s["order"] = "i-fastest";
  s["fields"] = fields;
  write_text_atomic(base + ".json", s.dump(2) + "\n");
}

void write_doubles(const std::string& path, const double* data, size_t count) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("io: cannot write '" + tmp + "'");
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(count * sizeof(double)));
    if (!out) throw std::runtime_error("io: short write to '" + tmp + "'");
  }
  fs::rename(tmp, path);
}

int grid_points(double h) {
  if (!(h > 0.0 && h < 0.5)) throw ScenarioParseError("grid spacing out of range");
  double n = 1.0 / h + 1.0;
  if (std::abs(n - std::round(n)) > 1e-9)
    throw ScenarioParseError("grid spacing must divide the unit interval");
  return static_cast<int>(std::lround(n));
}

std::string sanitize(const std::string& name) {
  std::string s = name;
  for (char& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
  return s;
}

void emit_traces(const fs::path& dir, const DiscrepancyReport& r) {
  const std::string tag = sanitize(r.experiment);
  for (size_t k = 0; k < r.traces1.size(); ++k)
    write_trace_csv(
        (dir / (tag + "_src" + std::to_string(k) + "_a.csv")).string(),
        r.traces1[k]);
  for (size_t k = 0; k < r.traces2.size(); ++k)
    write_trace_csv(
        (dir / (tag + "_src" + std::to_string(k) + "_b.csv")).string(),
        r.traces2[k]);
}

}  // namespace

std::string report_json(const std::vector<DiscrepancyReport>& reports) {
  ordered_json root;
  root["tool_version"] = kToolVersion;
  bool all = true;
  for (const auto& r : reports) all = all && r.pass;
  root["all_pass"] = all;
  root["experiments"] = ordered_json::array();
  for (const auto& r : reports) root["experiments"].push_back(report_entry(r));
  return root.dump(2) + "\n";
}

std::string manifest_json(const RunManifest& m) {
  ordered_json root;
  root["scenario"] = m.scenario_path;
  root["experiments"] = m.experiments;
  root["out_dir"] = m.out_dir;
  root["timestamp"] = m.timestamp;
  root["tool_version"] = m.tool_version;
  root["config_hash"] = m.config_hash;
  root["seed"] = m.seed;
  return root.dump(2) + "\n";
}

void write_text_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("io: cannot write '" + tmp + "'");
    out << text;
    if (!out) throw std::runtime_error("io: short write to '" + tmp + "'");
  }
  fs::rename(tmp, path);
}

void write_trace_csv(const std::string& path, const NeumannTrace& trace) {
  std::string text = "node_index,arclength,t,re,im\n";
  char line[160];
  const int nodes = static_cast<int>(trace.values.rows());
  for (int k = 0; k < nodes; ++k)
    for (int m = 0; m < trace.steps(); ++m) {
      std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g,%.17g\n", k,
                    trace.arclength[static_cast<size_t>(k)], m * trace.dt,
                    trace.values(k, m).real(), trace.values(k, m).imag());
      text += line;
    }
  write_text_atomic(path, text);
}

void write_grid(const std::string& base, const Grid& g, double h) {
  write_doubles(base + ".bin", g.data(), static_cast<size_t>(g.size()));
  write_sidecar(base, static_cast<int>(g.rows()), static_cast<int>(g.cols()), h,
                {"value"});
}

void write_grid(const std::string& base, const CGrid& g, double h) {
  write_doubles(base + ".bin", reinterpret_cast<const double*>(g.data()),
                static_cast<size_t>(2 * g.size()));
  write_sidecar(base, static_cast<int>(g.rows()), static_cast<int>(g.cols()), h,
                {"re", "im"});
}

int cmd_run(const RunArgs& args, std::ostream& log) {
  ScenarioConfig cfg;
  std::vector<std::string> exps = args.experiments;
  try {
    cfg = load_scenario(args.scenario_path, args.seed);
    if (args.grid_h) cfg.n = grid_points(*args.grid_h);
    if (exps.empty()) exps = experiment_names();
    for (const auto& e : exps) {
      const auto& names = experiment_names();
      if (std::find(names.begin(), names.end(), e) == names.end())
        throw ScenarioParseError("unknown experiment '" + e + "'");
    }
  } catch (const ScenarioParseError& e) {
    log << "parse error: " << e.what() << "\n";
    return 2;
  }

  try {
    cfg.validate(exps);
  } catch (const InvariantViolation& e) {
    log << "invariant violation: " << e.what() << "\n";
    return 3;
  }

  const fs::path out(args.out_dir);
  if (fs::exists(out) && !fs::is_empty(out) && !args.force) {
    log << "invariant violation: output_dir: '" << args.out_dir
        << "' exists and is not empty (use --force)\n";
    return 3;
  }
  fs::create_directories(out / "traces");
  fs::create_directories(out / "grids");

  RunManifest man;
  man.scenario_path = args.scenario_path;
  man.experiments = exps;
  man.out_dir = args.out_dir;
  man.timestamp = iso_timestamp();
  man.tool_version = kToolVersion;
  man.config_hash = cfg.hash();
  man.seed = cfg.seed;
  write_text_atomic((out / "manifest.json").string(), manifest_json(man));

  {
    OperatorSpec s1 = cfg.spec1();
    const double h = s1.domain.h;
    const fs::path g = out / "grids";
    write_grid((g / "g11").string(), s1.g11, h);
    write_grid((g / "g12").string(), s1.g12, h);
    write_grid((g / "g22").string(), s1.g22, h);
    write_grid((g / "A1").string(), s1.A1, h);
    write_grid((g / "A2").string(), s1.A2, h);
    write_grid((g / "V").string(), s1.V, h);
  }

  std::vector<DiscrepancyReport> reports;
  bool all_pass = true;
  for (const auto& name : exps) {
    try {
      DiscrepancyReport r = run_experiment(name, cfg);
      log << (r.pass ? "pass" : "FAIL") << "  " << name
          << "  max=" << r.max_discrepancy << "  threshold=" << r.threshold
          << "\n";
      emit_traces(out / "traces", r);
      all_pass = all_pass && r.pass;
      reports.push_back(std::move(r));
    } catch (const InvariantViolation& e) {
      log << "invariant violation: " << e.what() << "\n";
      return 3;
    } catch (const std::exception& e) {
      log << "FAIL  " << name << "  error: " << e.what() << "\n";
      all_pass = false;
      DiscrepancyReport r;
      r.experiment = name;
      r.pass = false;
      r.config_hash = cfg.hash();
      r.seed = cfg.seed;
      r.details.emplace_back("aborted", 1.0);
      reports.push_back(std::move(r));
    }
  }
  write_text_atomic((out / "report.json").string(), report_json(reports));
  log << (all_pass ? "all experiments passed\n" : "some experiments failed\n");
  return all_pass ? 0 : 1;
}

int cmd_convergence(const ConvergenceArgs& args, std::ostream& log) {
  ScenarioConfig cfg;
  std::vector<int> sizes;
  try {
    cfg = load_scenario(args.scenario_path);
    if (args.ladder.empty()) throw ScenarioParseError("empty ladder");
    for (size_t k = 0; k < args.ladder.size(); ++k) {
      if (k > 0 && !(args.ladder[k] < args.ladder[k - 1]))
        throw ScenarioParseError("ladder must be strictly decreasing in h");
      sizes.push_back(grid_points(args.ladder[k]));
    }
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), args.experiment) == names.end())
      throw ScenarioParseError("unknown experiment '" + args.experiment + "'");
  } catch (const ScenarioParseError& e) {
    log << "parse error: " << e.what() << "\n";
    return 2;
  }

  cfg.ladder.clear();
  std::vector<double> errs;
  char line[128];
  log << "h,discrepancy,observed_order\n";
  for (size_t k = 0; k < sizes.size(); ++k) {
    ScenarioConfig c = cfg;
    c.n = sizes[k];
    try {
      c.validate({args.experiment});
      DiscrepancyReport r = run_experiment(args.experiment, c);
      errs.push_back(r.max_discrepancy);
    } catch (const InvariantViolation& e) {
      log << "invariant violation: " << e.what() << "\n";
      return 3;
    }
    if (k == 0)
      std::snprintf(line, sizeof line, "%.10g,%.10g,\n", args.ladder[k],
                    errs[k]);
    else {
      double order = std::log(errs[k - 1] / errs[k]) /
                     std::log(args.ladder[k - 1] / args.ladder[k]);
      std::snprintf(line, sizeof line, "%.10g,%.10g,%.4g\n", args.ladder[k],
                    errs[k], order);
    }
    log << line << std::flush;
  }
  return 0;
}

}  // namespace dtnlab
