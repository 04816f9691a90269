#include "dtnlab/scenario.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace dtnlab {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& msg) { throw ScenarioParseError(msg); }

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> known) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* k : known)
      if (key == k) ok = true;
    if (!ok) bad("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void get(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    bad(std::string("bad value for '") + key + "': " + e.what());
  }
}

void get_pair(const json& obj, const char* key, double& a, double& b) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    bad(std::string("'") + key + "' must be a pair of numbers");
  a = v[0].get<double>();
  b = v[1].get<double>();
}

void parse_spec(const json& j, SpecRecipe& out) {
  check_keys(j, "spec", {"kind", "bumps", "metric_amp", "field_amp"});
  get(j, "kind", out.kind);
  get(j, "metric_amp", out.metric_amp);
  get(j, "field_amp", out.field_amp);
  if (j.contains("bumps")) {
    const json& bs = j.at("bumps");
    if (!bs.is_array()) bad("'spec.bumps' must be an array");
    out.bumps.clear();
    for (const json& b : bs) {
      if (!b.is_array() || b.size() != 4)
        bad("each spec bump is [amp, cx, cy, w]");
      out.bumps.push_back(
          {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
           b[3].get<double>()});
    }
  }
}

void parse_equivalence(const json& j, uint64_t seed, EquivalenceRecipe& out) {
  check_keys(j, "equivalence",
             {"trivial", "seeded", "diffeo", "gauge", "boundary_fixing"});
  if (j.contains("seeded")) {
    if (!j.at("seeded").get<bool>())
      bad("'equivalence.seeded' must be true when present");
    out = EquivalenceRecipe::seeded(seed);
  }
  get(j, "trivial", out.trivial);
  get(j, "boundary_fixing", out.boundary_fixing);
  if (j.contains("diffeo")) {
    const json& d = j.at("diffeo");
    check_keys(d, "equivalence.diffeo", {"center", "w", "e", "beta"});
    get_pair(d, "center", out.diffeo_cx, out.diffeo_cy);
    get(d, "w", out.diffeo_w);
    get_pair(d, "e", out.diffeo_e1, out.diffeo_e2);
    get(d, "beta", out.diffeo_beta);
  }
  if (j.contains("gauge")) {
    const json& g = j.at("gauge");
    check_keys(g, "equivalence.gauge", {"center", "w", "amp"});
    get_pair(g, "center", out.gauge_cx, out.gauge_cy);
    get(g, "w", out.gauge_w);
    get(g, "amp", out.gauge_amp);
  }
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& text,
                              std::optional<uint64_t> seed_override) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    bad(std::string("JSON syntax: ") + e.what());
  }
  if (!j.is_object()) bad("scenario root must be an object");
  check_keys(j, "scenario",
             {"n", "gamma0", "spec", "equivalence", "sources", "T0", "T",
              "cfl", "tolerances", "ladder", "seed", "slab",
              "lemma21_v_perturb", "influence", "disk"});

  ScenarioConfig c;
  get(j, "n", c.n);
  get(j, "seed", c.seed);
  if (seed_override) c.seed = *seed_override;
  get_pair(j, "gamma0", c.gamma0_a, c.gamma0_b);
  get(j, "T0", c.T0);
  get(j, "T", c.T);
  get(j, "cfl", c.cfl);
  get(j, "lemma21_v_perturb", c.lemma21_v_perturb);
  get(j, "ladder", c.ladder);

  if (j.contains("spec")) parse_spec(j.at("spec"), c.spec);
  if (j.contains("equivalence"))
    parse_equivalence(j.at("equivalence"), c.seed, c.equivalence);
  if (j.contains("sources")) {
    const json& s = j.at("sources");
    check_keys(s, "sources", {"count", "width", "time_window"});
    get(s, "count", c.sources.count);
    get(s, "width", c.sources.width);
    get(s, "time_window", c.sources.time_window);
  }
  if (j.contains("tolerances")) {
    const json& t = j.at("tolerances");
    check_keys(t, "tolerances", {"solver", "chart", "H", "fp", "dtn"});
    get(t, "solver", c.tol.tol_solver);
    get(t, "chart", c.tol.tol_chart);
    get(t, "H", c.tol.tol_H);
    get(t, "fp", c.tol.tol_fp);
    get(t, "dtn", c.tol.tol_dtn);
  }
  if (j.contains("slab")) {
    const json& s = j.at("slab");
    check_keys(s, "slab", {"xa", "xb", "depth"});
    get(s, "xa", c.slab_xa);
    get(s, "xb", c.slab_xb);
    get(s, "depth", c.slab_depth);
  }
  if (j.contains("influence")) {
    const json& s = j.at("influence");
    check_keys(s, "influence", {"slow", "gtilde"});
    get(s, "slow", c.influence_slow);
    get_pair(s, "gtilde", c.gtilde_a, c.gtilde_b);
  }
  if (j.contains("disk")) {
    const json& s = j.at("disk");
    check_keys(s, "disk", {"R", "T_half"});
    get(s, "R", c.disk_R);
    get(s, "T_half", c.focal_T_half);
  }
  return c;
}

ScenarioConfig load_scenario(const std::string& path,
                             std::optional<uint64_t> seed_override) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioParseError("cannot open scenario file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), seed_override);
}

}  // namespace dtnlab
