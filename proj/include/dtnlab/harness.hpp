#pragma once

#include <array>
#include <cstdint>
#include <utility>

#include "dtnlab/charts.hpp"
#include "dtnlab/gauge.hpp"

namespace dtnlab {

// A scenario invariant failed; `invariant` names it for machine reporting.
class InvariantViolation : public std::invalid_argument {
 public:
  InvariantViolation(std::string inv, const std::string& what)
      : std::invalid_argument(inv + ": " + what), invariant(std::move(inv)) {}
  std::string invariant;
};

// Declarative recipe for the base coefficients; closures are built on demand
// so the whole config stays hashable.
struct SpecRecipe {
  std::string kind = "flat";  // flat | conformal | random
  // conformal: speed bumps (amp, cx, cy, w)
  std::vector<std::array<double, 4>> bumps;
  // random: amplitudes for the seeded smooth fields
  double metric_amp = 0.12;
  double field_amp = 0.3;
};

// Manufactured equivalence: interior bump displacement plus a unimodular
// gauge factor with bump phase. boundary_fixing = false deliberately slides
// the diffeo bump onto the control patch (negative control).
struct EquivalenceRecipe {
  bool trivial = false;
  double diffeo_cx = 0.5, diffeo_cy = 0.6, diffeo_w = 0.3;
  double diffeo_e1 = 0.6, diffeo_e2 = 0.4, diffeo_beta = 0.05;
  double gauge_cx = 0.45, gauge_cy = 0.6, gauge_w = 0.3, gauge_amp = 0.8;
  bool boundary_fixing = true;

  // randomized parameters (support away from the bottom edge) under seed
  static EquivalenceRecipe seeded(uint64_t seed);
};

struct Tolerances {
  double tol_solver = 5e-3;
  double tol_chart = 1e-3;
  double tol_H = 1e-6;
  double tol_fp = 1e-3;
  double tol_dtn = 1e-2;
};

// Boundary Dirichlet suite: `count` space bumps along Gamma0, sin^4 windows,
// centers evenly spaced with seeded jitter.
struct SourceSuite {
  int count = 8;
  double width = 0.25;        // spatial support, must stay >= 6h
  double time_window = 0.3;   // temporal support
};

struct ScenarioConfig {
  int n = 65;                         // grid nodes per side
  double gamma0_a = 0.0, gamma0_b = 1.0;
  SpecRecipe spec;
  EquivalenceRecipe equivalence;
  SourceSuite sources;
  double T0 = 2.2;   // global horizon (theorem forward, restriction)
  double T = 0.5;    // local horizon (normal-form agreement, influence sets)
  double cfl = 0.4;
  Tolerances tol;
  std::vector<int> ladder;  // optional grid sizes, coarse to fine
  uint64_t seed = 1;

  // restriction round-trip: B1 = [slab_xa, slab_xb] x [0, slab_depth]
  double slab_xa = 0.2, slab_xb = 0.8, slab_depth = 0.25;

  // normal-form negative control: V perturbation amplitude inside the triangle
  double lemma21_v_perturb = 0.0;

  // influence inclusion: speed drop on the strip above [gtilde_a, gtilde_b]
  double influence_slow = 0.0;
  double gtilde_a = 0.3, gtilde_b = 0.7;

  // focal transfer: launch-circle radius and chart depth
  double disk_R = 0.8, focal_T_half = 0.6;

  std::string canonical() const;  // stable textual form, input to the hash
  std::string hash() const;       // 64-bit FNV-1a of canonical(), hex

  // Throws InvariantViolation. The theorem-forward horizon bound
  // T0 > 2 max d1(x, Gamma0) is checked only when that experiment is listed.
  void validate(const std::vector<std::string>& experiments) const;

  CoefficientSet base_coefficients() const;
  Domain make_domain(int n_override = 0) const;
  OperatorSpec spec1(int n_override = 0) const;
  Diffeo diffeo() const;
  GaugeElement gauge() const;
  // equivalence applied; equals spec1 verbatim when trivial
  OperatorSpec spec2(int n_override = 0) const;
  std::vector<BoundarySource> source_suite(int n_override = 0) const;
};

struct DiscrepancyReport {
  std::string experiment;
  std::vector<double> per_source;
  double max_discrepancy = 0.0;
  double threshold = 0.0;
  std::vector<double> ladder_h, ladder_err, ladder_order;
  std::vector<std::pair<std::string, double>> details;
  bool pass = false;
  std::string config_hash;
  uint64_t seed = 0;
  // traces of the finest-grid run, for CSV emission (may be empty)
  std::vector<NeumannTrace> traces1, traces2;

  double detail(const std::string& key) const;
};

// Equivalence implies equal D-to-N on Gamma0; relative trace discrepancies
// over the source suite, optionally across the grid ladder.
DiscrepancyReport experiment_theorem_forward(const ScenarioConfig& cfg);

// Normal-form solutions of a manufactured equivalent pair agree on the
// triangle region {0 <= y_n <= T/2, y_n <= t <= T - y_n}; also probes
// normal-form coefficient agreement over the chart.
DiscrepancyReport experiment_lemma21_agreement(const ScenarioConfig& cfg);

// Restricted D-to-N agreement on (delta, T0 - delta) with runtime-computed
// delta, then the gluing reconstruction through the notched outer problem.
DiscrepancyReport experiment_restriction_roundtrip(const ScenarioConfig& cfg);

// det(Dphi)^2 = det ghat / det g stays bounded where det ghat is bounded;
// disk chart against the polar closed form, flat chart as control.
DiscrepancyReport experiment_focal_transfer(const ScenarioConfig& cfg);

// Influence-set inclusion for a pair agreeing off the Gamma-tilde strip.
DiscrepancyReport experiment_influence_inclusion(const ScenarioConfig& cfg);

const std::vector<std::string>& experiment_names();
DiscrepancyReport run_experiment(const std::string& name,
                                 const ScenarioConfig& cfg);

// CFL values giving every spec the same time step (the smallest of the
// individual steps), so traces and fields can be compared columnwise.
std::vector<double> synced_cfls(const std::vector<const OperatorSpec*>& specs,
                                double cfl);

}  // namespace dtnlab
