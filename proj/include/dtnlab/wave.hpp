#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dtnlab/operator_spec.hpp"

namespace dtnlab {

// Dirichlet datum on one boundary patch: complex amplitude f(s, t) with s the
// arclength along the patch, supported in (t0, t1]. f must vanish for t <= t0
// and be smooth in time (ramped windows); discontinuous data trips a lint
// warning, not an error.
struct BoundarySource {
  std::string patch;
  std::function<complexd(double s, double t)> f;
  double t0 = 0.0;
  double t1 = 0.0;
};

struct NeumannTrace {
  std::string patch;
  Eigen::MatrixXcd values;  // (node, time step)
  std::vector<double> arclength;
  double dt = 0.0;
  double h = 0.0;

  int steps() const { return static_cast<int>(values.cols()); }
};

// Space-time field: one grid per time level, spacing dt.
struct WaveField {
  std::vector<CGrid> steps;
  double dt = 0.0;

  int n_steps() const { return static_cast<int>(steps.size()); }
  double time(int m) const { return m * dt; }
};

// Rectangular notch [xa, xb] x [0, depth] removed from the bottom of the
// domain; its three faces become homogeneous Dirichlet boundary (unless a
// boundary-value callback says otherwise).
struct Notch {
  double xa = 0.0, xb = 0.0, depth = 0.0;
};

enum class NodeClass : unsigned char { interior, dirichlet, outside };

// Node classification for the (possibly notched) domain.
Eigen::Array<unsigned char, Eigen::Dynamic, Eigen::Dynamic> classify_nodes(
    const Domain& d, const std::optional<Notch>& notch);

// Dirichlet values on classified boundary nodes.
using BoundaryValueFn = std::function<complexd(int i, int j, double t)>;

struct SolveOptions {
  double cfl = 0.45;
  std::optional<Notch> notch;
  bool store_field = true;
  // called after each completed level m with the field at time m*dt
  std::function<void(int m, const CGrid&)> observer;
};

// Leapfrog integration of u_tt + L_spatial u = 0 with zero initial data and
// Dirichlet values from bvals. dt = cfl * h / sqrt(lambda_max).
WaveField solve_dirichlet(const OperatorSpec& spec, const BoundaryValueFn& bvals,
                          double T0, const SolveOptions& opts = {});

// Standard IBVP: source data on its patch, homogeneous Dirichlet elsewhere.
WaveField solve_ibvp(const OperatorSpec& spec, const BoundarySource& src,
                     double T0, double cfl = 0.45);

// Metric-normalized conormal derivative of u on the given boundary nodes,
// one-sided second-order in the normal direction.
NeumannTrace neumann_trace(const OperatorSpec& spec, const WaveField& u,
                           const std::string& patch);
NeumannTrace neumann_trace_nodes(const OperatorSpec& spec, const WaveField& u,
                                 const std::vector<BoundaryNode>& nodes);

// Conormal trace of a single field level on given nodes (streaming path).
Eigen::VectorXcd conormal_trace_level(const OperatorSpec& spec, const CGrid& u,
                                      const std::vector<BoundaryNode>& nodes);

// One IBVP per source; traces restricted to patch_out. Per-source solves run
// concurrently (DTN_LAB_THREADS caps the pool); output order matches input.
std::vector<NeumannTrace> dtn_map(const OperatorSpec& spec,
                                  const std::string& patch_in,
                                  const std::string& patch_out,
                                  const std::vector<BoundarySource>& sources,
                                  double T0, double cfl = 0.45);

// Leapfrog energy at the half step between the two levels; conserved up to
// boundary forcing for self-adjoint specs.
double discrete_energy(const OperatorSpec& spec, const CGrid& u_old,
                       const CGrid& u_new, double dt);

double time_step(const OperatorSpec& spec, double cfl);

// relative L2 discrepancy of two traces over nodes x steps
double trace_discrepancy(const NeumannTrace& a, const NeumannTrace& b);

int thread_cap();  // DTN_LAB_THREADS, default hardware_concurrency

}  // namespace dtnlab
