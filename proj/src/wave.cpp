#include "dtnlab/wave.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <stdexcept>
#include <thread>

namespace dtnlab {

int thread_cap() {
  if (const char* env = std::getenv("DTN_LAB_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

double time_step(const OperatorSpec& spec, double cfl) {
  if (!(cfl > 0.0 && cfl < 1.0))
    throw std::invalid_argument("wave: cfl must be in (0,1)");
  return cfl * spec.domain.h / std::sqrt(spec.lambda_max);
}

Eigen::Array<unsigned char, Eigen::Dynamic, Eigen::Dynamic> classify_nodes(
    const Domain& d, const std::optional<Notch>& notch) {
  Eigen::Array<unsigned char, Eigen::Dynamic, Eigen::Dynamic> cls(d.nx, d.ny);
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      cls(i, j) = static_cast<unsigned char>(
          d.on_boundary(i, j) ? NodeClass::dirichlet : NodeClass::interior);
  if (notch) {
    int ia = static_cast<int>(std::lround(notch->xa / d.h));
    int ib = static_cast<int>(std::lround(notch->xb / d.h));
    int jd = static_cast<int>(std::lround(notch->depth / d.h));
    if (ia < 1 || ib <= ia + 1 || ib > d.nx - 2 || jd < 2 || jd > d.ny - 2)
      throw std::invalid_argument("wave: notch does not fit the grid");
    for (int j = 0; j < jd; ++j)
      for (int i = ia + 1; i < ib; ++i)
        cls(i, j) = static_cast<unsigned char>(NodeClass::outside);
    for (int j = 0; j <= jd; ++j) {
      cls(ia, j) = static_cast<unsigned char>(NodeClass::dirichlet);
      cls(ib, j) = static_cast<unsigned char>(NodeClass::dirichlet);
    }
    for (int i = ia; i <= ib; ++i)
      cls(i, jd) = static_cast<unsigned char>(NodeClass::dirichlet);
  }
  return cls;
}

WaveField solve_dirichlet(const OperatorSpec& spec, const BoundaryValueFn& bvals,
                          double T0, const SolveOptions& opts) {
  const Domain& d = spec.domain;
  // shrink dt so the run ends exactly at T0; CFL bound still respected
  const int M = static_cast<int>(std::ceil(T0 / time_step(spec, opts.cfl) - 1e-9));
  const double dt = T0 / M;
  auto cls = classify_nodes(d, opts.notch);

  auto impose = [&](CGrid& u, double t) {
    for (int j = 0; j < d.ny; ++j)
      for (int i = 0; i < d.nx; ++i) {
        auto c = static_cast<NodeClass>(cls(i, j));
        if (c == NodeClass::dirichlet)
          u(i, j) = bvals(i, j, t);
        else if (c == NodeClass::outside)
          u(i, j) = 0.0;
      }
  };

  WaveField out;
  out.dt = dt;
  CGrid u_prev = CGrid::Zero(d.nx, d.ny);
  CGrid u_cur = CGrid::Zero(d.nx, d.ny);
  impose(u_prev, 0.0);
  impose(u_cur, dt);

  auto emit = [&](int m, const CGrid& u) {
    if (opts.store_field) out.steps.push_back(u);
    if (opts.observer) opts.observer(m, u);
  };
  emit(0, u_prev);
  emit(1, u_cur);

  CGrid u_next(d.nx, d.ny);
  for (int m = 1; m < M; ++m) {
    CGrid Lu = apply_spatial_operator(spec, u_cur);
    u_next = 2.0 * u_cur - u_prev - dt * dt * Lu;
    impose(u_next, (m + 1) * dt);
    for (int j = 0; j < d.ny; ++j)
      for (int i = 0; i < d.nx; ++i)
        if (static_cast<NodeClass>(cls(i, j)) == NodeClass::outside)
          u_next(i, j) = 0.0;

    double amax = u_next.abs().maxCoeff();
    if (!std::isfinite(amax) || amax > 1e12)
      throw std::runtime_error("wave: solution diverged at step " +
                               std::to_string(m + 1));
    u_prev.swap(u_cur);
    u_cur.swap(u_next);
    emit(m + 1, u_cur);
  }
  return out;
}

namespace {

BoundaryValueFn source_bvals(const Domain& d, const BoundarySource& src) {
  const Patch& p = d.patch(src.patch);
  // lint: datum must vanish at the start of its window
  double worst = 0.0;
  for (const auto& bn : p.nodes)
    worst = std::max(worst, std::abs(src.f(bn.arclength, src.t0)));
  if (worst > 1e-9)
    std::cerr << "[dtn-lab] warning: boundary source '" << src.patch
              << "' does not vanish at t0 (|f|=" << worst
              << "); expect order loss\n";

  // dense lookup from node to arclength
  Eigen::ArrayXXd arc = Eigen::ArrayXXd::Constant(d.nx, d.ny, -1.0);
  for (const auto& bn : p.nodes) arc(bn.i, bn.j) = bn.arclength;
  auto f = src.f;
  double t0 = src.t0, t1 = src.t1;
  return [arc, f, t0, t1](int i, int j, double t) -> complexd {
    double s = arc(i, j);
    if (s < 0.0 || t <= t0 || t > t1) return 0.0;
    return f(s, t);
  };
}

}  // namespace

WaveField solve_ibvp(const OperatorSpec& spec, const BoundarySource& src,
                     double T0, double cfl) {
  SolveOptions opts;
  opts.cfl = cfl;
  return solve_dirichlet(spec, source_bvals(spec.domain, src), T0, opts);
}

Eigen::VectorXcd conormal_trace_level(const OperatorSpec& spec, const CGrid& u,
                                      const std::vector<BoundaryNode>& nodes) {
  const Domain& d = spec.domain;
  const double h = d.h;
  const int nx = d.nx, ny = d.ny;
  auto wrap = [&](int i) {
    if (!d.periodic_x) return std::clamp(i, 0, nx - 1);
    return i < 0 ? i + nx : (i >= nx ? i - nx : i);
  };

  Eigen::VectorXcd out(nodes.size());
  for (size_t n = 0; n < nodes.size(); ++n) {
    const auto& bn = nodes[n];
    const int i = bn.i, j = bn.j;
    complexd du1, du2;

    // derivative along x1
    if (std::abs(bn.nu1) > 0.5) {
      int s = bn.nu1 > 0 ? -1 : 1;  // direction into the domain
      du1 = static_cast<double>(s) *
            (-3.0 * u(i, j) + 4.0 * u(i + s, j) - u(i + 2 * s, j)) / (2 * h);
    } else if (d.periodic_x || (i > 0 && i < nx - 1)) {
      du1 = (u(wrap(i + 1), j) - u(wrap(i - 1), j)) / (2 * h);
    } else {
      int s = i == 0 ? 1 : -1;
      du1 = static_cast<double>(s) *
            (-3.0 * u(i, j) + 4.0 * u(i + s, j) - u(i + 2 * s, j)) / (2 * h);
    }

    // derivative along x2
    if (std::abs(bn.nu2) > 0.5) {
      int s = bn.nu2 > 0 ? -1 : 1;
      du2 = static_cast<double>(s) *
            (-3.0 * u(i, j) + 4.0 * u(i, j + s) - u(i, j + 2 * s)) / (2 * h);
    } else if (j > 0 && j < ny - 1) {
      du2 = (u(i, j + 1) - u(i, j - 1)) / (2 * h);
    } else {
      int s = j == 0 ? 1 : -1;
      du2 = static_cast<double>(s) *
            (-3.0 * u(i, j) + 4.0 * u(i, j + s) - u(i, j + 2 * s)) / (2 * h);
    }

    complexd D1 = du1 + I_UNIT * spec.A1(i, j) * u(i, j);
    complexd D2 = du2 + I_UNIT * spec.A2(i, j) * u(i, j);
    double nu1 = bn.nu1, nu2 = bn.nu2;
    complexd flux = (spec.g11(i, j) * D1 + spec.g12(i, j) * D2) * nu1 +
                    (spec.g12(i, j) * D1 + spec.g22(i, j) * D2) * nu2;
    double nrm = spec.g11(i, j) * nu1 * nu1 + 2 * spec.g12(i, j) * nu1 * nu2 +
                 spec.g22(i, j) * nu2 * nu2;
    out(n) = flux / std::sqrt(nrm);
  }
  return out;
}

NeumannTrace neumann_trace_nodes(const OperatorSpec& spec, const WaveField& u,
                                 const std::vector<BoundaryNode>& nodes) {
  NeumannTrace tr;
  tr.dt = u.dt;
  tr.h = spec.domain.h;
  tr.values.resize(nodes.size(), u.n_steps());
  tr.arclength.reserve(nodes.size());
  for (const auto& bn : nodes) tr.arclength.push_back(bn.arclength);
  for (int m = 0; m < u.n_steps(); ++m)
    tr.values.col(m) = conormal_trace_level(spec, u.steps[m], nodes);
  return tr;
}

NeumannTrace neumann_trace(const OperatorSpec& spec, const WaveField& u,
                           const std::string& patch) {
  NeumannTrace tr = neumann_trace_nodes(spec, u, spec.domain.patch(patch).nodes);
  tr.patch = patch;
  return tr;
}

std::vector<NeumannTrace> dtn_map(const OperatorSpec& spec,
                                  const std::string& patch_in,
                                  const std::string& patch_out,
                                  const std::vector<BoundarySource>& sources,
                                  double T0, double cfl) {
  const auto& out_nodes = spec.domain.patch(patch_out).nodes;
  std::vector<NeumannTrace> traces(sources.size());
  if (sources.empty()) return traces;

  const int M =
      static_cast<int>(std::ceil(T0 / time_step(spec, cfl) - 1e-9)) + 1;
  const double dt = T0 / (M - 1);

  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      size_t k = next.fetch_add(1);
      if (k >= sources.size()) return;
      if (sources[k].patch != patch_in)
        throw std::invalid_argument("dtn_map: source not on patch_in");
      NeumannTrace tr;
      tr.patch = patch_out;
      tr.dt = dt;
      tr.h = spec.domain.h;
      tr.values.resize(out_nodes.size(), M);
      for (const auto& bn : out_nodes) tr.arclength.push_back(bn.arclength);
      SolveOptions opts;
      opts.cfl = cfl;
      opts.store_field = false;
      opts.observer = [&](int m, const CGrid& u) {
        if (m < M)
          tr.values.col(m) = conormal_trace_level(spec, u, out_nodes);
      };
      solve_dirichlet(spec, source_bvals(spec.domain, sources[k]), T0, opts);
      traces[k] = std::move(tr);
    }
  };

  int nt = std::min<int>(thread_cap(), static_cast<int>(sources.size()));
  if (nt <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return traces;
}

double discrete_energy(const OperatorSpec& spec, const CGrid& u_old,
                       const CGrid& u_new, double dt) {
  CGrid v = (u_new - u_old) / dt;
  double kin = 0.5 * std::real(weighted_inner(spec, v, v));
  CGrid Lu = apply_spatial_operator(spec, u_new);
  double pot = 0.5 * std::real(weighted_inner(spec, Lu, u_old));
  return kin + pot;
}

double trace_discrepancy(const NeumannTrace& a, const NeumannTrace& b) {
  int rows = static_cast<int>(std::min(a.values.rows(), b.values.rows()));
  int cols = static_cast<int>(std::min(a.values.cols(), b.values.cols()));
  double num = (a.values.topLeftCorner(rows, cols) -
                b.values.topLeftCorner(rows, cols))
                   .norm();
  double den = a.values.topLeftCorner(rows, cols).norm();
  return den > 0 ? num / den : num;
}

}  // namespace dtnlab
