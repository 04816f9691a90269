#include "dtnlab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

namespace dtnlab {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double sin4(double q, double P) {
  if (q <= 0.0 || q >= P) return 0.0;
  double s = std::sin(M_PI * q / P);
  return s * s * s * s;
}

// seeded low-order Fourier sum, amplitude amp
ScalarFn seeded_field(std::mt19937_64& rng, double amp, int modes = 2) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  struct Term {
    double c, kx, ky, px, py;
  };
  std::vector<Term> terms;
  double norm = 0.0;
  for (int mx = 0; mx <= modes; ++mx)
    for (int my = 0; my <= modes; ++my) {
      Term t{unif(rng) / (1.0 + mx * mx + my * my), M_PI * mx, M_PI * my,
             M_PI * unif(rng), M_PI * unif(rng)};
      norm += std::abs(t.c);
      terms.push_back(t);
    }
  double scale = amp / norm;
  return [terms, scale](double x, double y) {
    double s = 0.0;
    for (const auto& t : terms)
      s += t.c * std::cos(t.kx * x + t.px) * std::cos(t.ky * y + t.py);
    return s * scale;
  };
}

double order_between(double h0, double e0, double h1, double e1) {
  if (e0 <= 0.0 || e1 <= 0.0 || h0 == h1) return 0.0;
  return std::log(e0 / e1) / std::log(h0 / h1);
}

void stamp(DiscrepancyReport& r, const ScenarioConfig& cfg,
           const std::string& name) {
  r.experiment = name;
  r.config_hash = cfg.hash();
  r.seed = cfg.seed;
}

}  // namespace

EquivalenceRecipe EquivalenceRecipe::seeded(uint64_t seed) {
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  EquivalenceRecipe r;
  // the displacement must fix the whole boundary: support strictly inside
  // the square, and at least 0.12 above the control edge
  r.diffeo_w = 0.2 + 0.08 * unif(rng);
  r.diffeo_cx =
      r.diffeo_w + 0.04 + (1.0 - 2.0 * r.diffeo_w - 0.08) * unif(rng);
  r.diffeo_cy =
      r.diffeo_w + 0.12 + (1.0 - 2.0 * r.diffeo_w - 0.16) * unif(rng);
  double ang = 2.0 * M_PI * unif(rng);
  r.diffeo_e1 = std::cos(ang);
  r.diffeo_e2 = std::sin(ang);
  // amplitude tied to the width so the displacement slope stays bounded
  r.diffeo_beta = r.diffeo_w * (0.08 + 0.06 * unif(rng));
  r.gauge_w = 0.26 + 0.1 * unif(rng);
  r.gauge_cx = 0.35 + 0.3 * unif(rng);
  r.gauge_cy = r.gauge_w + 0.12 + 0.3 * unif(rng);
  r.gauge_amp = 0.3 + 0.4 * unif(rng);
  return r;
}

std::string ScenarioConfig::canonical() const {
  std::ostringstream os;
  os << "n=" << n << ";g0=" << fmt(gamma0_a) << "," << fmt(gamma0_b)
     << ";spec=" << spec.kind;
  for (const auto& b : spec.bumps)
    os << ",(" << fmt(b[0]) << "," << fmt(b[1]) << "," << fmt(b[2]) << ","
       << fmt(b[3]) << ")";
  os << "," << fmt(spec.metric_amp) << "," << fmt(spec.field_amp);
  const EquivalenceRecipe& e = equivalence;
  os << ";eq=" << e.trivial << "," << fmt(e.diffeo_cx) << ","
     << fmt(e.diffeo_cy) << "," << fmt(e.diffeo_w) << "," << fmt(e.diffeo_e1)
     << "," << fmt(e.diffeo_e2) << "," << fmt(e.diffeo_beta) << ","
     << fmt(e.gauge_cx) << "," << fmt(e.gauge_cy) << "," << fmt(e.gauge_w)
     << "," << fmt(e.gauge_amp) << "," << e.boundary_fixing;
  os << ";src=" << sources.count << "," << fmt(sources.width) << ","
     << fmt(sources.time_window);
  os << ";T0=" << fmt(T0) << ";T=" << fmt(T) << ";cfl=" << fmt(cfl);
  os << ";tol=" << fmt(tol.tol_solver) << "," << fmt(tol.tol_chart) << ","
     << fmt(tol.tol_H) << "," << fmt(tol.tol_fp) << "," << fmt(tol.tol_dtn);
  os << ";ladder=";
  for (int l : ladder) os << l << ",";
  os << ";seed=" << seed;
  os << ";slab=" << fmt(slab_xa) << "," << fmt(slab_xb) << ","
     << fmt(slab_depth);
  os << ";l21v=" << fmt(lemma21_v_perturb);
  os << ";slow=" << fmt(influence_slow) << "," << fmt(gtilde_a) << ","
     << fmt(gtilde_b);
  os << ";disk=" << fmt(disk_R) << "," << fmt(focal_T_half);
  return os.str();
}

std::string ScenarioConfig::hash() const {
  uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void ScenarioConfig::validate(const std::vector<std::string>& exps) const {
  auto fail = [](const std::string& inv, const std::string& msg) {
    throw InvariantViolation(inv, msg);
  };
  if (n < 8) fail("grid_size", "need at least 8 nodes per side");
  if (!(gamma0_a < gamma0_b)) fail("gamma0_interval", "empty control patch");
  if (!(tol.tol_solver > 0 && tol.tol_chart > 0 && tol.tol_H > 0 &&
        tol.tol_fp > 0 && tol.tol_dtn > 0))
    fail("tolerances_positive", "all tolerances must be positive");
  if (!(cfl > 0.0 && cfl < 1.0)) fail("cfl_range", "cfl must be in (0,1)");
  if (!(T0 > 0.0 && T > 0.0 && T <= T0))
    fail("horizons", "need 0 < T <= T0");
  double h = 1.0 / (n - 1);
  if (sources.count < 1 || sources.time_window <= 0.0)
    fail("source_suite", "need at least one source with a time window");
  if (sources.width < 6.0 * h)
    fail("source_width", "source width below 6h breaks the solver order");
  for (size_t k = 1; k < ladder.size(); ++k)
    if (ladder[k] <= ladder[k - 1])
      fail("ladder_monotone", "grid ladder must be strictly refining");
  bool theorem = std::find(exps.begin(), exps.end(), "theorem_forward") !=
                 exps.end();
  if (theorem) {
    // T0 > 2 max_x d1(x, Gamma0); the distance field is evaluated on a
    // capped grid -- it is a smooth O(h) quantity, not worth the fine grid
    OperatorSpec s = spec1(std::min(n, 65));
    Grid dist = geodesic_distance(s, patch_mask(s.domain, "gamma0"));
    if (!(T0 > 2.0 * dist.maxCoeff()))
      fail("theorem_horizon", "T0 must exceed twice the fill-in distance");
  }
  if (std::find(exps.begin(), exps.end(), "restriction_roundtrip") !=
      exps.end()) {
    if (!(slab_xa < gamma0_a && gamma0_b < slab_xb + 1e-12) ||
        slab_xa < h || slab_xb > 1.0 - h || slab_depth < 2 * h)
      fail("slab_geometry", "B1 must contain Gamma0 and fit the grid");
  }
}

CoefficientSet ScenarioConfig::base_coefficients() const {
  if (spec.kind == "flat") return CoefficientSet::flat();
  if (spec.kind == "conformal") {
    std::vector<std::pair<double, RadialBump>> bumps;
    for (const auto& b : spec.bumps)
      bumps.push_back({b[0], RadialBump{b[1], b[2], b[3]}});
    return conformal_metric(bumps);
  }
  if (spec.kind == "lens") {
    // g^{jk} = (1 + beta (x1 - 1/2)^2) delta: focusing for beta > 0 with the
    // axial caustic at t = pi / (2 sqrt(beta))
    double beta = spec.metric_amp;
    CoefficientSet s = CoefficientSet::flat();
    auto g = [beta](double x, double) {
      double d = x - 0.5;
      return 1.0 + beta * d * d;
    };
    s.g11 = g;
    s.g22 = g;
    return s;
  }
  if (spec.kind == "random") {
    std::mt19937_64 rng(seed);
    auto c = seeded_field(rng, spec.metric_amp);
    auto sh = seeded_field(rng, 0.4 * spec.metric_amp);
    auto a1 = seeded_field(rng, spec.field_amp);
    auto a2 = seeded_field(rng, spec.field_amp);
    auto v = seeded_field(rng, spec.field_amp);
    CoefficientSet s;
    s.g11 = [c](double x, double y) { return 1.0 + c(x, y); };
    s.g22 = [c](double x, double y) { return 1.0 - 0.5 * c(x, y); };
    s.g12 = sh;
    s.A1 = [a1](double x, double y) { return complexd(a1(x, y)); };
    s.A2 = [a2](double x, double y) { return complexd(a2(x, y)); };
    s.V = [v](double x, double y) { return complexd(v(x, y)); };
    return s;
  }
  throw InvariantViolation("spec_recipe", "unknown kind '" + spec.kind + "'");
}

Domain ScenarioConfig::make_domain(int n_override) const {
  return Domain::unit_square(n_override ? n_override : n, gamma0_a, gamma0_b);
}

OperatorSpec ScenarioConfig::spec1(int n_override) const {
  return OperatorSpec::from_closures(make_domain(n_override),
                                     base_coefficients());
}

Diffeo ScenarioConfig::diffeo() const {
  const EquivalenceRecipe& e = equivalence;
  // the negative control drags the bump onto the control patch
  double cy = e.boundary_fixing ? e.diffeo_cy : 0.5 * e.diffeo_w;
  return Diffeo::window_displacement(Vec2(e.diffeo_cx, cy), e.diffeo_w,
                                     Vec2(e.diffeo_e1, e.diffeo_e2),
                                     e.diffeo_beta);
}

GaugeElement ScenarioConfig::gauge() const {
  const EquivalenceRecipe& e = equivalence;
  WindowBump b{e.gauge_cx, e.gauge_cy, e.gauge_w};
  double amp = e.gauge_amp;
  return GaugeElement::phase(
      [b, amp](double x, double y) { return amp * b.value(x, y); },
      e.gauge_cy - e.gauge_w > 0.0);
}

OperatorSpec ScenarioConfig::spec2(int n_override) const {
  OperatorSpec s1 = spec1(n_override);
  if (equivalence.trivial) return s1;
  Diffeo phi = diffeo();
  GaugeElement c = gauge();
  if (phi.identity_on_gamma0 && c.fixed_on_gamma0)
    return compose_equivalence(s1, phi, c);
  // violated-hypothesis variant: apply the factors without the flag guard
  return gauge_transform_operator(pullback_operator(s1, phi), c);
}

std::vector<BoundarySource> ScenarioConfig::source_suite(int n_override) const {
  int ng = n_override ? n_override : n;
  double h = 1.0 / (ng - 1);
  double a = std::max(gamma0_a, 0.0), b = std::min(gamma0_b, 1.0);
  double w = std::max(sources.width, 6.0 * h);
  double lo = a + 0.5 * w, hi = b - 0.5 * w;
  if (hi < lo) lo = hi = 0.5 * (a + b);
  std::mt19937_64 rng(seed ^ 0xc2b2ae3d27d4eb4fULL);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<BoundarySource> out;
  double tw = sources.time_window;
  for (int k = 0; k < sources.count; ++k) {
    double frac = sources.count == 1 ? 0.5 : double(k) / (sources.count - 1);
    double c = lo + frac * (hi - lo);
    if (sources.count > 1)
      c += 0.2 * (hi - lo) / (sources.count - 1) * unif(rng);
    c = std::clamp(c, lo, hi);
    BoundarySource s;
    s.patch = "gamma0";
    s.t0 = 0.0;
    s.t1 = tw;
    s.f = [c, w, tw](double arc, double t) {
      return complexd(sin4(arc - c + 0.5 * w, w) * sin4(t, tw));
    };
    out.push_back(std::move(s));
  }
  return out;
}

double DiscrepancyReport::detail(const std::string& key) const {
  for (const auto& [k, v] : details)
    if (k == key) return v;
  throw std::out_of_range("report: no detail '" + key + "'");
}

std::vector<double> synced_cfls(const std::vector<const OperatorSpec*>& specs,
                                double cfl) {
  double dt = 1e300;
  for (const OperatorSpec* s : specs) dt = std::min(dt, time_step(*s, cfl));
  std::vector<double> out;
  for (const OperatorSpec* s : specs)
    out.push_back(dt * std::sqrt(s->lambda_max) / s->domain.h);
  return out;
}

DiscrepancyReport experiment_theorem_forward(const ScenarioConfig& cfg) {
  DiscrepancyReport r;
  stamp(r, cfg, "theorem_forward");
  r.threshold = cfg.tol.tol_dtn;

  std::vector<int> grids = cfg.ladder.empty() ? std::vector<int>{cfg.n}
                                              : cfg.ladder;
  for (size_t gi = 0; gi < grids.size(); ++gi) {
    int ng = grids[gi];
    OperatorSpec s1 = cfg.spec1(ng);
    OperatorSpec s2 = cfg.spec2(ng);
    auto cf = synced_cfls({&s1, &s2}, cfg.cfl);
    auto sources = cfg.source_suite(ng);
    auto tr1 = dtn_map(s1, "gamma0", "gamma0", sources, cfg.T0, cf[0]);
    auto tr2 = dtn_map(s2, "gamma0", "gamma0", sources, cfg.T0, cf[1]);
    std::vector<double> per;
    double worst = 0.0;
    for (size_t k = 0; k < tr1.size(); ++k) {
      per.push_back(trace_discrepancy(tr1[k], tr2[k]));
      worst = std::max(worst, per.back());
    }
    r.ladder_h.push_back(1.0 / (ng - 1));
    r.ladder_err.push_back(worst);
    if (gi + 1 == grids.size()) {
      r.per_source = per;
      r.max_discrepancy = worst;
      r.traces1 = std::move(tr1);
      r.traces2 = std::move(tr2);
    }
  }
  for (size_t k = 1; k < r.ladder_err.size(); ++k)
    r.ladder_order.push_back(order_between(r.ladder_h[k - 1],
                                           r.ladder_err[k - 1], r.ladder_h[k],
                                           r.ladder_err[k]));
  r.pass = r.max_discrepancy < r.threshold;
  return r;
}

DiscrepancyReport experiment_lemma21_agreement(const ScenarioConfig& cfg) {
  DiscrepancyReport r;
  stamp(r, cfg, "lemma21_agreement");
  r.threshold = 5.0 * cfg.tol.tol_solver;

  OperatorSpec s1 = cfg.spec1();
  OperatorSpec s2 = cfg.spec2();
  if (cfg.lemma21_v_perturb != 0.0) {
    // violated hypothesis: extra V inside the triangle region of spec 2
    CoefficientSet c = *s2.closures;
    WindowBump b{0.5 * (cfg.gamma0_a + cfg.gamma0_b), 0.25 * cfg.T,
                 0.25 * cfg.T};
    ComplexFn V0 = c.V;
    double amp = cfg.lemma21_v_perturb;
    c.V = [V0, b, amp](double x, double y) {
      return V0(x, y) + amp * b.value(x, y);
    };
    s2 = OperatorSpec::from_closures(s2.domain, c);
  }

  const double dy = s1.domain.h;
  const double Th = std::floor(0.5 * cfg.T / dy + 1e-9) * dy;  // grid-snapped
  SemigeodesicChart ch1 = build_chart(s1, "gamma0", Th, dy);
  SemigeodesicChart ch2 = build_chart(s2, "gamma0", Th, dy);

  Grid At1g, An1g, At2g, An2g;
  pullback_covector(ch1, s1, At1g, An1g);
  pullback_covector(ch2, s2, At2g, An2g);
  GaugeNormalization gn1 = gauge_normalize(ch1, An1g, At1g);
  GaugeNormalization gn2 = gauge_normalize(ch2, An2g, At2g);

  // normal-form coefficient agreement over the chart
  NormalFormOperator nf1 = to_normal_form(s1, ch1, gn1);
  NormalFormOperator nf2 = to_normal_form(s2, ch2, gn2);
  ProbedCoefficients p1 = nf1.probe(), p2 = nf2.probe();
  // probe stencils reach two nodes out; stay that far inside both masks so
  // the off-mask filler never contaminates the comparison
  auto deep = [&](int is, int in) {
    for (int dj = -2; dj <= 2; ++dj)
      for (int di = -2; di <= 2; ++di) {
        int i = std::clamp(is + di, 0, ch1.ns - 1);
        int j = std::clamp(in + dj, 0, ch1.nn - 1);
        if (!ch1.mask(i, j) || !ch2.mask(i, j)) return false;
      }
    return true;
  };
  // metric and magnetic probes converge cleanly; the V probe second-
  // differences the tabulated multiplier and is reported separately
  double coef_diff = 0.0, coef_v_diff = 0.0;
  int coef_nodes = 0;
  for (int in = 0; in < ch1.nn; ++in)
    for (int is = 0; is < ch1.ns; ++is) {
      if (!deep(is, in)) continue;
      if (!p1.valid(is, in) || !p2.valid(is, in)) continue;
      double dmax = std::abs(p1.g11(is, in) - p2.g11(is, in));
      dmax = std::max(dmax, std::abs(p1.g22(is, in) - p2.g22(is, in)));
      dmax = std::max(dmax, std::abs(p1.A1(is, in) - p2.A1(is, in)));
      coef_diff = std::max(coef_diff, dmax);
      coef_v_diff =
          std::max(coef_v_diff, std::abs(p1.V(is, in) - p2.V(is, in)));
      ++coef_nodes;
    }
  r.details.push_back({"coef_diff", coef_diff});
  r.details.push_back({"coef_v_diff", coef_v_diff});
  r.details.push_back({"coef_nodes", double(coef_nodes)});

  auto cf = synced_cfls({&s1, &s2}, cfg.cfl);
  // source centered over the chart so the triangle region carries signal
  BoundarySource src;
  src.patch = "gamma0";
  src.t0 = 0.0;
  src.t1 = cfg.sources.time_window;
  double c0 = 0.5 * (cfg.gamma0_a + cfg.gamma0_b);
  double w0 = std::max(cfg.sources.width, 6.0 * dy);
  double tw = cfg.sources.time_window;
  src.f = [c0, w0, tw](double arc, double t) {
    return complexd(sin4(arc - c0 + 0.5 * w0, w0) * sin4(t, tw));
  };
  WaveField u1 = solve_ibvp(s1, src, cfg.T, cf[0]);
  WaveField u2 = solve_ibvp(s2, src, cfg.T, cf[1]);
  WaveField w1 = transform_solution(u1, s1.domain, ch1, gn1);
  WaveField w2 = transform_solution(u2, s2.domain, ch2, gn2);

  double diff = 0.0, scale = 0.0;
  int m_last = std::min(w1.n_steps(), w2.n_steps());
  for (int m = 0; m < m_last; ++m) {
    double t = m * w1.dt;
    for (int in = 0; in < ch1.nn; ++in) {
      double yn = in * dy;
      if (yn > Th + 1e-12 || t < yn - 1e-12 || t > cfg.T - yn + 1e-12)
        continue;
      for (int is = 0; is < ch1.ns; ++is) {
        if (!ch1.mask(is, in) || !ch2.mask(is, in)) continue;
        diff = std::max(diff, std::abs(w1.steps[m](is, in) -
                                       w2.steps[m](is, in)));
        scale = std::max(scale, std::abs(w1.steps[m](is, in)));
      }
    }
  }
  r.details.push_back({"field_scale", scale});
  r.max_discrepancy = scale > 0.0 ? diff / scale : diff;
  r.pass = r.max_discrepancy < r.threshold;
  return r;
}

DiscrepancyReport experiment_restriction_roundtrip(const ScenarioConfig& cfg) {
  DiscrepancyReport r;
  stamp(r, cfg, "restriction_roundtrip");
  r.threshold = cfg.tol.tol_dtn;

  OperatorSpec s1 = cfg.spec1();
  OperatorSpec s3 = cfg.spec2();
  const Domain& d = s1.domain;
  const int ia = static_cast<int>(std::lround(cfg.slab_xa / d.h));
  const int ib = static_cast<int>(std::lround(cfg.slab_xb / d.h));
  const int jd = static_cast<int>(std::lround(cfg.slab_depth / d.h));

  // delta = max distance from B1 to Gamma0, computed at runtime
  Grid dist = geodesic_distance(s1, patch_mask(d, "gamma0"));
  double delta = 0.0;
  for (int j = 0; j <= jd; ++j)
    for (int i = ia; i <= ib; ++i) delta = std::max(delta, dist(i, j));
  r.details.push_back({"delta", delta});
  if (2.0 * delta >= cfg.T0)
    throw InvariantViolation("restriction_window",
                             "T0 leaves no restricted time window");

  auto cf = synced_cfls({&s1, &s3}, cfg.cfl);
  auto sources = cfg.source_suite();

  // direction 2.4: restricted D-to-N on the swapped boundary over
  // (delta, T0 - delta)
  auto tr1 = dtn_map(s1, "gamma0", "top", sources, cfg.T0, cf[0]);
  auto tr3 = dtn_map(s3, "gamma0", "top", sources, cfg.T0, cf[1]);
  double restricted = 0.0;
  for (size_t k = 0; k < tr1.size(); ++k) {
    int c0 = static_cast<int>(std::ceil(delta / tr1[k].dt));
    int c1 = static_cast<int>(std::floor((cfg.T0 - delta) / tr1[k].dt));
    c1 = std::min<int>(c1, tr1[k].steps() - 1);
    if (c1 <= c0) continue;
    NeumannTrace a = tr1[k], b = tr3[k];
    a.values = tr1[k].values.middleCols(c0, c1 - c0 + 1).eval();
    b.values = tr3[k].values.middleCols(c0, c1 - c0 + 1).eval();
    restricted = std::max(restricted, trace_discrepancy(a, b));
    if (k == 0) {
      r.traces1 = {tr1[k]};
      r.traces2 = {tr3[k]};
    }
  }
  r.details.push_back({"restricted_disc", restricted});

  // direction 2.5: glue the outer notched solve with u1 on B1
  BoundarySource src = sources[0];
  WaveField u1 = solve_ibvp(s1, src, cfg.T0, cf[0]);
  WaveField u3 = solve_ibvp(s3, src, cfg.T0, cf[1]);

  double iface = 0.0, iface_scale = 0.0;
  auto on_iface = [&](int i, int j) {
    if (j == jd && i >= ia && i <= ib) return true;
    return (i == ia || i == ib) && j >= 0 && j < jd;
  };
  for (int m = 0; m < std::min(u1.n_steps(), u3.n_steps()); ++m)
    for (int j = 0; j <= jd; ++j)
      for (int i = ia; i <= ib; ++i) {
        if (!on_iface(i, j)) continue;
        iface = std::max(iface, std::abs(u1.steps[m](i, j) -
                                         u3.steps[m](i, j)));
        iface_scale = std::max(iface_scale, std::abs(u1.steps[m](i, j)));
      }
  double iface_rel = iface_scale > 0.0 ? iface / iface_scale : iface;
  r.details.push_back({"interface_residual", iface_rel});

  SolveOptions opts;
  opts.cfl = cf[1];
  opts.notch = Notch{ia * d.h, ib * d.h, jd * d.h};
  double dt = u1.dt;
  int mmax = u1.n_steps() - 1;
  auto bvals = [&u1, dt, mmax](int i, int j, double t) {
    int m = std::min(static_cast<int>(std::lround(t / dt)), mmax);
    return u1.steps[m](i, j);
  };
  WaveField uo = solve_dirichlet(s3, bvals, cfg.T0, opts);

  // glued field vs the direct solve at the final level
  const CGrid& direct = u3.steps.back();
  const CGrid& inner = u1.steps.back();
  const CGrid& outer = uo.steps.back();
  double glue = 0.0, gscale = direct.abs().maxCoeff();
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i) {
      bool in_b1 = i >= ia && i <= ib && j <= jd;
      complexd g = in_b1 ? inner(i, j) : outer(i, j);
      glue = std::max(glue, std::abs(g - direct(i, j)));
    }
  double glue_rel = gscale > 0.0 ? glue / gscale : glue;
  r.details.push_back({"glue_error", glue_rel});

  auto l1 = neumann_trace(s1, u1, "gamma0");
  auto l3 = neumann_trace(s3, u3, "gamma0");
  double g0_disc = trace_discrepancy(l1, l3);
  r.details.push_back({"gamma0_trace_disc", g0_disc});

  r.max_discrepancy = std::max({restricted, iface_rel, glue_rel, g0_disc});
  r.pass = restricted < cfg.tol.tol_dtn && g0_disc < cfg.tol.tol_dtn &&
           iface_rel < 1e-2 && glue_rel < 1e-2;
  return r;
}

DiscrepancyReport experiment_focal_transfer(const ScenarioConfig& cfg) {
  DiscrepancyReport r;
  stamp(r, cfg, "focal_transfer");
  r.threshold = 1e-2;

  // control: straight bottom-edge chart of the flat spec, ratio == 1
  OperatorSpec flat =
      OperatorSpec::from_closures(cfg.make_domain(), CoefficientSet::flat());
  double dy = flat.domain.h;
  double half = std::floor(0.5 / dy + 1e-9) * dy;
  SemigeodesicChart chf = build_chart(flat, "gamma0", half, dy);
  double flat_dev = 0.0;
  for (int in = 0; in < chf.nn; ++in)
    for (int is = 0; is < chf.ns; ++is)
      if (chf.mask(is, in))
        flat_dev = std::max(flat_dev, std::abs(chf.ghat(is, in) - 1.0));
  r.details.push_back({"flat_ratio_dev", flat_dev});

  // disk: inward circle fan on the flat metric, det ghat = ((R-t)/R)^2
  const double R = cfg.disk_R;
  const Vec2 center(0.5, 0.5);
  int ks = static_cast<int>(std::floor(0.5 * M_PI * R / dy));
  double s1 = ks * dy;
  Rect bounds{-2.0, 3.0, -2.0, 3.0};
  SemigeodesicChart chd = build_chart_fan(
      CoefficientSet::flat(),
      [&center, R](double s) { return circle_launch(center, R, s); }, 0.0, s1,
      std::floor(cfg.focal_T_half / dy + 1e-9) * dy, dy, bounds);

  double cf_err = 0.0, growth_err = 0.0, max_ratio = 0.0;
  for (int in = 0; in < chd.nn; ++in) {
    double t = in * dy;
    double shrink = (R - t) / R;
    for (int is = 0; is < chd.ns; ++is) {
      if (!chd.mask(is, in)) continue;
      max_ratio = std::max(max_ratio, chd.ghat(is, in));
      if (R - t <= 5.0 * dy) continue;
      double cf = shrink * shrink;
      cf_err = std::max(cf_err, std::abs(chd.ghat(is, in) - cf) / cf);
      // det(Dphi) = 1/det(Dx/Dy) grows like R/(R-t)
      double growth = 1.0 / chd.det(is, in);
      growth_err =
          std::max(growth_err, std::abs(growth - 1.0 / shrink) * shrink);
    }
  }
  r.details.push_back({"closed_form_relerr", cf_err});
  r.details.push_back({"growth_relerr", growth_err});
  r.details.push_back({"max_ratio", max_ratio});

  r.max_discrepancy = std::max(cf_err, flat_dev);
  r.pass = cf_err < 1e-2 && growth_err < 0.1 && flat_dev < 1e-2 &&
           max_ratio < 1.5;
  return r;
}

DiscrepancyReport experiment_influence_inclusion(const ScenarioConfig& cfg) {
  DiscrepancyReport r;
  stamp(r, cfg, "influence_inclusion");
  r.threshold = 0.5;  // pass means zero inclusion violations

  OperatorSpec s1 = cfg.spec1();
  OperatorSpec s2 = s1;
  if (cfg.influence_slow != 0.0) {
    // conformal slow-down supported on the strip above Gamma-tilde;
    // coefficients agree off the strip by construction
    CoefficientSet c = *s1.closures;
    WindowBump b{0.5 * (cfg.gtilde_a + cfg.gtilde_b), 0.0,
                 0.5 * (cfg.gtilde_b - cfg.gtilde_a)};
    double slow = cfg.influence_slow;
    auto sf2 = [b, slow](double x, double y) {
      double s = 1.0 - slow * b.value(x, y);
      return s * s;
    };
    auto scale2 = [sf2](ScalarFn g) -> ScalarFn {
      return [sf2, g](double x, double y) { return sf2(x, y) * g(x, y); };
    };
    c.g11 = scale2(c.g11);
    c.g12 = scale2(c.g12);
    c.g22 = scale2(c.g22);
    s2 = OperatorSpec::from_closures(s1.domain, c);
  }

  InfluenceSets is1 = influence_sets(s1, "gamma0", cfg.T);
  InfluenceSets is2 = influence_sets(s2, "gamma0", cfg.T);

  const Domain& d = s1.domain;
  int size1 = 0, size2 = 0, strict = 0, violations = 0;
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i) {
      if (is1.delta(i, j)) ++size1;
      if (is2.delta(i, j)) ++size2;
      if (is1.delta(i, j) && !is2.delta(i, j)) ++strict;
      if (is2.delta(i, j) && !is1.delta(i, j)) {
        // one-cell fuzz: accept if a neighbor of (i,j) is in delta1
        bool near = false;
        for (int dj = -1; dj <= 1 && !near; ++dj)
          for (int di = -1; di <= 1 && !near; ++di) {
            int ii = i + di, jj = j + dj;
            if (ii >= 0 && ii < d.nx && jj >= 0 && jj < d.ny &&
                is1.delta(ii, jj))
              near = true;
          }
        if (!near) ++violations;
      }
    }
  r.details.push_back({"delta1_size", double(size1)});
  r.details.push_back({"delta2_size", double(size2)});
  r.details.push_back({"strict_gap", double(strict)});
  r.details.push_back({"violations", double(violations)});

  r.max_discrepancy = violations;
  r.pass = violations == 0;
  if (cfg.influence_slow > 0.0 && cfg.T > 0.0) r.pass = r.pass && strict > 0;
  if (cfg.influence_slow == 0.0) r.pass = r.pass && size1 == size2;
  return r;
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {
      "theorem_forward", "lemma21_agreement", "restriction_roundtrip",
      "focal_transfer", "influence_inclusion"};
  return names;
}

DiscrepancyReport run_experiment(const std::string& name,
                                 const ScenarioConfig& cfg) {
  if (name == "theorem_forward") return experiment_theorem_forward(cfg);
  if (name == "lemma21_agreement") return experiment_lemma21_agreement(cfg);
  if (name == "restriction_roundtrip")
    return experiment_restriction_roundtrip(cfg);
  if (name == "focal_transfer") return experiment_focal_transfer(cfg);
  if (name == "influence_inclusion")
    return experiment_influence_inclusion(cfg);
  throw std::invalid_argument("harness: unknown experiment '" + name + "'");
}

}  // namespace dtnlab
