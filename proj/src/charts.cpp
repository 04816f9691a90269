#include "dtnlab/charts.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

namespace dtnlab {

FocalPointError::FocalPointError(double yprime_, double yn_)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "charts: focal point inside the slab at (y'=" << yprime_
           << ", y_n=" << yn_ << ")";
        return os.str();
      }()),
      yprime(yprime_),
      yn(yn_) {}

namespace {

double bilerp(const Grid& f, double u, double v) {
  int i = std::clamp(static_cast<int>(std::floor(u)), 0,
                     static_cast<int>(f.rows()) - 2);
  int j = std::clamp(static_cast<int>(std::floor(v)), 0,
                     static_cast<int>(f.cols()) - 2);
  double a = u - i, b = v - j;
  return (1 - a) * (1 - b) * f(i, j) + a * (1 - b) * f(i + 1, j) +
         (1 - a) * b * f(i, j + 1) + a * b * f(i + 1, j + 1);
}

complexd bilerp(const CGrid& f, double u, double v) {
  int i = std::clamp(static_cast<int>(std::floor(u)), 0,
                     static_cast<int>(f.rows()) - 2);
  int j = std::clamp(static_cast<int>(std::floor(v)), 0,
                     static_cast<int>(f.cols()) - 2);
  double a = u - i, b = v - j;
  return (1.0 - a) * (1.0 - b) * f(i, j) + a * (1.0 - b) * f(i + 1, j) +
         (1.0 - a) * b * f(i, j + 1) + a * b * f(i + 1, j + 1);
}

int snapped_count(double len, double dy, const char* what) {
  double m = len / dy;
  int n = static_cast<int>(std::lround(m));
  if (n < 1 || std::abs(m - n) > 1e-9)
    throw std::invalid_argument(std::string("charts: ") + what +
                                " is not a multiple of dy");
  return n + 1;
}

}  // namespace

Vec2 SemigeodesicChart::forward(double yp, double yn) const {
  if (!in_range(yp, yn))
    throw std::invalid_argument("charts: forward evaluation off the chart");
  double u = (yp - y0) / dy, v = yn / dy;
  return Vec2(bilerp(x1t, u, v), bilerp(x2t, u, v));
}

Mat2 SemigeodesicChart::jacobian(double yp, double yn) const {
  if (!in_range(yp, yn))
    throw std::invalid_argument("charts: jacobian evaluation off the chart");
  double u = (yp - y0) / dy, v = yn / dy;
  int i = std::clamp(static_cast<int>(std::floor(u)), 0, ns - 2);
  int j = std::clamp(static_cast<int>(std::floor(v)), 0, nn - 2);
  double a = u - i, b = v - j;
  return (1 - a) * (1 - b) * J_at(i, j) + a * (1 - b) * J_at(i + 1, j) +
         (1 - a) * b * J_at(i, j + 1) + a * b * J_at(i + 1, j + 1);
}

std::optional<Vec2> SemigeodesicChart::inverse(const Vec2& x) const {
  // nearest tabulated node as the Newton seed
  double best = 1e300;
  Vec2 y(y0, 0.0);
  for (int in = 0; in < nn; ++in)
    for (int is = 0; is < ns; ++is) {
      if (!mask(is, in)) continue;
      double d2 = (Vec2(x1t(is, in), x2t(is, in)) - x).squaredNorm();
      if (d2 < best) {
        best = d2;
        y = Vec2(y0 + is * dy, in * dy);
      }
    }
  if (best == 1e300) return std::nullopt;

  const double tol = 1e-11 * (1.0 + x.norm());
  for (int it = 0; it < 60; ++it) {
    double ypc = std::clamp(y(0), y0, y1);
    double ync = std::clamp(y(1), 0.0, t_half());
    Vec2 F = forward(ypc, ync) - x;
    if (F.norm() < tol) {
      if (std::abs(y(0) - ypc) > 1e-8 || std::abs(y(1) - ync) > 1e-8)
        return std::nullopt;  // converged outside the chart
      int is = std::clamp(static_cast<int>(std::floor((ypc - y0) / dy)), 0,
                          ns - 2);
      int in = std::clamp(static_cast<int>(std::floor(ync / dy)), 0, nn - 2);
      if (!mask(is, in)) return std::nullopt;
      return Vec2(ypc, ync);
    }
    Mat2 Jl = jacobian(ypc, ync);
    if (std::abs(Jl.determinant()) < 1e-12) return std::nullopt;
    y = Vec2(ypc, ync) - Jl.inverse() * F;
    // keep the iterate near the chart
    y(0) = std::clamp(y(0), y0 - dy, y1 + dy);
    y(1) = std::clamp(y(1), -dy, t_half() + dy);
  }
  return std::nullopt;
}

SemigeodesicChart build_chart_fan(const CoefficientSet& c,
                                  const LaunchCurve& curve, double s0,
                                  double s1, double T_half, double dy,
                                  const Rect& bounds) {
  if (!(dy > 0.0 && T_half > 0.0 && s1 > s0))
    throw std::invalid_argument("charts: bad fan geometry");
  SemigeodesicChart ch;
  ch.y0 = s0;
  ch.y1 = s1;
  ch.dy = dy;
  ch.ns = snapped_count(s1 - s0, dy, "the y' range");
  ch.nn = snapped_count(T_half, dy, "T_half");

  ch.x1t = Grid::Zero(ch.ns, ch.nn);
  ch.x2t = Grid::Zero(ch.ns, ch.nn);
  ch.det = Grid::Zero(ch.ns, ch.nn);
  ch.Jt.assign(static_cast<size_t>(ch.ns) * ch.nn, Mat2::Identity());
  ch.mask = BGrid::Constant(ch.ns, ch.nn, false);
  ch.g11h = Grid::Constant(ch.ns, ch.nn, 1.0);
  ch.g12h = Grid::Zero(ch.ns, ch.nn);
  ch.g22h = Grid::Constant(ch.ns, ch.nn, 1.0);
  ch.ghat = Grid::Constant(ch.ns, ch.nn, 1.0);

  std::atomic<int> next{0};
  std::atomic<bool> focal_found{false};
  double focal_yp = 0.0, focal_yn = 0.0;
  std::mutex focal_mu;
  std::exception_ptr eptr;

  auto worker = [&]() {
    for (;;) {
      int k = next.fetch_add(1);
      if (k >= ch.ns || focal_found.load()) return;
      double s = s0 + k * dy;
      try {
        GeodesicRay ray = flow_ray(c, curve(s), T_half, dy, bounds);
        auto focal = detect_focal(ray);
        if (!focal.empty() && focal.front() <= T_half + 1e-12) {
          std::lock_guard lk(focal_mu);
          if (!focal_found.exchange(true)) {
            focal_yp = s;
            focal_yn = focal.front();
          }
          return;
        }
        int stride = std::max(1, static_cast<int>(std::lround(dy / ray.dt)));
        for (int in = 0; in < ch.nn; ++in) {
          int idx = in * stride;
          if (idx >= ray.n_samples()) break;  // truncated at the region edge
          const RayState& st = ray.states[idx];
          ch.x1t(k, in) = st.x(0);
          ch.x2t(k, in) = st.x(1);
          ch.Jt[k + ch.ns * in] = st.J;
          double dj = st.J.determinant();
          ch.det(k, in) = dj;
          if (std::abs(dj) < 1e-9) continue;
          Mat2 G = c.metric_inv(st.x(0), st.x(1));
          Mat2 Ji = st.J.inverse();
          Mat2 Gh = Ji * G * Ji.transpose();
          ch.g11h(k, in) = Gh(0, 0);
          ch.g12h(k, in) = 0.5 * (Gh(0, 1) + Gh(1, 0));
          ch.g22h(k, in) = Gh(1, 1);
          double dgh = Gh.determinant();
          if (dgh <= 0.0) continue;
          ch.ghat(k, in) = 1.0 / dgh;
          ch.mask(k, in) = true;
        }
      } catch (...) {
        std::lock_guard lk(focal_mu);
        if (!eptr) eptr = std::current_exception();
        focal_found = true;
        return;
      }
    }
  };

  int nt = std::min(thread_cap(), ch.ns);
  if (nt <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (eptr) std::rethrow_exception(eptr);
  if (focal_found.load()) throw FocalPointError(focal_yp, focal_yn);
  return ch;
}

SemigeodesicChart build_chart(const OperatorSpec& spec,
                              const std::string& patch, double T_half,
                              double dy) {
  if (!spec.closures)
    throw std::invalid_argument("charts: spec has no coefficient closures");
  const Domain& d = spec.domain;
  const auto& nodes = d.patch(patch).nodes;
  double a = 1e300, b = -1e300;
  for (const auto& bn : nodes) {
    if (bn.j != 0)
      throw std::invalid_argument("charts: patch must lie on the bottom edge");
    a = std::min(a, d.x1(bn.i));
    b = std::max(b, d.x1(bn.i));
  }
  const CoefficientSet c = *spec.closures;
  LaunchCurve curve = [c](double s) {
    RayLaunch L;
    double gnn = c.g22(s, 0.0);
    if (!(gnn > 0.0))
      throw std::invalid_argument("charts: g^{nn} <= 0 on the boundary");
    L.x = Vec2(s, 0.0);
    L.p = Vec2(0.0, 1.0 / std::sqrt(gnn));
    L.dx = Vec2(1.0, 0.0);
    ScalarFn pn = [&c](double q, double) {
      return 1.0 / std::sqrt(c.g22(q, 0.0));
    };
    L.dp = Vec2(0.0, fd_partial(pn, s, 0.0, 0));
    return L;
  };
  Rect bounds{-1e-9, d.width() + 1e-9, -1e-9, d.height() + 1e-9};
  if (d.periodic_x) {
    bounds.x1a = -1e9;
    bounds.x1b = 1e9;
  }
  return build_chart_fan(c, curve, a, b, T_half, dy, bounds);
}

RayLaunch circle_launch(const Vec2& center, double R, double s) {
  double th = s / R;
  Vec2 er(std::cos(th), std::sin(th)), et(-std::sin(th), std::cos(th));
  RayLaunch L;
  L.x = center + R * er;
  L.p = -er;
  L.dx = et;
  L.dp = -et / R;
  return L;
}

GaugeNormalization gauge_normalize(const SemigeodesicChart& ch, const Grid& An,
                                   const Grid& At) {
  if (An.rows() != ch.ns || An.cols() != ch.nn || At.rows() != ch.ns ||
      At.cols() != ch.nn)
    throw std::invalid_argument("charts: magnetic field shape mismatch");
  const double dy = ch.dy;
  GaugeNormalization g;
  g.psi = Grid::Zero(ch.ns, ch.nn);
  // cumulative Simpson along y_n; the first interval by the 3-point rule
  for (int is = 0; is < ch.ns; ++is) {
    if (ch.nn > 2)
      g.psi(is, 1) = -(dy / 12.0) *
                     (5.0 * An(is, 0) + 8.0 * An(is, 1) - An(is, 2));
    else if (ch.nn == 2)
      g.psi(is, 1) = -(dy / 2.0) * (An(is, 0) + An(is, 1));
    for (int in = 2; in < ch.nn; ++in)
      g.psi(is, in) = g.psi(is, in - 2) -
                      (dy / 3.0) *
                          (An(is, in - 2) + 4.0 * An(is, in - 1) + An(is, in));
  }

  auto d_n = [&](int is, int in) {
    if (in == 0)
      return (-3.0 * g.psi(is, 0) + 4.0 * g.psi(is, 1) - g.psi(is, 2)) /
             (2 * dy);
    if (in == ch.nn - 1)
      return (3.0 * g.psi(is, in) - 4.0 * g.psi(is, in - 1) +
              g.psi(is, in - 2)) /
             (2 * dy);
    return (g.psi(is, in + 1) - g.psi(is, in - 1)) / (2 * dy);
  };
  auto d_t = [&](int is, int in) {
    if (is == 0)
      return (-3.0 * g.psi(0, in) + 4.0 * g.psi(1, in) - g.psi(2, in)) /
             (2 * dy);
    if (is == ch.ns - 1)
      return (3.0 * g.psi(is, in) - 4.0 * g.psi(is - 1, in) +
              g.psi(is - 2, in)) /
             (2 * dy);
    return (g.psi(is + 1, in) - g.psi(is - 1, in)) / (2 * dy);
  };

  g.An1 = Grid::Zero(ch.ns, ch.nn);
  g.At1 = Grid::Zero(ch.ns, ch.nn);
  g.m = CGrid::Constant(ch.ns, ch.nn, 1.0);
  for (int in = 0; in < ch.nn; ++in)
    for (int is = 0; is < ch.ns; ++is) {
      g.An1(is, in) = An(is, in) + d_n(is, in);
      g.At1(is, in) = At(is, in) + d_t(is, in);
      g.m(is, in) = std::pow(ch.ghat(is, in), 0.25) *
                    std::exp(-I_UNIT * g.psi(is, in));
    }
  return g;
}

void pullback_covector(const SemigeodesicChart& ch, const OperatorSpec& spec,
                       Grid& At, Grid& An) {
  if (!spec.closures)
    throw std::invalid_argument("charts: spec has no coefficient closures");
  const CoefficientSet& c = *spec.closures;
  At = Grid::Zero(ch.ns, ch.nn);
  An = Grid::Zero(ch.ns, ch.nn);
  for (int in = 0; in < ch.nn; ++in)
    for (int is = 0; is < ch.ns; ++is) {
      Vec2 A(std::real(c.A1(ch.x1t(is, in), ch.x2t(is, in))),
             std::real(c.A2(ch.x1t(is, in), ch.x2t(is, in))));
      const Mat2& J = ch.J_at(is, in);
      At(is, in) = J.col(0).dot(A);
      An(is, in) = J.col(1).dot(A);
    }
}

CGrid NormalFormOperator::apply(const CGrid& u) const {
  return CGrid(m * apply_spatial_operator(Lhat, CGrid(u / m)));
}

ProbedCoefficients NormalFormOperator::probe() const {
  return probe_operator([this](const CGrid& u) { return apply(u); },
                        Lhat.domain, WeightMode::unit);
}

NormalFormOperator to_normal_form(const OperatorSpec& spec,
                                  const SemigeodesicChart& ch,
                                  const GaugeNormalization& gnorm) {
  if (!spec.closures)
    throw std::invalid_argument("charts: spec has no coefficient closures");
  if (ch.ns < 4 || ch.nn < 4)
    throw std::invalid_argument("charts: chart grid too small for an operator");
  const CoefficientSet& c = *spec.closures;

  Domain ydom = Domain::rectangle(ch.ns, ch.nn, ch.dy);
  Grid g11 = ch.g11h, g12 = ch.g12h, g22 = ch.g22h;
  CGrid A1 = CGrid::Zero(ch.ns, ch.nn), A2 = CGrid::Zero(ch.ns, ch.nn),
        V = CGrid::Zero(ch.ns, ch.nn);
  for (int in = 0; in < ch.nn; ++in)
    for (int is = 0; is < ch.ns; ++is) {
      if (!ch.mask(is, in)) {  // neutral filler so validation passes
        g11(is, in) = 1.0;
        g12(is, in) = 0.0;
        g22(is, in) = 1.0;
        continue;
      }
      double x = ch.x1t(is, in), y = ch.x2t(is, in);
      CVec2 A(c.A1(x, y), c.A2(x, y));
      const Mat2& J = ch.J_at(is, in);
      A1(is, in) = J.col(0)(0) * A(0) + J.col(0)(1) * A(1);
      A2(is, in) = J.col(1)(0) * A(0) + J.col(1)(1) * A(1);
      V(is, in) = c.V(x, y);
    }

  NormalFormOperator nf;
  nf.Lhat = OperatorSpec::from_grids(ydom, std::move(g11), std::move(g12),
                                     std::move(g22), std::move(A1),
                                     std::move(A2), std::move(V));
  nf.m = gnorm.m;
  for (int in = 0; in < ch.nn; ++in)
    for (int is = 0; is < ch.ns; ++is)
      if (!ch.mask(is, in)) nf.m(is, in) = 1.0;
  return nf;
}

WaveField transform_solution(const WaveField& u, const Domain& xdom,
                             const SemigeodesicChart& ch,
                             const GaugeNormalization& gnorm) {
  WaveField out;
  out.dt = u.dt;
  out.steps.reserve(u.steps.size());
  for (const auto& lev : u.steps) {
    CGrid w = CGrid::Zero(ch.ns, ch.nn);
    for (int in = 0; in < ch.nn; ++in)
      for (int is = 0; is < ch.ns; ++is) {
        if (!ch.mask(is, in)) continue;
        double xu = ch.x1t(is, in) / xdom.h, xv = ch.x2t(is, in) / xdom.h;
        if (xu < -1e-9 || xu > xdom.nx - 1 + 1e-9 || xv < -1e-9 ||
            xv > xdom.ny - 1 + 1e-9)
          throw std::invalid_argument(
              "charts: chart image leaves the solution grid");
        w(is, in) = gnorm.m(is, in) * bilerp(lev, xu, xv);
      }
    out.steps.push_back(std::move(w));
  }
  return out;
}

}  // namespace dtnlab
