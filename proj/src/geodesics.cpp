#include "dtnlab/geodesics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

namespace dtnlab {

namespace {

using Vec4 = Eigen::Vector4d;

// Hamiltonian vector field of H = sqrt(g^{jk} p_j p_k); metric derivatives
// from 4th-order finite differences of the closures.
Vec4 ham_field(const CoefficientSet& c, const Vec4& z) {
  const double x = z(0), y = z(1);
  Mat2 G = c.metric_inv(x, y);
  Vec2 p(z(2), z(3));
  Vec2 Gp = G * p;
  double H = std::sqrt(p.dot(Gp));
  if (!(H > 1e-12))
    throw std::runtime_error("geodesics: momentum degenerated to zero");
  Vec4 f;
  f(0) = Gp(0) / H;
  f(1) = Gp(1) / H;
  for (int m = 0; m < 2; ++m) {
    double d11 = fd_partial(c.g11, x, y, m);
    double d12 = fd_partial(c.g12, x, y, m);
    double d22 = fd_partial(c.g22, x, y, m);
    f(2 + m) = -(d11 * p(0) * p(0) + 2.0 * d12 * p(0) * p(1) +
                 d22 * p(1) * p(1)) /
               (2.0 * H);
  }
  return f;
}

// Field of the coupled (state, variation) system; the variational part is a
// directional derivative of the Hamiltonian field.
void coupled_field(const CoefficientSet& c, const Vec4& z, const Vec4& d,
                   Vec4& fz, Vec4& fd) {
  fz = ham_field(c, z);
  double dn = d.norm();
  if (dn < 1e-30) {
    fd.setZero();
    return;
  }
  double eps = 1e-5 * (1.0 + z.norm()) / dn;
  fd = (ham_field(c, z + eps * d) - ham_field(c, z - eps * d)) / (2.0 * eps);
}

double hamiltonian(const CoefficientSet& c, const Vec4& z) {
  Mat2 G = c.metric_inv(z(0), z(1));
  Vec2 p(z(2), z(3));
  return std::sqrt(p.dot(G * p));
}

GeodesicRay integrate_once(const CoefficientSet& c, const RayLaunch& launch,
                           double t_max, double dt, const Rect& bounds) {
  const int M = std::max(1, static_cast<int>(std::lround(t_max / dt)));
  const double step = t_max / M;

  Vec4 z, d;
  z << launch.x(0), launch.x(1), launch.p(0), launch.p(1);
  d << launch.dx(0), launch.dx(1), launch.dp(0), launch.dp(1);

  GeodesicRay ray;
  ray.dt = step;

  auto record = [&](double t) {
    RayState s;
    s.t = t;
    s.x = z.head<2>();
    s.p = z.tail<2>();
    Vec4 f = ham_field(c, z);
    s.J.col(0) = d.head<2>();
    s.J.col(1) = f.head<2>();
    ray.states.push_back(s);
    ray.h_drift = std::max(ray.h_drift, std::abs(hamiltonian(c, z) - 1.0));
  };
  record(0.0);

  Vec4 k1z, k1d, k2z, k2d, k3z, k3d, k4z, k4d;
  for (int m = 0; m < M; ++m) {
    coupled_field(c, z, d, k1z, k1d);
    coupled_field(c, z + 0.5 * step * k1z, d + 0.5 * step * k1d, k2z, k2d);
    coupled_field(c, z + 0.5 * step * k2z, d + 0.5 * step * k2d, k3z, k3d);
    coupled_field(c, z + step * k3z, d + step * k3d, k4z, k4d);
    z += (step / 6.0) * (k1z + 2.0 * k2z + 2.0 * k3z + k4z);
    d += (step / 6.0) * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
    if (!bounds.contains(z.head<2>())) {
      ray.exited = true;
      break;
    }
    record((m + 1) * step);
  }

  double det0 = ray.states.front().J.determinant();
  if (std::abs(det0) < 1e-12)
    throw std::invalid_argument("geodesics: launch variation is tangent to the ray");
  for (auto& s : ray.states) s.detJ = s.J.determinant() / det0;
  return ray;
}

}  // namespace

GeodesicRay flow_ray(const CoefficientSet& c, const RayLaunch& launch,
                     double t_max, double dt, const Rect& bounds,
                     double tol_H) {
  if (!(dt > 0.0 && t_max > 0.0))
    throw std::invalid_argument("geodesics: t_max and dt must be positive");
  for (int attempt = 0; attempt < 4; ++attempt) {
    GeodesicRay ray = integrate_once(c, launch, t_max, dt, bounds);
    if (ray.h_drift <= tol_H) return ray;
    dt *= 0.5;
  }
  throw std::runtime_error(
      "geodesics: |H-1| drift persists after step halving");
}

GeodesicRay flow_geodesic(const OperatorSpec& spec, double yprime,
                          double t_max, double dt) {
  if (!spec.closures)
    throw std::invalid_argument("geodesics: spec has no coefficient closures");
  const CoefficientSet& c = *spec.closures;
  double gnn = c.g22(yprime, 0.0);
  if (!(gnn > 0.0))
    throw std::invalid_argument("geodesics: g^{nn} <= 0 at the launch point");

  RayLaunch launch;
  launch.x = Vec2(yprime, 0.0);
  launch.p = Vec2(0.0, 1.0 / std::sqrt(gnn));
  launch.dx = Vec2(1.0, 0.0);
  ScalarFn pn = [&c](double s, double) {
    return 1.0 / std::sqrt(c.g22(s, 0.0));
  };
  launch.dp = Vec2(0.0, fd_partial(pn, yprime, 0.0, 0));

  const Domain& d = spec.domain;
  Rect bounds{-1e-9, d.periodic_x ? 1e9 : d.width() + 1e-9, -1e-9,
              d.height() + 1e-9};
  if (d.periodic_x) bounds.x1a = -1e9;
  GeodesicRay ray = flow_ray(c, launch, t_max, dt, bounds);
  ray.yprime = yprime;
  return ray;
}

std::vector<double> detect_focal(const GeodesicRay& ray, double eps_focal) {
  std::vector<double> out;
  const auto& s = ray.states;
  if (s.size() < 2) return out;
  double dmax = 0.0;
  for (const auto& st : s) dmax = std::max(dmax, std::abs(st.detJ));
  if (eps_focal <= 0.0) eps_focal = 1e-6 * dmax;

  for (size_t k = 0; k + 1 < s.size(); ++k) {
    double a = s[k].detJ, b = s[k + 1].detJ;
    if ((a > 0.0) != (b > 0.0)) {
      out.push_back(s[k].t + ray.dt * a / (a - b));
    } else if (k > 0 && std::abs(a) < eps_focal &&
               std::abs(a) <= std::abs(s[k - 1].detJ) &&
               std::abs(a) <= std::abs(b)) {
      out.push_back(s[k].t);  // grazing caustic: sub-threshold local minimum
    }
  }
  return out;
}

namespace {

// node-local metric (inverse of g^{jk}), cached per call
std::vector<Mat2> node_metrics(const OperatorSpec& spec) {
  const Domain& d = spec.domain;
  std::vector<Mat2> M(static_cast<size_t>(d.nx) * d.ny);
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      M[i + static_cast<size_t>(d.nx) * j] = spec.metric_inv_at(i, j).inverse();
  return M;
}

constexpr int kOffs[8][2] = {{1, 0},  {1, 1},   {0, 1},  {-1, 1},
                             {-1, 0}, {-1, -1}, {0, -1}, {1, -1}};

}  // namespace

Grid geodesic_distance(const OperatorSpec& spec, const BGrid& source,
                       const DistanceOptions& opts) {
  const Domain& d = spec.domain;
  if (source.rows() != d.nx || source.cols() != d.ny)
    throw std::invalid_argument("geodesics: source mask shape mismatch");
  if (!source.any())
    throw std::invalid_argument("geodesics: empty source set");

  const double INF = std::numeric_limits<double>::infinity();
  Grid dist = Grid::Constant(d.nx, d.ny, INF);
  auto metrics = node_metrics(spec);
  auto met = [&](int i, int j) -> const Mat2& {
    return metrics[i + static_cast<size_t>(d.nx) * j];
  };
  auto wrap = [&](int i) {
    if (!d.periodic_x) return i;
    return i < 0 ? i + d.nx : (i >= d.nx ? i - d.nx : i);
  };
  auto in_grid = [&](int i, int j) {
    if (j < 0 || j >= d.ny) return false;
    return d.periodic_x || (i >= 0 && i < d.nx);
  };

  using QE = std::pair<double, int>;
  std::priority_queue<QE, std::vector<QE>, std::greater<>> pq;
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (source(i, j)) {
        dist(i, j) = 0.0;
        pq.push({0.0, i + d.nx * j});
      }

  while (!pq.empty()) {
    auto [du, id] = pq.top();
    pq.pop();
    int i = id % d.nx, j = id / d.nx;
    if (du > dist(i, j)) continue;
    for (const auto& o : kOffs) {
      if (!in_grid(i + o[0], j + o[1])) continue;
      int ni = wrap(i + o[0]), nj = j + o[1];
      Vec2 v(o[0] * d.h, o[1] * d.h);
      Mat2 Mavg = 0.5 * (met(i, j) + met(ni, nj));
      double w = std::sqrt(v.dot(Mavg * v));
      if (du + w < dist(ni, nj)) {
        dist(ni, nj) = du + w;
        pq.push({du + w, ni + d.nx * nj});
      }
    }
  }

  if (opts.graph_only) return dist;

  // one fast-sweeping pass: triangle updates over the 8-neighbor fan cut
  // the angular error of the graph metric down to O(h)
  auto triangle = [&](int i, int j) {
    const Mat2& M = met(i, j);
    for (int a = 0; a < 8; ++a) {
      int b = (a + 1) % 8;
      int ia = i + kOffs[a][0], ja = j + kOffs[a][1];
      int ib = i + kOffs[b][0], jb = j + kOffs[b][1];
      if (!in_grid(ia, ja) || !in_grid(ib, jb)) continue;
      double da = dist(wrap(ia), ja), db = dist(wrap(ib), jb);
      if (!std::isfinite(da) || !std::isfinite(db)) continue;
      Vec2 va(kOffs[a][0] * d.h, kOffs[a][1] * d.h);
      Vec2 vb(kOffs[b][0] * d.h, kOffs[b][1] * d.h);
      auto f = [&](double lam) {
        Vec2 v = (1.0 - lam) * va + lam * vb;
        return (1.0 - lam) * da + lam * db + std::sqrt(v.dot(M * v));
      };
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 30; ++it) {
        double l1 = lo + (hi - lo) / 3.0, l2 = hi - (hi - lo) / 3.0;
        if (f(l1) < f(l2))
          hi = l2;
        else
          lo = l1;
      }
      dist(i, j) = std::min(dist(i, j), f(0.5 * (lo + hi)));
    }
  };

  for (int sweep = 0; sweep < 4; ++sweep) {
    int i0 = (sweep & 1) ? d.nx - 1 : 0, i1 = (sweep & 1) ? -1 : d.nx;
    int j0 = (sweep & 2) ? d.ny - 1 : 0, j1 = (sweep & 2) ? -1 : d.ny;
    int di = (sweep & 1) ? -1 : 1, dj = (sweep & 2) ? -1 : 1;
    for (int j = j0; j != j1; j += dj)
      for (int i = i0; i != i1; i += di)
        if (!source(i, j)) triangle(i, j);
  }
  return dist;
}

BGrid patch_mask(const Domain& d, const std::string& patch) {
  BGrid m = BGrid::Constant(d.nx, d.ny, false);
  for (const auto& bn : d.patch(patch).nodes) m(bn.i, bn.j) = true;
  return m;
}

InfluenceSets influence_sets(const OperatorSpec& spec, const std::string& gamma,
                             double T, const std::optional<Grid>& y_n,
                             const DistanceOptions& dopts) {
  const Domain& d = spec.domain;
  if (T < 0.0) throw std::invalid_argument("geodesics: negative horizon");

  InfluenceSets out;
  out.T = T;
  out.dist_gamma = geodesic_distance(spec, patch_mask(d, gamma), dopts);

  out.gcal = BGrid::Constant(d.nx, d.ny, false);
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (d.on_boundary(i, j) && out.dist_gamma(i, j) <= T + 1e-12)
        out.gcal(i, j) = true;

  out.dist_gcal = geodesic_distance(spec, out.gcal, dopts);

  if (y_n) {
    out.y_n = *y_n;
  } else {
    BGrid bottom = BGrid::Constant(d.nx, d.ny, false);
    for (int i = 0; i < d.nx; ++i) bottom(i, 0) = true;
    out.y_n = geodesic_distance(spec, bottom, dopts);
  }

  out.delta = BGrid::Constant(d.nx, d.ny, false);
  if (T > 0.0)
    out.delta = (out.dist_gcal + out.y_n) <= T + 1e-12;
  return out;
}

}  // namespace dtnlab
