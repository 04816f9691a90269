#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "dtnlab/types.hpp"

namespace dtnlab {

// One node of a boundary patch: grid index, Euclidean exterior unit normal,
// and arclength coordinate along the patch.
struct BoundaryNode {
  int i = 0, j = 0;
  double nu1 = 0.0, nu2 = 0.0;
  double arclength = 0.0;
};

struct Patch {
  std::string name;
  std::vector<BoundaryNode> nodes;
};

// Rectangular reference region [0, (nx-1)h] x [0, (ny-1)h] with a uniform
// node-centered grid. The boundary is decomposed into named patches; one of
// them is designated Gamma0. With periodic_x set, the left/right edges are
// identified and carry no patches.
class Domain {
 public:
  int nx = 0, ny = 0;
  double h = 0.0;
  bool periodic_x = false;
  std::vector<Patch> patches;
  std::string gamma0;  // name of the designated control patch

  double x1(int i) const { return i * h; }
  double x2(int j) const { return j * h; }
  double width() const { return (nx - 1) * h; }
  double height() const { return (ny - 1) * h; }

  bool on_boundary(int i, int j) const {
    if (periodic_x) return j == 0 || j == ny - 1;
    return i == 0 || i == nx - 1 || j == 0 || j == ny - 1;
  }

  const Patch& patch(const std::string& name) const {
    for (const auto& p : patches)
      if (p.name == name) return p;
    throw std::invalid_argument("domain: no patch named '" + name + "'");
  }

  const Patch& gamma0_patch() const { return patch(gamma0); }

  // Unit square with Gamma0 = the part of the bottom edge with x1 in [a, b].
  // The rest of the boundary is split into bottom_rest / right / top / left.
  // Corner nodes are assigned to the bottom and top patches.
  static Domain unit_square(int n, double gamma0_a = 0.0, double gamma0_b = 1.0,
                            bool periodic_x = false);

  // n x m rectangle with spacing h; every edge its own patch, Gamma0 = bottom.
  static Domain rectangle(int nx, int ny, double h);

  void check_valid() const;
};

inline Domain Domain::unit_square(int n, double a, double b, bool periodic_x) {
  if (n < 8) throw std::invalid_argument("domain: grid too small");
  if (!(a < b)) throw std::invalid_argument("domain: empty Gamma0 interval");
  Domain d;
  d.nx = d.ny = n;
  // with periodic identification in x1 the right edge column is not stored
  d.h = periodic_x ? 1.0 / n : 1.0 / (n - 1);
  d.periodic_x = periodic_x;
  d.gamma0 = "gamma0";

  Patch g0{"gamma0", {}}, brest{"bottom_rest", {}}, top{"top", {}};
  for (int i = 0; i < n; ++i) {
    double x = i * d.h;
    BoundaryNode bn{i, 0, 0.0, -1.0, x};
    // half-open on the right so every node lands in exactly one patch
    if (x >= a - 0.5 * d.h && x < b + 0.5 * d.h)
      g0.nodes.push_back(bn);
    else
      brest.nodes.push_back(bn);
    top.nodes.push_back(BoundaryNode{i, n - 1, 0.0, 1.0, x});
  }
  d.patches = {g0, top};
  if (!brest.nodes.empty()) d.patches.push_back(brest);
  if (!periodic_x) {
    Patch left{"left", {}}, right{"right", {}};
    for (int j = 1; j < n - 1; ++j) {
      double y = j * d.h;
      left.nodes.push_back(BoundaryNode{0, j, -1.0, 0.0, y});
      right.nodes.push_back(BoundaryNode{n - 1, j, 1.0, 0.0, y});
    }
    d.patches.push_back(left);
    d.patches.push_back(right);
  }
  d.check_valid();
  return d;
}

inline Domain Domain::rectangle(int nx, int ny, double h) {
  if (nx < 4 || ny < 4 || h <= 0) throw std::invalid_argument("domain: bad rectangle");
  Domain d;
  d.nx = nx;
  d.ny = ny;
  d.h = h;
  d.gamma0 = "bottom";
  Patch bottom{"bottom", {}}, top{"top", {}}, left{"left", {}}, right{"right", {}};
  for (int i = 0; i < nx; ++i) {
    bottom.nodes.push_back(BoundaryNode{i, 0, 0.0, -1.0, i * h});
    top.nodes.push_back(BoundaryNode{i, ny - 1, 0.0, 1.0, i * h});
  }
  for (int j = 1; j < ny - 1; ++j) {
    left.nodes.push_back(BoundaryNode{0, j, -1.0, 0.0, j * h});
    right.nodes.push_back(BoundaryNode{nx - 1, j, 1.0, 0.0, j * h});
  }
  d.patches = {bottom, top, left, right};
  d.check_valid();
  return d;
}

inline void Domain::check_valid() const {
  if (h <= 0) throw std::invalid_argument("domain: h must be positive");
  // every boundary node in exactly one patch
  BGrid seen = BGrid::Constant(nx, ny, false);
  for (const auto& p : patches)
    for (const auto& bn : p.nodes) {
      if (!on_boundary(bn.i, bn.j))
        throw std::invalid_argument("domain: patch node off the boundary");
      if (seen(bn.i, bn.j))
        throw std::invalid_argument("domain: boundary node in two patches");
      seen(bn.i, bn.j) = true;
    }
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      if (on_boundary(i, j) && !seen(i, j))
        throw std::invalid_argument("domain: uncovered boundary node");
}

}  // namespace dtnlab
