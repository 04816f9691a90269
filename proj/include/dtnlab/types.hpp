#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>

namespace dtnlab {

using complexd = std::complex<double>;

using Grid = Eigen::ArrayXXd;                 // real nodal field, (i,j) -> (x1,x2)
using CGrid = Eigen::ArrayXXcd;               // complex nodal field
using BGrid = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using CVec2 = Eigen::Vector2cd;

using ScalarFn = std::function<double(double, double)>;
using ComplexFn = std::function<complexd(double, double)>;

inline constexpr std::complex<double> I_UNIT{0.0, 1.0};

// Samples an analytic scalar field onto an (nx, ny) grid with spacing h and
// origin (ox, oy).
inline Grid sample(const ScalarFn& f, int nx, int ny, double h,
                   double ox = 0.0, double oy = 0.0) {
  Grid out(nx, ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      out(i, j) = f(ox + i * h, oy + j * h);
  return out;
}

inline CGrid sample(const ComplexFn& f, int nx, int ny, double h,
                    double ox = 0.0, double oy = 0.0) {
  CGrid out(nx, ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      out(i, j) = f(ox + i * h, oy + j * h);
  return out;
}

}  // namespace dtnlab
