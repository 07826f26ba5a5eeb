#include "bcl/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bcl {

Grid2D Grid2D::make(int nx, int ny, double Lx, double Ly, double x_interface) {
  Grid2D g;
  g.nx = nx;
  g.ny = ny;
  g.Lx = Lx;
  g.Ly = Ly;
  g.hx = Lx / nx;
  g.hy = Ly / ny;
  g.x_interface = x_interface;

  double fi = x_interface / g.hx;
  g.i_interface = (int)std::lround(fi);
  if (std::abs(fi - g.i_interface) > 1e-9)
    throw std::runtime_error("grid: interface must lie on a u-face column");
  if (g.i_interface <= 1 || g.i_interface >= nx - 1)
    throw std::runtime_error("grid: interface leaves no room for the band");

  // Nested actuation sets inside the band x > x_interface.  Fractions of the
  // default box; scaled with the band if the geometry is customized.
  double bx0 = x_interface, bx1 = Lx;
  auto lerp = [&](double a) { return bx0 + a * (bx1 - bx0); };
  g.omega       = Rect{lerp(0.08), lerp(0.96), 0.015 * Ly, 0.985 * Ly};
  g.omega_obs   = Rect{lerp(0.20), lerp(0.84), 0.08 * Ly, 0.92 * Ly};
  g.omega_zero  = Rect{lerp(0.32), lerp(0.72), 0.145 * Ly, 0.855 * Ly};
  g.omega_prime = Rect{lerp(0.44), lerp(0.60), 0.21 * Ly, 0.79 * Ly};
  return g;
}

std::vector<uint8_t> Grid2D::mask_omega_domain() const {
  std::vector<uint8_t> m(n_cells(), 0);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      m[i + nx * j] = in_omega_domain(i, j) ? 1 : 0;
  return m;
}

std::vector<uint8_t> Grid2D::mask_band() const {
  std::vector<uint8_t> m(n_cells(), 0);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      m[i + nx * j] = in_band(i, j) ? 1 : 0;
  return m;
}

std::vector<uint8_t> Grid2D::mask_rect(const Rect& r) const {
  std::vector<uint8_t> m(n_cells(), 0);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      m[i + nx * j] = r.contains(xc(i), yc(j)) ? 1 : 0;
  return m;
}

double Grid2D::dist_to_boundary(double x, double y) const {
  double d = std::min(std::min(x, Lx - x), std::min(y, Ly - y));
  return std::max(d, 0.0);
}

Wall Grid2D::nearest_wall(double x, double y) const {
  double ds = y, dn = Ly - y, dw = x, de = Lx - x;
  double m = std::min(std::min(ds, dn), std::min(dw, de));
  if (m == ds) return Wall::South;
  if (m == dn) return Wall::North;
  if (m == dw) return Wall::West;
  return Wall::East;
}

double Grid2D::diam_omega_domain() const {
  return std::sqrt(x_interface * x_interface + Ly * Ly);
}

BoundaryCoefficients BoundaryCoefficients::constant(const Grid2D& g,
                                                    double m_friction,
                                                    double m_robin) {
  BoundaryCoefficients bc;
  for (int w = 0; w < 4; ++w) {
    int n = g.wall_samples((Wall)w);
    bc.M[w].assign(n, Sym2{m_friction, 0.0, m_friction});
    bc.m[w].assign(n, m_robin);
  }
  return bc;
}

}  // namespace bcl
