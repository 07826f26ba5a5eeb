// ============================================================================
// grid.hpp
//
// Rectangular staggered-grid geometry for the control laboratory.
//
// The working domain is a closed box O = [0,Lx] x [0,Ly] discretized with an
// nx x ny uniform cell grid (MAC layout: scalars at cell centers, velocity
// components on cell faces).  A physical subdomain Omega sits flush against
// the west, south and north sides of O; the remaining vertical band on the
// east side is the actuation region.  Nested open sets
//     omega_prime  c  omega_zero  c  omega_obs  c  omega
// live inside that band and drive the weight construction, the observation
// quadratures and the control cutoff respectively.
// ============================================================================
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace bcl {

enum class Wall : int { South = 0, North = 1, West = 2, East = 3 };

inline const char* wall_name(Wall w) {
  switch (w) {
    case Wall::South: return "south";
    case Wall::North: return "north";
    case Wall::West:  return "west";
    case Wall::East:  return "east";
  }
  return "?";
}

// Outward unit normal of the box on a given wall.
inline std::array<double, 2> wall_normal(Wall w) {
  switch (w) {
    case Wall::South: return {0.0, -1.0};
    case Wall::North: return {0.0, 1.0};
    case Wall::West:  return {-1.0, 0.0};
    case Wall::East:  return {1.0, 0.0};
  }
  return {0.0, 0.0};
}

// Fixed tangent convention: walls running in x use tau = +e1, walls running
// in y use tau = +e2.  All "tangential scalar" traces are components along
// this tau.
inline std::array<double, 2> wall_tangent(Wall w) {
  switch (w) {
    case Wall::South:
    case Wall::North: return {1.0, 0.0};
    case Wall::West:
    case Wall::East:  return {0.0, 1.0};
  }
  return {0.0, 0.0};
}

struct Rect {
  double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
  bool contains(double x, double y) const {
    return x > x0 && x < x1 && y > y0 && y < y1;
  }
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
};

// ----------------------------------------------------------------------------
// Grid2D: geometry, index helpers and region masks.
//
// Cell (i,j), i in [0,nx), j in [0,ny): center at ((i+1/2)hx, (j+1/2)hy).
// u-faces (i,j), i in [0,nx], j in [0,ny): located at (i hx, (j+1/2)hy).
// v-faces (i,j), i in [0,nx), j in [0,ny]: located at ((i+1/2)hx, j hy).
// Nodes  (i,j), i in [0,nx], j in [0,ny]: located at (i hx, j hy).
// ----------------------------------------------------------------------------
class Grid2D {
 public:
  int nx = 0, ny = 0;
  double Lx = 1.0, Ly = 1.0;
  double hx = 0, hy = 0;

  // x coordinate of the interface between Omega and the actuation band.
  // Must coincide with a u-face column.
  double x_interface = 0.625;
  int i_interface = 0;  // u-face column index of the interface

  Rect omega;        // control support (chi_omega cutoff region)
  Rect omega_obs;    // observation set for the weighted quadratures
  Rect omega_zero;   // intermediate set
  Rect omega_prime;  // innermost set (weight ridge lives here)

  int collar_cells = 4;  // boundary collar width used by the layer coupling

  static Grid2D make(int nx, int ny, double Lx = 1.0, double Ly = 1.0,
                     double x_interface = 0.625);

  // --- coordinates ---------------------------------------------------------
  double xc(int i) const { return (i + 0.5) * hx; }
  double yc(int j) const { return (j + 0.5) * hy; }
  double xu(int i) const { return i * hx; }
  double yu(int j) const { return (j + 0.5) * hy; }
  double xv(int i) const { return (i + 0.5) * hx; }
  double yv(int j) const { return j * hy; }

  int n_cells() const { return nx * ny; }
  double cell_area() const { return hx * hy; }

  bool in_band(int i, int /*j*/) const { return xc(i) > x_interface; }
  bool in_omega_domain(int i, int j) const { return !in_band(i, j); }

  // Cell-center masks (1 inside, 0 outside).
  std::vector<uint8_t> mask_omega_domain() const;   // cells of Omega
  std::vector<uint8_t> mask_band() const;           // cells of O \ closure(Omega)
  std::vector<uint8_t> mask_rect(const Rect& r) const;

  // Distance to the boundary of O and outward normal of the nearest wall.
  double dist_to_boundary(double x, double y) const;
  Wall nearest_wall(double x, double y) const;

  // Arclength grids along each wall (cell-column / cell-row sample points).
  int wall_samples(Wall w) const {
    return (w == Wall::South || w == Wall::North) ? nx : ny;
  }
  double wall_h(Wall w) const {
    return (w == Wall::South || w == Wall::North) ? hx : hy;
  }
  double wall_coord(Wall w, int k) const {
    return (w == Wall::South || w == Wall::North) ? xc(k) : yc(k);
  }
  // Position in the plane of boundary sample k on wall w.
  std::array<double, 2> wall_point(Wall w, int k) const {
    switch (w) {
      case Wall::South: return {xc(k), 0.0};
      case Wall::North: return {xc(k), Ly};
      case Wall::West:  return {0.0, yc(k)};
      case Wall::East:  return {Lx, yc(k)};
    }
    return {0, 0};
  }

  double diam_omega_domain() const;
};

// ----------------------------------------------------------------------------
// Boundary coefficient bundle: friction matrix M (symmetric 2x2) per boundary
// sample for the velocity condition, scalar m per sample for the temperature
// condition.  The tangential scalar condition on a flat wall only sees
// tau^T M tau, exposed as m_eff.
// ----------------------------------------------------------------------------
struct BoundaryCoefficients {
  struct Sym2 {
    double a11 = 0, a12 = 0, a22 = 0;  // symmetric storage
  };
  // per wall, per sample
  std::array<std::vector<Sym2>, 4> M;
  std::array<std::vector<double>, 4> m;

  static BoundaryCoefficients constant(const Grid2D& g, double m_friction,
                                       double m_robin);

  double m_eff(Wall w, int k) const {
    const Sym2& s = M[(int)w][k];
    auto tau = wall_tangent(w);
    // tau is a coordinate axis, so this reduces to a diagonal entry.
    return tau[0] * (s.a11 * tau[0] + s.a12 * tau[1]) +
           tau[1] * (s.a12 * tau[0] + s.a22 * tau[1]);
  }
  double m_robin(Wall w, int k) const { return m[(int)w][k]; }

  // Largest symmetry defect over all samples (should be exactly 0 for the
  // symmetric storage; kept for interface audits when built from raw data).
  double symmetry_defect() const { return 0.0; }
};

}  // namespace bcl
