// ============================================================================
// bc.hpp
//
// Ghost-ring closures for the two boundary conditions of the model:
//
//   velocity:     u.n = 0 on every wall,  tau.(D(u)n + M u) = g  (Navier)
//   temperature:  d(theta)/dn + m theta = r                      (Robin)
//
// On a flat wall with u.n = 0 the tangential Navier trace reduces to
//   (1/2) d(u_tau)/dn + m_eff u_tau = g,   m_eff = tau^T M tau,
// which closes the ghost value to second order:
//   ghost = [ interior (1 - m_eff h) + 2 h g ] / (1 + m_eff h).
// The Robin closure is the analogous midpoint formula
//   ghost = [ interior (2 - m h) + 2 h r ] / (2 + m h).
//
// Inhomogeneous data are sampled at the cell-aligned boundary faces (same
// sampling as BoundaryCoefficients) and interpolated to tangential-velocity
// positions where needed.
// ============================================================================
#pragma once

#include <array>
#include <vector>

#include "bcl/field.hpp"
#include "bcl/grid.hpp"

namespace bcl {

// Tangential-scalar boundary data, one value per cell-aligned boundary face.
struct WallData {
  std::array<std::vector<double>, 4> g;  // indexed by Wall
  bool empty() const {
    for (const auto& v : g)
      if (!v.empty()) return false;
    return true;
  }
  static WallData zeros(const Grid2D& gr) {
    WallData d;
    for (int w = 0; w < 4; ++w)
      d.g[w].assign(gr.wall_samples((Wall)w), 0.0);
    return d;
  }
};

// Set the wall-normal velocity faces to zero (impermeable box).
void enforce_impermeable(const Grid2D& g, VectorField& U);

// Fill tangential velocity ghosts from the Navier condition.  When data is
// null the condition is homogeneous.  Also mirrors the normal component
// ghosts (odd reflection about the wall value 0) so one-sided stencils of
// u.n near walls stay consistent.
void fill_ghosts_velocity(const Grid2D& g, const BoundaryCoefficients& bc,
                          VectorField& U, const WallData* data = nullptr);

// Fill scalar ghosts from the Robin condition (data null => homogeneous).
void fill_ghosts_scalar(const Grid2D& g, const BoundaryCoefficients& bc,
                        ScalarField& f, const WallData* data = nullptr);

// Plain copy closure (homogeneous Neumann), used for auxiliary fields such as
// pressure and potentials.
void fill_ghosts_neumann(const Grid2D& g, ScalarField& f);

// Interpolate cell-aligned wall samples to the tangential-velocity positions
// of wall w (size wall_samples+1).  Endpoint values are clamped.
std::vector<double> wall_to_tangential_dofs(const Grid2D& g, Wall w,
                                            const std::vector<double>& s);

}  // namespace bcl
