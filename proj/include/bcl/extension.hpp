// ============================================================================
// extension.hpp
//
// Initial-data extension from the physical subdomain onto the full box.
//
// The temperature extends by zero.  The velocity keeps its values on the
// subdomain; across the actuation band it becomes the gradient of a scalar
// potential whose normal derivative matches the interface trace and vanishes
// on the outer walls.  That Neumann problem is solvable only when the net
// flux entering the band is balanced by a volume source, so the construction
// plants a fixed polynomial bump inside the control region and scales it so
// its mass absorbs the interface flux exactly.  The scaled bump is returned
// as the prescribed divergence the extended flow carries.
// ============================================================================
#pragma once

#include <vector>

#include "bcl/field.hpp"
#include "bcl/grid.hpp"
#include "bcl/poisson.hpp"

namespace bcl {

// One connected run of interface faces together with its flux budget.  The
// rectangular layout has a single run spanning the full interface, but the
// accounting stays per piece so the structure of the construction survives.
struct InterfacePiece {
  int j_begin = 0, j_end = 0;  // face rows [j_begin, j_end)
  double flux = 0;             // outward flux of the data through the piece
  double bump_mass = 0;        // divergence mass assigned to absorb it
};

struct ExtensionResult {
  VectorField velocity;     // equals the input on the subdomain
  ScalarField temperature;  // zero extension of the input temperature
  ScalarField div_source;   // prescribed divergence, supported in omega
  std::vector<InterfacePiece> pieces;
  double growth = 0;           // (|velocity| + |div_source|) / |input|
  double compat_residual = 0;  // |bump mass + interface flux|
  SolveStats stats;            // band potential solve
  bool ok = true;

  explicit ExtensionResult(const Grid2D& g)
      : velocity(g), temperature(g), div_source(g) {}
};

// Quadrature of u.n over the interface column, outward from the subdomain.
double compatibility_flux(const Grid2D& g, const VectorField& u);

// Quadrature of u.n around the whole subdomain boundary.  Telescopes to the
// cell sum of div u over the subdomain, so it vanishes for solenoidal data.
double subdomain_boundary_flux(const Grid2D& g, const VectorField& u);

// Order-4 polynomial bump supported strictly inside a rectangle, normalized
// to unit discrete mass.  Returns the zero field when the rectangle is too
// small to contain any cell centers.
ScalarField unit_bump(const Grid2D& g, const Rect& support);

// Extend (u0, th0) from the subdomain to the box.  Values of the inputs on
// band cells and band faces are ignored; the interface faces carry the
// normal trace and are shared.  On return (when ok):
//   * velocity and temperature match the inputs on the subdomain,
//   * div(velocity) = div_source on every cell up to the solver tolerance,
//   * velocity.n = 0 on all four outer walls,
//   * div_source is supported inside omega with mass -compatibility_flux.
ExtensionResult extend_state(const Grid2D& g, const VectorField& u0,
                             const ScalarField& th0);

}  // namespace bcl
