// ============================================================================
// operators.hpp
//
// Second-order discrete calculus on the staggered grid, boundary trace
// operators for the two boundary conditions, and the norm audits built on
// them.  All stencils read the ghost ring; preconditions on who filled the
// ghosts are the caller's contract (solver states use the active boundary
// closure, constructed fields use extrapolation).
// ============================================================================
#pragma once

#include <array>
#include <vector>

#include "bcl/bc.hpp"
#include "bcl/field.hpp"
#include "bcl/grid.hpp"

namespace bcl {

// --- first-order operators ---------------------------------------------------
void grad_c2f(const Grid2D& g, const ScalarField& p, VectorField& out);
void div_f2c(const Grid2D& g, const VectorField& U, ScalarField& out);
void curl_f2n(const Grid2D& g, const VectorField& U, NodeField& out);
void curl_n2f(const Grid2D& g, const NodeField& psi, VectorField& out);
void laplace_c(const Grid2D& g, const ScalarField& f, ScalarField& out);

// Ghost fills by linear extrapolation (for constructed fields that carry no
// boundary condition of their own).
void fill_ghosts_extrapolate(const Grid2D& g, ScalarField& f);
void fill_ghosts_extrapolate(const Grid2D& g, NodeField& f);
void fill_ghosts_extrapolate(const Grid2D& g, VectorField& U);

// --- deformation and gradient seminorms --------------------------------------
struct DeformationParts {
  ScalarField d11, d22;  // diagonal entries at centers
  NodeField d12;         // symmetric off-diagonal at nodes
};
DeformationParts deformation(const Grid2D& g, const VectorField& U);
double norm_deformation(const Grid2D& g, const VectorField& U);
double norm_gradient(const Grid2D& g, const VectorField& U);   // full grad
double norm_gradient(const Grid2D& g, const ScalarField& f);

// Viscous operator in deformation form, out = 2 div D(U) at interior faces,
// with the slip-with-friction closure baked into the wall-node entries of
// D12 (and optional inhomogeneous wall data).  Wall-normal faces of out are
// set to zero.  This form pairs exactly with norm_deformation and the wall
// friction quadrature, which is what makes the energy audit sharp.
void diffusion_deformation(const Grid2D& g, const BoundaryCoefficients& bc,
                           const VectorField& U, VectorField& out,
                           const WallData* data = nullptr);

// Wall values of the tangential velocity at tangential DOFs (size n+1 per
// wall; entries 0 and n sit at corners where the tangential DOF is pinned).
// Ghosts of U must already be filled with the matching closure.
std::array<std::vector<double>, 4> wall_dof_values(const Grid2D& g,
                                                   const VectorField& U);

// --- boundary traces ----------------------------------------------------------
// All arrays are cell-aligned wall samples (size wall_samples(w)).
struct VelocityTraces {
  std::array<std::vector<double>, 4> tangential;  // tau component at the wall
  std::array<std::vector<double>, 4> dn_tau;      // tau^T D(f) n
  std::array<std::vector<double>, 4> navier;      // tau^T (D(f)n + M f)
};
struct ScalarTraces {
  std::array<std::vector<double>, 4> value;  // wall value
  std::array<std::vector<double>, 4> dn;     // outward normal derivative
  std::array<std::vector<double>, 4> robin;  // dn + m * value
};
VelocityTraces velocity_traces(const Grid2D& g, const BoundaryCoefficients& bc,
                               const VectorField& U);
ScalarTraces scalar_traces(const Grid2D& g, const BoundaryCoefficients& bc,
                           const ScalarField& f);

// Boundary quadratures sum wall_h * value over all walls.
double boundary_integral(const Grid2D& g,
                         const std::array<std::vector<double>, 4>& vals);

// int_{dO} (M f) . f  restricted to tangential traces (f.n = 0 on walls).
double boundary_friction_energy(const Grid2D& g,
                                const BoundaryCoefficients& bc,
                                const VectorField& U);
// int_{dO} m f^2 for scalars.
double boundary_robin_energy(const Grid2D& g, const BoundaryCoefficients& bc,
                             const ScalarField& f);

// --- norm audits ---------------------------------------------------------------
struct KornReport {
  double l2 = 0, h1 = 0, deform = 0;
  double ratio = 0;          // h1 / (l2 + deform)
  double div_residual = 0;   // max |div u|
  double normal_trace = 0;   // max |u.n| on walls
};
KornReport korn_audit(const Grid2D& g, const VectorField& U);

// Equivalent-norm functionals used by the wellposedness bookkeeping.
double norm_friction_weighted(const Grid2D& g, const BoundaryCoefficients& bc,
                              const VectorField& U, double K);
double norm_robin_weighted(const Grid2D& g, const BoundaryCoefficients& bc,
                           const ScalarField& f, double gamma);

}  // namespace bcl
