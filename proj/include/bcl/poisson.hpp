// ============================================================================
// poisson.hpp
//
// Conjugate-gradient elliptic solves used throughout:
//   * cell-centered Neumann Poisson (pressure / potentials; singular system,
//     handled mean-free),
//   * node-centered Dirichlet Poisson (stream functions),
//   * face-based Helmholtz solves (I - c Lap) with the Navier/Robin ghost
//     closure folded into the operator (implicit diffusion steps),
//   * cell-centered Neumann Poisson restricted to a cell mask (subdomain
//     solves for the extension construction).
//
// All solves are relative-tolerance PCG with Jacobi preconditioning.
// ============================================================================
#pragma once

#include <cstdint>
#include <vector>

#include "bcl/bc.hpp"
#include "bcl/field.hpp"
#include "bcl/grid.hpp"

namespace bcl {

struct SolveStats {
  int iterations = 0;
  double residual = 0;       // final relative residual
  double compat_defect = 0;  // mean removed from the rhs (Neumann solves)
  bool converged = true;
};

inline constexpr double kPoissonTol = 1e-10;

// Solve Lap p = rhs, dp/dn = 0, mean(p) = 0.  rhs is mean-corrected first.
SolveStats poisson_neumann(const Grid2D& g, const ScalarField& rhs,
                           ScalarField& p, double tol = kPoissonTol,
                           const ScalarField* guess = nullptr);

// Solve Lap psi = rhs at nodes with psi = 0 on boundary nodes.
SolveStats poisson_dirichlet_node(const Grid2D& g, const NodeField& rhs,
                                  NodeField& psi, double tol = kPoissonTol);

// Neumann Poisson on the cells with mask != 0.  Flux data on the boundary
// faces of the masked region enter through rhs (caller folds them in);
// the operator applies zero-flux closures on all mask edges.
SolveStats poisson_neumann_masked(const Grid2D& g,
                                  const std::vector<uint8_t>& mask,
                                  const ScalarField& rhs, ScalarField& p,
                                  double tol = kPoissonTol);

// (I - c Lap) X = R for the tangential-velocity components with the Navier
// ghost closure (friction coefficients from bc), wall-normal faces pinned to
// zero.  Inhomogeneous Navier data (if any) is folded into R by the caller
// via helmholtz_velocity_rhs_bc.
SolveStats helmholtz_velocity(const Grid2D& g, const BoundaryCoefficients& bc,
                              double c, const VectorField& R, VectorField& X,
                              double tol = 1e-12);

// (I - c Lap) X = R for cell scalars with the Robin ghost closure.
SolveStats helmholtz_scalar(const Grid2D& g, const BoundaryCoefficients& bc,
                            double c, const ScalarField& R, ScalarField& X,
                            double tol = 1e-12);

// Add the boundary-source contribution of inhomogeneous Navier/Robin data to
// a Helmholtz right-hand side (the affine part of the ghost closure).
void helmholtz_velocity_rhs_bc(const Grid2D& g, const BoundaryCoefficients& bc,
                               double c, const WallData& data, VectorField& R);
void helmholtz_scalar_rhs_bc(const Grid2D& g, const BoundaryCoefficients& bc,
                             double c, const WallData& data, ScalarField& R);

// Make U divergence-matching: U <- U - grad p with Lap p = div U - target.
// Returns the pressure increment in p.  "target" may be null (solenoidal).
SolveStats project_divergence(const Grid2D& g, VectorField& U,
                              const ScalarField* target, ScalarField& p,
                              double tol = kPoissonTol,
                              const ScalarField* guess = nullptr);

}  // namespace bcl
