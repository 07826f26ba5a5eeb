// ============================================================================
// linsys.hpp
//
// Linear transport-diffusion pair around a frozen background flow: a velocity
// field z with its own pressure and a scalar h, coupled through buoyancy and
// through the background gradients.  The march mirrors the nonlinear stepper
// (explicit transport, implicit diffusion, projection), but the explicit part
// is assembled per step as a sparse matrix so the backward sweep can apply
// the exact transpose.  That makes the discrete duality pairing
//
//   <x_N, lam_N> - <x_0, lam_0> = sum_n dt <(v_n, w_n), lam~_n>
//
// an identity up to solver tolerances, which is what the control synthesis
// relies on.
// ============================================================================
#pragma once

#include <Eigen/SparseCore>
#include <functional>
#include <vector>

#include "bcl/bc.hpp"
#include "bcl/field.hpp"
#include "bcl/grid.hpp"

namespace bcl {

// One velocity-scalar pair; the state of the linear system.
struct StatePair {
  VectorField z;
  ScalarField h;
  explicit StatePair(const Grid2D& g) : z(g), h(g) {}
};

struct LinearProblem {
  double visc = 1.0;
  double kappa = 1.0;
  double T = 1.0;
  int nsteps = 100;
  // background coefficients, sampled once per step ("set" semantics); empty
  // entries mean zero
  std::function<void(double, const Grid2D&, VectorField&)> a;
  std::function<void(double, const Grid2D&, VectorField&)> b;
  std::function<void(double, const Grid2D&, ScalarField&)> c;
  // wall coefficients; when the provider is empty the fixed bundle is used
  BoundaryCoefficients wall;
  std::function<BoundaryCoefficients(double)> wall_at;
  // optional inhomogeneous wall data for the implicit stage (affine part;
  // not part of the duality pairing)
  std::function<void(double, const Grid2D&, WallData&)> navier_data;
  std::function<void(double, const Grid2D&, WallData&)> robin_data;
  double tol_helmholtz = 1e-12;
  double tol_poisson = 1e-11;
};

// Pack interior face/cell degrees of freedom into one flat vector (velocity
// block first, then the scalar block).
int pack_size(const Grid2D& g);
void pack(const Grid2D& g, const VectorField& z, const ScalarField& h,
          Eigen::VectorXd& x);
void unpack(const Grid2D& g, const Eigen::VectorXd& x, VectorField& z,
            ScalarField& h);

class LinearMarch {
 public:
  LinearMarch(const Grid2D& g, const LinearProblem& prob);

  int steps() const { return prob_.nsteps; }
  double dt() const { return dt_; }
  const Grid2D& grid() const { return g_; }
  const LinearProblem& problem() const { return prob_; }

  // Apply the explicit-stage operator of step n (transport, background
  // gradient coupling, buoyancy) to a packed state.
  const Eigen::SparseMatrix<double>& explicit_matrix(int n) const {
    return E_[n];
  }

  // March forward from the initial pair.  The control callback, when given,
  // fills the control fields for step n (already masked by the caller).
  // When trajectory is non-null it receives the N+1 states.
  StatePair forward(
      const StatePair& init,
      const std::function<void(int, VectorField&, ScalarField&)>& control = {},
      std::vector<StatePair>* trajectory = nullptr) const;

  // Exact-transpose backward sweep from terminal dual data.  lam_tilde, when
  // non-null, receives the N intermediate duals that pair with the controls
  // (index n pairs with the step-n control).
  StatePair backward(const StatePair& terminal,
                     std::vector<StatePair>* lam_tilde = nullptr) const;

 private:
  Grid2D g_;
  LinearProblem prob_;
  double dt_ = 0;
  std::vector<Eigen::SparseMatrix<double>> E_;   // explicit operator per step
  std::vector<BoundaryCoefficients> bcs_;        // implicit-stage closure
};

}  // namespace bcl
