// ============================================================================
// solver.hpp
//
// Semi-implicit projection scheme for the buoyant incompressible system on
// the extended rectangle, with slip-with-friction and Robin wall closures.
//
// One step does
//   1. explicit advection in energy-exact divergence form plus sources,
//   2. implicit diffusion (deformation form for velocity, five-point with
//      the Robin closure for the scalar) by conjugate gradients,
//   3. pressure projection onto the prescribed divergence target.
//
// The per-step energy ledger reproduces the discrete balance up to signed
// remainders that are quantified, so the inequality audit is sharp rather
// than asserted.
// ============================================================================
#pragma once

#include <functional>
#include <vector>

#include "bcl/bc.hpp"
#include "bcl/field.hpp"
#include "bcl/grid.hpp"

namespace bcl {

struct SolverConfig {
  double visc = 1.0;      // momentum diffusivity
  double kappa = 1.0;     // thermal diffusivity
  double buoyancy = 1.0;  // coefficient of the theta * e2 coupling
  bool advection = true;  // explicit nonlinear transport on/off
  double dt = 1e-3;
  double cfl = 0.45;
  int max_halvings = 14;  // CFL rejection cap (step substitutes 2^k substeps)
  double poisson_tol = 1e-10;
  double helmholtz_tol = 1e-12;
};

// Time-dependent sources; every entry may be empty.  "adds" entries must
// accumulate into the passed field, "sets" entries overwrite it.
struct Forcing {
  std::function<void(double, const Grid2D&, VectorField&)> body;        // adds
  std::function<void(double, const Grid2D&, ScalarField&)> heat;        // adds
  std::function<void(double, const Grid2D&, ScalarField&)> divergence;  // sets
  std::function<void(double, const Grid2D&, WallData&)> navier_data;    // sets
  std::function<void(double, const Grid2D&, WallData&)> robin_data;     // sets
};

struct State {
  VectorField u;
  ScalarField th;
  double t = 0;
  explicit State(const Grid2D& g) : u(g), th(g) {}
};

struct EnergySample {
  double t = 0;
  double energy = 0;     // |u|^2 + |theta|^2
  double diss = 0;       // cumulative 4 nu int |D|^2 + 4 nu int M u.u
                         //          + 2 kappa int |grad theta|^2
  double work = 0;       // cumulative source work terms
  double extra = 0;      // cumulative dissipation beyond the audited terms
                         // (Robin wall heat loss, projection damping)
  double defect = 0;     // (energy + diss) - (e0 + work), the audited balance
  double defect_tight = 0;  // defect + extra, tracks the scheme identity
  double violation = 0;  // max(0, defect) / scale
};

struct EnergyLedger {
  double e0 = -1.0;  // set when the first step runs
  double diss = 0, work = 0, extra = 0;
  std::vector<EnergySample> samples;
  double max_violation() const;
  double max_defect_tight_rel() const;
};

struct StepStats {
  int halvings = 0;
  int poisson_iters = 0;
  double div_residual = 0;  // max |div u - target| after projection
};

// Advances the state by exactly cfg.dt (substepping internally when the CFL
// bound rejects the step).  p_cache, when given, warm-starts the pressure
// solve across steps.
StepStats step_boussinesq(const Grid2D& g, const BoundaryCoefficients& bc,
                          const SolverConfig& cfg, const Forcing& forcing,
                          State& s, EnergyLedger* ledger = nullptr,
                          ScalarField* p_cache = nullptr);

// Runs until time T (last step clipped), sampling the ledger every step.
void simulate(const Grid2D& g, const BoundaryCoefficients& bc,
              const SolverConfig& cfg, const Forcing& forcing, State& s,
              double T, EnergyLedger* ledger = nullptr,
              const std::function<void(const State&)>& on_step = {});

// Divergence lift: evolve the linear viscous system (no advection, no
// buoyancy) from rest with the divergence target sigma(t).  Tracks the worst
// post-projection divergence residual and a W^{1,inf} proxy of the lift.
struct LiftReport {
  double max_div_residual = 0;
  double w1inf = 0;
  double last_change_rate = 0;  // |u(t_n+1)-u(t_n)| / dt at the final step
};
LiftReport stokes_lift(
    const Grid2D& g, const BoundaryCoefficients& bc, const SolverConfig& cfg,
    const std::function<void(double, const Grid2D&, ScalarField&)>& sigma,
    State& s, double T, const std::function<void(const State&)>& on_step = {});

// Energy-exact advection operators (divergence form minus the discrete
// divergence of the advecting fluxes times the advected value, which is the
// advective form compatible with the discrete product rule).  F must be
// impermeable; ghosts of Z across walls are never read against a nonzero
// flux.
void advect_velocity(const Grid2D& g, const VectorField& F,
                     const VectorField& Z, VectorField& out);
void advect_scalar(const Grid2D& g, const VectorField& F, const ScalarField& s,
                   ScalarField& out);

}  // namespace bcl
