// ============================================================================
// layer.hpp
//
// Wall-layer corrector on a stretched half-line grid.
//
// Near each flat wall the fast normal coordinate z lives on [0, Z_max] with
// nodes crowding toward z = 0.  The layer unknown is a tangential profile per
// wall, sampled on (arclength) x (z); its evolution couples to the bulk
// velocity only through wall traces:
//
//   d_t r + a d_s r + b r + q z d_z r - d_zz r = forcing,
//   d_z r(s, 0) = flux(s),    r(s, Z_max) = 0,
//
// where a is the tangential trace speed, b its arclength derivative, and q
// the one-sided limit of -(u.n)/dist at the wall (the rate at which the bulk
// flow compresses material toward the boundary).  The convective product is
// projected on the tangent, so a profile that starts tangential stays so; the
// normal slot is carried along and must remain identically zero.
//
// The z-diffusion is advanced implicitly (theta scheme on the stretched
// grid), the arclength transport and the z-stretching explicitly with
// internal step halving under their CFL numbers.
//
// On top of the evolution sit three services:
//   * a moment-preparation control: amplitudes of a few compact z-bumps,
//     solved by least squares so prescribed low z-moments of the profile
//     vanish at a handoff time on the controlled walls (each cancelled
//     moment sharpens the subsequent free heat decay),
//   * companion profiles: the trace mender (exponential tangential part plus
//     the tail of the arclength divergence in the normal slot), the
//     incompressibility patch solved as a Neumann potential on the box, and
//     the normal-balance pressure tail, together with their norm-ratio
//     report,
//   * decay-rate fits of norm timelines against the two abscissas used by
//     the theory (plain power law and the log-corrected family).
// ============================================================================
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "bcl/bc.hpp"
#include "bcl/field.hpp"
#include "bcl/grid.hpp"
#include "bcl/poisson.hpp"

namespace bcl {

// ----------------------------------------------------------------------------
// Stretched one-dimensional grid on [0, z_max].  Spacings grow geometrically
// away from the wall; weights are the trapezoid rule on the nonuniform nodes,
// so tail sums satisfy the exact discrete identity
//   (tail[i] - tail[i+1]) / dz[i] = (f[i] + f[i+1]) / 2.
// ----------------------------------------------------------------------------
struct ZGrid {
  int n = 0;
  double z_max = 0;
  std::vector<double> z;   // nodes, z[0] = 0, z[n-1] = z_max
  std::vector<double> dz;  // spacings, size n-1
  std::vector<double> w;   // trapezoid weights, size n

  static ZGrid make(int n = 128, double z_max = 40.0, double growth = 1.04);

  double integral(const double* f) const;
  double integral(const std::vector<double>& f) const { return integral(f.data()); }
  // j-th z-moment of a column.
  double moment(const double* f, int j) const;
  // out[i] = integral of f over [z_i, z_max].
  void tail(const double* f, double* out) const;
  // L2 norm of a column with polynomial weight (1+z)^m.
  double norm_weighted(const double* f, int m) const;
};

// ----------------------------------------------------------------------------
// One wall's layer unknown: a tangential component and a normal slot that the
// evolution keeps identically zero.  Storage is column major in z so each
// arclength sample owns a contiguous z-column (the implicit solve runs per
// column).
// ----------------------------------------------------------------------------
struct FaceLayer {
  Wall wall = Wall::South;
  int ns = 0, nz = 0;
  std::vector<double> tang;
  std::vector<double> nrm;

  double& t(int k, int iz) { return tang[(std::size_t)k * nz + iz]; }
  double t(int k, int iz) const { return tang[(std::size_t)k * nz + iz]; }
  double& n(int k, int iz) { return nrm[(std::size_t)k * nz + iz]; }
  double n(int k, int iz) const { return nrm[(std::size_t)k * nz + iz]; }
  const double* col(int k) const { return tang.data() + (std::size_t)k * nz; }
  double* col(int k) { return tang.data() + (std::size_t)k * nz; }
};

struct LayerProfile {
  ZGrid zg;
  std::array<FaceLayer, 4> face;
  double time = 0;

  // Cached z-moments, refreshed on demand: moment_cache[w][j*ns + k] holds
  // the j-th moment of wall w at sample k, for j < moment_orders.
  std::array<std::vector<double>, 4> moment_cache;
  int moment_orders = 0;

  static LayerProfile zeros(const Grid2D& g, const ZGrid& zg);

  void refresh_moments(int orders);
  // sqrt of the (ds x dz)-weighted square sum of the tangential component.
  double norm_l2(const Grid2D& g) const;
  double face_norm_l2(const Grid2D& g, Wall w) const;
  // Largest absolute value in any normal slot (tangentiality audit).
  double max_normal_slot() const;
};

// ----------------------------------------------------------------------------
// Wall-trace data feeding the layer step, one array per wall at cell-aligned
// samples.  The flux entry is the Neumann data injected at z = 0: twice the
// tangential Navier trace of the bulk velocity, masked by the collar cutoff
// (which vanishes near corners, decoupling the walls from each other).
// ----------------------------------------------------------------------------
struct LayerCoefficients {
  std::array<std::vector<double>, 4> along;    // tangential trace speed
  std::array<std::vector<double>, 4> along_s;  // its arclength derivative
  std::array<std::vector<double>, 4> squeeze;  // -(u.n)/dist one-sided limit
  std::array<std::vector<double>, 4> flux;     // Neumann data at z = 0
  std::array<std::vector<double>, 4> cutoff;   // collar cutoff along the wall

  static LayerCoefficients zeros(const Grid2D& g);
};

// Corner-vanishing cutoff along wall w: quintic smoothstep ramps over
// margin_frac of the wall length at both ends, 1 in between.
std::vector<double> corner_cutoff(const Grid2D& g, Wall w,
                                  double margin_frac = 0.15);

// Build the trace coefficients of a tangent bulk velocity.  Ghosts of u0 must
// be filled by the caller with whatever closure the field carries.  The
// squeeze entry divides the normal velocity one cell off the wall by the cell
// offset; the division is exact for fields whose normal component is linear
// in the wall distance and is guarded against undersized offsets.
LayerCoefficients layer_coefficients(const Grid2D& g,
                                     const BoundaryCoefficients& bc,
                                     const VectorField& u0);

// ----------------------------------------------------------------------------
// Moment-preparation control: a finite set of fixed compact z-bumps with
// per-sample amplitudes on the controlled walls, gated in time by a smooth
// unit-mass bump on (t0, t1).  Uncontrolled walls have empty amplitude
// arrays.  The forcing is tangential by construction.
// ----------------------------------------------------------------------------
struct DissipationControl {
  double t0 = 0, t1 = 0;
  std::vector<std::vector<double>> mode;
  std::array<std::vector<double>, 4> amp;  // [m*ns + k] per wall

  bool empty() const;
  double gate(double t) const;
  // Add the forcing slab of wall w at time t into out (ns*nz, column major).
  void accumulate(Wall w, double t, int ns, int nz,
                  std::vector<double>& out) const;
};

// Compact bumps centered at staggered offsets away from z = 0, unit mass.
std::vector<std::vector<double>> preparation_modes(const ZGrid& zg,
                                                   int n_modes);

struct LayerStepReport {
  int substeps = 1;
  double max_courant = 0;  // before halving
};

// Advance the profile by dt under the trace coefficients and the optional
// preparation control.  Explicit transport substeps halve dt until the
// arclength and z-stretching Courant numbers drop below 1/2; the z-diffusion
// is unconditionally stable.
LayerStepReport step_layer(const Grid2D& g, LayerProfile& rho,
                           const LayerCoefficients& co, double dt,
                           const DissipationControl* ctl = nullptr);

// ----------------------------------------------------------------------------
// Control design.  Given the profile at its current time and a target time
// t_free, pick bump amplitudes supported on (t0, t1) inside the interval so
// the z-moments of order j < k vanish at t_free on every controlled wall.
// The trace coefficients are held fixed across the design interval.  Because
// the evolution is linear, the responses of the individual modes are
// simulated once and the amplitudes solved per sample by dense least squares;
// a verification run with the assembled control reports the achieved moment
// residual relative to the profile norm at t_free.
// ----------------------------------------------------------------------------
struct ControlDesignReport {
  DissipationControl ctl;
  int requested_moments = 0;
  int achieved_moments = 0;   // orders below k whose residual met rel_tol
  double moment_residual = 0; // euclidean moment norm / profile norm, worst sample
  double handoff_norm = 0;    // profile norm at t_free after control
};

ControlDesignReport design_dissipation_control(
    const Grid2D& g, const LayerProfile& rho, const LayerCoefficients& co,
    int k, const std::array<uint8_t, 4>& controlled, double t_free,
    double rel_tol = 1e-8);

// ----------------------------------------------------------------------------
// Companion profiles of a layer state.
//
//   * trace mender: tangential slot -2 e^{-z} (Navier trace of the profile at
//     z = 0), normal slot -(tail of the arclength divergence); it decays in z
//     and its wall value drives the potential below,
//   * incompressibility patch: Neumann potential on the box whose Laplacian
//     balances the mender's in-plane divergence evaluated at the stretched
//     wall distance and whose wall flux matches the mender's normal trace
//     (the compatibility integral is checked and the solve refused when it
//     fails),
//   * normal-balance pressure: the z-tail of the normal component of the
//     symmetric convective product of the bulk velocity with the profile; it
//     vanishes at Z_max by construction.
//
// The ratio report divides each profile norm by the norm combination the
// theory pairs it with, with the stretching factors eps^{-3/4}, eps^{-1/4},
// eps^{1/4} folded into the three potential levels; the pressure ratio
// carries no factor.
// ----------------------------------------------------------------------------
struct TechnicalProfiles {
  std::array<std::vector<double>, 4> fix_tan, fix_nrm;  // trace mender slabs
  ScalarField potential;
  std::array<std::vector<double>, 4> pressure;

  bool compat_ok = true;
  double compat_residual = 0;
  SolveStats potential_stats;

  double eps = 0;
  double ratio_fix = 0;
  double ratio_pot_h4 = 0, ratio_pot_h3 = 0, ratio_pot_h2 = 0;
  double ratio_pressure = 0;
};

TechnicalProfiles technical_profiles(const Grid2D& g,
                                     const BoundaryCoefficients& bc,
                                     const LayerProfile& rho,
                                     const VectorField& u0, double eps,
                                     double compat_tol = 1e-6);

// Discrete Sobolev proxies used by the ratio report (exposed for audits).
// face_sobolev: sqrt sum over arclength-derivative orders a <= p and
// z-derivative orders b <= s of the weighted square integrals with weight
// (1+z)^{2m}.  grid_sobolev: sqrt sum of all mixed difference quotients of
// total order <= p over interior cells.
double face_sobolev(const Grid2D& g, const ZGrid& zg, Wall w,
                    const std::vector<double>& slab, int p, int s, int m);
double grid_sobolev(const Grid2D& g, const ScalarField& f, int p);

// ----------------------------------------------------------------------------
// Decay-rate fits.  The timeline is fit by least squares on two abscissas:
// log(2+t) (reported as a positive power-law exponent) and the log-corrected
// family log(log(2+t)/(2+t)).  The target exponent for a profile with k
// cancelled moments measured in the m-weighted norm is 1/4 + k/2 - m/2.
// Timelines spanning less than two decades are flagged.
// ----------------------------------------------------------------------------
struct DecayFit {
  double exponent = 0;         // power-law fit
  double exponent_logfam = 0;  // log-corrected family fit
  double residual = 0;         // rms fit residual, power law
  double residual_logfam = 0;
  double target = 0;
  bool span_ok = true;
};

DecayFit measure_decay(const std::vector<double>& t,
                       const std::vector<double>& nrm, int m, int k);

// ----------------------------------------------------------------------------
// Canonical half-line decay experiment: a Gaussian hump on one wall of a
// small box, moment preparation of order k over a unit handoff interval
// (skipped for k = 0), then free heat decay with the norm sampled on a
// log-spaced timeline.  The fit window starts at elapsed time 10 after
// handoff.  The fine z-grid defaults resolve the wall while reaching far
// enough that the truncation at z_max stays invisible over the horizon.
// ----------------------------------------------------------------------------
struct DecayRun {
  std::vector<double> t, nrm;  // elapsed time since handoff, column norm
  DecayFit fit;
  ControlDesignReport design;  // empty control for k = 0
  LayerProfile state;          // profile at the end of the run
  double moment_m2 = 0;        // second z-moment at handoff
};

DecayRun run_halfline_decay(int k, int nz = 512, double z_max = 200.0,
                            double growth = 1.008, double t_end = 1000.0);

}  // namespace bcl
