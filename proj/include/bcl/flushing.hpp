// ============================================================================
// flushing.hpp
//
// Reference transport stage: a potential carrier flow that sweeps the whole
// subdomain into the actuation band, the particle kinematics that certify
// the sweep, a ball/square bookkeeping of when each piece of the subdomain
// sits inside the band, and the transported cutoff controls built on top of
// it that annihilate a given initial state.
//
// The carrier is a(t) * grad(potential).  The potential solves the discrete
// Neumann problem whose right side is a source/sink bump pair placed in the
// band, so the trajectories of the carrier ascend the potential and every
// one of them ends inside the sink bump, low in the band.  Consequences:
//   * the discrete curl of the carrier vanishes at every interior node and
//     the normal trace vanishes on all four walls, both exactly in floating
//     point,
//   * the discrete divergence equals the prescribed dipole shape up to the
//     solver tolerance; in particular it is supported in the band.
// Everything kinematic runs in the progress clock s = integral of a; the
// carrier is autonomous there and amplitudes only reparametrize time.
// ============================================================================
#pragma once

#include <array>
#include <string>
#include <vector>

#include "bcl/field.hpp"
#include "bcl/grid.hpp"

namespace bcl {

// --- amplitude ---------------------------------------------------------------
// Smooth plateau pulse supported on (t0, t1): quintic ramps over a fixed
// fraction of the support at both ends, constant in between, scaled so the
// time integral equals "mass".
struct Amplitude {
  double t0 = 0, t1 = 1, mass = 1;
  double ramp = 0.25;  // fraction of the support taken by each ramp

  double value(double t) const;
  double slope(double t) const;
  double progress(double t) const;  // integral of value from t0 to t
  // Smallest t with progress(t) = s; returns t1 + 1 when s exceeds the mass.
  double time_of_progress(double s) const;
};

// Cutoff shape: 1 on (-inf,-1], 0 on [1,inf), quintic in between.
double unit_cutoff(double x);
double unit_cutoff_slope(double x);

// --- reference flow ----------------------------------------------------------
struct ReferenceFlow {
  Grid2D grid;
  ScalarField potential;  // cell-centered unit shape, ghost ring filled
  VectorField carrier;    // discrete gradient of the potential, |max| = 1
  ScalarField div_shape;  // discrete divergence of the carrier
  Amplitude amp;
  double T = 1;

  double min_seed_speed = 0;  // over subdomain cell centers
  double strain = 0;          // max discrete velocity-gradient entry

  void velocity_at(double t, VectorField& out) const;
  void divergence_at(double t, ScalarField& out) const;
  void pressure_at(double t, ScalarField& out) const;
  // Discrete momentum residual of the carrier flow under its own pressure;
  // the forcing that makes the flow an exact solution of the discrete
  // transport system.
  void body_force_at(double t, VectorField& out) const;
};

// Carrier with the sweep reversed (trajectories run backwards).
ReferenceFlow reversed(const ReferenceFlow& f);

// Amplitude sized by the sweep rule: mass * min_seed_speed = 2 diam(subdomain),
// supported on (0.05 T, 0.95 T).
ReferenceFlow build_reference_flow(const Grid2D& g, double T);

// --- particle kinematics -----------------------------------------------------
// Bilinear sample of a face field at a point (ghost rows must be filled).
std::array<double, 2> sample_velocity(const Grid2D& g, const VectorField& U,
                                      double x, double y);

// March dX/ds = carrier(X) from s_from to s_to with adaptive one-step RK4.
// Positions are clamped to the box; *clipped reports whether clamping fired.
std::array<double, 2> advance_progress(const ReferenceFlow& f,
                                       std::array<double, 2> x, double s_from,
                                       double s_to, bool* clipped = nullptr);

// Physical-clock flow map through the amplitude reparametrization.
std::array<double, 2> flow_map(const ReferenceFlow& f, double s, double t,
                               std::array<double, 2> x, bool* clipped = nullptr);

// First progress at which the trajectory from x leaves the closed subdomain;
// 0 when x starts outside, "budget" when it never leaves within the budget.
double exit_progress(const ReferenceFlow& f, std::array<double, 2> x,
                     double budget, bool* exited = nullptr);

struct ExitReport {
  std::vector<std::array<double, 2>> seed;
  std::vector<double> progress;  // exit progress per seed
  std::vector<double> time;      // physical exit time (t1 + 1 when never)
  int total = 0, exited = 0;
  double max_progress = 0, max_time = 0;
  std::array<double, 2> slowest = {0, 0};
  bool pass = false;
};

// Seeds one particle per subdomain cell center and traces until exit.
ExitReport verify_flushing(const ReferenceFlow& f);

// --- partition ---------------------------------------------------------------
struct FlushBall {
  std::array<double, 2> center = {0, 0};
  double radius = 0;
  int square = -1;          // index of the assigned band square
  double s_entry = 0;       // ball fully inside the square from here
  double s_cut = 0;         // cutoff center: window is (s_cut - eps, s_cut + eps)
  double sojourn = 0;       // length of the verified containment run
};

struct FlushPartition {
  std::vector<FlushBall> balls;
  std::vector<Rect> squares;
  double eps = 0;           // half-window in progress units
  double horizon = 0;       // latest window end
  bool ok = false;
  std::string note;

  // Smooth weight of ball l at a point; the weights sum to 1 wherever some
  // ball covers the point (in particular on the closed subdomain).
  double weight(int l, double x, double y) const;
};

// Greedy ball cover of the subdomain (cell centers and interior nodes) and
// absorption scan of every ball into the band square holding the carrier's
// attractor.  Each ball is sampled at its center, its boundary circle, and
// two interior rings; a window opens once the whole sampled set has settled
// inside the square, and every sample is then re-verified there across the
// window, together with the partition of unity at the boundary samples.
FlushPartition build_partition(const ReferenceFlow& f, double ball_radius,
                               int boundary_samples = 24);

// --- transported cutoff controls ----------------------------------------------
// Marches the per-ball transported fields in the progress clock and exposes
// the assembled profiles:
//   theta1 = sum_l beta_l theta_l,   w1 = sum_l beta_l' theta_l   (cells)
//   omega1 = sum_l beta_l omega_l,   wv = sum_l beta_l' omega_l   (nodes)
// where theta_l and omega_l both ride the carrier as transported scalars and
// beta_l is the cutoff of the ball's window; the momentum closure absorbs
// the carrier's compression as part of its residual forcing.  velocity()
// recovers the solenoidal field of omega1 with zero normal trace.
// Physical-clock sources are amp.value(t) times the progress-clock ones.
class TransportControl {
 public:
  TransportControl(const ReferenceFlow& f, const FlushPartition& part,
                   const VectorField& u_init, const ScalarField& th_init,
                   double ds_max = 0);
  ~TransportControl();

  void advance_to(double s);
  double s() const { return s_; }
  double step() const { return ds_; }

  void assemble_theta(ScalarField& theta1, ScalarField* w1 = nullptr) const;
  void assemble_vorticity(NodeField& omega1, NodeField* wv = nullptr) const;
  void velocity(VectorField& u1) const;  // curl solve of the assembled omega1

  // Largest ratio |theta_l|_inf(now) / |theta_l|_inf(start) over balls; the
  // clamped interpolation keeps it at or below 1.
  double max_amplification() const;

  // Mass of |theta_l| (and |omega_l|) outside its square at the window
  // center, relative to the blob's initial mass; recorded when the march
  // passes s_cut.
  double worst_support_leak() const { return worst_leak_; }

 private:
  struct Blob;
  void step_once(double ds);

  const ReferenceFlow* flow_;
  const FlushPartition* part_;
  double s_ = 0, ds_ = 0;
  double worst_leak_ = 0;
  std::vector<Blob> blobs_;
};

struct TransportReport {
  double theta_terminal = 0;     // |theta(end)| / |theta(0)|
  double velocity_terminal = 0;  // |u(end)| / |u(0)|
  double support_leak = 0;
  double amplification = 0;
  bool ok = false;
};

// Direct simulation check: advect the full fields with the assembled sources
// and measure what survives past the last cutoff window.
TransportReport replay_transport(const ReferenceFlow& f,
                                 const FlushPartition& part,
                                 const VectorField& u_init,
                                 const ScalarField& th_init);

}  // namespace bcl
