// ============================================================================
// flushing.cpp
//
// See flushing.hpp.  Everything kinematic is phrased in the progress clock,
// where the carrier is autonomous.  The potential combines the discrete
// harmonic mode of the five-point stencil (so divergence and curl audits are
// exact) with a smooth taper that parks the through-flow inside the band.
// ============================================================================
#include "bcl/flushing.hpp"

#include <algorithm>
#include <cmath>

#include "bcl/bc.hpp"
#include "bcl/operators.hpp"
#include "bcl/poisson.hpp"
#include "bcl/solver.hpp"

namespace bcl {

namespace {

// Quintic smoothstep and its helpers on [0,1].
double sstep(double x) {
  if (x <= 0) return 0;
  if (x >= 1) return 1;
  return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}
double sstep_d(double x) {
  if (x <= 0 || x >= 1) return 0;
  double y = x * (1.0 - x);
  return 30.0 * y * y;
}
double sstep_int(double x) {  // integral of sstep from 0 to x
  if (x <= 0) return 0;
  if (x >= 1) return 0.5 + (x - 1.0);
  double x4 = x * x * x * x;
  return x4 * (2.5 + x * (-3.0 + x));
}

double clampd(double v, double lo, double hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

}  // namespace

// --- amplitude ----------------------------------------------------------------

double Amplitude::value(double t) const {
  double w = t1 - t0, r = ramp * w;
  if (w <= 0 || mass == 0) return 0;
  double scale = mass / (w - r);
  if (t <= t0 || t >= t1) return 0;
  if (t < t0 + r) return scale * sstep((t - t0) / r);
  if (t > t1 - r) return scale * sstep((t1 - t) / r);
  return scale;
}

double Amplitude::slope(double t) const {
  double w = t1 - t0, r = ramp * w;
  if (w <= 0 || mass == 0) return 0;
  double scale = mass / (w - r);
  if (t <= t0 || t >= t1) return 0;
  if (t < t0 + r) return scale * sstep_d((t - t0) / r) / r;
  if (t > t1 - r) return -scale * sstep_d((t1 - t) / r) / r;
  return 0;
}

double Amplitude::progress(double t) const {
  double w = t1 - t0, r = ramp * w;
  if (w <= 0 || mass == 0) return 0;
  double scale = mass / (w - r);
  if (t <= t0) return 0;
  if (t >= t1) return mass;
  if (t < t0 + r) return scale * r * sstep_int((t - t0) / r);
  if (t <= t1 - r) return scale * (0.5 * r + (t - t0 - r));
  return mass - scale * r * sstep_int((t1 - t) / r);
}

double Amplitude::time_of_progress(double s) const {
  if (s <= 0) return t0;
  if (s >= mass) return t1 + 1.0;
  double lo = t0, hi = t1;
  for (int k = 0; k < 64; ++k) {
    double mid = 0.5 * (lo + hi);
    (progress(mid) < s ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double unit_cutoff(double x) { return 1.0 - sstep(0.5 * (x + 1.0)); }
double unit_cutoff_slope(double x) { return -0.5 * sstep_d(0.5 * (x + 1.0)); }

// --- reference flow ------------------------------------------------------------

ReferenceFlow build_reference_flow(const Grid2D& g, double T) {
  ReferenceFlow f;
  f.grid = g;
  f.T = T;
  f.potential = ScalarField(g);
  f.carrier = VectorField(g);
  f.div_shape = ScalarField(g);

  // Band dipole: a unit-mass source bump in the upper band and a matching
  // sink bump in the lower band.  The potential solves the discrete Neumann
  // problem for that divergence, so the gradient flow ascends to a unique
  // maximum inside the sink bump: every trajectory in the box ends there,
  // which is what the partition scan relies on.
  double bw = g.Lx - g.x_interface;
  double xb = g.x_interface + 0.55 * bw;
  double rx = 0.40 * bw, ry = 0.22 * g.Ly;
  ScalarField rhs(g);
  for (int pass = 0; pass < 2; ++pass) {
    double yb = pass == 0 ? 0.74 * g.Ly : 0.26 * g.Ly;
    double sign = pass == 0 ? 1.0 : -1.0;
    double mass = 0;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        double qx = (g.xc(i) - xb) / rx, qy = (g.yc(j) - yb) / ry;
        double ax = 1.0 - qx * qx, ay = 1.0 - qy * qy;
        if (ax > 0 && ay > 0) mass += std::pow(ax * ay, 4.0) * g.hx * g.hy;
      }
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        double qx = (g.xc(i) - xb) / rx, qy = (g.yc(j) - yb) / ry;
        double ax = 1.0 - qx * qx, ay = 1.0 - qy * qy;
        if (ax > 0 && ay > 0)
          rhs(i, j) += sign * std::pow(ax * ay, 4.0) / mass;
      }
  }
  poisson_neumann(g, rhs, f.potential, 1e-12);

  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i)
      f.carrier.u(i, j) = (f.potential(i, j) - f.potential(i - 1, j)) / g.hx;
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      f.carrier.v(i, j) = (f.potential(i, j) - f.potential(i, j - 1)) / g.hy;

  double m = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) m = std::max(m, std::abs(f.carrier.u(i, j)));
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) m = std::max(m, std::abs(f.carrier.v(i, j)));
  m = std::max(m, 1e-300);
  for (double& v : f.carrier.raw_u()) v /= m;
  for (double& v : f.carrier.raw_v()) v /= m;
  for (double& v : f.potential.raw()) v /= m;

  div_f2c(g, f.carrier, f.div_shape);
  fill_ghosts_extrapolate(g, f.carrier);

  f.min_seed_speed = 1e300;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (g.in_band(i, j)) continue;
      auto v = sample_velocity(g, f.carrier, g.xc(i), g.yc(j));
      f.min_seed_speed = std::min(f.min_seed_speed, std::hypot(v[0], v[1]));
    }

  f.strain = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      f.strain = std::max(
          f.strain, std::abs(f.carrier.u(i + 1, j) - f.carrier.u(i, j)) / g.hx);
  for (int j = 0; j + 1 < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i)
      f.strain = std::max(
          f.strain, std::abs(f.carrier.u(i, j + 1) - f.carrier.u(i, j)) / g.hy);
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i + 1 < g.nx; ++i)
      f.strain = std::max(
          f.strain, std::abs(f.carrier.v(i + 1, j) - f.carrier.v(i, j)) / g.hx);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      f.strain = std::max(
          f.strain, std::abs(f.carrier.v(i, j + 1) - f.carrier.v(i, j)) / g.hy);

  f.amp.t0 = 0.05 * T;
  f.amp.t1 = 0.95 * T;
  f.amp.mass = 2.0 * g.diam_omega_domain() / std::max(f.min_seed_speed, 1e-12);
  return f;
}

ReferenceFlow reversed(const ReferenceFlow& f) {
  ReferenceFlow b = f;
  for (double& v : b.carrier.raw_u()) v = -v;
  for (double& v : b.carrier.raw_v()) v = -v;
  for (double& v : b.potential.raw()) v = -v;
  for (double& v : b.div_shape.raw()) v = -v;
  return b;
}

void ReferenceFlow::velocity_at(double t, VectorField& out) const {
  double a = amp.value(t);
  out = carrier;
  for (double& v : out.raw_u()) v *= a;
  for (double& v : out.raw_v()) v *= a;
  out.time = t;
}

void ReferenceFlow::divergence_at(double t, ScalarField& out) const {
  double a = amp.value(t);
  out = div_shape;
  for (double& v : out.raw()) v *= a;
  out.time = t;
}

void ReferenceFlow::pressure_at(double t, ScalarField& out) const {
  double a = amp.value(t), ap = amp.slope(t);
  const Grid2D& g = grid;
  out = ScalarField(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double ke =
          0.25 * (carrier.u(i, j) * carrier.u(i, j) +
                  carrier.u(i + 1, j) * carrier.u(i + 1, j)) +
          0.25 * (carrier.v(i, j) * carrier.v(i, j) +
                  carrier.v(i, j + 1) * carrier.v(i, j + 1));
      out(i, j) = -ap * potential(i, j) - a * a * ke;
    }
  out.time = t;
}

void ReferenceFlow::body_force_at(double t, VectorField& out) const {
  // For a curl-free carrier the unsteady term cancels against the potential
  // part of the pressure, leaving the discrete mismatch between the advection
  // stencil and the kinetic-energy gradient.
  double a = amp.value(t);
  const Grid2D& g = grid;
  advect_velocity(g, carrier, carrier, out);
  ScalarField ke(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      ke(i, j) =
          0.25 * (carrier.u(i, j) * carrier.u(i, j) +
                  carrier.u(i + 1, j) * carrier.u(i + 1, j)) +
          0.25 * (carrier.v(i, j) * carrier.v(i, j) +
                  carrier.v(i, j + 1) * carrier.v(i, j + 1));
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i)
      out.u(i, j) -= (ke(i, j) - ke(i - 1, j)) / g.hx;
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      out.v(i, j) -= (ke(i, j) - ke(i, j - 1)) / g.hy;
  for (int j = 0; j < g.ny; ++j) out.u(0, j) = out.u(g.nx, j) = 0;
  for (int i = 0; i < g.nx; ++i) out.v(i, 0) = out.v(i, g.ny) = 0;
  double a2 = a * a;
  for (double& v : out.raw_u()) v *= a2;
  for (double& v : out.raw_v()) v *= a2;
  out.time = t;
}

// --- kinematics -----------------------------------------------------------------

std::array<double, 2> sample_velocity(const Grid2D& g, const VectorField& U,
                                      double x, double y) {
  // u lattice: (i hx, (j+1/2) hy) with j down to the ghost row
  double fx = x / g.hx;
  double fy = y / g.hy - 0.5;
  int i0 = (int)std::floor(fx);
  int j0 = (int)std::floor(fy);
  i0 = std::max(0, std::min(i0, g.nx - 1));
  j0 = std::max(-1, std::min(j0, g.ny - 1));
  double wx = clampd(fx - i0, 0.0, 1.0), wy = clampd(fy - j0, 0.0, 1.0);
  double uu = (1 - wx) * ((1 - wy) * U.u(i0, j0) + wy * U.u(i0, j0 + 1)) +
              wx * ((1 - wy) * U.u(i0 + 1, j0) + wy * U.u(i0 + 1, j0 + 1));
  // v lattice: ((i+1/2) hx, j hy)
  fx = x / g.hx - 0.5;
  fy = y / g.hy;
  i0 = (int)std::floor(fx);
  j0 = (int)std::floor(fy);
  i0 = std::max(-1, std::min(i0, g.nx - 1));
  j0 = std::max(0, std::min(j0, g.ny - 1));
  wx = clampd(fx - i0, 0.0, 1.0);
  wy = clampd(fy - j0, 0.0, 1.0);
  double vv = (1 - wx) * ((1 - wy) * U.v(i0, j0) + wy * U.v(i0, j0 + 1)) +
              wx * ((1 - wy) * U.v(i0 + 1, j0) + wy * U.v(i0 + 1, j0 + 1));
  return {uu, vv};
}

namespace {

struct Box2 {
  double lo = 1e-12;
  double hx, hy;
  void clamp(std::array<double, 2>& p) const {
    p[0] = clampd(p[0], lo, hx - lo);
    p[1] = clampd(p[1], lo, hy - lo);
  }
  bool clips(const std::array<double, 2>& p) const {
    return p[0] <= lo || p[0] >= hx - lo || p[1] <= lo || p[1] >= hy - lo;
  }
};

// One RK4 step of dX/ds = sgn * carrier(X).
std::array<double, 2> rk4(const Grid2D& g, const VectorField& U,
                          std::array<double, 2> p, double ds, double sgn) {
  auto f = [&](std::array<double, 2> q) {
    auto v = sample_velocity(g, U, q[0], q[1]);
    return std::array<double, 2>{sgn * v[0], sgn * v[1]};
  };
  auto k1 = f(p);
  auto k2 = f({p[0] + 0.5 * ds * k1[0], p[1] + 0.5 * ds * k1[1]});
  auto k3 = f({p[0] + 0.5 * ds * k2[0], p[1] + 0.5 * ds * k2[1]});
  auto k4 = f({p[0] + ds * k3[0], p[1] + ds * k3[1]});
  p[0] += ds / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
  p[1] += ds / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
  return p;
}

double adaptive_ds(const ReferenceFlow& f, double speed, double remaining) {
  double hmin = std::min(f.grid.hx, f.grid.hy);
  double ds = 0.35 * hmin / (speed + 1e-300);
  ds = std::min(ds, 0.3 / std::max(f.strain, 1e-12));
  return std::min(ds, remaining);
}

// Trajectory samples of a ball: the center, the boundary circle, and two
// interior rings.  The interior rings matter where a stagnation manifold
// cuts through the ball and splits it across routes of very different
// transit times; a boundary-only hull would miss the slow branch entirely.
// Index 1 .. boundary_samples is the boundary ring.  Points are pulled a
// quarter cell off the walls so they represent the slowest material the
// grid can carry.
std::vector<std::array<double, 2>> ball_samples(const Grid2D& g,
                                                const FlushBall& b,
                                                int boundary_samples) {
  std::vector<std::array<double, 2>> pts;
  pts.push_back(b.center);
  for (int ring = 0; ring < 3; ++ring) {
    double rr = b.radius * (1.0 - 0.35 * ring);
    int n = std::max(6, boundary_samples - 8 * ring);
    for (int k = 0; k < n; ++k) {
      double a = 2.0 * M_PI * (k + 0.5 * ring) / n;
      pts.push_back({b.center[0] + rr * std::cos(a),
                     b.center[1] + rr * std::sin(a)});
    }
  }
  for (auto& p : pts) {
    p[0] = clampd(p[0], 0.25 * g.hx, g.Lx - 0.25 * g.hx);
    p[1] = clampd(p[1], 0.25 * g.hy, g.Ly - 0.25 * g.hy);
  }
  return pts;
}

}  // namespace

std::array<double, 2> advance_progress(const ReferenceFlow& f,
                                       std::array<double, 2> x, double s_from,
                                       double s_to, bool* clipped) {
  Box2 box{1e-12, f.grid.Lx, f.grid.Ly};
  box.clamp(x);
  double span = std::abs(s_to - s_from);
  double sgn = (s_to >= s_from) ? 1.0 : -1.0;
  double s = 0;
  if (clipped) *clipped = false;
  while (s < span - 1e-14) {
    auto v = sample_velocity(f.grid, f.carrier, x[0], x[1]);
    double ds = adaptive_ds(f, std::hypot(v[0], v[1]), span - s);
    x = rk4(f.grid, f.carrier, x, ds, sgn);
    if (box.clips(x) && clipped) *clipped = true;
    box.clamp(x);
    s += ds;
  }
  return x;
}

std::array<double, 2> flow_map(const ReferenceFlow& f, double s, double t,
                               std::array<double, 2> x, bool* clipped) {
  return advance_progress(f, x, f.amp.progress(t), f.amp.progress(s), clipped);
}

double exit_progress(const ReferenceFlow& f, std::array<double, 2> x,
                     double budget, bool* exited) {
  Box2 box{1e-12, f.grid.Lx, f.grid.Ly};
  box.clamp(x);
  if (exited) *exited = true;
  if (x[0] > f.grid.x_interface) return 0.0;
  double s = 0;
  while (s < budget) {
    auto v = sample_velocity(f.grid, f.carrier, x[0], x[1]);
    double ds = adaptive_ds(f, std::hypot(v[0], v[1]), budget - s);
    x = rk4(f.grid, f.carrier, x, ds, 1.0);
    box.clamp(x);
    s += ds;
    if (x[0] > f.grid.x_interface) return s;
  }
  if (exited) *exited = false;
  return budget;
}

ExitReport verify_flushing(const ReferenceFlow& f) {
  const Grid2D& g = f.grid;
  ExitReport rep;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (g.in_band(i, j)) continue;
      std::array<double, 2> seed = {g.xc(i), g.yc(j)};
      bool out = false;
      double s = exit_progress(f, seed, f.amp.mass, &out);
      double t;
      if (!out)
        t = f.T + 1.0;
      else if (s == 0.0)
        t = 0.0;
      else
        t = f.amp.time_of_progress(s);
      rep.seed.push_back(seed);
      rep.progress.push_back(s);
      rep.time.push_back(t);
      rep.total += 1;
      rep.exited += out ? 1 : 0;
      if (s >= rep.max_progress) {
        rep.max_progress = s;
        rep.slowest = seed;
      }
      rep.max_time = std::max(rep.max_time, t);
    }
  rep.pass = (rep.exited == rep.total) && (rep.max_time < f.T);
  return rep;
}

// --- partition -------------------------------------------------------------------

double FlushPartition::weight(int l, double x, double y) const {
  double den = 0, num = 0;
  for (int k = 0; k < (int)balls.size(); ++k) {
    double dx = (x - balls[k].center[0]) / balls[k].radius;
    double dy = (y - balls[k].center[1]) / balls[k].radius;
    double q = 1.0 - dx * dx - dy * dy;
    double b = q > 0 ? q * q * q * q : 0.0;
    den += b;
    if (k == l) num = b;
  }
  return den > 0 ? num / den : 0.0;
}

FlushPartition build_partition(const ReferenceFlow& f, double ball_radius,
                               int boundary_samples) {
  const Grid2D& g = f.grid;
  FlushPartition part;

  // Greedy cover of the subdomain: cell centers plus interior nodes, so both
  // the cell-sampled temperature weights and the node-sampled vorticity
  // weights see a full partition of unity.
  std::vector<std::array<double, 2>> targets;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (!g.in_band(i, j)) targets.push_back({g.xc(i), g.yc(j)});
  for (int j = 1; j < g.ny; ++j)
    for (int i = 1; i <= g.i_interface; ++i)
      targets.push_back({g.xu(i), g.yv(j)});
  double cover = 0.75 * ball_radius;
  for (const auto& t : targets) {
    bool covered = false;
    for (const auto& b : part.balls) {
      double dx = t[0] - b.center[0], dy = t[1] - b.center[1];
      if (dx * dx + dy * dy <= cover * cover) {
        covered = true;
        break;
      }
    }
    if (!covered) {
      FlushBall b;
      b.center = t;
      b.radius = ball_radius;
      part.balls.push_back(b);
    }
  }

  // Square tiling of the band, one column, rows overlapping enough that a
  // ball-sized blob fits one of them at every height.
  double bw = g.Lx - g.x_interface;
  double pad = 0.02 * bw;
  double q = bw - 2 * pad;
  double step = std::max(0.15 * q, q - 2.0 * ball_radius - 0.04 * g.Ly);
  double x0 = g.x_interface + pad;
  for (double yc = 0.5 * q;; yc += step) {
    if (yc > g.Ly - 0.5 * q + 1e-12) {
      if (part.squares.empty() ||
          part.squares.back().y1 < g.Ly - 1e-12)
        part.squares.push_back(Rect{x0, x0 + q, g.Ly - q, g.Ly});
      break;
    }
    part.squares.push_back(Rect{x0, x0 + q, yc - 0.5 * q, yc + 0.5 * q});
  }

  // Every trajectory of the carrier ascends the potential and ends at its
  // maximum, inside the band.  All cutoff windows live in the square that
  // holds that attractor with the widest margins.
  int si = -1, sj = -1;
  double pbest = -1e300;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (g.in_band(i, j) && f.potential(i, j) > pbest) {
        pbest = f.potential(i, j);
        si = i;
        sj = j;
      }
  double sx = g.xc(si), sy = g.yc(sj);
  int sink_sq = 0;
  double margin = -1e300;
  for (std::size_t m = 0; m < part.squares.size(); ++m) {
    const Rect& r = part.squares[m];
    double mm = std::min(std::min(sx - r.x0, r.x1 - sx),
                         std::min(sy - r.y0, r.y1 - sy));
    if (mm > margin) {
      margin = mm;
      sink_sq = (int)m;
    }
  }
  if (margin < 0.1 * part.squares[sink_sq].width()) {
    part.ok = false;
    part.note = "the attractor sits too close to every square edge";
    return part;
  }
  const Rect& sq = part.squares[sink_sq];

  // Absorption scan: march each ball's samples until the whole set has been
  // inside the attractor square, uninterrupted, long enough to hold a full
  // cutoff window plus slack.  The window opens after a settle pad that
  // scales with the spread of the samples' settle times: material slower
  // than the slowest sample (wall-hugging cells, corner stagnation) trails
  // off at the same exponential rate that spread measures.
  double eps_cap = 3.0;
  double scan_cap = std::min(f.amp.mass, 200.0);
  bool absorbed = true;
  for (FlushBall& b : part.balls) {
    std::vector<std::array<double, 2>> pts = ball_samples(g, b, boundary_samples);
    std::vector<double> since(pts.size(), 0.0);
    std::vector<char> in(pts.size());
    for (std::size_t k = 0; k < pts.size(); ++k)
      in[k] = sq.contains(pts[k][0], pts[k][1]) ? 1 : 0;
    Box2 box{1e-12, g.Lx, g.Ly};
    double s = 0;
    bool done = false;
    while (s < scan_cap) {
      double sp = 0;
      for (const auto& p : pts) {
        auto v = sample_velocity(g, f.carrier, p[0], p[1]);
        sp = std::max(sp, std::hypot(v[0], v[1]));
      }
      double ds = adaptive_ds(f, sp, scan_cap - s);
      for (auto& p : pts) {
        p = rk4(g, f.carrier, p, ds, 1.0);
        box.clamp(p);
      }
      s += ds;
      bool all_in = true;
      double latest = 0, first = 1e300;
      for (std::size_t k = 0; k < pts.size(); ++k) {
        bool now = sq.contains(pts[k][0], pts[k][1]);
        if (now && !in[k]) since[k] = s;
        in[k] = now ? 1 : 0;
        all_in = all_in && now;
        latest = std::max(latest, since[k]);
        first = std::min(first, since[k]);
      }
      double settle = std::min(10.0, 1.0 + 1.25 * (latest - first));
      if (all_in && s - latest >= settle + 2.0 * eps_cap + 0.5) {
        b.square = sink_sq;
        b.s_entry = latest + settle;
        b.sojourn = s - b.s_entry;
        done = true;
        break;
      }
    }
    if (!done) {
      absorbed = false;
      part.note = "a ball is not absorbed within the scan budget; "
                  "use a smaller ball radius";
    }
  }
  if (!absorbed) {
    part.ok = false;
    return part;
  }

  double min_sojourn = 1e300;
  for (const FlushBall& b : part.balls)
    min_sojourn = std::min(min_sojourn, b.sojourn);
  part.eps = std::min(0.5 * min_sojourn, eps_cap);
  part.horizon = 0;
  for (FlushBall& b : part.balls) {
    b.s_cut = b.s_entry + part.eps;
    part.horizon = std::max(part.horizon, b.s_cut + part.eps);
  }

  // Independent re-verification: fresh traces of every sample at five window
  // checkpoints must land inside the square, and the weights must still sum
  // to one at the boundary samples that carry data.
  part.ok = true;
  for (const FlushBall& b : part.balls) {
    std::vector<std::array<double, 2>> pts = ball_samples(g, b, boundary_samples);
    for (int k = 0; k < (int)pts.size(); ++k) {
      std::array<double, 2> p = pts[k];
      if (k >= 1 && k <= boundary_samples && p[0] <= g.x_interface) {
        double wsum = 0;
        for (int l = 0; l < (int)part.balls.size(); ++l)
          wsum += part.weight(l, p[0], p[1]);
        if (std::abs(wsum - 1.0) > 1e-9) {
          part.ok = false;
          part.note = "weights fail to sum to one at a ball boundary sample";
        }
      }
      double s = 0;
      for (int c = -2; c <= 2; ++c) {
        double target = b.s_cut + 0.5 * c * part.eps;
        p = advance_progress(f, p, s, target);
        s = target;
        if (!sq.contains(p[0], p[1])) {
          part.ok = false;
          part.note = "window containment re-verification failed";
        }
      }
    }
  }
  if (part.horizon >= f.amp.mass) {
    part.ok = false;
    part.note = "cutoff windows do not fit inside the sweep";
  }
  return part;
}

// --- transported cutoff controls ---------------------------------------------

namespace {

void quintic_weights(double t, double w[6]) {
  double a = t + 2.0, b = t + 1.0, c = t - 1.0, d = t - 2.0, e = t - 3.0;
  w[0] = -b * t * c * d * e / 120.0;
  w[1] = a * t * c * d * e / 24.0;
  w[2] = -a * b * c * d * e / 12.0;
  w[3] = a * b * t * d * e / 12.0;
  w[4] = -a * b * t * c * e / 24.0;
  w[5] = a * b * t * c * d / 120.0;
}

// Clamped sixth-order Lagrange on cell centers.  The stencil may read the
// extrapolated ghost ring, which keeps the one-sided slope alive next to a
// wall (index repetition would freeze wall-normal drift), but the value is
// clamped to the range of the interior samples so the scheme stays monotone
// and never amplifies.
double interp_cell(const Grid2D& g, const ScalarField& f, double x, double y) {
  double fx = x / g.hx - 0.5, fy = y / g.hy - 0.5;
  int i0 = (int)std::floor(fx), j0 = (int)std::floor(fy);
  double wx[6], wy[6];
  quintic_weights(clampd(fx - i0, 0.0, 1.0), wx);
  quintic_weights(clampd(fy - j0, 0.0, 1.0), wy);
  double v = 0, lo = 1e300, hi = -1e300;
  for (int b = 0; b < 6; ++b) {
    int j = std::max(-1, std::min(j0 - 2 + b, g.ny));
    for (int a = 0; a < 6; ++a) {
      int i = std::max(-1, std::min(i0 - 2 + a, g.nx));
      double s = f(i, j);
      v += wx[a] * wy[b] * s;
      if (i >= 0 && i < g.nx && j >= 0 && j < g.ny) {
        lo = std::min(lo, s);
        hi = std::max(hi, s);
      }
    }
  }
  return lo <= hi ? clampd(v, lo, hi) : v;
}

double interp_node(const Grid2D& g, const NodeField& f, double x, double y) {
  double fx = x / g.hx, fy = y / g.hy;
  int i0 = (int)std::floor(fx), j0 = (int)std::floor(fy);
  double wx[6], wy[6];
  quintic_weights(clampd(fx - i0, 0.0, 1.0), wx);
  quintic_weights(clampd(fy - j0, 0.0, 1.0), wy);
  double v = 0, lo = 1e300, hi = -1e300;
  for (int b = 0; b < 6; ++b) {
    int j = std::max(-1, std::min(j0 - 2 + b, g.ny + 1));
    for (int a = 0; a < 6; ++a) {
      int i = std::max(-1, std::min(i0 - 2 + a, g.nx + 1));
      double s = f(i, j);
      v += wx[a] * wy[b] * s;
      if (i >= 0 && i <= g.nx && j >= 0 && j <= g.ny) {
        lo = std::min(lo, s);
        hi = std::max(hi, s);
      }
    }
  }
  return lo <= hi ? clampd(v, lo, hi) : v;
}

struct SupportBox {
  int i0, i1, j0, j1;  // inclusive cell index bounds
  void grow(int pad, int nx, int ny) {
    i0 = std::max(0, i0 - pad);
    j0 = std::max(0, j0 - pad);
    i1 = std::min(nx - 1, i1 + pad);
    j1 = std::min(ny - 1, j1 + pad);
  }
};

}  // namespace

TransportControl::~TransportControl() = default;

struct TransportControl::Blob {
  ScalarField th;
  NodeField om;
  double th_scale = 0, om_scale = 0;
  double th_mass0 = 0, om_mass0 = 0;
  double s_cut = 0, death = 0;
  int square = -1;
  bool leak_done = false;
  SupportBox box;
  int steps_since_tighten = 0;

  bool empty() const { return th_scale == 0 && om_scale == 0; }
};

TransportControl::TransportControl(const ReferenceFlow& f,
                                   const FlushPartition& part,
                                   const VectorField& u_init,
                                   const ScalarField& th_init, double ds_max)
    : flow_(&f), part_(&part) {
  const Grid2D& g = f.grid;
  ds_ = 0.35 * std::min(g.hx, g.hy);
  ds_ = std::min(ds_, 0.3 / std::max(f.strain, 1e-12));
  if (ds_max > 0) ds_ = std::min(ds_, ds_max);

  VectorField ug = u_init;
  fill_ghosts_extrapolate(g, ug);
  NodeField om_star(g);
  curl_f2n(g, ug, om_star);

  blobs_.reserve(part.balls.size());
  for (std::size_t l = 0; l < part.balls.size(); ++l) {
    const FlushBall& ball = part.balls[l];
    Blob b;
    b.th = ScalarField(g);
    b.om = NodeField(g);
    b.s_cut = ball.s_cut;
    b.death = ball.s_cut + part.eps;
    b.square = ball.square;
    int ci = (int)(ball.center[0] / g.hx), cj = (int)(ball.center[1] / g.hy);
    int rx = (int)(ball.radius / g.hx) + 2, ry = (int)(ball.radius / g.hy) + 2;
    b.box = SupportBox{ci - rx, ci + rx, cj - ry, cj + ry};
    b.box.grow(0, g.nx, g.ny);
    for (int j = b.box.j0; j <= b.box.j1; ++j)
      for (int i = b.box.i0; i <= b.box.i1; ++i) {
        b.th(i, j) = part.weight((int)l, g.xc(i), g.yc(j)) * th_init(i, j);
        b.th_scale = std::max(b.th_scale, std::abs(b.th(i, j)));
        b.th_mass0 += std::abs(b.th(i, j));
      }
    for (int j = b.box.j0; j <= b.box.j1 + 1; ++j)
      for (int i = b.box.i0; i <= b.box.i1 + 1; ++i) {
        b.om(i, j) = part.weight((int)l, g.xu(i), g.yv(j)) * om_star(i, j);
        b.om_scale = std::max(b.om_scale, std::abs(b.om(i, j)));
        b.om_mass0 += std::abs(b.om(i, j));
      }
    blobs_.push_back(std::move(b));
  }
}

void TransportControl::step_once(double ds) {
  const Grid2D& g = flow_->grid;

  // Departure points are shared by every blob alive this step (the backtrace
  // only depends on the carrier), so memoize them lazily.
  std::vector<char> havec((std::size_t)g.nx * g.ny, 0);
  std::vector<char> haven((std::size_t)(g.nx + 1) * (g.ny + 1), 0);
  std::vector<std::array<double, 2>> depc(havec.size()), depn(haven.size());
  auto dep_cell = [&](int i, int j) {
    std::size_t k = (std::size_t)i + (std::size_t)g.nx * j;
    if (!havec[k]) {
      depc[k] = rk4(g, flow_->carrier, {g.xc(i), g.yc(j)}, ds, -1.0);
      havec[k] = 1;
    }
    return depc[k];
  };
  auto dep_node = [&](int i, int j) {
    std::size_t k = (std::size_t)i + (std::size_t)(g.nx + 1) * j;
    if (!haven[k]) {
      depn[k] = rk4(g, flow_->carrier, {g.xu(i), g.yv(j)}, ds, -1.0);
      haven[k] = 1;
    }
    return depn[k];
  };

  for (Blob& b : blobs_) {
    if (s_ >= b.death || b.empty()) continue;
    // Growth must cover one step of advection plus the interpolation stencil.
    b.box.grow(3, g.nx, g.ny);
    ScalarField nth(g);
    NodeField nom(g);
    if (b.th_scale > 0) {
      fill_ghosts_extrapolate(g, b.th);
      for (int j = b.box.j0; j <= b.box.j1; ++j)
        for (int i = b.box.i0; i <= b.box.i1; ++i) {
          auto p = dep_cell(i, j);
          nth(i, j) = interp_cell(g, b.th, p[0], p[1]);
        }
    }
    if (b.om_scale > 0) {
      fill_ghosts_extrapolate(g, b.om);
      for (int j = b.box.j0; j <= b.box.j1 + 1; ++j)
        for (int i = b.box.i0; i <= b.box.i1 + 1; ++i) {
          auto p = dep_node(i, j);
          nom(i, j) = interp_node(g, b.om, p[0], p[1]);
        }
    }
    b.th = std::move(nth);
    b.om = std::move(nom);

    if (++b.steps_since_tighten >= 8) {
      b.steps_since_tighten = 0;
      double tth = 1e-13 * b.th_scale, tom = 1e-13 * b.om_scale;
      SupportBox nb{g.nx, -1, g.ny, -1};
      auto inc_cell = [&](int i, int j) {
        i = std::max(0, std::min(i, g.nx - 1));
        j = std::max(0, std::min(j, g.ny - 1));
        nb.i0 = std::min(nb.i0, i);
        nb.i1 = std::max(nb.i1, i);
        nb.j0 = std::min(nb.j0, j);
        nb.j1 = std::max(nb.j1, j);
      };
      if (b.th_scale > 0)
        for (int j = 0; j < g.ny; ++j)
          for (int i = 0; i < g.nx; ++i)
            if (std::abs(b.th(i, j)) > tth) inc_cell(i, j);
      if (b.om_scale > 0)
        for (int j = 0; j <= g.ny; ++j)
          for (int i = 0; i <= g.nx; ++i)
            if (std::abs(b.om(i, j)) > tom) {
              inc_cell(i - 1, j - 1);
              inc_cell(i, j);
            }
      if (nb.i1 >= nb.i0) {
        for (int j = 0; j < g.ny; ++j)
          for (int i = 0; i < g.nx; ++i)
            if (i < nb.i0 || i > nb.i1 || j < nb.j0 || j > nb.j1)
              b.th(i, j) = 0;
        for (int j = 0; j <= g.ny; ++j)
          for (int i = 0; i <= g.nx; ++i)
            if (i < nb.i0 || i > nb.i1 + 1 || j < nb.j0 || j > nb.j1 + 1)
              b.om(i, j) = 0;
        b.box = nb;
      }
    }
  }
  // The leak is the mass the window acts on outside its square, relative to
  // the mass the blob started with; dividing by the current mass instead
  // would blow up once the drain has absorbed the core.
  double s_new = s_ + ds;
  for (Blob& b : blobs_)
    if (!b.leak_done && s_ < b.s_cut && s_new >= b.s_cut) {
      b.leak_done = true;
      const Rect& sq = part_->squares[b.square];
      double out = 0;
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
          if (!sq.contains(g.xc(i), g.yc(j))) out += std::abs(b.th(i, j));
      if (b.th_mass0 > 0) worst_leak_ = std::max(worst_leak_, out / b.th_mass0);
      out = 0;
      for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i)
          if (!sq.contains(g.xu(i), g.yv(j))) out += std::abs(b.om(i, j));
      if (b.om_mass0 > 0) worst_leak_ = std::max(worst_leak_, out / b.om_mass0);
    }
  s_ = s_new;
}

void TransportControl::advance_to(double s) {
  while (s_ < s - 1e-12) step_once(std::min(ds_, s - s_));
}

void TransportControl::assemble_theta(ScalarField& theta1,
                                      ScalarField* w1) const {
  const Grid2D& g = flow_->grid;
  theta1 = ScalarField(g);
  if (w1) *w1 = ScalarField(g);
  double eps = part_->eps;
  for (const Blob& b : blobs_) {
    double arg = (s_ - b.s_cut) / eps;
    double beta = unit_cutoff(arg);
    double betap = unit_cutoff_slope(arg) / eps;
    if (beta == 0 && betap == 0) continue;
    for (int j = b.box.j0; j <= b.box.j1; ++j)
      for (int i = b.box.i0; i <= b.box.i1; ++i) {
        if (beta != 0) theta1(i, j) += beta * b.th(i, j);
        if (w1 && betap != 0) (*w1)(i, j) += betap * b.th(i, j);
      }
  }
}

void TransportControl::assemble_vorticity(NodeField& omega1,
                                          NodeField* wv) const {
  const Grid2D& g = flow_->grid;
  omega1 = NodeField(g);
  if (wv) *wv = NodeField(g);
  double eps = part_->eps;
  for (const Blob& b : blobs_) {
    double arg = (s_ - b.s_cut) / eps;
    double beta = unit_cutoff(arg);
    double betap = unit_cutoff_slope(arg) / eps;
    if (beta == 0 && betap == 0) continue;
    for (int j = b.box.j0; j <= b.box.j1 + 1; ++j)
      for (int i = b.box.i0; i <= b.box.i1 + 1; ++i) {
        if (beta != 0) omega1(i, j) += beta * b.om(i, j);
        if (wv && betap != 0) (*wv)(i, j) += betap * b.om(i, j);
      }
  }
}

void TransportControl::velocity(VectorField& u1) const {
  const Grid2D& g = flow_->grid;
  NodeField om(g);
  assemble_vorticity(om);
  NodeField rhs(g), psi(g);
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) rhs(i, j) = -om(i, j);
  poisson_dirichlet_node(g, rhs, psi, 1e-11);
  u1 = VectorField(g);
  curl_n2f(g, psi, u1);
}

double TransportControl::max_amplification() const {
  double m = 0;
  for (const Blob& b : blobs_) {
    if (s_ >= b.death || b.th_scale == 0) continue;
    double cur = 0;
    for (int j = b.box.j0; j <= b.box.j1; ++j)
      for (int i = b.box.i0; i <= b.box.i1; ++i)
        cur = std::max(cur, std::abs(b.th(i, j)));
    m = std::max(m, cur / b.th_scale);
  }
  return m;
}

// --- replay --------------------------------------------------------------------

namespace {

void sl_step_cells(const Grid2D& g, const ReferenceFlow& f, double ds,
                   ScalarField& th) {
  ScalarField nth(g);
  fill_ghosts_extrapolate(g, th);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      auto p = rk4(g, f.carrier, {g.xc(i), g.yc(j)}, ds, -1.0);
      nth(i, j) = interp_cell(g, th, p[0], p[1]);
    }
  th = std::move(nth);
}

void sl_step_nodes(const Grid2D& g, const ReferenceFlow& f, double ds,
                   NodeField& om) {
  NodeField nom(g);
  fill_ghosts_extrapolate(g, om);
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) {
      auto p = rk4(g, f.carrier, {g.xu(i), g.yv(j)}, ds, -1.0);
      nom(i, j) = interp_node(g, om, p[0], p[1]);
    }
  om = std::move(nom);
}

double velocity_of_vorticity(const Grid2D& g, const NodeField& om,
                             VectorField& u) {
  NodeField rhs(g), psi(g);
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) rhs(i, j) = -om(i, j);
  poisson_dirichlet_node(g, rhs, psi, 1e-11);
  u = VectorField(g);
  curl_n2f(g, psi, u);
  return norm_l2(g, u);
}

}  // namespace

TransportReport replay_transport(const ReferenceFlow& f,
                                 const FlushPartition& part,
                                 const VectorField& u_init,
                                 const ScalarField& th_init) {
  const Grid2D& g = f.grid;
  TransportReport rep;
  TransportControl ctl(f, part, u_init, th_init);
  double ds = ctl.step();

  ScalarField th = th_init;
  VectorField ug = u_init;
  fill_ghosts_extrapolate(g, ug);
  NodeField om(g);
  curl_f2n(g, ug, om);
  for (int i = -1; i <= g.nx + 1; ++i) om(i, -1) = om(i, g.ny + 1) = 0;
  for (int j = -1; j <= g.ny + 1; ++j) om(-1, j) = om(g.nx + 1, j) = 0;

  double th0 = norm_l2(g, th_init);
  double u0 = norm_l2(g, u_init);

  // Strang split of the controlled transport: half source, carrier step,
  // half source, with the per-ball fields marching on the same grid of
  // progress steps.
  ScalarField wth(g), tmp(g);
  NodeField wom(g), ntmp(g);
  double horizon = part.horizon + 5 * ds;
  double amax = 0;
  for (double s = 0; s < horizon - 1e-12;) {
    double step = std::min(ds, horizon - s);
    ctl.assemble_theta(tmp, &wth);
    ctl.assemble_vorticity(ntmp, &wom);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) th(i, j) += 0.5 * step * wth(i, j);
    for (int j = 0; j <= g.ny; ++j)
      for (int i = 0; i <= g.nx; ++i) om(i, j) += 0.5 * step * wom(i, j);
    sl_step_cells(g, f, step, th);
    sl_step_nodes(g, f, step, om);
    ctl.advance_to(s + step);
    amax = std::max(amax, ctl.max_amplification());
    ctl.assemble_theta(tmp, &wth);
    ctl.assemble_vorticity(ntmp, &wom);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) th(i, j) += 0.5 * step * wth(i, j);
    for (int j = 0; j <= g.ny; ++j)
      for (int i = 0; i <= g.nx; ++i) om(i, j) += 0.5 * step * wom(i, j);
    s += step;
  }

  VectorField uend(g);
  double un = velocity_of_vorticity(g, om, uend);
  rep.theta_terminal = norm_l2(g, th) / std::max(th0, 1e-300);
  rep.velocity_terminal = un / std::max(u0, 1e-300);
  rep.support_leak = ctl.worst_support_leak();
  rep.amplification = amax;
  rep.ok = part.ok && rep.support_leak <= 0.05;
  return rep;
}

}  // namespace bcl
