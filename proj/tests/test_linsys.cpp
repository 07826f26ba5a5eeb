// Linearized march: assembly against the matrix-free operators, decoupling
// oracle, exact-transpose duality, affine wall data.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "bcl/bc.hpp"
#include "bcl/field.hpp"
#include "bcl/grid.hpp"
#include "bcl/linsys.hpp"
#include "bcl/operators.hpp"
#include "bcl/solver.hpp"

using namespace bcl;

namespace {

const double kPi = 3.14159265358979323846;

VectorField random_velocity(const Grid2D& g, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  VectorField U(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) U.u(i, j) = d(rng);
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) U.v(i, j) = d(rng);
  enforce_impermeable(g, U);
  return U;
}

ScalarField random_scalar(const Grid2D& g, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  ScalarField f(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) f(i, j) = d(rng);
  return f;
}

// smooth solenoidal background with zero normal trace
VectorField smooth_flow(const Grid2D& g, double amp, int kx, int ky) {
  NodeField psi(g);
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i)
      psi(i, j) = amp * std::sin(kx * kPi * i * g.hx / g.Lx) *
                  std::sin(ky * kPi * j * g.hy / g.Ly);
  VectorField U(g);
  curl_n2f(g, psi, U);
  enforce_impermeable(g, U);
  return U;
}

ScalarField smooth_scalar(const Grid2D& g, double amp, int kx, int ky) {
  ScalarField f(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      f(i, j) = amp * std::cos(kx * kPi * g.xc(i) / g.Lx) *
                std::cos(ky * kPi * g.yc(j) / g.Ly);
  return f;
}

void mask_to_omega(const Grid2D& g, VectorField& V, ScalarField& W) {
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i)
      if (!g.omega.contains(g.xu(i), g.yu(j))) V.u(i, j) = 0;
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (!g.omega.contains(g.xv(i), g.yv(j))) V.v(i, j) = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (!g.omega.contains(g.xc(i), g.yc(j))) W(i, j) = 0;
}

}  // namespace

TEST_CASE("explicit operator agrees with the matrix-free stencils") {
  Grid2D g = Grid2D::make(24, 16);
  LinearProblem prob;
  prob.T = 1.0;
  prob.nsteps = 1;
  prob.wall = BoundaryCoefficients::constant(g, 0.5, 0.4);
  prob.a = [&](double, const Grid2D& gr, VectorField& out) {
    out = smooth_flow(gr, 0.7, 1, 2);
  };
  prob.b = [&](double, const Grid2D& gr, VectorField& out) {
    out = smooth_flow(gr, 0.4, 2, 1);
  };
  prob.c = [&](double, const Grid2D& gr, ScalarField& out) {
    out = smooth_scalar(gr, 0.9, 1, 1);
  };
  LinearMarch march(g, prob);

  VectorField z = random_velocity(g, 10);
  ScalarField h = random_scalar(g, 11);

  Eigen::VectorXd x;
  pack(g, z, h, x);
  Eigen::VectorXd ex = march.explicit_matrix(0) * x;
  VectorField ez(g);
  ScalarField eh(g);
  unpack(g, ex, ez, eh);

  // matrix-free reference assembled from the solver building blocks
  VectorField a(g), b(g), F(g);
  ScalarField c(g);
  prob.a(0, g, a);
  prob.b(0, g, b);
  prob.c(0, g, c);
  F = a;
  axpy(1.0, b, F);
  enforce_impermeable(g, F);
  fill_ghosts_extrapolate(g, b);
  fill_ghosts_extrapolate(g, c);

  VectorField ref_z(g), adv(g);
  advect_velocity(g, F, z, adv);
  axpy(-1.0, adv, ref_z);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i) {
      double dxb1 = (b.u(i + 1, j) - b.u(i - 1, j)) / (2 * g.hx);
      double dyb1 = (b.u(i, j + 1) - b.u(i, j - 1)) / (2 * g.hy);
      double zv = 0.25 * (z.v(i - 1, j) + z.v(i, j) + z.v(i - 1, j + 1) +
                          z.v(i, j + 1));
      ref_z.u(i, j) -= z.u(i, j) * dxb1 + zv * dyb1;
    }
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double dxb2 = (b.v(i + 1, j) - b.v(i - 1, j)) / (2 * g.hx);
      double dyb2 = (b.v(i, j + 1) - b.v(i, j - 1)) / (2 * g.hy);
      double zu = 0.25 * (z.u(i, j - 1) + z.u(i + 1, j - 1) + z.u(i, j) +
                          z.u(i + 1, j));
      ref_z.v(i, j) -= zu * dxb2 + z.v(i, j) * dyb2;
      ref_z.v(i, j) += 0.5 * (h(i, j - 1) + h(i, j));
    }
  ScalarField ref_h(g), advh(g);
  advect_scalar(g, F, h, advh);
  axpy(-1.0, advh, ref_h);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double dxc = (c(i + 1, j) - c(i - 1, j)) / (2 * g.hx);
      double dyc = (c(i, j + 1) - c(i, j - 1)) / (2 * g.hy);
      double zu = 0.5 * (z.u(i, j) + z.u(i + 1, j));
      double zv = 0.5 * (z.v(i, j) + z.v(i, j + 1));
      ref_h(i, j) -= zu * dxc + zv * dyc;
    }

  double scale = norm_max(g, ref_z) + norm_max(g, ref_h);
  axpy(-1.0, ez, ref_z);
  axpy(-1.0, eh, ref_h);
  CHECK(norm_max(g, ref_z) <= 1e-13 * scale);
  CHECK(norm_max(g, ref_h) <= 1e-13 * scale);
}

TEST_CASE("zero data stays zero through both sweeps") {
  Grid2D g = Grid2D::make(16, 16);
  LinearProblem prob;
  prob.T = 0.05;
  prob.nsteps = 10;
  prob.wall = BoundaryCoefficients::constant(g, 0.3, 0.2);
  prob.a = [&](double, const Grid2D& gr, VectorField& out) {
    out = smooth_flow(gr, 0.5, 1, 1);
  };
  LinearMarch march(g, prob);
  StatePair zero(g);
  StatePair out = march.forward(zero);
  CHECK(norm_l2(g, out.z) <= 1e-14);
  CHECK(norm_l2(g, out.h) <= 1e-14);
  StatePair lam = march.backward(zero);
  CHECK(norm_l2(g, lam.z) <= 1e-14);
  CHECK(norm_l2(g, lam.h) <= 1e-14);
}

TEST_CASE("frozen zero background reduces to the nonlinear stepper") {
  Grid2D g = Grid2D::make(16, 24);
  BoundaryCoefficients bc = BoundaryCoefficients::constant(g, 0.6, 0.5);
  LinearProblem prob;
  prob.T = 0.1;
  prob.nsteps = 50;
  prob.wall = bc;
  LinearMarch march(g, prob);

  StatePair init(g);
  init.z = smooth_flow(g, 0.4, 1, 2);
  init.h = smooth_scalar(g, 0.5, 2, 1);
  StatePair out = march.forward(init);

  SolverConfig cfg;
  cfg.advection = false;
  cfg.buoyancy = 1.0;
  cfg.dt = prob.T / prob.nsteps;
  State s(g);
  s.u = init.z;
  s.th = init.h;
  simulate(g, bc, cfg, Forcing{}, s, prob.T);

  VectorField dz = out.z;
  axpy(-1.0, s.u, dz);
  ScalarField dh = out.h;
  axpy(-1.0, s.th, dh);
  double scale = norm_l2(g, s.u) + norm_l2(g, s.th);
  CHECK(norm_l2(g, dz) <= 1e-9 * scale);
  CHECK(norm_l2(g, dh) <= 1e-9 * scale);
}

TEST_CASE("adjoint velocity is not excited without a scalar gradient") {
  Grid2D g = Grid2D::make(16, 16);
  LinearProblem prob;
  prob.T = 0.05;
  prob.nsteps = 20;
  prob.wall = BoundaryCoefficients::constant(g, 0.4, 0.3);
  prob.a = [&](double, const Grid2D& gr, VectorField& out) {
    out = smooth_flow(gr, 0.6, 1, 1);
  };
  // c absent: the scalar dual cannot feed the velocity dual
  LinearMarch march(g, prob);
  StatePair term(g);
  term.h = random_scalar(g, 77);
  std::vector<StatePair> tilde;
  StatePair lam = march.backward(term, &tilde);
  CHECK(norm_l2(g, lam.z) <= 1e-14);
  CHECK(norm_l2(g, lam.h) > 0.0);
  for (const auto& t : tilde) CHECK(norm_l2(g, t.z) <= 1e-14);
}

TEST_CASE("duality pairing is an identity up to solver tolerance") {
  Grid2D g = Grid2D::make(24, 24);
  LinearProblem prob;
  prob.T = 0.08;
  prob.nsteps = 40;
  prob.wall = BoundaryCoefficients::constant(g, 0.5, 0.35);
  prob.a = [&](double t, const Grid2D& gr, VectorField& out) {
    out = smooth_flow(gr, 0.7 * std::cos(t), 1, 2);
  };
  prob.b = [&](double t, const Grid2D& gr, VectorField& out) {
    out = smooth_flow(gr, 0.5 * std::sin(1 + t), 2, 1);
  };
  prob.c = [&](double t, const Grid2D& gr, ScalarField& out) {
    out = smooth_scalar(gr, 0.8 * std::cos(2 * t), 1, 1);
  };
  LinearMarch march(g, prob);

  StatePair init(g);
  init.z = random_velocity(g, 1001);
  init.h = random_scalar(g, 1002);
  StatePair term(g);
  term.z = random_velocity(g, 1003);
  term.h = random_scalar(g, 1004);

  auto control = [&](int n, VectorField& v, ScalarField& w) {
    v = random_velocity(g, 5000 + n);
    w = random_scalar(g, 9000 + n);
    mask_to_omega(g, v, w);
  };

  StatePair xN = march.forward(init, control);
  std::vector<StatePair> tilde;
  StatePair lam0 = march.backward(term, &tilde);

  double lhs = dot(g, xN.z, term.z) + dot(g, xN.h, term.h) -
               dot(g, init.z, lam0.z) - dot(g, init.h, lam0.h);
  double rhs = 0;
  VectorField v(g);
  ScalarField w(g);
  for (int n = 0; n < march.steps(); ++n) {
    v.fill(0.0);
    w.fill(0.0);
    control(n, v, w);
    rhs += march.dt() * (dot(g, v, tilde[n].z) + dot(g, w, tilde[n].h));
  }
  CHECK(std::abs(lhs - rhs) <= 1e-8 * (std::abs(lhs) + std::abs(rhs)));
}

TEST_CASE("inhomogeneous wall data acts affinely") {
  Grid2D g = Grid2D::make(16, 16);
  LinearProblem base;
  base.T = 0.06;
  base.nsteps = 24;
  base.wall = BoundaryCoefficients::constant(g, 0.7, 0.45);
  base.a = [&](double, const Grid2D& gr, VectorField& out) {
    out = smooth_flow(gr, 0.4, 1, 1);
  };
  base.c = [&](double, const Grid2D& gr, ScalarField& out) {
    out = smooth_scalar(gr, 0.6, 1, 2);
  };
  LinearProblem with_data = base;
  with_data.navier_data = [](double t, const Grid2D& gr, WallData& wd) {
    for (int wi = 0; wi < 4; ++wi)
      for (int k = 0; k < (int)wd.g[wi].size(); ++k)
        wd.g[wi][k] = 0.3 * std::sin(t + k * gr.wall_h((Wall)wi));
  };
  with_data.robin_data = [](double t, const Grid2D& gr, WallData& wd) {
    for (int wi = 0; wi < 4; ++wi)
      for (int k = 0; k < (int)wd.g[wi].size(); ++k)
        wd.g[wi][k] = 0.2 * std::cos(2 * t - k * gr.wall_h((Wall)wi));
  };

  LinearMarch plain(g, base), affine(g, with_data);
  StatePair init(g);
  init.z = smooth_flow(g, 0.3, 2, 1);
  init.h = smooth_scalar(g, 0.4, 1, 1);
  StatePair zero(g);

  StatePair full = affine.forward(init);
  StatePair hom = plain.forward(init);
  StatePair off = affine.forward(zero);

  VectorField dz = full.z;
  axpy(-1.0, hom.z, dz);
  axpy(-1.0, off.z, dz);
  ScalarField dh = full.h;
  axpy(-1.0, hom.h, dh);
  axpy(-1.0, off.h, dh);
  double scale = norm_l2(g, full.z) + norm_l2(g, full.h) + 1e-30;
  CHECK(norm_l2(g, dz) <= 1e-9 * scale);
  CHECK(norm_l2(g, dh) <= 1e-9 * scale);
}
