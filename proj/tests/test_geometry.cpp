// Grid layout, ghost closures, discrete calculus identities, boundary traces.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "bcl/bc.hpp"
#include "bcl/field.hpp"
#include "bcl/grid.hpp"
#include "bcl/operators.hpp"
#include "bcl/poisson.hpp"

using namespace bcl;

TEST_CASE("grid construction and nested control sets") {
  Grid2D g = Grid2D::make(32, 32, 1.0, 1.0, 0.625);
  CHECK(g.hx == doctest::Approx(0.03125));
  CHECK(g.hy == doctest::Approx(0.03125));
  CHECK(g.i_interface ==
        doctest::Approx(g.x_interface / g.hx).epsilon(1e-12));
  // the physical region sits west of the interface, actuation band east
  CHECK(g.in_omega_domain(9, 16));    // cell near x = 0.3
  CHECK(!g.in_omega_domain(25, 16));  // cell near x = 0.8
  CHECK(g.in_band(25, 16));
  // nesting: omega' inside omega_zero inside omega_obs inside omega inside band
  auto inside = [](const Rect& a, const Rect& b) {
    return a.x0 >= b.x0 && a.x1 <= b.x1 && a.y0 >= b.y0 && a.y1 <= b.y1;
  };
  CHECK(inside(g.omega_prime, g.omega_zero));
  CHECK(inside(g.omega_zero, g.omega_obs));
  CHECK(inside(g.omega_obs, g.omega));
  CHECK(g.omega.x0 >= g.x_interface);
  CHECK(g.omega.x1 <= g.Lx);
  // every interface-aligned grid we rely on has the interface on a u-face
  for (int n : {16, 24, 32, 48, 64}) {
    Grid2D gg = Grid2D::make(n, n, 1.0, 1.0, 0.625);
    double col = gg.x_interface / gg.hx;
    CHECK(std::abs(col - std::round(col)) < 1e-12);
  }
}

TEST_CASE("wall helpers") {
  Grid2D g = Grid2D::make(16, 24, 1.0, 1.0, 0.625);
  CHECK(g.wall_samples(Wall::South) == 16);
  CHECK(g.wall_samples(Wall::West) == 24);
  auto nS = wall_normal(Wall::South);
  CHECK(nS[0] == 0);
  CHECK(nS[1] == -1);
  auto tE = wall_tangent(Wall::East);
  CHECK(tE[0] == 0);
  CHECK(tE[1] == 1);
  // distance to boundary at the center of the box
  CHECK(g.dist_to_boundary(0.5, 0.5) == doctest::Approx(0.5));
  CHECK(g.dist_to_boundary(0.8, 0.5) == doctest::Approx(0.2));
  CHECK(g.nearest_wall(0.8, 0.05) == Wall::South);
}

static VectorField random_velocity(const Grid2D& g, unsigned seed) {
  VectorField U(g);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) U.u(i, j) = d(rng);
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) U.v(i, j) = d(rng);
  enforce_impermeable(g, U);
  return U;
}

TEST_CASE("curl of a node field is exactly divergence free") {
  Grid2D g = Grid2D::make(24, 24, 1.0, 1.0, 0.625);
  NodeField psi(g);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) psi(i, j) = d(rng);
  // zero on the boundary so the velocity satisfies u.n = 0
  for (int i = 0; i <= g.nx; ++i) psi(i, 0) = psi(i, g.ny) = 0;
  for (int j = 0; j <= g.ny; ++j) psi(0, j) = psi(g.nx, j) = 0;

  VectorField U(g);
  curl_n2f(g, psi, U);
  ScalarField div(g);
  div_f2c(g, U, div);
  CHECK(norm_max(g, div) < 1e-11);
  // and u.n on walls is exactly zero
  for (int j = 0; j < g.ny; ++j) {
    CHECK(U.u(0, j) == 0.0);
    CHECK(U.u(g.nx, j) == 0.0);
  }
}

TEST_CASE("laplacian equals divergence of gradient") {
  Grid2D g = Grid2D::make(24, 32, 1.0, 1.0, 0.625);
  ScalarField f(g);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) f(i, j) = d(rng);
  fill_ghosts_neumann(g, f);

  VectorField gf(g);
  grad_c2f(g, f, gf);
  ScalarField divgf(g), lap(g);
  div_f2c(g, gf, divgf);
  laplace_c(g, f, lap);
  double err = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      err = std::max(err, std::abs(divgf(i, j) - lap(i, j)));
  CHECK(err < 1e-12);
}

TEST_CASE("ghost closures reproduce the boundary conditions") {
  Grid2D g = Grid2D::make(16, 16, 1.0, 1.0, 0.625);
  double mfric = 0.7, mrobin = 0.4;
  BoundaryCoefficients bc = BoundaryCoefficients::constant(g, mfric, mrobin);

  SUBCASE("scalar Robin: dn f + m f = r at the wall") {
    ScalarField f(g);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) f(i, j) = d(rng);
    WallData data = WallData::zeros(g);
    for (auto& v : data.g)
      for (auto& x : v) x = d(rng);
    fill_ghosts_scalar(g, bc, f, &data);
    auto tr = scalar_traces(g, bc, f);
    for (int w = 0; w < 4; ++w)
      for (int k = 0; k < (int)tr.robin[w].size(); ++k)
        CHECK(tr.robin[w][k] == doctest::Approx(data.g[w][k]).epsilon(1e-12));
  }

  SUBCASE("velocity slip-with-friction: N(u) = g on each wall") {
    VectorField U = random_velocity(g, 13);
    WallData data = WallData::zeros(g);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (auto& v : data.g)
      for (auto& x : v) x = d(rng);
    fill_ghosts_velocity(g, bc, U, &data);
    auto tr = velocity_traces(g, bc, U);
    // The ghost fill enforces the closure at tangential DOFs; the trace is
    // sampled at wall cell centers, so it sees the two-DOF average of the
    // enforced data (exact for constant friction).
    for (int w = 0; w < 4; ++w) {
      auto gd = wall_to_tangential_dofs(g, (Wall)w, data.g[w]);
      for (int k = 1; k + 1 < (int)tr.navier[w].size(); ++k) {
        double expect = 0.5 * (gd[k] + gd[k + 1]);
        CHECK(tr.navier[w][k] == doctest::Approx(expect).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("traces of a linear shear flow") {
  // u = (y, 0): D(u) has only the off-diagonal 1/2 entries, so the
  // tangential deformation trace on south/north is 1/2 and the sign of the
  // outward normal flips it on the south wall.
  Grid2D g = Grid2D::make(16, 16, 1.0, 1.0, 0.625);
  BoundaryCoefficients bc = BoundaryCoefficients::constant(g, 0.0, 0.0);
  VectorField U(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) U.u(i, j) = g.yu(j);
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) U.v(i, j) = 0.0;
  // exact ghosts for this profile (linear in y, no BC enforced)
  for (int i = -1; i <= g.nx + 1; ++i) {
    U.u(i, -1) = g.yu(-1);
    U.u(i, g.ny) = g.yu(g.ny);
  }
  for (int j = -1; j <= g.ny + 1; ++j) {
    U.v(-1, j) = 0.0;
    U.v(g.nx, j) = 0.0;
  }
  auto tr = velocity_traces(g, bc, U);
  for (int k = 1; k + 1 < (int)tr.dn_tau[(int)Wall::North].size(); ++k)
    CHECK(tr.dn_tau[(int)Wall::North][k] == doctest::Approx(0.5).epsilon(1e-10));
  for (int k = 1; k + 1 < (int)tr.dn_tau[(int)Wall::South].size(); ++k)
    CHECK(tr.dn_tau[(int)Wall::South][k] ==
          doctest::Approx(-0.5).epsilon(1e-10));
  // east/west see dv/dn + du_tan/ds = 0 + d(y)/dy ... v=0 so only cross term
  for (int k = 1; k + 1 < (int)tr.dn_tau[(int)Wall::East].size(); ++k)
    CHECK(tr.dn_tau[(int)Wall::East][k] == doctest::Approx(0.5).epsilon(1e-10));
  for (int k = 1; k + 1 < (int)tr.dn_tau[(int)Wall::West].size(); ++k)
    CHECK(tr.dn_tau[(int)Wall::West][k] == doctest::Approx(-0.5).epsilon(1e-10));
}

TEST_CASE("korn audit on a randomized ensemble") {
  Grid2D g = Grid2D::make(24, 24, 1.0, 1.0, 0.625);
  BoundaryCoefficients bc = BoundaryCoefficients::constant(g, 0.5, 0.0);
  double lo = 1e300, hi = 0.0;
  for (unsigned s = 0; s < 20; ++s) {
    VectorField U = random_velocity(g, 100 + s);
    fill_ghosts_velocity(g, bc, U);
    KornReport r = korn_audit(g, U);
    CHECK(r.normal_trace == 0.0);
    CHECK(r.deform >= 0.0);
    if (r.l2 > 1e-12) {
      lo = std::min(lo, r.ratio);
      hi = std::max(hi, r.ratio);
    }
  }
  // h1 is controlled by l2 + deformation with a grid-uniform constant, and
  // for random fields the two sides stay comparable
  CHECK(lo > 0.2);
  CHECK(hi < 10.0);
}

TEST_CASE("poisson neumann solves to relative tolerance and is mean free") {
  Grid2D g = Grid2D::make(32, 32, 1.0, 1.0, 0.625);
  ScalarField rhs(g), p(g);
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) rhs(i, j) = d(rng);
  SolveStats st = poisson_neumann(g, rhs, p, 1e-11);
  CHECK(st.converged);
  double mean = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) mean += p(i, j);
  CHECK(std::abs(mean / g.n_cells()) < 1e-12);
  // residual check against the reflect-closure laplacian
  ScalarField lap(g);
  fill_ghosts_neumann(g, p);
  laplace_c(g, p, lap);
  double mrhs = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) mrhs += rhs(i, j);
  mrhs /= g.n_cells();
  double err = 0, scale = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      err = std::max(err, std::abs(lap(i, j) - (rhs(i, j) - mrhs)));
      scale = std::max(scale, std::abs(rhs(i, j) - mrhs));
    }
  CHECK(err / scale < 1e-7);
}

TEST_CASE("projection removes divergence and preserves curl") {
  Grid2D g = Grid2D::make(32, 32, 1.0, 1.0, 0.625);
  VectorField U = random_velocity(g, 21);
  NodeField before(g), after(g);
  curl_f2n(g, U, before);
  ScalarField p(g);
  SolveStats st = project_divergence(g, U, nullptr, p, 1e-12);
  CHECK(st.converged);
  ScalarField div(g);
  div_f2c(g, U, div);
  CHECK(norm_max(g, div) < 1e-9);
  curl_f2n(g, U, after);
  double derr = 0;
  for (int j = 1; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i)
      derr = std::max(derr, std::abs(before(i, j) - after(i, j)));
  CHECK(derr < 1e-9);
}

TEST_CASE("projection hits a prescribed divergence target") {
  Grid2D g = Grid2D::make(24, 24, 1.0, 1.0, 0.625);
  VectorField U = random_velocity(g, 33);
  ScalarField target(g);
  std::mt19937_64 rng(34);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  double mean = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      target(i, j) = d(rng);
      mean += target(i, j);
    }
  mean /= g.n_cells();
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) target(i, j) -= mean;  // compatible
  ScalarField p(g);
  project_divergence(g, U, &target, p, 1e-12);
  ScalarField div(g);
  div_f2c(g, U, div);
  double err = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      err = std::max(err, std::abs(div(i, j) - target(i, j)));
  CHECK(err < 1e-8);
}

TEST_CASE("helmholtz velocity solve honors the friction closure") {
  Grid2D g = Grid2D::make(24, 24, 1.0, 1.0, 0.625);
  BoundaryCoefficients bc = BoundaryCoefficients::constant(g, 0.9, 0.0);
  double c = 0.01;
  // manufacture: pick X, apply (I - c * 2 div D), then solve back
  VectorField X = random_velocity(g, 55);
  VectorField R(g), L(g);
  diffusion_deformation(g, bc, X, L);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i) R.u(i, j) = X.u(i, j) - c * L.u(i, j);
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) R.v(i, j) = X.v(i, j) - c * L.v(i, j);
  VectorField Y(g);
  SolveStats st = helmholtz_velocity(g, bc, c, R, Y, 1e-13);
  CHECK(st.converged);
  double err = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i)
      err = std::max(err, std::abs(Y.u(i, j) - X.u(i, j)));
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      err = std::max(err, std::abs(Y.v(i, j) - X.v(i, j)));
  CHECK(err < 1e-8);
}

TEST_CASE("helmholtz scalar solve honors the robin closure") {
  Grid2D g = Grid2D::make(24, 24, 1.0, 1.0, 0.625);
  BoundaryCoefficients bc = BoundaryCoefficients::constant(g, 0.0, 0.6);
  double c = 0.02;
  ScalarField X(g);
  std::mt19937_64 rng(66);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) X(i, j) = d(rng);
  fill_ghosts_scalar(g, bc, X);
  ScalarField R(g), lap(g);
  laplace_c(g, X, lap);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) R(i, j) = X(i, j) - c * lap(i, j);
  ScalarField Y(g);
  SolveStats st = helmholtz_scalar(g, bc, c, R, Y, 1e-13);
  CHECK(st.converged);
  double err = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      err = std::max(err, std::abs(Y(i, j) - X(i, j)));
  CHECK(err < 1e-8);
}

TEST_CASE("inhomogeneous wall data folds into the right hand side") {
  Grid2D g = Grid2D::make(16, 16, 1.0, 1.0, 0.625);
  BoundaryCoefficients bc = BoundaryCoefficients::constant(g, 0.5, 0.3);
  double c = 0.05;

  SUBCASE("velocity") {
    WallData data = WallData::zeros(g);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (auto& v : data.g)
      for (auto& x : v) x = d(rng);
    VectorField X = random_velocity(g, 91);
    VectorField R(g), L(g);
    diffusion_deformation(g, bc, X, L, &data);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 1; i < g.nx; ++i) R.u(i, j) = X.u(i, j) - c * L.u(i, j);
    for (int j = 1; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) R.v(i, j) = X.v(i, j) - c * L.v(i, j);
    // solving with homogeneous closure + folded data must return X
    helmholtz_velocity_rhs_bc(g, bc, c, data, R);
    VectorField Y(g);
    helmholtz_velocity(g, bc, c, R, Y, 1e-13);
    double err = 0;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 1; i < g.nx; ++i)
        err = std::max(err, std::abs(Y.u(i, j) - X.u(i, j)));
    for (int j = 1; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        err = std::max(err, std::abs(Y.v(i, j) - X.v(i, j)));
    CHECK(err < 1e-8);
  }

  SUBCASE("scalar") {
    WallData data = WallData::zeros(g);
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (auto& v : data.g)
      for (auto& x : v) x = d(rng);
    ScalarField X(g);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) X(i, j) = d(rng);
    fill_ghosts_scalar(g, bc, X, &data);
    ScalarField R(g), lap(g);
    laplace_c(g, X, lap);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) R(i, j) = X(i, j) - c * lap(i, j);
    helmholtz_scalar_rhs_bc(g, bc, c, data, R);
    ScalarField Y(g);
    helmholtz_scalar(g, bc, c, R, Y, 1e-13);
    double err = 0;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        err = std::max(err, std::abs(Y(i, j) - X(i, j)));
    CHECK(err < 1e-8);
  }
}

TEST_CASE("masked poisson matches full poisson when mask covers everything") {
  Grid2D g = Grid2D::make(16, 16, 1.0, 1.0, 0.625);
  ScalarField rhs(g), p1(g), p2(g);
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) rhs(i, j) = d(rng);
  std::vector<uint8_t> mask(g.n_cells(), 1);
  poisson_neumann(g, rhs, p1, 1e-12);
  poisson_neumann_masked(g, mask, rhs, p2, 1e-12);
  double err = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      err = std::max(err, std::abs(p1(i, j) - p2(i, j)));
  CHECK(err < 1e-7);
}
