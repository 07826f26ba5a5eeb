#include "bcl/poisson.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "bcl/operators.hpp"

namespace bcl {

namespace {

// Plain PCG on raw vectors.  apply() must be SPD w.r.t. the Euclidean dot
// product on the active degrees of freedom; prec() approximates its inverse.
struct PcgResult {
  int iters = 0;
  double rel = 0;
  bool ok = false;
};

PcgResult pcg(const std::function<void(const std::vector<double>&,
                                       std::vector<double>&)>& apply,
              const std::function<void(const std::vector<double>&,
                                       std::vector<double>&)>& prec,
              const std::vector<double>& b, std::vector<double>& x,
              double tol, int maxit) {
  std::size_t n = b.size();
  std::vector<double> r(n), z(n), p(n), Ap(n);
  auto dotv = [](const std::vector<double>& a, const std::vector<double>& c) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * c[i];
    return s;
  };
  apply(x, Ap);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - Ap[i];
  double bn = std::sqrt(dotv(b, b));
  if (bn == 0) {
    std::fill(x.begin(), x.end(), 0.0);
    return {0, 0.0, true};
  }
  prec(r, z);
  p = z;
  double rz = dotv(r, z);
  PcgResult res;
  for (int it = 0; it < maxit; ++it) {
    double rn = std::sqrt(dotv(r, r));
    res.rel = rn / bn;
    res.iters = it;
    if (res.rel <= tol) {
      res.ok = true;
      return res;
    }
    apply(p, Ap);
    double pAp = dotv(p, Ap);
    if (pAp <= 0) break;  // lost positivity (should not happen)
    double alpha = rz / pAp;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    prec(r, z);
    double rz2 = dotv(r, z);
    double beta = rz2 / rz;
    rz = rz2;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  res.ok = res.rel <= tol;
  return res;
}

}  // namespace

// ----------------------------------------------------------------------------
// cell-centered Neumann Poisson
// ----------------------------------------------------------------------------

SolveStats poisson_neumann(const Grid2D& g, const ScalarField& rhs,
                           ScalarField& p, double tol,
                           const ScalarField* guess) {
  int nx = g.nx, ny = g.ny;
  std::size_t n = (std::size_t)nx * ny;
  double ax = 1.0 / (g.hx * g.hx), ay = 1.0 / (g.hy * g.hy);

  auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
    // -Lap with zero-flux closure (SPD)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        double c = x[i + nx * j];
        double s = 0;
        s += ax * ((i + 1 < nx ? x[i + 1 + nx * j] : c) - c);
        s += ax * ((i - 1 >= 0 ? x[i - 1 + nx * j] : c) - c);
        s += ay * ((j + 1 < ny ? x[i + nx * (j + 1)] : c) - c);
        s += ay * ((j - 1 >= 0 ? x[i + nx * (j - 1)] : c) - c);
        y[i + nx * j] = -s;
      }
  };
  auto prec = [&](const std::vector<double>& r, std::vector<double>& z) {
    double d = 2 * ax + 2 * ay;
    for (std::size_t i = 0; i < r.size(); ++i) z[i] = r[i] / d;
  };

  std::vector<double> b(n), x(n, 0.0);
  double mean = 0;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) mean += rhs(i, j);
  mean /= (double)n;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) b[i + nx * j] = -(rhs(i, j) - mean);
  if (guess) {
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) x[i + nx * j] = (*guess)(i, j);
    double xm = 0;
    for (double v : x) xm += v;
    xm /= (double)n;
    for (double& v : x) v -= xm;
  }

  PcgResult r = pcg(apply, prec, b, x, tol, 20 * (nx + ny) + 200);

  double xm = 0;
  for (double v : x) xm += v;
  xm /= (double)n;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) p(i, j) = x[i + nx * j] - xm;
  fill_ghosts_neumann(g, p);

  SolveStats s;
  s.iterations = r.iters;
  s.residual = r.rel;
  s.compat_defect = std::abs(mean);
  s.converged = r.ok;
  return s;
}

SolveStats poisson_dirichlet_node(const Grid2D& g, const NodeField& rhs,
                                  NodeField& psi, double tol) {
  // unknowns: interior nodes only
  int nx = g.nx, ny = g.ny;
  int mx = nx - 1, my = ny - 1;
  std::size_t n = (std::size_t)mx * my;
  double ax = 1.0 / (g.hx * g.hx), ay = 1.0 / (g.hy * g.hy);

  auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
    for (int j = 0; j < my; ++j)
      for (int i = 0; i < mx; ++i) {
        double c = x[i + mx * j];
        double xl = i > 0 ? x[i - 1 + mx * j] : 0.0;
        double xr = i + 1 < mx ? x[i + 1 + mx * j] : 0.0;
        double xd = j > 0 ? x[i + mx * (j - 1)] : 0.0;
        double xu = j + 1 < my ? x[i + mx * (j + 1)] : 0.0;
        y[i + mx * j] =
            -(ax * (xl - 2 * c + xr) + ay * (xd - 2 * c + xu));
      }
  };
  auto prec = [&](const std::vector<double>& r, std::vector<double>& z) {
    double d = 2 * ax + 2 * ay;
    for (std::size_t i = 0; i < r.size(); ++i) z[i] = r[i] / d;
  };

  std::vector<double> b(n), x(n, 0.0);
  for (int j = 0; j < my; ++j)
    for (int i = 0; i < mx; ++i) b[i + mx * j] = -rhs(i + 1, j + 1);

  PcgResult r = pcg(apply, prec, b, x, tol, 20 * (nx + ny) + 200);

  for (int j = -1; j <= ny + 1; ++j)
    for (int i = -1; i <= nx + 1; ++i) psi(i, j) = 0.0;
  for (int j = 0; j < my; ++j)
    for (int i = 0; i < mx; ++i) psi(i + 1, j + 1) = x[i + mx * j];

  SolveStats s;
  s.iterations = r.iters;
  s.residual = r.rel;
  s.converged = r.ok;
  return s;
}

SolveStats poisson_neumann_masked(const Grid2D& g,
                                  const std::vector<uint8_t>& mask,
                                  const ScalarField& rhs, ScalarField& p,
                                  double tol) {
  int nx = g.nx, ny = g.ny;
  double ax = 1.0 / (g.hx * g.hx), ay = 1.0 / (g.hy * g.hy);

  // compress
  std::vector<int> id(nx * ny, -1);
  std::vector<int> cells;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      if (mask[i + nx * j]) {
        id[i + nx * j] = (int)cells.size();
        cells.push_back(i + nx * j);
      }
  std::size_t n = cells.size();

  auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t c = 0; c < n; ++c) {
      int ij = cells[c];
      int i = ij % nx, j = ij / nx;
      double v = x[c], s = 0;
      auto nb = [&](int ii, int jj, double a) {
        if (ii >= 0 && ii < nx && jj >= 0 && jj < ny && id[ii + nx * jj] >= 0)
          s += a * (x[id[ii + nx * jj]] - v);
      };
      nb(i + 1, j, ax);
      nb(i - 1, j, ax);
      nb(i, j + 1, ay);
      nb(i, j - 1, ay);
      y[c] = -s;
    }
  };
  auto prec = [&](const std::vector<double>& r, std::vector<double>& z) {
    double d = 2 * ax + 2 * ay;
    for (std::size_t i = 0; i < r.size(); ++i) z[i] = r[i] / d;
  };

  std::vector<double> b(n), x(n, 0.0);
  double mean = 0;
  for (std::size_t c = 0; c < n; ++c) {
    int ij = cells[c];
    b[c] = rhs(ij % nx, ij / nx);
    mean += b[c];
  }
  mean /= (double)n;
  for (std::size_t c = 0; c < n; ++c) b[c] = -(b[c] - mean);

  PcgResult r = pcg(apply, prec, b, x, tol, 40 * (nx + ny) + 200);

  double xm = 0;
  for (double v : x) xm += v;
  xm /= (double)std::max<std::size_t>(n, 1);
  p.fill(0.0);
  for (std::size_t c = 0; c < n; ++c)
    p(cells[c] % nx, cells[c] / nx) = x[c] - xm;

  SolveStats s;
  s.iterations = r.iters;
  s.residual = r.rel;
  s.compat_defect = std::abs(mean);
  s.converged = r.ok;
  return s;
}

// ----------------------------------------------------------------------------
// Helmholtz solves with boundary closures
// ----------------------------------------------------------------------------

SolveStats helmholtz_velocity(const Grid2D& g, const BoundaryCoefficients& bc,
                              double c, const VectorField& R, VectorField& X,
                              double tol) {
  // (I - c * 2 div D) with the slip-with-friction closure; the operator is
  // symmetric positive definite on the active faces (m >= 0), so plain CG.
  int nx = g.nx, ny = g.ny;
  int nu = (nx - 1) * ny, nv = nx * (ny - 1);
  std::size_t n = (std::size_t)nu + nv;
  auto uid = [&](int i, int j) { return (i - 1) + (nx - 1) * j; };
  auto vid = [&](int i, int j) { return nu + i + nx * (j - 1); };

  VectorField W(g), L(g);
  auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
    W.fill(0.0);
    for (int j = 0; j < ny; ++j)
      for (int i = 1; i < nx; ++i) W.u(i, j) = x[uid(i, j)];
    for (int j = 1; j < ny; ++j)
      for (int i = 0; i < nx; ++i) W.v(i, j) = x[vid(i, j)];
    diffusion_deformation(g, bc, W, L);
    for (int j = 0; j < ny; ++j)
      for (int i = 1; i < nx; ++i)
        y[uid(i, j)] = x[uid(i, j)] - c * L.u(i, j);
    for (int j = 1; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        y[vid(i, j)] = x[vid(i, j)] - c * L.v(i, j);
  };
  auto prec = [&](const std::vector<double>& r, std::vector<double>& z) {
    z = r;
  };

  std::vector<double> b(n), x(n);
  for (int j = 0; j < ny; ++j)
    for (int i = 1; i < nx; ++i) {
      b[uid(i, j)] = R.u(i, j);
      x[uid(i, j)] = X.u(i, j);
    }
  for (int j = 1; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      b[vid(i, j)] = R.v(i, j);
      x[vid(i, j)] = X.v(i, j);
    }

  PcgResult r = pcg(apply, prec, b, x, tol, 20 * (nx + ny) + 400);

  X.fill(0.0);
  for (int j = 0; j < ny; ++j)
    for (int i = 1; i < nx; ++i) X.u(i, j) = x[uid(i, j)];
  for (int j = 1; j < ny; ++j)
    for (int i = 0; i < nx; ++i) X.v(i, j) = x[vid(i, j)];
  enforce_impermeable(g, X);

  SolveStats s;
  s.iterations = r.iters;
  s.residual = r.rel;
  s.converged = r.ok;
  return s;
}

SolveStats helmholtz_scalar(const Grid2D& g, const BoundaryCoefficients& bc,
                            double c, const ScalarField& R, ScalarField& X,
                            double tol) {
  int nx = g.nx, ny = g.ny;
  double ax = c / (g.hx * g.hx), ay = c / (g.hy * g.hy);
  auto gam = [](double m, double h) {
    return (2.0 - m * h) / (2.0 + m * h);
  };

  std::size_t n = (std::size_t)nx * ny;
  auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        double ctr = x[i + nx * j];
        double xl = (i > 0) ? x[i - 1 + nx * j]
                            : gam(bc.m_robin(Wall::West, j), g.hx) * ctr;
        double xr = (i < nx - 1) ? x[i + 1 + nx * j]
                                 : gam(bc.m_robin(Wall::East, j), g.hx) * ctr;
        double xd = (j > 0) ? x[i + nx * (j - 1)]
                            : gam(bc.m_robin(Wall::South, i), g.hy) * ctr;
        double xu = (j < ny - 1) ? x[i + nx * (j + 1)]
                                 : gam(bc.m_robin(Wall::North, i), g.hy) * ctr;
        y[i + nx * j] =
            ctr - (ax * (xl - 2 * ctr + xr) + ay * (xd - 2 * ctr + xu));
      }
  };
  auto prec = [&](const std::vector<double>& r, std::vector<double>& z) {
    double d = 1.0 + 2 * ax + 2 * ay;
    for (std::size_t i = 0; i < r.size(); ++i) z[i] = r[i] / d;
  };

  std::vector<double> b(n), x(n);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      b[i + nx * j] = R(i, j);
      x[i + nx * j] = X(i, j);
    }
  PcgResult r = pcg(apply, prec, b, x, tol, 10 * (nx + ny) + 400);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) X(i, j) = x[i + nx * j];

  SolveStats s;
  s.iterations = r.iters;
  s.residual = r.rel;
  s.converged = r.ok;
  return s;
}

void helmholtz_velocity_rhs_bc(const Grid2D& g, const BoundaryCoefficients& bc,
                               double c, const WallData& data,
                               VectorField& R) {
  // The viscous operator is affine in the wall data; fold its data part
  // (operator applied to the zero field with inhomogeneous ghosts) into R.
  VectorField Z(g), L(g);
  diffusion_deformation(g, bc, Z, L, &data);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i) R.u(i, j) += c * L.u(i, j);
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) R.v(i, j) += c * L.v(i, j);
}

void helmholtz_scalar_rhs_bc(const Grid2D& g, const BoundaryCoefficients& bc,
                             double c, const WallData& data, ScalarField& R) {
  double ay = c / (g.hy * g.hy), ax = c / (g.hx * g.hx);
  for (int i = 0; i < g.nx; ++i) {
    if (!data.g[(int)Wall::South].empty()) {
      double m = bc.m_robin(Wall::South, i);
      R(i, 0) += ay * 2.0 * g.hy * data.g[(int)Wall::South][i] / (2.0 + m * g.hy);
    }
    if (!data.g[(int)Wall::North].empty()) {
      double m = bc.m_robin(Wall::North, i);
      R(i, g.ny - 1) +=
          ay * 2.0 * g.hy * data.g[(int)Wall::North][i] / (2.0 + m * g.hy);
    }
  }
  for (int j = 0; j < g.ny; ++j) {
    if (!data.g[(int)Wall::West].empty()) {
      double m = bc.m_robin(Wall::West, j);
      R(0, j) += ax * 2.0 * g.hx * data.g[(int)Wall::West][j] / (2.0 + m * g.hx);
    }
    if (!data.g[(int)Wall::East].empty()) {
      double m = bc.m_robin(Wall::East, j);
      R(g.nx - 1, j) +=
          ax * 2.0 * g.hx * data.g[(int)Wall::East][j] / (2.0 + m * g.hx);
    }
  }
}

SolveStats project_divergence(const Grid2D& g, VectorField& U,
                              const ScalarField* target, ScalarField& p,
                              double tol, const ScalarField* guess) {
  ScalarField rhs(g);
  div_f2c(g, U, rhs);
  if (target) {
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) rhs(i, j) -= (*target)(i, j);
  }
  SolveStats s = poisson_neumann(g, rhs, p, tol, guess);
  // subtract grad p on interior faces; wall-normal faces stay untouched
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i)
      U.u(i, j) -= (p(i, j) - p(i - 1, j)) / g.hx;
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      U.v(i, j) -= (p(i, j) - p(i, j - 1)) / g.hy;
  return s;
}

}  // namespace bcl
