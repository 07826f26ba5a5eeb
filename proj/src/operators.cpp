#include "bcl/operators.hpp"

#include <algorithm>
#include <cmath>

namespace bcl {

void grad_c2f(const Grid2D& g, const ScalarField& p, VectorField& out) {
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i)
      out.u(i, j) = (p(i, j) - p(i - 1, j)) / g.hx;
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      out.v(i, j) = (p(i, j) - p(i, j - 1)) / g.hy;
}

void div_f2c(const Grid2D& g, const VectorField& U, ScalarField& out) {
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      out(i, j) = (U.u(i + 1, j) - U.u(i, j)) / g.hx +
                  (U.v(i, j + 1) - U.v(i, j)) / g.hy;
}

void curl_f2n(const Grid2D& g, const VectorField& U, NodeField& out) {
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i)
      out(i, j) = (U.v(i, j) - U.v(i - 1, j)) / g.hx -
                  (U.u(i, j) - U.u(i, j - 1)) / g.hy;
}

void curl_n2f(const Grid2D& g, const NodeField& psi, VectorField& out) {
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i)
      out.u(i, j) = (psi(i, j + 1) - psi(i, j)) / g.hy;
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      out.v(i, j) = -(psi(i + 1, j) - psi(i, j)) / g.hx;
}

void laplace_c(const Grid2D& g, const ScalarField& f, ScalarField& out) {
  double ax = 1.0 / (g.hx * g.hx), ay = 1.0 / (g.hy * g.hy);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      out(i, j) = ax * (f(i + 1, j) - 2 * f(i, j) + f(i - 1, j)) +
                  ay * (f(i, j + 1) - 2 * f(i, j) + f(i, j - 1));
}

void fill_ghosts_extrapolate(const Grid2D& g, ScalarField& f) {
  for (int i = 0; i < g.nx; ++i) {
    f(i, -1) = 2 * f(i, 0) - f(i, 1);
    f(i, g.ny) = 2 * f(i, g.ny - 1) - f(i, g.ny - 2);
  }
  for (int j = 0; j < g.ny; ++j) {
    f(-1, j) = 2 * f(0, j) - f(1, j);
    f(g.nx, j) = 2 * f(g.nx - 1, j) - f(g.nx - 2, j);
  }
  f(-1, -1) = 2 * f(0, 0) - f(1, 1);
  f(g.nx, -1) = 2 * f(g.nx - 1, 0) - f(g.nx - 2, 1);
  f(-1, g.ny) = 2 * f(0, g.ny - 1) - f(1, g.ny - 2);
  f(g.nx, g.ny) = 2 * f(g.nx - 1, g.ny - 1) - f(g.nx - 2, g.ny - 2);
}

void fill_ghosts_extrapolate(const Grid2D& g, NodeField& f) {
  for (int i = 0; i <= g.nx; ++i) {
    f(i, -1) = 2 * f(i, 0) - f(i, 1);
    f(i, g.ny + 1) = 2 * f(i, g.ny) - f(i, g.ny - 1);
  }
  for (int j = -1; j <= g.ny + 1; ++j) {
    int jj = std::max(0, std::min(j, g.ny));
    f(-1, j) = 2 * f(0, jj) - f(1, jj);
    f(g.nx + 1, j) = 2 * f(g.nx, jj) - f(g.nx - 1, jj);
  }
}

void fill_ghosts_extrapolate(const Grid2D& g, VectorField& U) {
  for (int i = 0; i <= g.nx; ++i) {
    U.u(i, -1) = 2 * U.u(i, 0) - U.u(i, 1);
    U.u(i, g.ny) = 2 * U.u(i, g.ny - 1) - U.u(i, g.ny - 2);
  }
  for (int j = 0; j < g.ny; ++j) {
    U.u(-1, j) = 2 * U.u(0, j) - U.u(1, j);
    U.u(g.nx + 1, j) = 2 * U.u(g.nx, j) - U.u(g.nx - 1, j);
  }
  for (int j = 0; j <= g.ny; ++j) {
    U.v(-1, j) = 2 * U.v(0, j) - U.v(1, j);
    U.v(g.nx, j) = 2 * U.v(g.nx - 1, j) - U.v(g.nx - 2, j);
  }
  for (int i = 0; i < g.nx; ++i) {
    U.v(i, -1) = 2 * U.v(i, 0) - U.v(i, 1);
    U.v(i, g.ny + 1) = 2 * U.v(i, g.ny) - U.v(i, g.ny - 1);
  }
}

DeformationParts deformation(const Grid2D& g, const VectorField& U) {
  DeformationParts d;
  d.d11 = ScalarField(g);
  d.d22 = ScalarField(g);
  d.d12 = NodeField(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      d.d11(i, j) = (U.u(i + 1, j) - U.u(i, j)) / g.hx;
      d.d22(i, j) = (U.v(i, j + 1) - U.v(i, j)) / g.hy;
    }
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i)
      d.d12(i, j) = 0.5 * ((U.u(i, j) - U.u(i, j - 1)) / g.hy +
                           (U.v(i, j) - U.v(i - 1, j)) / g.hx);
  return d;
}

namespace {
// Quadrature weight for node values: interior 1, edge 1/2, corner 1/4.
inline double node_weight(const Grid2D& g, int i, int j) {
  double w = 1.0;
  if (i == 0 || i == g.nx) w *= 0.5;
  if (j == 0 || j == g.ny) w *= 0.5;
  return w;
}
}  // namespace

double norm_deformation(const Grid2D& g, const VectorField& U) {
  DeformationParts d = deformation(g, U);
  double s = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      s += d.d11(i, j) * d.d11(i, j) + d.d22(i, j) * d.d22(i, j);
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i)
      s += 2.0 * node_weight(g, i, j) * d.d12(i, j) * d.d12(i, j);
  return std::sqrt(s * g.cell_area());
}

double norm_gradient(const Grid2D& g, const VectorField& U) {
  double s = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double ux = (U.u(i + 1, j) - U.u(i, j)) / g.hx;
      double vy = (U.v(i, j + 1) - U.v(i, j)) / g.hy;
      s += ux * ux + vy * vy;
    }
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) {
      double uy = (U.u(i, j) - U.u(i, j - 1)) / g.hy;
      double vx = (U.v(i, j) - U.v(i - 1, j)) / g.hx;
      s += node_weight(g, i, j) * (uy * uy + vx * vx);
    }
  return std::sqrt(s * g.cell_area());
}

double norm_gradient(const Grid2D& g, const ScalarField& f) {
  // face-based gradient quadrature; boundary faces use the ghost closure
  double s = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) {
      double w = (i == 0 || i == g.nx) ? 0.5 : 1.0;
      double gx = (f(i, j) - f(i - 1, j)) / g.hx;
      s += w * gx * gx;
    }
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double w = (j == 0 || j == g.ny) ? 0.5 : 1.0;
      double gy = (f(i, j) - f(i, j - 1)) / g.hy;
      s += w * gy * gy;
    }
  return std::sqrt(s * g.cell_area());
}

// ---------------------------------------------------------------------------
// boundary traces
// ---------------------------------------------------------------------------

VelocityTraces velocity_traces(const Grid2D& g, const BoundaryCoefficients& bc,
                               const VectorField& U) {
  VelocityTraces t;
  for (int wi = 0; wi < 4; ++wi) {
    Wall w = (Wall)wi;
    int n = g.wall_samples(w);
    t.tangential[wi].assign(n, 0.0);
    t.dn_tau[wi].assign(n, 0.0);
    t.navier[wi].assign(n, 0.0);
    for (int k = 0; k < n; ++k) {
      double ftau = 0, dntau = 0;
      switch (w) {
        case Wall::South: {
          double a = 0.5 * (U.u(k, 0) + U.u(k + 1, 0));
          double gh = 0.5 * (U.u(k, -1) + U.u(k + 1, -1));
          ftau = 0.5 * (a + gh);
          // tau^T D(f) nu = -D12 = -(1/2)(du/dy + dv/dx); outward is -y
          double du_dn = -(a - gh) / g.hy;
          double dvdx = (U.v(k + 1, 0) - U.v(k - 1, 0)) / (2 * g.hx);
          dntau = 0.5 * du_dn - 0.5 * dvdx;
          break;
        }
        case Wall::North: {
          double a = 0.5 * (U.u(k, g.ny - 1) + U.u(k + 1, g.ny - 1));
          double gh = 0.5 * (U.u(k, g.ny) + U.u(k + 1, g.ny));
          ftau = 0.5 * (a + gh);
          double du_dn = (gh - a) / g.hy;
          double dvdx = (U.v(k + 1, g.ny) - U.v(k - 1, g.ny)) / (2 * g.hx);
          dntau = 0.5 * du_dn + 0.5 * dvdx;
          break;
        }
        case Wall::West: {
          double a = 0.5 * (U.v(0, k) + U.v(0, k + 1));
          double gh = 0.5 * (U.v(-1, k) + U.v(-1, k + 1));
          ftau = 0.5 * (a + gh);
          double dv_dn = -(a - gh) / g.hx;
          double dudy = (U.u(0, k + 1) - U.u(0, k - 1)) / (2 * g.hy);
          dntau = 0.5 * dv_dn - 0.5 * dudy;
          break;
        }
        case Wall::East: {
          double a = 0.5 * (U.v(g.nx - 1, k) + U.v(g.nx - 1, k + 1));
          double gh = 0.5 * (U.v(g.nx, k) + U.v(g.nx, k + 1));
          ftau = 0.5 * (a + gh);
          double dv_dn = (gh - a) / g.hx;
          double dudy = (U.u(g.nx, k + 1) - U.u(g.nx, k - 1)) / (2 * g.hy);
          dntau = 0.5 * dv_dn + 0.5 * dudy;
          break;
        }
      }
      t.tangential[wi][k] = ftau;
      t.dn_tau[wi][k] = dntau;
      t.navier[wi][k] = dntau + bc.m_eff(w, k) * ftau;
    }
  }
  return t;
}

ScalarTraces scalar_traces(const Grid2D& g, const BoundaryCoefficients& bc,
                           const ScalarField& f) {
  ScalarTraces t;
  for (int wi = 0; wi < 4; ++wi) {
    Wall w = (Wall)wi;
    int n = g.wall_samples(w);
    t.value[wi].assign(n, 0.0);
    t.dn[wi].assign(n, 0.0);
    t.robin[wi].assign(n, 0.0);
    for (int k = 0; k < n; ++k) {
      double fi = 0, fg = 0, h = 0;
      switch (w) {
        case Wall::South: fi = f(k, 0); fg = f(k, -1); h = g.hy; break;
        case Wall::North: fi = f(k, g.ny - 1); fg = f(k, g.ny); h = g.hy; break;
        case Wall::West:  fi = f(0, k); fg = f(-1, k); h = g.hx; break;
        case Wall::East:  fi = f(g.nx - 1, k); fg = f(g.nx, k); h = g.hx; break;
      }
      double val = 0.5 * (fi + fg);
      double dn = (fg - fi) / h;
      t.value[wi][k] = val;
      t.dn[wi][k] = dn;
      t.robin[wi][k] = dn + bc.m_robin(w, k) * val;
    }
  }
  return t;
}

double boundary_integral(const Grid2D& g,
                         const std::array<std::vector<double>, 4>& vals) {
  double s = 0;
  for (int w = 0; w < 4; ++w) {
    double h = g.wall_h((Wall)w);
    for (double v : vals[w]) s += h * v;
  }
  return s;
}

double boundary_friction_energy(const Grid2D& g,
                                const BoundaryCoefficients& bc,
                                const VectorField& U) {
  VelocityTraces t = velocity_traces(g, bc, U);
  double s = 0;
  for (int w = 0; w < 4; ++w) {
    double h = g.wall_h((Wall)w);
    for (int k = 0; k < (int)t.tangential[w].size(); ++k) {
      double ft = t.tangential[w][k];
      s += h * bc.m_eff((Wall)w, k) * ft * ft;
    }
  }
  return s;
}

double boundary_robin_energy(const Grid2D& g, const BoundaryCoefficients& bc,
                             const ScalarField& f) {
  ScalarTraces t = scalar_traces(g, bc, f);
  double s = 0;
  for (int w = 0; w < 4; ++w) {
    double h = g.wall_h((Wall)w);
    for (int k = 0; k < (int)t.value[w].size(); ++k)
      s += h * bc.m_robin((Wall)w, k) * t.value[w][k] * t.value[w][k];
  }
  return s;
}

KornReport korn_audit(const Grid2D& g, const VectorField& U) {
  KornReport r;
  r.l2 = norm_l2(g, U);
  r.deform = norm_deformation(g, U);
  double gn = norm_gradient(g, U);
  r.h1 = std::sqrt(r.l2 * r.l2 + gn * gn);
  r.ratio = (r.l2 + r.deform) > 0 ? r.h1 / (r.l2 + r.deform) : 0.0;
  ScalarField d(g);
  div_f2c(g, U, d);
  r.div_residual = norm_max(g, d);
  double nt = 0;
  for (int j = 0; j < g.ny; ++j)
    nt = std::max({nt, std::abs(U.u(0, j)), std::abs(U.u(g.nx, j))});
  for (int i = 0; i < g.nx; ++i)
    nt = std::max({nt, std::abs(U.v(i, 0)), std::abs(U.v(i, g.ny))});
  r.normal_trace = nt;
  return r;
}

double norm_friction_weighted(const Grid2D& g, const BoundaryCoefficients& bc,
                              const VectorField& U, double K) {
  double a = norm_l2(g, U), b = boundary_friction_energy(g, bc, U),
         c = norm_deformation(g, U);
  return std::sqrt(K * a * a + b + c * c);
}

double norm_robin_weighted(const Grid2D& g, const BoundaryCoefficients& bc,
                           const ScalarField& f, double gamma) {
  double a = norm_l2(g, f), b = boundary_robin_energy(g, bc, f),
         c = norm_gradient(g, f);
  return std::sqrt(gamma * a * a + b + c * c);
}

void diffusion_deformation(const Grid2D& g, const BoundaryCoefficients& bc,
                           const VectorField& U, VectorField& out,
                           const WallData* data) {
  VectorField W = U;
  enforce_impermeable(g, W);
  fill_ghosts_velocity(g, bc, W, data);
  DeformationParts d = deformation(g, W);
  out.fill(0.0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i)
      out.u(i, j) = 2.0 * ((d.d11(i, j) - d.d11(i - 1, j)) / g.hx +
                           (d.d12(i, j + 1) - d.d12(i, j)) / g.hy);
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      out.v(i, j) = 2.0 * ((d.d12(i + 1, j) - d.d12(i, j)) / g.hx +
                           (d.d22(i, j) - d.d22(i, j - 1)) / g.hy);
}

std::array<std::vector<double>, 4> wall_dof_values(const Grid2D& g,
                                                   const VectorField& U) {
  std::array<std::vector<double>, 4> w;
  w[(int)Wall::South].resize(g.nx + 1);
  w[(int)Wall::North].resize(g.nx + 1);
  for (int i = 0; i <= g.nx; ++i) {
    w[(int)Wall::South][i] = 0.5 * (U.u(i, 0) + U.u(i, -1));
    w[(int)Wall::North][i] = 0.5 * (U.u(i, g.ny - 1) + U.u(i, g.ny));
  }
  w[(int)Wall::West].resize(g.ny + 1);
  w[(int)Wall::East].resize(g.ny + 1);
  for (int j = 0; j <= g.ny; ++j) {
    w[(int)Wall::West][j] = 0.5 * (U.v(0, j) + U.v(-1, j));
    w[(int)Wall::East][j] = 0.5 * (U.v(g.nx - 1, j) + U.v(g.nx, j));
  }
  return w;
}

}  // namespace bcl
