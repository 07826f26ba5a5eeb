// ============================================================================
// extension.cpp
//
// See extension.hpp.  The band potential reuses the masked Neumann solver:
// the interface trace enters as a known face flux folded into the right-hand
// side, every other edge of the band keeps the zero-flux closure, and the
// scaled bump makes the data compatible by construction.
// ============================================================================
#include "bcl/extension.hpp"

#include <algorithm>
#include <cmath>

#include "bcl/bc.hpp"

namespace bcl {

double compatibility_flux(const Grid2D& g, const VectorField& u) {
  double f = 0;
  for (int j = 0; j < g.ny; ++j) f += u.u(g.i_interface, j) * g.hy;
  return f;
}

double subdomain_boundary_flux(const Grid2D& g, const VectorField& u) {
  double f = compatibility_flux(g, u);
  for (int j = 0; j < g.ny; ++j) f -= u.u(0, j) * g.hy;
  for (int i = 0; i < g.i_interface; ++i)
    f += (u.v(i, g.ny) - u.v(i, 0)) * g.hx;
  return f;
}

ScalarField unit_bump(const Grid2D& g, const Rect& support) {
  ScalarField b(g);
  double cx = 0.5 * (support.x0 + support.x1);
  double cy = 0.5 * (support.y0 + support.y1);
  double rx = 0.5 * support.width(), ry = 0.5 * support.height();
  double mass = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double xi = (g.xc(i) - cx) / rx, eta = (g.yc(j) - cy) / ry;
      if (std::abs(xi) < 1.0 && std::abs(eta) < 1.0) {
        double px = 1.0 - xi * xi, py = 1.0 - eta * eta;
        b(i, j) = (px * px * px * px) * (py * py * py * py);
        mass += b(i, j);
      }
    }
  mass *= g.cell_area();
  if (mass <= 0) return b;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) b(i, j) /= mass;
  return b;
}

ExtensionResult extend_state(const Grid2D& g, const VectorField& u0,
                             const ScalarField& th0) {
  ExtensionResult res(g);

  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      res.temperature(i, j) = g.in_band(i, j) ? 0.0 : th0(i, j);

  // Connected runs of interface faces.  One run here; keep the loop shape.
  {
    InterfacePiece p;
    p.j_begin = 0;
    p.j_end = g.ny;
    for (int j = p.j_begin; j < p.j_end; ++j)
      p.flux += u0.u(g.i_interface, j) * g.hy;
    p.bump_mass = -p.flux;
    res.pieces.push_back(p);
  }

  ScalarField bump = unit_bump(g, g.omega);
  double unit_mass = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) unit_mass += bump(i, j);
  unit_mass *= g.cell_area();
  if (unit_mass < 0.5) {  // support resolves no cells on this grid
    res.ok = false;
    return res;
  }

  for (const InterfacePiece& p : res.pieces)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        res.div_source(i, j) += p.bump_mass * bump(i, j);

  double total_flux = 0;
  for (const InterfacePiece& p : res.pieces) total_flux += p.flux;
  double source_mass = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) source_mass += res.div_source(i, j);
  source_mass *= g.cell_area();
  res.compat_residual = std::abs(source_mass + total_flux);
  if (res.compat_residual > 1e-6 * std::max(1.0, std::abs(total_flux))) {
    res.ok = false;  // flux quadrature and bump mass disagree
    return res;
  }

  // Band potential.  The interface trace is a prescribed west-face flux for
  // the first band column; the masked operator drops that face, so the known
  // flux moves to the right-hand side.
  ScalarField rhs(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (g.in_band(i, j)) rhs(i, j) = res.div_source(i, j);
  for (int j = 0; j < g.ny; ++j)
    rhs(g.i_interface, j) += u0.u(g.i_interface, j) / g.hx;

  ScalarField w(g);
  res.stats = poisson_neumann_masked(g, g.mask_band(), rhs, w, 1e-11);
  if (!res.stats.converged) res.ok = false;

  res.velocity = u0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = g.i_interface + 1; i < g.nx; ++i)
      res.velocity.u(i, j) = (w(i, j) - w(i - 1, j)) / g.hx;
  for (int j = 1; j < g.ny; ++j)
    for (int i = g.i_interface; i < g.nx; ++i)
      res.velocity.v(i, j) = (w(i, j) - w(i, j - 1)) / g.hy;
  enforce_impermeable(g, res.velocity);

  // Continuity bookkeeping: output size against the input measured where the
  // input is meaningful (subdomain faces, interface included).
  double in2 = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.i_interface; ++i) in2 += u0.u(i, j) * u0.u(i, j);
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.i_interface; ++i) in2 += u0.v(i, j) * u0.v(i, j);
  double nin = std::sqrt(in2 * g.cell_area());
  double nout = norm_l2(g, res.velocity) + norm_l2(g, res.div_source);
  res.growth = nout / std::max(nin, 1e-300);
  return res;
}

}  // namespace bcl
