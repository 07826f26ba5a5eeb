#include "bcl/bc.hpp"

namespace bcl {

void enforce_impermeable(const Grid2D& g, VectorField& U) {
  for (int j = 0; j < g.ny; ++j) {
    U.u(0, j) = 0.0;
    U.u(g.nx, j) = 0.0;
  }
  for (int i = 0; i < g.nx; ++i) {
    U.v(i, 0) = 0.0;
    U.v(i, g.ny) = 0.0;
  }
}

std::vector<double> wall_to_tangential_dofs(const Grid2D& g, Wall w,
                                            const std::vector<double>& s) {
  int n = g.wall_samples(w);
  std::vector<double> out(n + 1);
  out[0] = s.front();
  out[n] = s.back();
  for (int k = 1; k < n; ++k) out[k] = 0.5 * (s[k - 1] + s[k]);
  return out;
}

namespace {

// Navier ghost closure along one wall for the tangential component.
// interior row "fi", ghost row "fg"; h is the normal spacing.
inline double navier_ghost(double fi, double meff, double h, double gval) {
  return (fi * (1.0 - meff * h) + 2.0 * h * gval) / (1.0 + meff * h);
}

inline double robin_ghost(double fi, double m, double h, double rval) {
  return (fi * (2.0 - m * h) + 2.0 * h * rval) / (2.0 + m * h);
}

}  // namespace

void fill_ghosts_velocity(const Grid2D& g, const BoundaryCoefficients& bc,
                          VectorField& U, const WallData* data) {
  // tangential component u on south/north walls
  for (int w : {(int)Wall::South, (int)Wall::North}) {
    std::vector<double> meff(g.wall_samples((Wall)w));
    for (int k = 0; k < (int)meff.size(); ++k) meff[k] = bc.m_eff((Wall)w, k);
    auto mdof = wall_to_tangential_dofs(g, (Wall)w, meff);
    std::vector<double> gdof;
    if (data && !data->g[w].empty())
      gdof = wall_to_tangential_dofs(g, (Wall)w, data->g[w]);
    for (int i = 0; i <= g.nx; ++i) {
      double gval = gdof.empty() ? 0.0 : gdof[i];
      if (w == (int)Wall::South)
        U.u(i, -1) = navier_ghost(U.u(i, 0), mdof[i], g.hy, gval);
      else
        U.u(i, g.ny) = navier_ghost(U.u(i, g.ny - 1), mdof[i], g.hy, gval);
    }
  }
  // tangential component v on west/east walls
  for (int w : {(int)Wall::West, (int)Wall::East}) {
    std::vector<double> meff(g.wall_samples((Wall)w));
    for (int k = 0; k < (int)meff.size(); ++k) meff[k] = bc.m_eff((Wall)w, k);
    auto mdof = wall_to_tangential_dofs(g, (Wall)w, meff);
    std::vector<double> gdof;
    if (data && !data->g[w].empty())
      gdof = wall_to_tangential_dofs(g, (Wall)w, data->g[w]);
    for (int j = 0; j <= g.ny; ++j) {
      double gval = gdof.empty() ? 0.0 : gdof[j];
      if (w == (int)Wall::West)
        U.v(-1, j) = navier_ghost(U.v(0, j), mdof[j], g.hx, gval);
      else
        U.v(g.nx, j) = navier_ghost(U.v(g.nx - 1, j), mdof[j], g.hx, gval);
    }
  }
  // normal components: odd reflection about the (zero) wall value
  for (int j = 0; j < g.ny; ++j) {
    U.u(-1, j) = -U.u(1, j);
    U.u(g.nx + 1, j) = -U.u(g.nx - 1, j);
  }
  for (int i = 0; i < g.nx; ++i) {
    U.v(i, -1) = -U.v(i, 1);
    U.v(i, g.ny + 1) = -U.v(i, g.ny - 1);
  }
}

void fill_ghosts_scalar(const Grid2D& g, const BoundaryCoefficients& bc,
                        ScalarField& f, const WallData* data) {
  auto rv = [&](int w, int k) {
    return (data && !data->g[w].empty()) ? data->g[w][k] : 0.0;
  };
  for (int i = 0; i < g.nx; ++i) {
    f(i, -1) = robin_ghost(f(i, 0), bc.m_robin(Wall::South, i), g.hy,
                           rv((int)Wall::South, i));
    f(i, g.ny) = robin_ghost(f(i, g.ny - 1), bc.m_robin(Wall::North, i), g.hy,
                             rv((int)Wall::North, i));
  }
  for (int j = 0; j < g.ny; ++j) {
    f(-1, j) = robin_ghost(f(0, j), bc.m_robin(Wall::West, j), g.hx,
                           rv((int)Wall::West, j));
    f(g.nx, j) = robin_ghost(f(g.nx - 1, j), bc.m_robin(Wall::East, j), g.hx,
                             rv((int)Wall::East, j));
  }
  // corners (only used by diagonal-free stencils; average of neighbors)
  f(-1, -1) = 0.5 * (f(-1, 0) + f(0, -1));
  f(g.nx, -1) = 0.5 * (f(g.nx, 0) + f(g.nx - 1, -1));
  f(-1, g.ny) = 0.5 * (f(-1, g.ny - 1) + f(0, g.ny));
  f(g.nx, g.ny) = 0.5 * (f(g.nx, g.ny - 1) + f(g.nx - 1, g.ny));
}

void fill_ghosts_neumann(const Grid2D& g, ScalarField& f) {
  for (int i = 0; i < g.nx; ++i) {
    f(i, -1) = f(i, 0);
    f(i, g.ny) = f(i, g.ny - 1);
  }
  for (int j = 0; j < g.ny; ++j) {
    f(-1, j) = f(0, j);
    f(g.nx, j) = f(g.nx - 1, j);
  }
  f(-1, -1) = f(0, 0);
  f(g.nx, -1) = f(g.nx - 1, 0);
  f(-1, g.ny) = f(0, g.ny - 1);
  f(g.nx, g.ny) = f(g.nx - 1, g.ny - 1);
}

}  // namespace bcl
