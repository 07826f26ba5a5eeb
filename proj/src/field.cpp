#include "bcl/field.hpp"

#include <algorithm>
#include <cmath>

namespace bcl {

void axpy(double a, const ScalarField& x, ScalarField& y) {
  for (int j = 0; j < y.ny; ++j)
    for (int i = 0; i < y.nx; ++i) y(i, j) += a * x(i, j);
}

void axpy(double a, const VectorField& x, VectorField& y) {
  for (int j = 0; j < y.ny; ++j)
    for (int i = 0; i <= y.nx; ++i) y.u(i, j) += a * x.u(i, j);
  for (int j = 0; j <= y.ny; ++j)
    for (int i = 0; i < y.nx; ++i) y.v(i, j) += a * x.v(i, j);
}

void scale(ScalarField& x, double a) {
  for (int j = 0; j < x.ny; ++j)
    for (int i = 0; i < x.nx; ++i) x(i, j) *= a;
}

void scale(VectorField& x, double a) {
  for (int j = 0; j < x.ny; ++j)
    for (int i = 0; i <= x.nx; ++i) x.u(i, j) *= a;
  for (int j = 0; j <= x.ny; ++j)
    for (int i = 0; i < x.nx; ++i) x.v(i, j) *= a;
}

double dot(const Grid2D& g, const ScalarField& a, const ScalarField& b) {
  double s = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) s += a(i, j) * b(i, j);
  return s * g.cell_area();
}

double dot(const Grid2D& g, const VectorField& a, const VectorField& b) {
  // Face values represent the component on its dual cell; interior faces get
  // full weight, wall-normal faces half weight (their dual cell is halved).
  double s = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) {
      double w = (i == 0 || i == g.nx) ? 0.5 : 1.0;
      s += w * a.u(i, j) * b.u(i, j);
    }
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double w = (j == 0 || j == g.ny) ? 0.5 : 1.0;
      s += w * a.v(i, j) * b.v(i, j);
    }
  return s * g.cell_area();
}

double norm_l2(const Grid2D& g, const ScalarField& a) {
  return std::sqrt(dot(g, a, a));
}

double norm_l2(const Grid2D& g, const VectorField& a) {
  return std::sqrt(dot(g, a, a));
}

double norm_max(const Grid2D& g, const ScalarField& a) {
  double m = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) m = std::max(m, std::abs(a(i, j)));
  return m;
}

double norm_max(const Grid2D& g, const VectorField& a) {
  double m = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) m = std::max(m, std::abs(a.u(i, j)));
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) m = std::max(m, std::abs(a.v(i, j)));
  return m;
}

void vector_at_centers(const Grid2D& g, const VectorField& w, ScalarField& cx,
                       ScalarField& cy) {
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      cx(i, j) = 0.5 * (w.u(i, j) + w.u(i + 1, j));
      cy(i, j) = 0.5 * (w.v(i, j) + w.v(i, j + 1));
    }
}

}  // namespace bcl
