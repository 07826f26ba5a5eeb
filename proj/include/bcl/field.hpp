// ============================================================================
// field.hpp
//
// Field containers on the staggered grid.  Each container carries one ghost
// ring so boundary closures can be written as plain stencils.  Ghost values
// are owned by whoever fills them (see bc.hpp); the containers themselves are
// dumb storage with value semantics, safe to copy and share across sweep
// workers.
// ============================================================================
#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

#include "bcl/grid.hpp"

namespace bcl {

// Scalar field at cell centers, indices i in [-1, nx], j in [-1, ny].
class ScalarField {
 public:
  int nx = 0, ny = 0;
  double time = 0.0;

  ScalarField() = default;
  explicit ScalarField(const Grid2D& g, double fill = 0.0)
      : nx(g.nx), ny(g.ny), data_((g.nx + 2) * (g.ny + 2), fill) {}

  double& operator()(int i, int j) { return data_[idx(i, j)]; }
  double operator()(int i, int j) const { return data_[idx(i, j)]; }

  std::size_t size() const { return data_.size(); }
  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  void fill(double v) { data_.assign(data_.size(), v); }

 private:
  std::size_t idx(int i, int j) const {
    assert(i >= -1 && i <= nx && j >= -1 && j <= ny);
    return (std::size_t)(i + 1) + (std::size_t)(nx + 2) * (std::size_t)(j + 1);
  }
  std::vector<double> data_;
};

// Node-centered scalar (grid corners), i in [-1, nx+1], j in [-1, ny+1].
class NodeField {
 public:
  int nx = 0, ny = 0;

  NodeField() = default;
  explicit NodeField(const Grid2D& g, double fill = 0.0)
      : nx(g.nx), ny(g.ny), data_((g.nx + 3) * (g.ny + 3), fill) {}

  double& operator()(int i, int j) { return data_[idx(i, j)]; }
  double operator()(int i, int j) const { return data_[idx(i, j)]; }

 private:
  std::size_t idx(int i, int j) const {
    assert(i >= -1 && i <= nx + 1 && j >= -1 && j <= ny + 1);
    return (std::size_t)(i + 1) + (std::size_t)(nx + 3) * (std::size_t)(j + 1);
  }
  std::vector<double> data_;
};

// MAC vector field.  u component on vertical faces (i in [0,nx]), v component
// on horizontal faces (j in [0,ny]); one ghost ring on each side.
class VectorField {
 public:
  int nx = 0, ny = 0;
  double time = 0.0;

  VectorField() = default;
  explicit VectorField(const Grid2D& g, double fill = 0.0)
      : nx(g.nx),
        ny(g.ny),
        u_((g.nx + 3) * (g.ny + 2), fill),
        v_((g.nx + 2) * (g.ny + 3), fill) {}

  // u: i in [-1, nx+1], j in [-1, ny]
  double& u(int i, int j) { return u_[uidx(i, j)]; }
  double u(int i, int j) const { return u_[uidx(i, j)]; }
  // v: i in [-1, nx], j in [-1, ny+1]
  double& v(int i, int j) { return v_[vidx(i, j)]; }
  double v(int i, int j) const { return v_[vidx(i, j)]; }

  void fill(double val) {
    u_.assign(u_.size(), val);
    v_.assign(v_.size(), val);
  }

  std::vector<double>& raw_u() { return u_; }
  std::vector<double>& raw_v() { return v_; }
  const std::vector<double>& raw_u() const { return u_; }
  const std::vector<double>& raw_v() const { return v_; }

 private:
  std::size_t uidx(int i, int j) const {
    assert(i >= -1 && i <= nx + 1 && j >= -1 && j <= ny);
    return (std::size_t)(i + 1) + (std::size_t)(nx + 3) * (std::size_t)(j + 1);
  }
  std::size_t vidx(int i, int j) const {
    assert(i >= -1 && i <= nx && j >= -1 && j <= ny + 1);
    return (std::size_t)(i + 1) + (std::size_t)(nx + 2) * (std::size_t)(j + 1);
  }
  std::vector<double> u_, v_;
};

// --- arithmetic helpers (interior degrees of freedom only) ------------------

void axpy(double a, const ScalarField& x, ScalarField& y);   // y += a x
void axpy(double a, const VectorField& x, VectorField& y);
void scale(ScalarField& x, double a);
void scale(VectorField& x, double a);

// L2 inner products with the cell measure hx*hy.  For vectors the sum runs
// over all faces including the boundary-normal ones (which hold u.n = 0 in
// every constrained context).
double dot(const Grid2D& g, const ScalarField& a, const ScalarField& b);
double dot(const Grid2D& g, const VectorField& a, const VectorField& b);
double norm_l2(const Grid2D& g, const ScalarField& a);
double norm_l2(const Grid2D& g, const VectorField& a);
double norm_max(const Grid2D& g, const ScalarField& a);
double norm_max(const Grid2D& g, const VectorField& a);

// Component samples at cell centers (averaged from faces).
void vector_at_centers(const Grid2D& g, const VectorField& w, ScalarField& cx,
                       ScalarField& cy);

}  // namespace bcl
