#include "bcl/linsys.hpp"

#include <stdexcept>
#include <vector>

#include "bcl/operators.hpp"
#include "bcl/poisson.hpp"

namespace bcl {

namespace {

struct DofMap {
  int nx, ny, nu, nv, nz, nh;
  explicit DofMap(const Grid2D& g)
      : nx(g.nx),
        ny(g.ny),
        nu((g.nx - 1) * g.ny),
        nv(g.nx * (g.ny - 1)),
        nz(nu + nv),
        nh(g.nx * g.ny) {}
  int uid(int i, int j) const { return (i - 1) + (nx - 1) * j; }
  int vid(int i, int j) const { return nu + i + nx * (j - 1); }
  int hid(int i, int j) const { return nz + i + nx * j; }
  int total() const { return nz + nh; }
  bool u_active(int i, int j) const {
    return i >= 1 && i <= nx - 1 && j >= 0 && j <= ny - 1;
  }
  bool v_active(int i, int j) const {
    return i >= 0 && i <= nx - 1 && j >= 1 && j <= ny - 1;
  }
};

using Trip = Eigen::Triplet<double>;

// transport entries of the momentum rows (advection by the background flux F
// in the energy-exact divergence-advective form, negated onto the right side)
void assemble_transport_z(const Grid2D& g, const DofMap& m,
                          const VectorField& F, std::vector<Trip>& out) {
  auto add = [&](int row, int col, double val) {
    if (val != 0.0) out.emplace_back(row, col, val);
  };
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i) {
      int r = m.uid(i, j);
      double FxR = 0.5 * (F.u(i, j) + F.u(i + 1, j));
      double FxL = 0.5 * (F.u(i - 1, j) + F.u(i, j));
      double FyT = 0.5 * (F.v(i - 1, j + 1) + F.v(i, j + 1));
      double FyB = 0.5 * (F.v(i - 1, j) + F.v(i, j));
      double divF = (FxR - FxL) / g.hx + (FyT - FyB) / g.hy;
      add(r, r, 0.5 * divF);  // -(half-sum of flux differences - divF)
      if (m.u_active(i + 1, j)) add(r, m.uid(i + 1, j), -FxR / (2 * g.hx));
      if (m.u_active(i - 1, j)) add(r, m.uid(i - 1, j), FxL / (2 * g.hx));
      if (m.u_active(i, j + 1)) add(r, m.uid(i, j + 1), -FyT / (2 * g.hy));
      if (m.u_active(i, j - 1)) add(r, m.uid(i, j - 1), FyB / (2 * g.hy));
    }
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      int r = m.vid(i, j);
      double GyT = 0.5 * (F.v(i, j) + F.v(i, j + 1));
      double GyB = 0.5 * (F.v(i, j - 1) + F.v(i, j));
      double GxR = 0.5 * (F.u(i + 1, j - 1) + F.u(i + 1, j));
      double GxL = 0.5 * (F.u(i, j - 1) + F.u(i, j));
      double divF = (GxR - GxL) / g.hx + (GyT - GyB) / g.hy;
      add(r, r, 0.5 * divF);
      if (m.v_active(i + 1, j)) add(r, m.vid(i + 1, j), -GxR / (2 * g.hx));
      if (m.v_active(i - 1, j)) add(r, m.vid(i - 1, j), GxL / (2 * g.hx));
      if (m.v_active(i, j + 1)) add(r, m.vid(i, j + 1), -GyT / (2 * g.hy));
      if (m.v_active(i, j - 1)) add(r, m.vid(i, j - 1), GyB / (2 * g.hy));
    }
}

// transport entries of the scalar rows
void assemble_transport_h(const Grid2D& g, const DofMap& m,
                          const VectorField& F, std::vector<Trip>& out) {
  auto add = [&](int row, int col, double val) {
    if (val != 0.0) out.emplace_back(row, col, val);
  };
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      int r = m.hid(i, j);
      double fR = F.u(i + 1, j), fL = F.u(i, j);
      double fT = F.v(i, j + 1), fB = F.v(i, j);
      double divF = (fR - fL) / g.hx + (fT - fB) / g.hy;
      add(r, r, 0.5 * divF);
      if (i + 1 < g.nx) add(r, m.hid(i + 1, j), -fR / (2 * g.hx));
      if (i - 1 >= 0) add(r, m.hid(i - 1, j), fL / (2 * g.hx));
      if (j + 1 < g.ny) add(r, m.hid(i, j + 1), -fT / (2 * g.hy));
      if (j - 1 >= 0) add(r, m.hid(i, j - 1), fB / (2 * g.hy));
    }
}

// gradient coupling -(z . grad) b onto the momentum rows; b arrives with
// extrapolated ghosts so the one-sided rows stay second order
void assemble_grad_coupling_z(const Grid2D& g, const DofMap& m,
                              const VectorField& b, std::vector<Trip>& out) {
  auto add = [&](int row, int col, double val) {
    if (val != 0.0) out.emplace_back(row, col, val);
  };
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i) {
      int r = m.uid(i, j);
      double dxb1 = (b.u(i + 1, j) - b.u(i - 1, j)) / (2 * g.hx);
      double dyb1 = (b.u(i, j + 1) - b.u(i, j - 1)) / (2 * g.hy);
      add(r, r, -dxb1);
      for (int dj : {0, 1}) {
        if (m.v_active(i - 1, j + dj)) add(r, m.vid(i - 1, j + dj), -dyb1 / 4);
        if (m.v_active(i, j + dj)) add(r, m.vid(i, j + dj), -dyb1 / 4);
      }
    }
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      int r = m.vid(i, j);
      double dxb2 = (b.v(i + 1, j) - b.v(i - 1, j)) / (2 * g.hx);
      double dyb2 = (b.v(i, j + 1) - b.v(i, j - 1)) / (2 * g.hy);
      add(r, r, -dyb2);
      for (int di : {0, 1}) {
        if (m.u_active(i + di, j - 1)) add(r, m.uid(i + di, j - 1), -dxb2 / 4);
        if (m.u_active(i + di, j)) add(r, m.uid(i + di, j), -dxb2 / 4);
      }
    }
}

// gradient coupling -z . grad c onto the scalar rows; c extrapolated
void assemble_grad_coupling_h(const Grid2D& g, const DofMap& m,
                              const ScalarField& c, std::vector<Trip>& out) {
  auto add = [&](int row, int col, double val) {
    if (val != 0.0) out.emplace_back(row, col, val);
  };
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      int r = m.hid(i, j);
      double dxc = (c(i + 1, j) - c(i - 1, j)) / (2 * g.hx);
      double dyc = (c(i, j + 1) - c(i, j - 1)) / (2 * g.hy);
      if (m.u_active(i, j)) add(r, m.uid(i, j), -dxc / 2);
      if (m.u_active(i + 1, j)) add(r, m.uid(i + 1, j), -dxc / 2);
      if (m.v_active(i, j)) add(r, m.vid(i, j), -dyc / 2);
      if (m.v_active(i, j + 1)) add(r, m.vid(i, j + 1), -dyc / 2);
    }
}

// buoyancy h e2 onto the vertical momentum rows
void assemble_buoyancy(const Grid2D& g, const DofMap& m,
                       std::vector<Trip>& out) {
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      int r = m.vid(i, j);
      out.emplace_back(r, m.hid(i, j - 1), 0.5);
      out.emplace_back(r, m.hid(i, j), 0.5);
    }
}

}  // namespace

int pack_size(const Grid2D& g) { return DofMap(g).total(); }

void pack(const Grid2D& g, const VectorField& z, const ScalarField& h,
          Eigen::VectorXd& x) {
  DofMap m(g);
  x.resize(m.total());
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i) x(m.uid(i, j)) = z.u(i, j);
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) x(m.vid(i, j)) = z.v(i, j);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) x(m.hid(i, j)) = h(i, j);
}

void unpack(const Grid2D& g, const Eigen::VectorXd& x, VectorField& z,
            ScalarField& h) {
  DofMap m(g);
  z.fill(0.0);
  h.fill(0.0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i) z.u(i, j) = x(m.uid(i, j));
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) z.v(i, j) = x(m.vid(i, j));
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) h(i, j) = x(m.hid(i, j));
}

LinearMarch::LinearMarch(const Grid2D& g, const LinearProblem& prob)
    : g_(g), prob_(prob) {
  if (prob_.nsteps <= 0) throw std::runtime_error("linsys: nsteps must be > 0");
  dt_ = prob_.T / prob_.nsteps;
  DofMap m(g_);
  E_.reserve(prob_.nsteps);
  bcs_.reserve(prob_.nsteps);
  for (int n = 0; n < prob_.nsteps; ++n) {
    double t = n * dt_;
    VectorField a(g_), b(g_);
    ScalarField c(g_);
    if (prob_.a) prob_.a(t, g_, a);
    if (prob_.b) prob_.b(t, g_, b);
    if (prob_.c) prob_.c(t, g_, c);

    VectorField F = a;
    axpy(1.0, b, F);
    enforce_impermeable(g_, F);
    fill_ghosts_extrapolate(g_, b);
    fill_ghosts_extrapolate(g_, c);

    std::vector<Trip> trips;
    trips.reserve(16 * m.total());
    assemble_transport_z(g_, m, F, trips);
    assemble_transport_h(g_, m, F, trips);
    if (prob_.b) assemble_grad_coupling_z(g_, m, b, trips);
    if (prob_.c) assemble_grad_coupling_h(g_, m, c, trips);
    assemble_buoyancy(g_, m, trips);

    Eigen::SparseMatrix<double> E(m.total(), m.total());
    E.setFromTriplets(trips.begin(), trips.end());
    E_.push_back(std::move(E));

    double tb = (n + 1) * dt_;
    bcs_.push_back(prob_.wall_at ? prob_.wall_at(tb) : prob_.wall);
  }
}

StatePair LinearMarch::forward(
    const StatePair& init,
    const std::function<void(int, VectorField&, ScalarField&)>& control,
    std::vector<StatePair>* trajectory) const {
  StatePair s = init;
  enforce_impermeable(g_, s.z);
  if (trajectory) {
    trajectory->clear();
    trajectory->reserve(prob_.nsteps + 1);
    trajectory->push_back(s);
  }
  ScalarField p_cache(g_);
  Eigen::VectorXd x(pack_size(g_)), ex;
  VectorField ez(g_), vctl(g_);
  ScalarField eh(g_), wctl(g_);
  const double cu = prob_.visc * dt_, ch = prob_.kappa * dt_;

  for (int n = 0; n < prob_.nsteps; ++n) {
    pack(g_, s.z, s.h, x);
    ex = E_[n] * x;
    unpack(g_, ex, ez, eh);
    VectorField zs = s.z;
    ScalarField hs = s.h;
    axpy(dt_, ez, zs);
    axpy(dt_, eh, hs);
    if (control) {
      vctl.fill(0.0);
      wctl.fill(0.0);
      control(n, vctl, wctl);
      axpy(dt_, vctl, zs);
      axpy(dt_, wctl, hs);
    }
    enforce_impermeable(g_, zs);

    const BoundaryCoefficients& bc = bcs_[n];
    if (prob_.navier_data) {
      WallData gd = WallData::zeros(g_);
      prob_.navier_data((n + 1) * dt_, g_, gd);
      helmholtz_velocity_rhs_bc(g_, bc, cu, gd, zs);
    }
    if (prob_.robin_data) {
      WallData rd = WallData::zeros(g_);
      prob_.robin_data((n + 1) * dt_, g_, rd);
      helmholtz_scalar_rhs_bc(g_, bc, ch, rd, hs);
    }
    VectorField zn = s.z;
    SolveStats st = helmholtz_velocity(g_, bc, cu, zs, zn, prob_.tol_helmholtz);
    if (!st.converged)
      throw std::runtime_error("linsys: velocity diffusion solve stalled");
    ScalarField hn = s.h;
    st = helmholtz_scalar(g_, bc, ch, hs, hn, prob_.tol_helmholtz);
    if (!st.converged)
      throw std::runtime_error("linsys: scalar diffusion solve stalled");

    ScalarField pres(g_);
    st = project_divergence(g_, zn, nullptr, pres, prob_.tol_poisson, &p_cache);
    if (!st.converged)
      throw std::runtime_error("linsys: pressure projection stalled");
    p_cache = pres;

    s.z = zn;
    s.h = hn;
    if (trajectory) trajectory->push_back(s);
  }
  return s;
}

StatePair LinearMarch::backward(const StatePair& terminal,
                                std::vector<StatePair>* lam_tilde) const {
  StatePair lam = terminal;
  if (lam_tilde) {
    lam_tilde->assign(prob_.nsteps, StatePair(g_));
  }
  ScalarField p_cache(g_);
  Eigen::VectorXd x(pack_size(g_)), ex;
  VectorField ez(g_);
  ScalarField eh(g_);
  const double cu = prob_.visc * dt_, ch = prob_.kappa * dt_;

  for (int n = prob_.nsteps - 1; n >= 0; --n) {
    // transpose of project-then-diffuse, in reverse order
    enforce_impermeable(g_, lam.z);
    ScalarField pres(g_);
    SolveStats st =
        project_divergence(g_, lam.z, nullptr, pres, prob_.tol_poisson,
                           &p_cache);
    if (!st.converged)
      throw std::runtime_error("linsys: adjoint projection stalled");
    p_cache = pres;

    const BoundaryCoefficients& bc = bcs_[n];
    VectorField zt = lam.z;
    st = helmholtz_velocity(g_, bc, cu, lam.z, zt, prob_.tol_helmholtz);
    if (!st.converged)
      throw std::runtime_error("linsys: adjoint velocity solve stalled");
    ScalarField ht = lam.h;
    st = helmholtz_scalar(g_, bc, ch, lam.h, ht, prob_.tol_helmholtz);
    if (!st.converged)
      throw std::runtime_error("linsys: adjoint scalar solve stalled");

    if (lam_tilde) {
      (*lam_tilde)[n].z = zt;
      (*lam_tilde)[n].h = ht;
    }

    pack(g_, zt, ht, x);
    ex = E_[n].transpose() * x;
    unpack(g_, ex, ez, eh);
    lam.z = zt;
    lam.h = ht;
    axpy(dt_, ez, lam.z);
    axpy(dt_, eh, lam.h);
  }
  return lam;
}

}  // namespace bcl
