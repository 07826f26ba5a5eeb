// ============================================================================
// layer.cpp
//
// Wall-layer corrector: stretched grid, trace coefficients, the split
// evolution step, moment-preparation design, companion profiles and decay
// fits.  Faces never couple (the collar cutoff vanishes at corners), so
// every per-wall loop is embarrassingly parallel; they are kept sequential
// for determinism and because the columns are tiny.
// ============================================================================
#include "bcl/layer.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "bcl/operators.hpp"

namespace bcl {

namespace {

// C-infinity bump on (0,1), not normalized.
double unit_bump(double u) {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  return std::exp(-1.0 / (u * (1.0 - u)));
}

double unit_bump_mass() {
  static const double mass = [] {
    // Simpson on a fine grid; the integrand is smooth and compactly
    // supported, so this is overkill already.
    int n = 4000;
    double h = 1.0 / n, s = 0.0;
    for (int i = 0; i < n; ++i) {
      double a = i * h, b = (i + 1) * h;
      s += (h / 6.0) *
           (unit_bump(a) + 4.0 * unit_bump(0.5 * (a + b)) + unit_bump(b));
    }
    return s;
  }();
  return mass;
}

// First-order upwind arclength derivative with zero extension beyond the
// wall ends (the cutoff kills the profile near corners).
inline double upwind_s(const FaceLayer& f, int k, int iz, double vel,
                       double ds) {
  double here = f.t(k, iz);
  if (vel >= 0.0) {
    double left = (k > 0) ? f.t(k - 1, iz) : 0.0;
    return (here - left) / ds;
  }
  double right = (k + 1 < f.ns) ? f.t(k + 1, iz) : 0.0;
  return (right - here) / ds;
}

// Centered arclength derivative of a slab (one-sided at the ends), used by
// the companion profiles and the norm proxies.
void slab_dds(int ns, int nz, double ds, const std::vector<double>& in,
              std::vector<double>& out) {
  out.assign(in.size(), 0.0);
  for (int k = 0; k < ns; ++k) {
    int km = std::max(0, k - 1), kp = std::min(ns - 1, k + 1);
    double den = (kp - km) * ds;
    for (int iz = 0; iz < nz; ++iz)
      out[(std::size_t)k * nz + iz] = (in[(std::size_t)kp * nz + iz] -
                                       in[(std::size_t)km * nz + iz]) /
                                      den;
  }
}

// Nonuniform centered first z-derivative of a column (one-sided at ends).
void col_ddz(const ZGrid& zg, const double* in, double* out) {
  int n = zg.n;
  out[0] = (in[1] - in[0]) / zg.dz[0];
  out[n - 1] = (in[n - 1] - in[n - 2]) / zg.dz[n - 2];
  for (int i = 1; i + 1 < n; ++i) {
    double dm = zg.dz[i - 1], dp = zg.dz[i];
    // three-point formula exact on quadratics
    out[i] = (-dp / (dm * (dm + dp))) * in[i - 1] +
             ((dp - dm) / (dm * dp)) * in[i] +
             (dm / (dp * (dm + dp))) * in[i + 1];
  }
}

struct Tridiag {
  std::vector<double> a, b, c;  // sub, diag, super
  std::vector<double> rhs;
  void solve(double* x) {
    int n = (int)b.size();
    std::vector<double> cp(n), dp(n);
    cp[0] = c[0] / b[0];
    dp[0] = rhs[0] / b[0];
    for (int i = 1; i < n; ++i) {
      double m = b[i] - a[i] * cp[i - 1];
      cp[i] = c[i] / m;
      dp[i] = (rhs[i] - a[i] * dp[i - 1]) / m;
    }
    x[n - 1] = dp[n - 1];
    for (int i = n - 2; i >= 0; --i) x[i] = dp[i] - cp[i] * x[i + 1];
  }
};

double max_abs(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

// --- ZGrid -------------------------------------------------------------------

ZGrid ZGrid::make(int n, double z_max, double growth) {
  ZGrid zg;
  zg.n = n;
  zg.z_max = z_max;
  zg.z.assign(n, 0.0);
  zg.dz.assign(n - 1, 0.0);
  zg.w.assign(n, 0.0);
  // First spacing from the geometric sum; growth = 1 degenerates to uniform.
  double dz0;
  if (std::abs(growth - 1.0) < 1e-12)
    dz0 = z_max / (n - 1);
  else
    dz0 = z_max * (growth - 1.0) / (std::pow(growth, n - 1) - 1.0);
  double d = dz0;
  for (int i = 0; i + 1 < n; ++i) {
    zg.dz[i] = d;
    zg.z[i + 1] = zg.z[i] + d;
    d *= growth;
  }
  zg.z[n - 1] = z_max;  // kill accumulated roundoff at the far end
  zg.dz[n - 2] = zg.z[n - 1] - zg.z[n - 2];
  zg.w[0] = 0.5 * zg.dz[0];
  zg.w[n - 1] = 0.5 * zg.dz[n - 2];
  for (int i = 1; i + 1 < n; ++i) zg.w[i] = 0.5 * (zg.dz[i - 1] + zg.dz[i]);
  return zg;
}

double ZGrid::integral(const double* f) const {
  double s = 0;
  for (int i = 0; i < n; ++i) s += w[i] * f[i];
  return s;
}

double ZGrid::moment(const double* f, int j) const {
  double s = 0;
  for (int i = 0; i < n; ++i) s += w[i] * std::pow(z[i], j) * f[i];
  return s;
}

void ZGrid::tail(const double* f, double* out) const {
  out[n - 1] = 0.0;
  for (int i = n - 2; i >= 0; --i)
    out[i] = out[i + 1] + 0.5 * dz[i] * (f[i] + f[i + 1]);
}

double ZGrid::norm_weighted(const double* f, int m) const {
  double s = 0;
  for (int i = 0; i < n; ++i) {
    double wt = std::pow(1.0 + z[i], m);
    s += w[i] * wt * wt * f[i] * f[i];
  }
  return std::sqrt(s);
}

// --- LayerProfile --------------------------------------------------------------

LayerProfile LayerProfile::zeros(const Grid2D& g, const ZGrid& zg) {
  LayerProfile p;
  p.zg = zg;
  for (int wi = 0; wi < 4; ++wi) {
    FaceLayer& f = p.face[wi];
    f.wall = (Wall)wi;
    f.ns = g.wall_samples((Wall)wi);
    f.nz = zg.n;
    f.tang.assign((std::size_t)f.ns * f.nz, 0.0);
    f.nrm.assign((std::size_t)f.ns * f.nz, 0.0);
  }
  return p;
}

void LayerProfile::refresh_moments(int orders) {
  moment_orders = orders;
  for (int wi = 0; wi < 4; ++wi) {
    const FaceLayer& f = face[wi];
    moment_cache[wi].assign((std::size_t)orders * f.ns, 0.0);
    for (int j = 0; j < orders; ++j)
      for (int k = 0; k < f.ns; ++k)
        moment_cache[wi][(std::size_t)j * f.ns + k] = zg.moment(f.col(k), j);
  }
}

double LayerProfile::face_norm_l2(const Grid2D& g, Wall w) const {
  const FaceLayer& f = face[(int)w];
  double ds = g.wall_h(w), s = 0;
  for (int k = 0; k < f.ns; ++k) {
    double c = zg.norm_weighted(f.col(k), 0);
    s += ds * c * c;
  }
  return std::sqrt(s);
}

double LayerProfile::norm_l2(const Grid2D& g) const {
  double s = 0;
  for (int wi = 0; wi < 4; ++wi) {
    double fn = face_norm_l2(g, (Wall)wi);
    s += fn * fn;
  }
  return std::sqrt(s);
}

double LayerProfile::max_normal_slot() const {
  double m = 0;
  for (const FaceLayer& f : face) m = std::max(m, max_abs(f.nrm));
  return m;
}

// --- trace coefficients ---------------------------------------------------------

std::vector<double> corner_cutoff(const Grid2D& g, Wall w, double margin_frac) {
  int n = g.wall_samples(w);
  double len = (w == Wall::South || w == Wall::North) ? g.Lx : g.Ly;
  double margin = margin_frac * len;
  std::vector<double> chi(n, 0.0);
  auto ramp = [&](double d) {
    double u = std::clamp(d / margin, 0.0, 1.0);
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
  };
  for (int k = 0; k < n; ++k) {
    double s = g.wall_coord(w, k);
    chi[k] = ramp(s) * ramp(len - s);
  }
  return chi;
}

LayerCoefficients LayerCoefficients::zeros(const Grid2D& g) {
  LayerCoefficients co;
  for (int wi = 0; wi < 4; ++wi) {
    int n = g.wall_samples((Wall)wi);
    co.along[wi].assign(n, 0.0);
    co.along_s[wi].assign(n, 0.0);
    co.squeeze[wi].assign(n, 0.0);
    co.flux[wi].assign(n, 0.0);
    co.cutoff[wi].assign(n, 1.0);
  }
  return co;
}

LayerCoefficients layer_coefficients(const Grid2D& g,
                                     const BoundaryCoefficients& bc,
                                     const VectorField& u0) {
  LayerCoefficients co = LayerCoefficients::zeros(g);
  VelocityTraces tr = velocity_traces(g, bc, u0);
  for (int wi = 0; wi < 4; ++wi) {
    Wall w = (Wall)wi;
    int n = g.wall_samples(w);
    double ds = g.wall_h(w);
    co.cutoff[wi] = corner_cutoff(g, w);
    for (int k = 0; k < n; ++k) {
      co.along[wi][k] = tr.tangential[wi][k];
      co.flux[wi][k] = 2.0 * co.cutoff[wi][k] * tr.navier[wi][k];
    }
    for (int k = 0; k < n; ++k) {
      int km = std::max(0, k - 1), kp = std::min(n - 1, k + 1);
      co.along_s[wi][k] =
          (co.along[wi][kp] - co.along[wi][km]) / ((kp - km) * ds);
    }
    // One-sided limit of -(u.n)/dist, sampled one cell off the wall where
    // the normal faces first carry interior values.  The wall face itself
    // holds u.n = 0, so this quotient is the first difference of the normal
    // velocity and needs no smaller offset.
    for (int k = 0; k < n; ++k) {
      switch (w) {
        case Wall::South: co.squeeze[wi][k] = u0.v(k, 1) / g.hy; break;
        case Wall::North: co.squeeze[wi][k] = -u0.v(k, g.ny - 1) / g.hy; break;
        case Wall::West:  co.squeeze[wi][k] = u0.u(1, k) / g.hx; break;
        case Wall::East:  co.squeeze[wi][k] = -u0.u(g.nx - 1, k) / g.hx; break;
      }
    }
  }
  return co;
}

// --- preparation control ---------------------------------------------------------

bool DissipationControl::empty() const {
  if (mode.empty()) return true;
  for (const auto& a : amp)
    if (!a.empty()) return false;
  return true;
}

double DissipationControl::gate(double t) const {
  if (t1 <= t0) return 0.0;
  double u = (t - t0) / (t1 - t0);
  return unit_bump(u) / (unit_bump_mass() * (t1 - t0));
}

void DissipationControl::accumulate(Wall w, double t, int ns, int nz,
                                    std::vector<double>& out) const {
  const std::vector<double>& a = amp[(int)w];
  if (a.empty()) return;
  double gt = gate(t);
  if (gt == 0.0) return;
  int nm = (int)mode.size();
  for (int m = 0; m < nm; ++m) {
    const std::vector<double>& mz = mode[m];
    for (int k = 0; k < ns; ++k) {
      double c = a[(std::size_t)m * ns + k] * gt;
      if (c == 0.0) continue;
      double* col = out.data() + (std::size_t)k * nz;
      for (int iz = 0; iz < nz; ++iz) col[iz] += c * mz[iz];
    }
  }
}

std::vector<std::vector<double>> preparation_modes(const ZGrid& zg,
                                                   int n_modes) {
  std::vector<std::vector<double>> modes(n_modes);
  for (int m = 0; m < n_modes; ++m) {
    double center = 1.5 + 2.0 * m, half = 1.0;
    std::vector<double> v(zg.n, 0.0);
    for (int i = 0; i < zg.n; ++i) {
      double s = (zg.z[i] - center) / half;
      v[i] = unit_bump(0.5 * (s + 1.0));
    }
    double mass = zg.integral(v);
    for (double& x : v) x /= mass;
    modes[m] = std::move(v);
  }
  return modes;
}

// --- evolution step ---------------------------------------------------------------

LayerStepReport step_layer(const Grid2D& g, LayerProfile& rho,
                           const LayerCoefficients& co, double dt,
                           const DissipationControl* ctl) {
  LayerStepReport rep;
  const ZGrid& zg = rho.zg;
  int nz = zg.n;

  // Courant number of the explicit pieces over all faces; the z-stretching
  // is worst where z_i/dz_i peaks (a grid constant times the squeeze rate).
  double courant = 0.0;
  for (int wi = 0; wi < 4; ++wi) {
    double ds = g.wall_h((Wall)wi);
    double a = max_abs(co.along[wi]);
    double b = max_abs(co.along_s[wi]);
    double q = max_abs(co.squeeze[wi]);
    double zstretch = 0.0;
    for (int i = 1; i < nz; ++i)
      zstretch = std::max(zstretch, zg.z[i] / std::min(zg.dz[i - 1],
                                                       zg.dz[std::min(i, nz - 2)]));
    courant = std::max(courant, dt * (a / ds + b + q * zstretch));
  }
  rep.max_courant = courant;
  double sub = dt;
  while (courant > 0.45 && sub > 1e-12 * dt) {
    sub *= 0.5;
    courant *= 0.5;
    rep.substeps *= 2;
  }

  std::vector<double> forcing, star, dzcol(nz);
  for (int step = 0; step < rep.substeps; ++step) {
    double t_mid = rho.time + (step + 0.5) * sub;
    for (int wi = 0; wi < 4; ++wi) {
      Wall w = (Wall)wi;
      FaceLayer& f = rho.face[wi];
      double ds = g.wall_h(w);
      bool transport = max_abs(co.along[wi]) > 0.0 ||
                       max_abs(co.along_s[wi]) > 0.0 ||
                       max_abs(co.squeeze[wi]) > 0.0;

      forcing.assign((std::size_t)f.ns * nz, 0.0);
      if (ctl) ctl->accumulate(w, t_mid, f.ns, nz, forcing);
      bool forced = ctl && !ctl->amp[wi].empty();

      if (transport || forced) {
        star = f.tang;
        for (int k = 0; k < f.ns; ++k) {
          double a = co.along[wi][k];
          double b = co.along_s[wi][k];
          double q = co.squeeze[wi][k];
          const double* col = f.col(k);
          // upwind z-derivative against the stretching velocity q*z
          for (int iz = 0; iz < nz; ++iz) {
            double vz = q * zg.z[iz];
            double dz;
            if (iz == 0)
              dz = 0.0;
            else if (vz >= 0.0)
              dz = (col[iz] - col[iz - 1]) / zg.dz[iz - 1];
            else if (iz + 1 < nz)
              dz = (col[iz + 1] - col[iz]) / zg.dz[iz];
            else
              dz = 0.0;
            dzcol[iz] = vz * dz;
          }
          double* out = star.data() + (std::size_t)k * nz;
          const double* fc = forcing.data() + (std::size_t)k * nz;
          for (int iz = 0; iz < nz; ++iz) {
            double adv = transport
                             ? a * upwind_s(f, k, iz, a, ds) +
                                   b * f.t(k, iz) + dzcol[iz]
                             : 0.0;
            out[iz] += sub * (fc[iz] - adv);
          }
        }
        f.tang.swap(star);
      }

      // Implicit theta step of the z-diffusion with the Neumann flux at the
      // wall and the pinned far end.  Unknowns are nodes 0..nz-2.
      const double th = 0.5;
      Tridiag sys;
      int m = nz - 1;
      sys.a.assign(m, 0.0);
      sys.b.assign(m, 0.0);
      sys.c.assign(m, 0.0);
      sys.rhs.assign(m, 0.0);
      double al0 = 2.0 / (zg.dz[0] * zg.dz[0]);
      for (int k = 0; k < f.ns; ++k) {
        double* col = f.col(k);
        double q = co.flux[wi][k];
        // Node 0 carries the finite-volume Neumann row.  The flux source is
        // constant over the substep, so its old-level and new-level halves
        // add up to one full contribution.
        {
          double lo = al0 * (col[1] - col[0]) - (2.0 / zg.dz[0]) * q;
          sys.b[0] = 1.0 + th * sub * al0;
          sys.c[0] = -th * sub * al0;
          sys.rhs[0] = col[0] + (1.0 - th) * sub * lo -
                       th * sub * (2.0 / zg.dz[0]) * q;
        }
        for (int i = 1; i < m; ++i) {
          double dm = zg.dz[i - 1], dp = zg.dz[i];
          double al = 2.0 / (dm * (dm + dp));
          double ga = 2.0 / (dp * (dm + dp));
          double up = (i + 1 < m) ? col[i + 1] : col[nz - 1];
          double lo = al * col[i - 1] - (al + ga) * col[i] + ga * up;
          sys.a[i] = -th * sub * al;
          sys.b[i] = 1.0 + th * sub * (al + ga);
          sys.c[i] = -th * sub * ga;
          sys.rhs[i] = col[i] + (1.0 - th) * sub * lo;
        }
        sys.solve(col);
        col[nz - 1] = 0.0;
      }
    }
    rho.time += sub;
  }
  return rep;
}

// --- control design ----------------------------------------------------------------

namespace {

// March a profile to t_free with a fixed schedule shared by every design
// simulation; linearity then cancels time-discretization error exactly in
// the moment matching.
void march_design(const Grid2D& g, LayerProfile& p, const LayerCoefficients& co,
                  double t_free, const DissipationControl* ctl) {
  const int n_steps = 240;
  double dt = (t_free - p.time) / n_steps;
  for (int i = 0; i < n_steps; ++i) step_layer(g, p, co, dt, ctl);
}

}  // namespace

ControlDesignReport design_dissipation_control(
    const Grid2D& g, const LayerProfile& rho, const LayerCoefficients& co,
    int k, const std::array<uint8_t, 4>& controlled, double t_free,
    double rel_tol) {
  ControlDesignReport rep;
  rep.requested_moments = k;
  if (k <= 0 || t_free <= rho.time) return rep;

  int n_modes = k + 2;
  DissipationControl base;
  base.t0 = rho.time + 0.2 * (t_free - rho.time);
  base.t1 = rho.time + 0.8 * (t_free - rho.time);
  base.mode = preparation_modes(rho.zg, n_modes);

  // Free response.
  LayerProfile free_run = rho;
  march_design(g, free_run, co, t_free, nullptr);
  free_run.refresh_moments(k);

  // Unit response of each mode (zero start, unit amplitude everywhere on the
  // controlled walls).
  std::vector<LayerProfile> resp;
  resp.reserve(n_modes);
  for (int m = 0; m < n_modes; ++m) {
    DissipationControl cm = base;
    for (int wi = 0; wi < 4; ++wi)
      if (controlled[wi]) {
        int ns = rho.face[wi].ns;
        cm.amp[wi].assign((std::size_t)n_modes * ns, 0.0);
        for (int s = 0; s < ns; ++s) cm.amp[wi][(std::size_t)m * ns + s] = 1.0;
      }
    LayerProfile pm = LayerProfile::zeros(g, rho.zg);
    // match the face sample counts of rho (zeros() already does)
    pm.time = rho.time;
    march_design(g, pm, co, t_free, &cm);
    pm.refresh_moments(k);
    resp.push_back(std::move(pm));
  }

  // Per-sample least squares on every controlled wall.
  DissipationControl ctl = base;
  for (int wi = 0; wi < 4; ++wi) {
    if (!controlled[wi]) continue;
    int ns = rho.face[wi].ns;
    ctl.amp[wi].assign((std::size_t)n_modes * ns, 0.0);
    Eigen::MatrixXd A(k, n_modes);
    Eigen::VectorXd rhs(k);
    for (int s = 0; s < ns; ++s) {
      for (int j = 0; j < k; ++j) {
        rhs(j) = -free_run.moment_cache[wi][(std::size_t)j * ns + s];
        for (int m = 0; m < n_modes; ++m)
          A(j, m) = resp[m].moment_cache[wi][(std::size_t)j * ns + s];
      }
      Eigen::VectorXd c =
          A.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(rhs);
      for (int m = 0; m < n_modes; ++m)
        ctl.amp[wi][(std::size_t)m * ns + s] = c(m);
    }
  }
  rep.ctl = ctl;

  // Verification run with the assembled control.
  LayerProfile ver = rho;
  march_design(g, ver, co, t_free, &ctl);
  ver.refresh_moments(k);
  rep.handoff_norm = ver.norm_l2(g);

  double worst = 0.0;
  std::vector<double> worst_by_order(k, 0.0);
  for (int wi = 0; wi < 4; ++wi) {
    if (!controlled[wi]) continue;
    int ns = rho.face[wi].ns;
    for (int s = 0; s < ns; ++s) {
      double nc = rho.zg.norm_weighted(ver.face[wi].col(s), 0);
      double scale = std::max(nc, 1e-300);
      double sq = 0.0;
      for (int j = 0; j < k; ++j) {
        double mj = ver.moment_cache[wi][(std::size_t)j * ns + s];
        sq += mj * mj;
        worst_by_order[j] =
            std::max(worst_by_order[j], std::abs(mj) / scale);
      }
      worst = std::max(worst, std::sqrt(sq) / scale);
    }
  }
  rep.moment_residual = worst;
  rep.achieved_moments = 0;
  for (int j = 0; j < k; ++j) {
    if (worst_by_order[j] <= rel_tol)
      rep.achieved_moments = j + 1;
    else
      break;
  }
  return rep;
}

// --- companion profiles --------------------------------------------------------------

namespace {

// Sobolev proxy of one slab on one wall (weights and derivative orders per
// the header); both slots are handled by the caller.
double slab_sobolev(const Grid2D& g, const ZGrid& zg, Wall w,
                    const std::vector<double>& slab, int p, int s, int m) {
  int ns = g.wall_samples(w), nz = zg.n;
  double ds = g.wall_h(w);
  double total = 0.0;
  std::vector<double> cur = slab, next, zder(nz);
  for (int a = 0; a <= p; ++a) {
    // z-derivative ladder of the current s-derivative level
    std::vector<double> zcur = cur;
    for (int b = 0; b <= s; ++b) {
      for (int k = 0; k < ns; ++k) {
        const double* col = zcur.data() + (std::size_t)k * nz;
        for (int i = 0; i < nz; ++i) {
          double wt = std::pow(1.0 + zg.z[i], m);
          total += ds * zg.w[i] * wt * wt * col[i] * col[i];
        }
      }
      if (b == s) break;
      std::vector<double> znext(zcur.size(), 0.0);
      for (int k = 0; k < ns; ++k) {
        col_ddz(zg, zcur.data() + (std::size_t)k * nz, zder.data());
        std::copy(zder.begin(), zder.end(),
                  znext.begin() + (std::size_t)k * nz);
      }
      zcur.swap(znext);
    }
    if (a == p) break;
    slab_dds(ns, nz, ds, cur, next);
    cur.swap(next);
  }
  return total;
}

}  // namespace

double face_sobolev(const Grid2D& g, const ZGrid& zg, Wall w,
                    const std::vector<double>& slab, int p, int s, int m) {
  return std::sqrt(slab_sobolev(g, zg, w, slab, p, s, m));
}

double grid_sobolev(const Grid2D& g, const ScalarField& f, int p) {
  // Mixed centered difference quotients on interior cells; each derivative
  // application shrinks the usable window by one cell per side.
  auto dx = [&](const std::vector<double>& in, int nx, int ny) {
    std::vector<double> out((std::size_t)(nx - 2) * ny, 0.0);
    for (int j = 0; j < ny; ++j)
      for (int i = 1; i + 1 < nx; ++i)
        out[(std::size_t)j * (nx - 2) + (i - 1)] =
            (in[(std::size_t)j * nx + i + 1] - in[(std::size_t)j * nx + i - 1]) /
            (2 * g.hx);
    return out;
  };
  auto dy = [&](const std::vector<double>& in, int nx, int ny) {
    std::vector<double> out((std::size_t)nx * (ny - 2), 0.0);
    for (int j = 1; j + 1 < ny; ++j)
      for (int i = 0; i < nx; ++i)
        out[(std::size_t)(j - 1) * nx + i] =
            (in[(std::size_t)(j + 1) * nx + i] - in[(std::size_t)(j - 1) * nx + i]) /
            (2 * g.hy);
    return out;
  };
  double total = 0.0;
  for (int a = 0; a <= p; ++a) {
    for (int b = 0; a + b <= p; ++b) {
      std::vector<double> cur((std::size_t)g.nx * g.ny);
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
          cur[(std::size_t)j * g.nx + i] = f(i, j);
      int nx = g.nx, ny = g.ny;
      for (int r = 0; r < a; ++r) {
        cur = dx(cur, nx, ny);
        nx -= 2;
      }
      for (int r = 0; r < b; ++r) {
        cur = dy(cur, nx, ny);
        ny -= 2;
      }
      if (nx <= 0 || ny <= 0) continue;
      for (double v : cur) total += g.cell_area() * v * v;
    }
  }
  return std::sqrt(total);
}

TechnicalProfiles technical_profiles(const Grid2D& g,
                                     const BoundaryCoefficients& bc,
                                     const LayerProfile& rho,
                                     const VectorField& u0, double eps,
                                     double compat_tol) {
  TechnicalProfiles tp;
  tp.eps = eps;
  tp.potential = ScalarField(g);
  const ZGrid& zg = rho.zg;
  int nz = zg.n;
  // Trace bundle of the bulk velocity, shared by the pressure integrand.
  LayerCoefficients tco = layer_coefficients(g, bc, u0);

  std::array<std::vector<double>, 4> dfix_tan;  // arclength derivative slabs
  for (int wi = 0; wi < 4; ++wi) {
    Wall w = (Wall)wi;
    const FaceLayer& f = rho.face[wi];
    int ns = f.ns;
    double ds = g.wall_h(w);
    tp.fix_tan[wi].assign((std::size_t)ns * nz, 0.0);
    tp.fix_nrm[wi].assign((std::size_t)ns * nz, 0.0);
    tp.pressure[wi].assign((std::size_t)ns * nz, 0.0);

    // Tangential part: -2 e^{-z} times the profile's Navier trace at the
    // wall.  On a flat wall a tangential profile's trace operator reduces to
    // the friction term.
    for (int k = 0; k < ns; ++k) {
      double tr0 = f.t(k, 0);
      double me = bc.m_eff(w, k);
      for (int iz = 0; iz < nz; ++iz)
        tp.fix_tan[wi][(std::size_t)k * nz + iz] =
            -2.0 * std::exp(-zg.z[iz]) * me * tr0;
    }

    // Normal slot: minus the z-tail of the arclength divergence.
    std::vector<double> dd;
    slab_dds(ns, nz, ds, f.tang, dd);
    std::vector<double> tail(nz);
    for (int k = 0; k < ns; ++k) {
      zg.tail(dd.data() + (std::size_t)k * nz, tail.data());
      for (int iz = 0; iz < nz; ++iz)
        tp.fix_nrm[wi][(std::size_t)k * nz + iz] = -tail[iz];
    }
    slab_dds(ns, nz, ds, tp.fix_tan[wi], dd);
    dfix_tan[wi] = std::move(dd);

    // Normal-balance pressure: z-tail of the normal component of the
    // symmetric convective product, assembled literally from the traces.
    std::vector<double> un(ns, 0.0), un_s(ns, 0.0);
    for (int k = 0; k < ns; ++k) {
      switch (w) {
        case Wall::South: un[k] = -u0.v(k, 0); break;
        case Wall::North: un[k] = u0.v(k, g.ny); break;
        case Wall::West:  un[k] = -u0.u(0, k); break;
        case Wall::East:  un[k] = u0.u(g.nx, k); break;
      }
    }
    for (int k = 0; k < ns; ++k) {
      int km = std::max(0, k - 1), kp = std::min(ns - 1, k + 1);
      un_s[k] = (un[kp] - un[km]) / ((kp - km) * ds);
    }
    const std::vector<double>& squeeze = tco.squeeze[wi];
    std::vector<double> nrm_s;
    slab_dds(ns, nz, ds, f.nrm, nrm_s);
    std::vector<double> integ(nz);
    for (int k = 0; k < ns; ++k) {
      double a = tco.along[wi][k];
      for (int iz = 0; iz < nz; ++iz)
        integ[iz] = a * nrm_s[(std::size_t)k * nz + iz] +
                    f.t(k, iz) * un_s[k] +
                    f.n(k, iz) * squeeze[k];
      zg.tail(integ.data(), tail.data());
      for (int iz = 0; iz < nz; ++iz)
        tp.pressure[wi][(std::size_t)k * nz + iz] = -tail[iz];
    }
  }

  // Right-hand side of the potential: the in-plane divergence of the mender
  // evaluated at the stretched wall distance, all four walls superposed, plus
  // the wall flux folded into the adjacent cells (finite-volume form of the
  // inhomogeneous Neumann condition).
  double rt_eps = std::sqrt(eps);
  ScalarField rhs(g);
  auto add_wall = [&](Wall w) {
    int wi = (int)w;
    const std::vector<double>& df = dfix_tan[wi];
    bool horizontal = (w == Wall::South || w == Wall::North);
    int nrow = horizontal ? g.ny : g.nx;
    for (int r = 0; r < nrow; ++r) {
      double dist = 0;
      switch (w) {
        case Wall::South: dist = g.yc(r); break;
        case Wall::North: dist = g.Ly - g.yc(r); break;
        case Wall::West:  dist = g.xc(r); break;
        case Wall::East:  dist = g.Lx - g.xc(r); break;
      }
      double zs = dist / rt_eps;
      if (zs >= zg.z_max) continue;
      int lo = int(std::upper_bound(zg.z.begin(), zg.z.end(), zs) -
                   zg.z.begin()) - 1;
      lo = std::clamp(lo, 0, nz - 2);
      double wgt = (zs - zg.z[lo]) / zg.dz[lo];
      int ns = g.wall_samples(w);
      for (int k = 0; k < ns; ++k) {
        double val = (1.0 - wgt) * df[(std::size_t)k * nz + lo] +
                     wgt * df[(std::size_t)k * nz + lo + 1];
        int ci = horizontal ? k : r;
        int cj = horizontal ? r : k;
        rhs(ci, cj) += -val;
      }
    }
  };
  add_wall(Wall::South);
  add_wall(Wall::North);
  add_wall(Wall::West);
  add_wall(Wall::East);

  for (int wi = 0; wi < 4; ++wi) {
    Wall w = (Wall)wi;
    int ns = g.wall_samples(w);
    double hn = (w == Wall::South || w == Wall::North) ? g.hy : g.hx;
    for (int k = 0; k < ns; ++k) {
      double q = -tp.fix_nrm[wi][(std::size_t)k * nz + 0];  // outward flux
      int ci = 0, cj = 0;
      switch (w) {
        case Wall::South: ci = k; cj = 0; break;
        case Wall::North: ci = k; cj = g.ny - 1; break;
        case Wall::West:  ci = 0; cj = k; break;
        case Wall::East:  ci = g.nx - 1; cj = k; break;
      }
      rhs(ci, cj) -= q / hn;
    }
  }

  double total = 0, scale = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      total += rhs(i, j) * g.cell_area();
      scale += std::abs(rhs(i, j)) * g.cell_area();
    }
  tp.compat_residual = std::abs(total) / (scale + 1e-300);
  if (scale > 0 && tp.compat_residual > compat_tol) {
    tp.compat_ok = false;
  } else {
    tp.potential_stats = poisson_neumann(g, rhs, tp.potential);
  }

  // Ratio report.
  auto all_walls = [&](const std::array<std::vector<double>, 4>& ta,
                       const std::array<std::vector<double>, 4>* nb, int p,
                       int s, int m) {
    double sq = 0;
    for (int wi = 0; wi < 4; ++wi) {
      sq += slab_sobolev(g, zg, (Wall)wi, ta[wi], p, s, m);
      if (nb) sq += slab_sobolev(g, zg, (Wall)wi, (*nb)[wi], p, s, m);
    }
    return std::sqrt(sq);
  };
  std::array<std::vector<double>, 4> rho_tan, rho_nrm;
  for (int wi = 0; wi < 4; ++wi) {
    rho_tan[wi] = rho.face[wi].tang;
    rho_nrm[wi] = rho.face[wi].nrm;
  }
  const double tiny = 1e-300;
  double beta100 = all_walls(tp.fix_tan, &tp.fix_nrm, 1, 0, 0);
  double rho212 = all_walls(rho_tan, &rho_nrm, 2, 1, 2);
  tp.ratio_fix = beta100 / (rho212 + tiny);
  double pot4 = grid_sobolev(g, tp.potential, 4);
  double pot3 = grid_sobolev(g, tp.potential, 3);
  double pot2 = grid_sobolev(g, tp.potential, 2);
  tp.ratio_pot_h4 =
      pot4 / (std::pow(eps, -0.75) * all_walls(tp.fix_tan, &tp.fix_nrm, 4, 2, 0) +
              all_walls(rho_tan, &rho_nrm, 3, 0, 1) + tiny);
  tp.ratio_pot_h3 =
      pot3 / (std::pow(eps, -0.25) * all_walls(tp.fix_tan, &tp.fix_nrm, 3, 1, 0) +
              all_walls(rho_tan, &rho_nrm, 2, 0, 1) + tiny);
  tp.ratio_pot_h2 =
      pot2 / (std::pow(eps, 0.25) * all_walls(tp.fix_tan, &tp.fix_nrm, 2, 0, 0) +
              all_walls(rho_tan, &rho_nrm, 1, 0, 1) + tiny);
  tp.ratio_pressure = all_walls(tp.pressure, nullptr, 1, 0, 0) /
                      (all_walls(rho_tan, &rho_nrm, 2, 0, 2) + tiny);
  return tp;
}

// --- decay fits -----------------------------------------------------------------------

DecayFit measure_decay(const std::vector<double>& t,
                       const std::vector<double>& nrm, int m, int k) {
  DecayFit fit;
  fit.target = 0.25 + 0.5 * k - 0.5 * m;
  std::vector<double> x1, x2, y;
  double tmin = 1e300, tmax = -1e300;
  for (std::size_t i = 0; i < t.size() && i < nrm.size(); ++i) {
    if (!(nrm[i] > 0)) continue;
    double tt = 2.0 + t[i];
    x1.push_back(std::log(tt));
    x2.push_back(std::log(std::log(tt) / tt));
    y.push_back(std::log(nrm[i]));
    tmin = std::min(tmin, t[i]);
    tmax = std::max(tmax, t[i]);
  }
  fit.span_ok =
      (x1.size() >= 4) && tmin > 0 && (tmax / tmin >= 100.0 * (1 - 1e-9));
  if (x1.size() < 2) return fit;
  auto line = [&](const std::vector<double>& x, double& slope, double& rms) {
    double n = (double)x.size(), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sx += x[i];
      sy += y[i];
      sxx += x[i] * x[i];
      sxy += x[i] * y[i];
    }
    double det = n * sxx - sx * sx;
    slope = (n * sxy - sx * sy) / det;
    double icpt = (sy - slope * sx) / n;
    double r2 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double e = y[i] - (slope * x[i] + icpt);
      r2 += e * e;
    }
    rms = std::sqrt(r2 / n);
  };
  double s1 = 0, s2 = 0;
  line(x1, s1, fit.residual);
  line(x2, s2, fit.residual_logfam);
  fit.exponent = -s1;
  fit.exponent_logfam = s2;
  return fit;
}

DecayRun run_halfline_decay(int k, int nz, double z_max, double growth,
                            double t_end) {
  Grid2D g = Grid2D::make(8, 8);
  ZGrid zg = ZGrid::make(nz, z_max, growth);
  LayerProfile rho = LayerProfile::zeros(g, zg);
  Wall wall = Wall::East;
  FaceLayer& f = rho.face[(int)wall];
  for (int s = 0; s < f.ns; ++s)
    for (int iz = 0; iz < nz; ++iz) {
      double u = (zg.z[iz] - 1.2) / 0.8;
      f.t(s, iz) = std::exp(-u * u);
    }

  LayerCoefficients co = LayerCoefficients::zeros(g);
  DecayRun run;
  double handoff = 0.0;
  if (k > 0) {
    handoff = 1.0;
    std::array<uint8_t, 4> mask = {0, 0, 0, 0};
    mask[(int)wall] = 1;
    run.design = design_dissipation_control(g, rho, co, k, mask, handoff);
    const int n_steps = 240;
    double dt = (handoff - rho.time) / n_steps;
    for (int i = 0; i < n_steps; ++i)
      step_layer(g, rho, co, dt, &run.design.ctl);
  }
  rho.refresh_moments(3);
  run.moment_m2 = rho.moment_cache[(int)wall][(std::size_t)2 * f.ns + 0];

  // Free decay with the norm sampled on a log-spaced timeline.  The fit
  // window endpoints are sampled exactly so the fit spans full decades.
  const double per_decade = 24.0;
  std::vector<double> samples;
  for (double s = 0.25; s <= t_end * 1.0000001;
       s *= std::pow(10.0, 1.0 / per_decade))
    samples.push_back(s);
  samples.push_back(10.0);
  samples.push_back(t_end);
  std::sort(samples.begin(), samples.end());
  samples.erase(std::unique(samples.begin(), samples.end(),
                            [](double a, double b) {
                              return std::abs(a - b) < 1e-9 * (a + b);
                            }),
                samples.end());
  double tau = 0.0;
  for (double s : samples) {
    while (tau < s - 1e-12) {
      double dt = std::min({0.03 * (0.5 + tau), 5.0, s - tau});
      step_layer(g, rho, co, dt, nullptr);
      tau += dt;
    }
    run.t.push_back(s);
    run.nrm.push_back(zg.norm_weighted(rho.face[(int)wall].col(0), 0));
  }

  std::vector<double> tf, nf;
  for (std::size_t i = 0; i < run.t.size(); ++i)
    if (run.t[i] >= 10.0 - 1e-9) {
      tf.push_back(run.t[i]);
      nf.push_back(run.nrm[i]);
    }
  run.fit = measure_decay(tf, nf, 0, k);
  run.state = std::move(rho);
  return run;
}

}  // namespace bcl
