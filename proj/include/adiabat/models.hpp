#pragma once

// Concrete fast subsystems. Each model owns its analytic gradient; finite
// differences of the Hamiltonian appear only in tests, as an independent
// check. Where closed forms exist the model reports them through
// analytic_reference so downstream layers can be validated end to end.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "adiabat/common.hpp"
#include "adiabat/model.hpp"
#include "adiabat/spectral.hpp"

namespace adiabat::models {

// ---------------------------------------------------------------------------
// Spin in a unit field of varying direction.
// ---------------------------------------------------------------------------

struct SpinMatrices {
  MatrixC sx, sy, sz;
};

// Dimensionful spin operators, [sx, sy] = i hbar sz. Basis index k holds
// projection m = s - k, so k = 0 is the maximally aligned state.
inline SpinMatrices spin_matrices(int twice_spin, double hbar = 1.0) {
  require(twice_spin >= 1, "spin_matrices: twice_spin must be >= 1");
  const int n = twice_spin + 1;
  const double s = 0.5 * twice_spin;
  MatrixC sz = MatrixC::Zero(n, n);
  MatrixC splus = MatrixC::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const double m = s - k;
    sz(k, k) = hbar * m;
    if (k > 0) splus(k - 1, k) = hbar * std::sqrt(s * (s + 1.0) - m * (m + 1.0));
  }
  const MatrixC sminus = splus.adjoint();
  SpinMatrices out;
  out.sx = 0.5 * (splus + sminus);
  out.sy = Complex(0.0, -0.5) * (splus - sminus);
  out.sz = std::move(sz);
  return out;
}

// Field direction profiles. All are smooth unit vectors b(x) with analytic
// first derivatives; the Hamiltonian is H = -(g_b / hbar) b(x) . S, so the
// spectrum is -g_b * m independent of x and every level gap equals g_b.
enum class SpinProfile {
  planar,  // b rotates in the x-z plane at constant rate kappa0; 1 parameter
  ripple,  // planar with a modulated rate kappa0 + amp*q*cos(q x); 1 parameter
  sphere,  // b = (sin t cos p, sin t sin p, cos t); parameters (t, p)
  tilt,    // b = normalize(x, y, c); parameters (x, y)
};

struct SpinFieldParams {
  int twice_spin = 1;
  double g_b = 1.0;  // level spacing; sign > 0 puts the aligned state lowest
  double kappa0 = 1.0;
  double ripple_amp = 0.0;
  double ripple_q = 1.0;
  double tilt_c = 0.5;
  double hbar = 1.0;
};

class SpinFieldModel final : public FastModel {
 public:
  SpinFieldModel(SpinProfile profile, SpinFieldParams params)
      : profile_(profile), p_(params), spin_(spin_matrices(params.twice_spin, params.hbar)) {
    require(p_.g_b > 0.0, "SpinFieldModel: g_b must be positive");
    require(p_.hbar > 0.0, "SpinFieldModel: hbar must be positive");
    if (profile_ == SpinProfile::tilt) {
      require(p_.tilt_c != 0.0, "SpinFieldModel: tilt profile needs tilt_c != 0");
    }
  }

  int dim() const override { return p_.twice_spin + 1; }
  int parameter_dim() const override {
    return (profile_ == SpinProfile::planar || profile_ == SpinProfile::ripple) ? 1 : 2;
  }

  std::string name() const override {
    switch (profile_) {
      case SpinProfile::planar: return "spin_planar";
      case SpinProfile::ripple: return "spin_ripple";
      case SpinProfile::sphere: return "spin_sphere";
      case SpinProfile::tilt: return "spin_tilt";
    }
    return "spin";
  }

  std::vector<std::string> parameter_names() const override {
    switch (profile_) {
      case SpinProfile::planar:
      case SpinProfile::ripple: return {"x"};
      case SpinProfile::sphere: return {"theta", "phi"};
      case SpinProfile::tilt: return {"x", "y"};
    }
    return FastModel::parameter_names();
  }

  MatrixC hamiltonian(const ParameterPoint& x) const override {
    check_point(x);
    return field_dot_spin(direction(x)) * (-p_.g_b / p_.hbar);
  }

  MatrixC gradient(const ParameterPoint& x, int i) const override {
    check_point(x);
    check_direction(i);
    return field_dot_spin(direction_derivative(x, i)) * (-p_.g_b / p_.hbar);
  }

  // Every profile is a pullback of the sphere, so one set of closed forms
  // covers all of them. With m the projection of the chosen level and
  // db_i = d b / d x_i:
  //   metric    g_ij = (s(s+1) - m^2)/2 * db_i . db_j
  //   curvature F_ij = -hbar m * b . (db_i x db_j)
  //   inertia   I_ij = hbar^2 m / g_b * db_i . db_j
  std::optional<ReferenceTensors> analytic_reference(const ParameterPoint& x,
                                                     int level) const override {
    check_point(x);
    require(level >= 0 && level < dim(), "analytic_reference: level out of range");
    const double s = 0.5 * p_.twice_spin;
    const double m = s - level;
    const Eigen::Vector3d b = direction(x);
    const int d = parameter_dim();
    std::vector<Eigen::Vector3d> db(d);
    for (int i = 0; i < d; ++i) db[i] = direction_derivative(x, i);

    ReferenceTensors ref;
    MatrixR g(d, d), f(d, d), inertia(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        const double dot = db[i].dot(db[j]);
        g(i, j) = 0.5 * (s * (s + 1.0) - m * m) * dot;
        f(i, j) = -p_.hbar * m * b.dot(db[i].cross(db[j]));
        inertia(i, j) = p_.hbar * p_.hbar * m / p_.g_b * dot;
      }
    }
    ref.metric = std::move(g);
    ref.curvature = std::move(f);
    ref.induced_inertia = std::move(inertia);
    return ref;
  }

  // Local rotation rate of the planar profiles; the 1d tensors are this
  // squared times their angular values.
  double planar_rate(double x) const {
    return p_.kappa0 + p_.ripple_amp * p_.ripple_q * std::cos(p_.ripple_q * x);
  }

  const SpinFieldParams& params() const { return p_; }
  SpinProfile profile() const { return profile_; }

 private:
  MatrixC field_dot_spin(const Eigen::Vector3d& v) const {
    return v[0] * spin_.sx + v[1] * spin_.sy + v[2] * spin_.sz;
  }

  Eigen::Vector3d direction(const ParameterPoint& x) const {
    switch (profile_) {
      case SpinProfile::planar:
      case SpinProfile::ripple: {
        const double theta = planar_angle(x[0]);
        return {std::sin(theta), 0.0, std::cos(theta)};
      }
      case SpinProfile::sphere:
        return {std::sin(x[0]) * std::cos(x[1]), std::sin(x[0]) * std::sin(x[1]),
                std::cos(x[0])};
      case SpinProfile::tilt: {
        Eigen::Vector3d v(x[0], x[1], p_.tilt_c);
        return v / v.norm();
      }
    }
    throw std::logic_error("unreachable");
  }

  Eigen::Vector3d direction_derivative(const ParameterPoint& x, int i) const {
    switch (profile_) {
      case SpinProfile::planar:
      case SpinProfile::ripple: {
        const double theta = planar_angle(x[0]);
        return Eigen::Vector3d(std::cos(theta), 0.0, -std::sin(theta)) * planar_rate(x[0]);
      }
      case SpinProfile::sphere: {
        const double st = std::sin(x[0]), ct = std::cos(x[0]);
        const double sp = std::sin(x[1]), cp = std::cos(x[1]);
        if (i == 0) return {ct * cp, ct * sp, -st};
        return {-st * sp, st * cp, 0.0};
      }
      case SpinProfile::tilt: {
        Eigen::Vector3d v(x[0], x[1], p_.tilt_c);
        const double r = v.norm();
        Eigen::Vector3d e = Eigen::Vector3d::Zero();
        e[i] = 1.0;
        return e / r - v * (v[i] / (r * r * r));
      }
    }
    throw std::logic_error("unreachable");
  }

  double planar_angle(double x) const {
    return p_.kappa0 * x + p_.ripple_amp * std::sin(p_.ripple_q * x);
  }

  SpinProfile profile_;
  SpinFieldParams p_;
  SpinMatrices spin_;
};

// ---------------------------------------------------------------------------
// Two-level crossing: H = d(X) . sigma with affine d.
// ---------------------------------------------------------------------------

struct TwoLevelParams {
  Eigen::Vector3d d0 = Eigen::Vector3d::Zero();
  Eigen::Matrix<double, 3, Eigen::Dynamic> jac;  // column i = d d / d X_i
  double hbar = 1.0;
};

class TwoLevelCrossingModel final : public FastModel {
 public:
  explicit TwoLevelCrossingModel(TwoLevelParams params) : p_(std::move(params)) {
    require(p_.jac.cols() >= 1, "TwoLevelCrossingModel: jac needs at least one column");
  }

  // Convenience: d(X) = (delta, 0, slope * X[0]), the standard linear
  // sweep through an avoided crossing of minimum gap 2*delta.
  static TwoLevelCrossingModel linear_sweep(double delta, double slope, double hbar = 1.0) {
    TwoLevelParams p;
    p.d0 = {delta, 0.0, 0.0};
    p.jac.resize(3, 1);
    p.jac.col(0) = Eigen::Vector3d(0.0, 0.0, slope);
    p.hbar = hbar;
    return TwoLevelCrossingModel(std::move(p));
  }

  // Convenience: d(X) = (X[0], X[1], 0), a conical intersection at the
  // origin of a 2d parameter plane.
  static TwoLevelCrossingModel radial_plane(double hbar = 1.0) {
    TwoLevelParams p;
    p.jac.resize(3, 2);
    p.jac.col(0) = Eigen::Vector3d(1.0, 0.0, 0.0);
    p.jac.col(1) = Eigen::Vector3d(0.0, 1.0, 0.0);
    p.hbar = hbar;
    return TwoLevelCrossingModel(std::move(p));
  }

  int dim() const override { return 2; }
  int parameter_dim() const override { return static_cast<int>(p_.jac.cols()); }
  std::string name() const override { return "two_level_crossing"; }

  MatrixC hamiltonian(const ParameterPoint& x) const override {
    check_point(x);
    return pauli_dot(d_vector(x));
  }

  MatrixC gradient(const ParameterPoint& x, int i) const override {
    check_point(x);
    check_direction(i);
    return pauli_dot(p_.jac.col(i));
  }

  // Level 0 sits at -|d|, level 1 at +|d|. With n = d/|d| and
  // dn_i = (jac_i - n (n . jac_i)) / |d|:
  //   g_ij = dn_i . dn_j / 4                      (both levels)
  //   F_ij = +- hbar/2 * n . (dn_i x dn_j)        (+ for level 0)
  //   I_ij = +- hbar^2 g_ij / |d|                 (+ for level 0)
  std::optional<ReferenceTensors> analytic_reference(const ParameterPoint& x,
                                                     int level) const override {
    check_point(x);
    require(level == 0 || level == 1, "analytic_reference: level out of range");
    const Eigen::Vector3d d = d_vector(x);
    const double r = d.norm();
    require(r > 0.0, "analytic_reference: point sits on the degeneracy");
    const Eigen::Vector3d n = d / r;
    const double sign = level == 0 ? 1.0 : -1.0;
    const int dp = parameter_dim();
    std::vector<Eigen::Vector3d> dn(dp);
    for (int i = 0; i < dp; ++i) {
      const Eigen::Vector3d j = p_.jac.col(i);
      dn[i] = (j - n * n.dot(j)) / r;
    }
    ReferenceTensors ref;
    MatrixR g(dp, dp), f(dp, dp), inertia(dp, dp);
    for (int i = 0; i < dp; ++i) {
      for (int j = 0; j < dp; ++j) {
        g(i, j) = 0.25 * dn[i].dot(dn[j]);
        f(i, j) = sign * 0.5 * p_.hbar * n.dot(dn[i].cross(dn[j]));
        inertia(i, j) = sign * p_.hbar * p_.hbar * g(i, j) / r;
      }
    }
    ref.metric = std::move(g);
    ref.curvature = std::move(f);
    ref.induced_inertia = std::move(inertia);
    return ref;
  }

  Eigen::Vector3d d_vector(const ParameterPoint& x) const { return p_.d0 + p_.jac * x; }
  const TwoLevelParams& params() const { return p_; }

 private:
  static MatrixC pauli_dot(const Eigen::Vector3d& v) {
    MatrixC h(2, 2);
    h(0, 0) = Complex(v[2], 0.0);
    h(0, 1) = Complex(v[0], -v[1]);
    h(1, 0) = Complex(v[0], v[1]);
    h(1, 1) = Complex(-v[2], 0.0);
    return h;
  }

  TwoLevelParams p_;
};

// ---------------------------------------------------------------------------
// Particle on a 1d grid following a translated well.
// ---------------------------------------------------------------------------

enum class WellShape { gaussian, harmonic };

struct MovingWellParams {
  int points = 129;
  double spacing = 0.25;
  double mass = 1.0;
  WellShape shape = WellShape::gaussian;
  double depth = 5.0;       // gaussian: V = -depth * exp(-u^2 / (2 width^2))
  double width = 1.0;
  double omega = 1.0;       // harmonic: V = mass * omega^2 u^2 / 2
  int stencil = 3;          // kinetic stencil, 3 or 5 points
  double hbar = 1.0;
};

class MovingWellModel final : public FastModel {
 public:
  explicit MovingWellModel(MovingWellParams params) : p_(params) {
    require(p_.points >= 5, "MovingWellModel: need at least 5 grid points");
    require(p_.spacing > 0.0, "MovingWellModel: spacing must be positive");
    require(p_.stencil == 3 || p_.stencil == 5, "MovingWellModel: stencil must be 3 or 5");
    kinetic_ = build_kinetic();
  }

  int dim() const override { return p_.points; }
  int parameter_dim() const override { return 1; }
  std::string name() const override { return "moving_well"; }
  std::vector<std::string> parameter_names() const override { return {"X"}; }

  double grid_point(int i) const { return (i - 0.5 * (p_.points - 1)) * p_.spacing; }

  double potential(double u) const {
    if (p_.shape == WellShape::gaussian) {
      return -p_.depth * std::exp(-u * u / (2.0 * p_.width * p_.width));
    }
    return 0.5 * p_.mass * p_.omega * p_.omega * u * u;
  }

  double potential_derivative(double u) const {
    if (p_.shape == WellShape::gaussian) {
      return p_.depth * u / (p_.width * p_.width) *
             std::exp(-u * u / (2.0 * p_.width * p_.width));
    }
    return p_.mass * p_.omega * p_.omega * u;
  }

  MatrixC hamiltonian(const ParameterPoint& x) const override {
    check_point(x);
    MatrixC h = kinetic_;
    for (int i = 0; i < p_.points; ++i) {
      h(i, i) += potential(grid_point(i) - x[0]);
    }
    return h;
  }

  MatrixC gradient(const ParameterPoint& x, int i) const override {
    check_point(x);
    check_direction(i);
    MatrixC g = MatrixC::Zero(p_.points, p_.points);
    for (int k = 0; k < p_.points; ++k) {
      g(k, k) = -potential_derivative(grid_point(k) - x[0]);
    }
    return g;
  }

  // Position operator on the grid, used by sum-rule diagnostics.
  MatrixC position_operator() const {
    MatrixC x = MatrixC::Zero(p_.points, p_.points);
    for (int i = 0; i < p_.points; ++i) x(i, i) = grid_point(i);
    return x;
  }

  const MovingWellParams& params() const { return p_; }

 private:
  MatrixC build_kinetic() const {
    const int n = p_.points;
    const double t = p_.hbar * p_.hbar / (2.0 * p_.mass * p_.spacing * p_.spacing);
    MatrixC k = MatrixC::Zero(n, n);
    if (p_.stencil == 3) {
      for (int i = 0; i < n; ++i) {
        k(i, i) = 2.0 * t;
        if (i + 1 < n) {
          k(i, i + 1) = -t;
          k(i + 1, i) = -t;
        }
      }
    } else {
      for (int i = 0; i < n; ++i) {
        k(i, i) = 2.5 * t;
        if (i + 1 < n) {
          k(i, i + 1) = -t * 4.0 / 3.0;
          k(i + 1, i) = -t * 4.0 / 3.0;
        }
        if (i + 2 < n) {
          k(i, i + 2) = t / 12.0;
          k(i + 2, i) = t / 12.0;
        }
      }
    }
    return k;
  }

  MovingWellParams p_;
  MatrixC kinetic_;
};

// ---------------------------------------------------------------------------
// Rotated anisotropic oscillator in a truncated product basis.
// ---------------------------------------------------------------------------

struct CrankedOscillatorParams {
  double omega_x = 2.0;
  double omega_z = 1.0;
  int n_max_x = 6;  // inclusive quantum number cutoffs
  int n_max_z = 6;
  double mass = 1.0;
  double hbar = 1.0;
};

// H(theta) = p^2/2M + (M/2) [cxx x^2 + czz z^2 + 2 cxz x z] with the
// quadratic form coefficients of the trap rotated by theta:
//   cxx = wx^2 cos^2 + wz^2 sin^2
//   czz = wx^2 sin^2 + wz^2 cos^2
//   cxz = (wx^2 - wz^2) sin cos
// The gradient is the exact theta derivative of these coefficients, so at
// theta = 0 it is purely the xz cross term and its matrix elements are
// exact in any truncation that contains the +-1 ladder neighbours.
class CrankedOscillatorModel final : public FastModel {
 public:
  explicit CrankedOscillatorModel(CrankedOscillatorParams params) : p_(params) {
    require(p_.omega_x > 0.0 && p_.omega_z > 0.0,
            "CrankedOscillatorModel: frequencies must be positive");
    require(p_.n_max_x >= 1 && p_.n_max_z >= 1,
            "CrankedOscillatorModel: cutoffs must be >= 1");
    build_operators();
  }

  int dim() const override { return (p_.n_max_x + 1) * (p_.n_max_z + 1); }
  int parameter_dim() const override { return 1; }
  std::string name() const override { return "cranked_oscillator"; }
  std::vector<std::string> parameter_names() const override { return {"theta"}; }

  int basis_index(int n_x, int n_z) const { return n_x * (p_.n_max_z + 1) + n_z; }

  MatrixC hamiltonian(const ParameterPoint& x) const override {
    check_point(x);
    const double c = std::cos(x[0]), s = std::sin(x[0]);
    const double wx2 = p_.omega_x * p_.omega_x, wz2 = p_.omega_z * p_.omega_z;
    const double cxx = wx2 * c * c + wz2 * s * s;
    const double czz = wx2 * s * s + wz2 * c * c;
    const double cxz = (wx2 - wz2) * s * c;
    return kinetic_ + 0.5 * p_.mass * (cxx * x2_ + czz * z2_ + 2.0 * cxz * xz_);
  }

  MatrixC gradient(const ParameterPoint& x, int i) const override {
    check_point(x);
    check_direction(i);
    const double s2 = std::sin(2.0 * x[0]), c2 = std::cos(2.0 * x[0]);
    const double dw2 = p_.omega_x * p_.omega_x - p_.omega_z * p_.omega_z;
    return 0.5 * p_.mass * dw2 * (-s2 * x2_ + s2 * z2_ + 2.0 * c2 * xz_);
  }

  const CrankedOscillatorParams& params() const { return p_; }

 private:
  void build_operators() {
    const int nx = p_.n_max_x + 1, nz = p_.n_max_z + 1, n = nx * nz;
    const double lx2 = p_.hbar / (2.0 * p_.mass * p_.omega_x);
    const double lz2 = p_.hbar / (2.0 * p_.mass * p_.omega_z);

    x2_ = MatrixC::Zero(n, n);
    z2_ = MatrixC::Zero(n, n);
    xz_ = MatrixC::Zero(n, n);
    MatrixC h0 = MatrixC::Zero(n, n);

    for (int ax = 0; ax < nx; ++ax) {
      for (int az = 0; az < nz; ++az) {
        const int k = basis_index(ax, az);
        h0(k, k) = p_.hbar * (p_.omega_x * (ax + 0.5) + p_.omega_z * (az + 0.5));
        x2_(k, k) = lx2 * (2.0 * ax + 1.0);
        z2_(k, k) = lz2 * (2.0 * az + 1.0);
        if (ax + 2 < nx) {
          const double v = lx2 * std::sqrt((ax + 1.0) * (ax + 2.0));
          x2_(basis_index(ax + 2, az), k) = v;
          x2_(k, basis_index(ax + 2, az)) = v;
        }
        if (az + 2 < nz) {
          const double v = lz2 * std::sqrt((az + 1.0) * (az + 2.0));
          z2_(basis_index(ax, az + 2), k) = v;
          z2_(k, basis_index(ax, az + 2)) = v;
        }
        // (a + a+)(b + b+) couples +-1 in both quantum numbers.
        if (ax + 1 < nx && az + 1 < nz) {
          const double v = std::sqrt(lx2 * lz2) * std::sqrt((ax + 1.0) * (az + 1.0));
          xz_(basis_index(ax + 1, az + 1), k) = v;
          xz_(k, basis_index(ax + 1, az + 1)) = v;
        }
        if (ax + 1 < nx && az > 0) {
          const double v = std::sqrt(lx2 * lz2) * std::sqrt((ax + 1.0) * az);
          xz_(basis_index(ax + 1, az - 1), k) = v;
          xz_(k, basis_index(ax + 1, az - 1)) = v;
        }
      }
    }
    const double wx2 = p_.omega_x * p_.omega_x, wz2 = p_.omega_z * p_.omega_z;
    kinetic_ = h0 - 0.5 * p_.mass * (wx2 * x2_ + wz2 * z2_);
  }

  CrankedOscillatorParams p_;
  MatrixC kinetic_, x2_, z2_, xz_;
};

struct OscillatorOrbital {
  int n_x = 0;
  int n_z = 0;
  double energy = 0.0;
};

// Lowest `count` orbitals of the uncoupled oscillator, energy-sorted with a
// deterministic (n_x, n_z) lexicographic tie break.
inline std::vector<OscillatorOrbital> lowest_orbitals(double omega_x, double omega_z, int count,
                                                      double hbar = 1.0) {
  require(count >= 1, "lowest_orbitals: count must be >= 1");
  std::vector<OscillatorOrbital> all;
  // count quanta in one direction always suffice to cover the lowest count levels
  for (int ax = 0; ax <= count; ++ax) {
    for (int az = 0; az <= count; ++az) {
      all.push_back({ax, az, hbar * (omega_x * (ax + 0.5) + omega_z * (az + 0.5))});
    }
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a.energy != b.energy) return a.energy < b.energy;
    if (a.n_x != b.n_x) return a.n_x < b.n_x;
    return a.n_z < b.n_z;
  });
  all.resize(count);
  return all;
}

struct SelfConsistentShape {
  double omega_x = 0.0;
  double omega_z = 0.0;
  double s_x = 0.0;  // sum over occupied orbitals of n_x + 1/2
  double s_z = 0.0;
  int iterations = 0;
  std::vector<OscillatorOrbital> occupied;
};

// Shape that balances the quanta against the frequencies,
// omega_x * s_x = omega_z * s_z, at fixed volume omega_x * omega_z = omega0^2.
// Plain fixed-point iteration on the frequency ratio.
inline SelfConsistentShape self_consistent_frequencies(double omega0, int n_fill,
                                                       double hbar = 1.0,
                                                       double ratio_guess = 1.5,
                                                       int max_iterations = 200,
                                                       double tol = 1e-12) {
  require(omega0 > 0.0, "self_consistent_frequencies: omega0 must be positive");
  double q = ratio_guess;  // omega_x / omega_z
  SelfConsistentShape out;
  for (int it = 1; it <= max_iterations; ++it) {
    const double wz = omega0 / std::sqrt(q);
    const double wx = q * wz;
    auto occ = lowest_orbitals(wx, wz, n_fill, hbar);
    double sx = 0.0, sz = 0.0;
    for (const auto& o : occ) {
      sx += o.n_x + 0.5;
      sz += o.n_z + 0.5;
    }
    const double q_next = sz / sx;
    out = {wx, wz, sx, sz, it, std::move(occ)};
    if (std::abs(q_next - q) <= tol * std::max(1.0, q)) {
      const double wz_f = omega0 / std::sqrt(q_next);
      out.omega_x = q_next * wz_f;
      out.omega_z = wz_f;
      return out;
    }
    q = q_next;
  }
  throw NumericError("self_consistent_frequencies: no fixed point after " +
                     std::to_string(max_iterations) + " iterations");
}

// Classical moment of inertia of the occupied density about the rotation
// axis: M * sum <x^2 + z^2> = hbar (s_x / omega_x + s_z / omega_z).
inline double rigid_body_inertia(const SelfConsistentShape& shape, double hbar = 1.0) {
  return hbar * (shape.s_x / shape.omega_x + shape.s_z / shape.omega_z);
}

// Rank of an orbital inside the truncated basis spectrum at theta = 0.
inline int orbital_level_index(const CrankedOscillatorModel& model, int n_x, int n_z) {
  const auto& p = model.params();
  require(n_x <= p.n_max_x && n_z <= p.n_max_z, "orbital_level_index: orbital outside basis");
  const double e = p.omega_x * (n_x + 0.5) + p.omega_z * (n_z + 0.5);
  int below = 0;
  for (int ax = 0; ax <= p.n_max_x; ++ax) {
    for (int az = 0; az <= p.n_max_z; ++az) {
      if (p.omega_x * (ax + 0.5) + p.omega_z * (az + 0.5) < e * (1.0 - 1e-12)) ++below;
    }
  }
  return below;
}

// Sum of single-orbital responses 2 hbar^2 sum_m |<m|dn>|^2 / (E_m - E_n)
// over the occupied orbitals, evaluated at theta. Degenerate occupied
// orbitals are a hard error, inherited from the coupling layer.
inline double inglis_inertia(const CrankedOscillatorModel& model,
                             const std::vector<OscillatorOrbital>& occupied, double theta = 0.0,
                             const NumericConfig& cfg = {}) {
  ParameterPoint x(1);
  x[0] = theta;
  const auto data = spectral::eigensystem(model, x, cfg);
  double total = 0.0;
  for (const auto& orbital : occupied) {
    const int level = orbital_level_index(model, orbital.n_x, orbital.n_z);
    const auto coup = spectral::couplings_from_spectral(model, data, level, cfg);
    double inertia = 0.0;
    for (int m = 0; m < data.dim(); ++m) {
      if (m == level) continue;
      inertia += 2.0 * cfg.hbar * cfg.hbar * std::norm(coup.entries(0, m)) /
                 (data.energies[m] - data.energies[level]);
    }
    total += inertia;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Seeded random Hermitian pencil for property tests.
// ---------------------------------------------------------------------------

struct RandomHermitianParams {
  int dim = 6;
  int parameter_dim = 2;
  std::uint64_t seed = 1;
  double scale = 1.0;        // magnitude of the base matrix
  double slope_scale = 0.4;  // magnitude of the per-parameter matrices
  double hbar = 1.0;
};

class RandomHermitianModel final : public FastModel {
 public:
  explicit RandomHermitianModel(RandomHermitianParams params) : p_(params) {
    require(p_.dim >= 2, "RandomHermitianModel: dim must be >= 2");
    require(p_.parameter_dim >= 1, "RandomHermitianModel: parameter_dim must be >= 1");
    std::mt19937_64 rng(p_.seed);
    base_ = random_hermitian(rng, p_.dim, p_.scale);
    slopes_.reserve(p_.parameter_dim);
    for (int i = 0; i < p_.parameter_dim; ++i) {
      slopes_.push_back(random_hermitian(rng, p_.dim, p_.slope_scale));
    }
  }

  int dim() const override { return p_.dim; }
  int parameter_dim() const override { return p_.parameter_dim; }
  std::string name() const override { return "random_hermitian"; }

  MatrixC hamiltonian(const ParameterPoint& x) const override {
    check_point(x);
    MatrixC h = base_;
    for (int i = 0; i < p_.parameter_dim; ++i) h += x[i] * slopes_[i];
    return h;
  }

  MatrixC gradient(const ParameterPoint& x, int i) const override {
    check_point(x);
    check_direction(i);
    return slopes_[i];
  }

  const RandomHermitianParams& params() const { return p_; }

 private:
  static MatrixC random_hermitian(std::mt19937_64& rng, int n, double scale) {
    std::normal_distribution<double> dist(0.0, 1.0);
    MatrixC a(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) a(i, j) = Complex(dist(rng), dist(rng));
    }
    return scale / std::sqrt(2.0 * n) * (a + a.adjoint().eval());
  }

  RandomHermitianParams p_;
  MatrixC base_;
  std::vector<MatrixC> slopes_;
};

}  // namespace adiabat::models
