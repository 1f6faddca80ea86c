#pragma once

// Time evolution on both sides of the comparison: exact unitary propagation
// of the fast state along a prescribed drive, Hamiltonian integration of the
// slow coordinates in the effective fields, and the mean-field coupled
// system that serves as the full reference.
//
// Steppers are fixed-step and time-symmetric: a one-step midpoint
// exponential (order 2) and a two-exponential fourth-order commutator-free
// scheme. Both conserve the norm to machine precision by construction, and
// the drift is monitored anyway.

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "adiabat/common.hpp"
#include "adiabat/fields.hpp"
#include "adiabat/model.hpp"
#include "adiabat/spectral.hpp"

namespace adiabat::dynamics {

// ---------------------------------------------------------------------------
// Drives: slow-parameter paths with analytic velocity.
// ---------------------------------------------------------------------------

struct DrivePath {
  std::function<ParameterPoint(double)> position;
  std::function<ParameterPoint(double)> velocity;
};

inline DrivePath linear_path(const ParameterPoint& x0, const ParameterPoint& v) {
  return {[x0, v](double t) { return ParameterPoint(x0 + t * v); },
          [v](double) { return v; }};
}

// Velocity rises from zero to v over ramp_time with a quintic profile
// r(u) = u^3 (10 - 15 u + 6 u^2): twice differentiable at both ends, so the
// state it prepares is adiabatically dressed rather than suddenly kicked.
inline DrivePath ramped_linear_path(const ParameterPoint& x0, const ParameterPoint& v,
                                    double ramp_time) {
  require(ramp_time > 0.0, "ramped_linear_path: ramp_time must be positive");
  auto ramp = [](double u) { return u * u * u * (10.0 - 15.0 * u + 6.0 * u * u); };
  // Integral of the ramp: R(u) = 2.5 u^4 - 3 u^5 + u^6, R(1) = 1/2.
  auto ramp_integral = [](double u) {
    return u * u * u * u * (2.5 - 3.0 * u + u * u);
  };
  auto position = [=](double t) -> ParameterPoint {
    if (t <= 0.0) return x0;
    if (t < ramp_time) return ParameterPoint(x0 + ramp_integral(t / ramp_time) * ramp_time * v);
    return ParameterPoint(x0 + (0.5 * ramp_time + (t - ramp_time)) * v);
  };
  auto velocity = [=](double t) -> ParameterPoint {
    if (t <= 0.0) return ParameterPoint(0.0 * v);
    if (t < ramp_time) return ParameterPoint(ramp(t / ramp_time) * v);
    return v;
  };
  return {position, velocity};
}

// Circle of radius speed * period / (2 pi) traversed once per period in the
// (axis_a, axis_b) plane.
inline DrivePath circular_path(const ParameterPoint& center, double speed, double period,
                               int axis_a = 0, int axis_b = 1) {
  require(period > 0.0, "circular_path: period must be positive");
  require(axis_a != axis_b, "circular_path: axes must differ");
  const double omega = 2.0 * M_PI / period;
  const double radius = speed / omega;
  auto position = [=](double t) -> ParameterPoint {
    ParameterPoint x = center;
    x[axis_a] += radius * std::cos(omega * t);
    x[axis_b] += radius * std::sin(omega * t);
    return x;
  };
  auto velocity = [=](double t) -> ParameterPoint {
    ParameterPoint v = ParameterPoint::Zero(center.size());
    v[axis_a] = -speed * std::sin(omega * t);
    v[axis_b] = speed * std::cos(omega * t);
    return v;
  };
  return {position, velocity};
}

// ---------------------------------------------------------------------------
// Unitary stepping.
// ---------------------------------------------------------------------------

enum class Integrator { midpoint, cf4 };

namespace detail {

// psi <- exp(-i dt G / hbar) psi via eigendecomposition of Hermitian G.
inline void unitary_apply(const MatrixC& g, double dt, double hbar, VectorC& psi) {
  Eigen::SelfAdjointEigenSolver<MatrixC> solver(g);
  if (solver.info() != Eigen::Success) {
    throw NumericError("unitary_apply: eigensolver failed");
  }
  const VectorC rotated = solver.eigenvectors().adjoint() * psi;
  VectorC phased(rotated.size());
  for (int k = 0; k < rotated.size(); ++k) {
    const double angle = -solver.eigenvalues()[k] * dt / hbar;
    phased[k] = rotated[k] * Complex(std::cos(angle), std::sin(angle));
  }
  psi = solver.eigenvectors() * phased;
}

}  // namespace detail

struct DrivenOptions {
  Integrator integrator = Integrator::cf4;
  int track_level = -1;  // record this level's population and energy when >= 0
  int store_every = 1;
};

struct DrivenSample {
  double t = 0.0;
  double energy = 0.0;      // <psi|H(X(t))|psi>
  double population = 0.0;  // |<level|psi>|^2, only when a level is tracked
  double level_energy = 0.0;
};

struct DrivenRecord {
  std::vector<DrivenSample> samples;
  VectorC psi_final;
  double norm_drift = 0.0;
  int steps = 0;
  double dt = 0.0;
};

// Propagates psi0 along the drive from t = 0 to t_final with a fixed step.
// The step is validated against the spectral range; a norm drift beyond
// tolerance aborts the run.
inline DrivenRecord driven_evolution(const FastModel& model, const DrivePath& path,
                                     const VectorC& psi0, double t_final, double dt,
                                     const DrivenOptions& options = {},
                                     const NumericConfig& cfg = {}) {
  require(t_final > 0.0 && dt > 0.0, "driven_evolution: t_final and dt must be positive");
  require(psi0.size() == model.dim(), "driven_evolution: psi0 has dimension " +
                                          std::to_string(psi0.size()) + ", expected " +
                                          std::to_string(model.dim()));
  require(model.dim() <= cfg.expm_dim_cap,
          "driven_evolution: dimension exceeds the dense-exponential cap");
  require(std::abs(psi0.norm() - 1.0) < 1e-10, "driven_evolution: psi0 is not normalized");

  const int steps = std::max(1, static_cast<int>(std::llround(t_final / dt)));
  const double step = t_final / steps;

  // Step-size precondition, sampled at the ends and the middle of the run.
  double range = 0.0;
  for (double t : {0.0, 0.5 * t_final, t_final}) {
    const auto data = spectral::eigensystem(model, path.position(t), cfg);
    range = std::max(range, data.spectral_range());
  }
  if (step * range / cfg.hbar >= cfg.dt_range_max) {
    throw ValidationError("driven_evolution: dt * spectral_range / hbar = " +
                          std::to_string(step * range / cfg.hbar) + " exceeds " +
                          std::to_string(cfg.dt_range_max) + "; reduce dt");
  }

  const double drift_allowance =
      cfg.norm_drift_tol * std::max(1.0, static_cast<double>(steps) / 1e4);
  // Gauss nodes and weights of the fourth-order two-exponential scheme.
  const double node_lo = 0.5 - std::sqrt(3.0) / 6.0;
  const double node_hi = 0.5 + std::sqrt(3.0) / 6.0;
  const double wa = (3.0 + 2.0 * std::sqrt(3.0)) / 12.0;
  const double wb = (3.0 - 2.0 * std::sqrt(3.0)) / 12.0;

  DrivenRecord record;
  record.steps = steps;
  record.dt = step;
  VectorC psi = psi0;

  auto store = [&](double t) {
    DrivenSample s;
    s.t = t;
    const MatrixC h = model.hamiltonian(path.position(t));
    s.energy = (psi.adjoint() * h * psi)(0).real();
    if (options.track_level >= 0) {
      const auto data = spectral::eigensystem(model, path.position(t), cfg);
      spectral::check_level_gap(data, options.track_level, cfg);
      s.population = std::norm((data.states.col(options.track_level).adjoint() * psi)(0));
      s.level_energy = data.energies[options.track_level];
    }
    record.samples.push_back(s);
    const double drift = std::abs(psi.norm() - 1.0);
    record.norm_drift = std::max(record.norm_drift, drift);
    if (drift > drift_allowance) {
      throw NumericError("driven_evolution: norm drift " + std::to_string(drift) +
                         " exceeds allowance " + std::to_string(drift_allowance));
    }
  };

  store(0.0);
  for (int k = 0; k < steps; ++k) {
    const double t = k * step;
    if (options.integrator == Integrator::midpoint) {
      const MatrixC h = model.hamiltonian(path.position(t + 0.5 * step));
      detail::unitary_apply(h, step, cfg.hbar, psi);
    } else {
      const MatrixC h1 = model.hamiltonian(path.position(t + node_lo * step));
      const MatrixC h2 = model.hamiltonian(path.position(t + node_hi * step));
      detail::unitary_apply(wa * h1 + wb * h2, step, cfg.hbar, psi);
      detail::unitary_apply(wb * h1 + wa * h2, step, cfg.hbar, psi);
    }
    const bool last = k + 1 == steps;
    if (last || (k + 1) % options.store_every == 0) store((k + 1) * step);
  }
  record.psi_final = psi;
  return record;
}

// First-order dressed state for motion at velocity v: the instantaneous
// level plus the neighbouring levels weighted by i hbar v.C / (E_m - E_n),
// normalized. Its mean energy sits half an inertia term above the level.
inline VectorC dressed_state(const FastModel& model, const ParameterPoint& x, const VectorR& v,
                             int level, const NumericConfig& cfg = {}) {
  require(v.size() == model.parameter_dim(), "dressed_state: velocity has the wrong dimension");
  const auto data = spectral::eigensystem(model, x, cfg);
  const auto coup = spectral::couplings_from_spectral(model, data, level, cfg);
  VectorC psi = data.states.col(level);
  for (int m = 0; m < data.dim(); ++m) {
    if (m == level) continue;
    Complex amp(0.0, 0.0);
    for (int i = 0; i < v.size(); ++i) amp += v[i] * coup.entries(i, m);
    psi += data.states.col(m) * (Complex(0.0, cfg.hbar) * amp /
                                 (data.energies[m] - data.energies[level]));
  }
  psi /= psi.norm();
  return psi;
}

// ---------------------------------------------------------------------------
// Velocity sweep: measured energy shift against the inertia prediction.
// ---------------------------------------------------------------------------

struct SweepRow {
  double speed = 0.0;
  double mean_shift = 0.0;        // time-averaged <H> - E_level after the ramp
  double inertia_estimate = 0.0;  // 2 * mean_shift / speed^2
};

struct VelocitySweepResult {
  std::vector<SweepRow> rows;
  double reference_inertia = 0.0;  // direction^T I direction at x0
};

// Drags the level along `direction` at each speed, entering through a
// quintic ramp that occupies the discarded transient window, and averages
// the energy shift over the remainder. For an adiabatic drive the average
// approaches (1/2) I v^2.
inline VelocitySweepResult velocity_sweep(const FastModel& model, int level,
                                          const ParameterPoint& x0, const VectorR& direction,
                                          const std::vector<double>& speeds, double t_final,
                                          double dt, const NumericConfig& cfg = {}) {
  require(!speeds.empty(), "velocity_sweep: no speeds");
  require(std::abs(direction.norm() - 1.0) < 1e-12,
          "velocity_sweep: direction must be a unit vector");

  VelocitySweepResult result;
  {
    const auto coup = spectral::derivative_couplings(model, x0, level, cfg);
    const MatrixR inertia = geometry::induced_inertia(coup, cfg);
    result.reference_inertia = direction.dot(inertia * direction);
  }

  for (double speed : speeds) {
    require(speed > 0.0, "velocity_sweep: speeds must be positive");
    const ParameterPoint v = speed * direction;
    const double ramp_time = cfg.transient_fraction * t_final;
    const auto path = ramped_linear_path(x0, v, ramp_time);

    DrivenOptions opt;
    opt.track_level = level;
    opt.store_every = 4;
    const VectorC psi0 = spectral::eigensystem(model, x0, cfg).states.col(level);
    const auto record = driven_evolution(model, path, psi0, t_final, dt, opt, cfg);

    double sum = 0.0;
    int kept = 0;
    for (const auto& s : record.samples) {
      if (s.t < ramp_time) continue;
      sum += s.energy - s.level_energy;
      ++kept;
    }
    require(kept > 0, "velocity_sweep: no samples after the transient window");
    SweepRow row;
    row.speed = speed;
    row.mean_shift = sum / kept;
    row.inertia_estimate = 2.0 * row.mean_shift / (speed * speed);
    result.rows.push_back(row);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Leakage through a crossing.
// ---------------------------------------------------------------------------

struct LeakageResult {
  double max_leakage = 0.0;
  double final_leakage = 0.0;  // mean over the trailing transient window
};

inline LeakageResult leakage_run(const FastModel& model, const DrivePath& path, int level,
                                 double t_final, double dt, const NumericConfig& cfg = {}) {
  DrivenOptions opt;
  opt.track_level = level;
  const VectorC psi0 = spectral::eigensystem(model, path.position(0.0), cfg).states.col(level);
  const auto record = driven_evolution(model, path, psi0, t_final, dt, opt, cfg);

  LeakageResult out;
  double tail_sum = 0.0;
  int tail_count = 0;
  for (const auto& s : record.samples) {
    const double leak = std::max(0.0, 1.0 - s.population);
    out.max_leakage = std::max(out.max_leakage, leak);
    if (s.t >= (1.0 - cfg.transient_fraction) * t_final) {
      tail_sum += leak;
      ++tail_count;
    }
  }
  out.final_leakage = tail_sum / std::max(1, tail_count);
  return out;
}

// ---------------------------------------------------------------------------
// Slow-coordinate Hamiltonian flow in the effective fields.
// ---------------------------------------------------------------------------

struct TrajectorySample {
  double t = 0.0;
  ParameterPoint position;
  VectorR momentum;
  VectorR velocity;
  double energy = 0.0;
};

struct TrajectoryRecord {
  std::vector<TrajectorySample> samples;
};

// Canonical momentum that starts the effective flow at velocity v.
inline VectorR momentum_for_velocity(const fields::EffectiveFieldProvider& provider,
                                     const ParameterPoint& x, const VectorR& v) {
  const auto s = provider.sample(x);
  return s.connection + s.total_inertia * v;
}

namespace detail {

struct PhaseDeriv {
  VectorR x_dot;
  VectorR p_dot;
};

// H = (1/2) k^T Q k + V + phi with k = P - A:
//   X' = Q k
//   P'_i = -dV_i - dphi_i - (1/2) k^T dQ_i k + dA_j/dX_i (Q k)_j
inline PhaseDeriv hamilton_rhs(const fields::EffectiveFieldProvider& provider,
                               const ParameterPoint& x, const VectorR& p) {
  const auto s = provider.sample(x);
  const auto d = provider.derivs(x);
  const VectorR k = p - s.connection;
  PhaseDeriv out;
  out.x_dot = s.mobility * k;
  out.p_dot = -d.d_potential - d.d_scalar;
  for (int i = 0; i < x.size(); ++i) {
    out.p_dot[i] += -0.5 * k.dot(d.d_mobility[i] * k) +
                    d.connection_jacobian.row(i).dot(out.x_dot);
  }
  return out;
}

}  // namespace detail

inline double effective_energy(const fields::EffectiveFieldProvider& provider,
                               const ParameterPoint& x, const VectorR& p) {
  const auto s = provider.sample(x);
  const VectorR k = p - s.connection;
  return 0.5 * k.dot(s.mobility * k) + s.potential + s.scalar_potential;
}

// Classic fixed-step fourth-order Runge-Kutta on (X, P).
inline TrajectoryRecord effective_trajectory(const fields::EffectiveFieldProvider& provider,
                                             const ParameterPoint& x0, const VectorR& p0,
                                             double t_final, double dt, int store_every = 1,
                                             const NumericConfig& cfg = {}) {
  (void)cfg;
  require(t_final > 0.0 && dt > 0.0, "effective_trajectory: t_final and dt must be positive");
  const int steps = std::max(1, static_cast<int>(std::llround(t_final / dt)));
  const double h = t_final / steps;

  TrajectoryRecord record;
  ParameterPoint x = x0;
  VectorR p = p0;

  auto store = [&](double t) {
    TrajectorySample s;
    s.t = t;
    s.position = x;
    s.momentum = p;
    const auto fs = provider.sample(x);
    s.velocity = fs.mobility * (p - fs.connection);
    s.energy = 0.5 * (p - fs.connection).dot(s.velocity) + fs.potential + fs.scalar_potential;
    record.samples.push_back(std::move(s));
  };

  store(0.0);
  for (int k = 0; k < steps; ++k) {
    const auto k1 = detail::hamilton_rhs(provider, x, p);
    const auto k2 = detail::hamilton_rhs(provider, x + 0.5 * h * k1.x_dot, p + 0.5 * h * k1.p_dot);
    const auto k3 = detail::hamilton_rhs(provider, x + 0.5 * h * k2.x_dot, p + 0.5 * h * k2.p_dot);
    const auto k4 = detail::hamilton_rhs(provider, x + h * k3.x_dot, p + h * k3.p_dot);
    x += h / 6.0 * (k1.x_dot + 2.0 * k2.x_dot + 2.0 * k3.x_dot + k4.x_dot);
    p += h / 6.0 * (k1.p_dot + 2.0 * k2.p_dot + 2.0 * k3.p_dot + k4.p_dot);
    const bool last = k + 1 == steps;
    if (last || (k + 1) % store_every == 0) store((k + 1) * h);
  }
  return record;
}

// ---------------------------------------------------------------------------
// Coupled mean-field reference.
// ---------------------------------------------------------------------------

struct CoupledSample {
  double t = 0.0;
  ParameterPoint position;
  VectorR velocity;
  double quantum_energy = 0.0;  // <psi|H(X)|psi>
  double total_energy = 0.0;    // kinetic + quantum
  double population = 0.0;      // tracked level
};

struct CoupledRecord {
  std::vector<CoupledSample> samples;
  VectorC psi_final;
  double norm_drift = 0.0;
};

// Strang-split mean-field evolution: half kick on the slow momentum with
// the quantum force -<psi|dH|psi>, full drift of X, exact unitary step of
// psi at the drift midpoint, half kick. Time-symmetric, second order, and
// conserves kinetic + quantum energy up to O(dt^2) oscillation.
inline CoupledRecord coupled_reference(const FastModel& model, const MatrixR& primitive_inertia,
                                       const ParameterPoint& x0, const VectorR& v0,
                                       const VectorC& psi0, double t_final, double dt,
                                       int track_level = -1, int store_every = 1,
                                       const NumericConfig& cfg = {}) {
  const int d = model.parameter_dim();
  require(primitive_inertia.rows() == d && primitive_inertia.cols() == d,
          "coupled_reference: primitive inertia has the wrong shape");
  require(psi0.size() == model.dim(), "coupled_reference: psi0 has the wrong dimension");
  require(std::abs(psi0.norm() - 1.0) < 1e-10, "coupled_reference: psi0 is not normalized");
  require(t_final > 0.0 && dt > 0.0, "coupled_reference: t_final and dt must be positive");
  require(model.dim() <= cfg.expm_dim_cap,
          "coupled_reference: dimension exceeds the dense-exponential cap");

  const int steps = std::max(1, static_cast<int>(std::llround(t_final / dt)));
  const double h = t_final / steps;
  const MatrixR bare_mobility =
      geometry::checked_inverse(primitive_inertia, cfg, "coupled_reference: primitive inertia");

  const double drift_allowance =
      cfg.norm_drift_tol * std::max(1.0, static_cast<double>(steps) / 1e4);

  ParameterPoint x = x0;
  VectorR p = primitive_inertia * v0;
  VectorC psi = psi0;

  auto force = [&](const ParameterPoint& at) {
    VectorR f(d);
    for (int i = 0; i < d; ++i) {
      f[i] = -(psi.adjoint() * model.gradient(at, i) * psi)(0).real();
    }
    return f;
  };

  CoupledRecord record;
  auto store = [&](double t) {
    CoupledSample s;
    s.t = t;
    s.position = x;
    s.velocity = bare_mobility * p;
    s.quantum_energy = (psi.adjoint() * model.hamiltonian(x) * psi)(0).real();
    s.total_energy = 0.5 * p.dot(bare_mobility * p) + s.quantum_energy;
    if (track_level >= 0) {
      const auto data = spectral::eigensystem(model, x, cfg);
      s.population = std::norm((data.states.col(track_level).adjoint() * psi)(0));
    }
    record.samples.push_back(std::move(s));
    const double drift = std::abs(psi.norm() - 1.0);
    record.norm_drift = std::max(record.norm_drift, drift);
    if (drift > drift_allowance) {
      throw NumericError("coupled_reference: norm drift " + std::to_string(drift) +
                         " exceeds allowance");
    }
  };

  store(0.0);
  for (int k = 0; k < steps; ++k) {
    p += 0.5 * h * force(x);
    const ParameterPoint x_new = x + h * (bare_mobility * p);
    const ParameterPoint x_mid = 0.5 * (x + x_new);
    detail::unitary_apply(model.hamiltonian(x_mid), h, cfg.hbar, psi);
    x = x_new;
    p += 0.5 * h * force(x);
    const bool last = k + 1 == steps;
    if (last || (k + 1) % store_every == 0) store((k + 1) * h);
  }
  record.psi_final = psi;
  return record;
}

// ---------------------------------------------------------------------------
// Action contributions around a closed loop.
// ---------------------------------------------------------------------------

struct LoopActions {
  double speed = 0.0;
  double period = 0.0;
  double scalar_action = 0.0;    // integral of phi dt
  double berry_action = 0.0;     // integral of A . dX
  double inertial_action = 0.0;  // integral of (1/2) v^T I_induced v dt
};

// One circular loop, integrated with the periodic trapezoid rule (uniform
// samples of a smooth periodic integrand, so the quadrature error decays
// faster than any power of the segment count).
inline LoopActions loop_actions(const fields::EffectiveFieldProvider& provider,
                                const ParameterPoint& center, double speed, double period,
                                int segments = 128, int axis_a = 0, int axis_b = 1) {
  require(segments >= 8, "loop_actions: need at least 8 segments");
  const auto path = circular_path(center, speed, period, axis_a, axis_b);
  const double dt = period / segments;

  LoopActions out;
  out.speed = speed;
  out.period = period;
  for (int k = 0; k < segments; ++k) {
    const double t = k * dt;
    const ParameterPoint x = path.position(t);
    const ParameterPoint v = path.velocity(t);
    const auto s = provider.sample(x);
    out.scalar_action += s.scalar_potential * dt;
    out.berry_action += s.connection.dot(v) * dt;
    out.inertial_action += 0.5 * v.dot(s.induced_inertia * v) * dt;
  }
  return out;
}

}  // namespace adiabat::dynamics
