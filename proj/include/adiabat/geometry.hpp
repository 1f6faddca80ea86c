#pragma once

// Second-order geometry of a single level: Berry connection, quantum
// geometric tensor (metric + curvature), induced inertia, and the assembled
// slow-coordinate field (total inertia, mobility, induced scalar potential).
//
// The connection is the only quantity that needs differentiated
// eigenvectors; everything else comes from the gauge-invariant couplings.
// The connection inherits the deterministic phase convention from the
// spectral layer and therefore carries a residual check: the real part of
// <n|dn> must vanish for any smooth gauge, so its size measures how far the
// convention is from smooth at this point.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "adiabat/common.hpp"
#include "adiabat/grid.hpp"
#include "adiabat/model.hpp"
#include "adiabat/spectral.hpp"

namespace adiabat::geometry {

struct ConnectionResult {
  VectorR connection;        // A_i = -hbar Im <n|d_i n>
  double gauge_residual;     // hbar * max_i |Re <n|d_i n>|
};

namespace detail {

// <n(X)|n_s> for a stencil neighbour must stay near +-1 under the shared
// phase convention. A pivot change on a real eigenvector flips its global
// sign, a constant gauge factor that leaves the connection untouched, so a
// neighbour near -1 is realigned. Anything else near or inside the unit
// circle's waist means the convention jumped by a phase no constant factor
// removes, or the state content itself changed, and the difference
// quotient is garbage.
inline double stencil_alignment(const Complex& overlap, double h, int direction) {
  if (std::abs(overlap.real()) <= 0.5) {
    throw GaugeError("berry_connection: phase convention switches within the stencil (direction " +
                     std::to_string(direction) + ", step " + std::to_string(h) +
                     "); evaluate at a nearby point or reduce fd_step");
  }
  return overlap.real() > 0.0 ? 1.0 : -1.0;
}

inline VectorC stencil_derivative(const FastModel& model, const ParameterPoint& x,
                                  const VectorC& center, int level, int direction, double h,
                                  const NumericConfig& cfg) {
  ParameterPoint xp = x, xm = x;
  xp[direction] += h;
  xm[direction] -= h;
  const auto plus = spectral::eigensystem(model, xp, cfg);
  const auto minus = spectral::eigensystem(model, xm, cfg);
  const double sign_plus =
      stencil_alignment((center.adjoint() * plus.states.col(level))(0), h, direction);
  const double sign_minus =
      stencil_alignment((center.adjoint() * minus.states.col(level))(0), h, direction);
  return (sign_plus * plus.states.col(level) - sign_minus * minus.states.col(level)) / (2.0 * h);
}

}  // namespace detail

// Central differences at steps h and h/2 combined by one Richardson pass,
// leaving an O(h^4) truncation error on <n|d_i n>.
inline ConnectionResult berry_connection(const FastModel& model, const ParameterPoint& x,
                                         int level, const NumericConfig& cfg = {}) {
  const auto center = spectral::eigensystem(model, x, cfg);
  spectral::check_level_gap(center, level, cfg);
  const VectorC n0 = center.states.col(level);
  const int d = model.parameter_dim();

  ConnectionResult out;
  out.connection = VectorR::Zero(d);
  double max_real = 0.0;
  for (int i = 0; i < d; ++i) {
    const VectorC dh = detail::stencil_derivative(model, x, n0, level, i, cfg.fd_step, cfg);
    const VectorC dh2 = detail::stencil_derivative(model, x, n0, level, i, 0.5 * cfg.fd_step, cfg);
    const Complex ch = (n0.adjoint() * dh)(0);
    const Complex ch2 = (n0.adjoint() * dh2)(0);
    const Complex c = (4.0 * ch2 - ch) / 3.0;
    out.connection[i] = -cfg.hbar * c.imag();
    max_real = std::max(max_real, std::abs(c.real()));
  }
  out.gauge_residual = cfg.hbar * max_real;

  const double scale = std::max({1.0, cfg.hbar, out.connection.cwiseAbs().maxCoeff()});
  if (out.gauge_residual > cfg.gauge_imag_tol * scale) {
    throw GaugeError("berry_connection: residual Re<n|dn> = " +
                     std::to_string(out.gauge_residual) + " exceeds " +
                     std::to_string(cfg.gauge_imag_tol * scale) +
                     "; phase convention is not smooth here");
  }
  return out;
}

// Trapezoid line integral of the connection along a polyline. The caller
// closes the loop by repeating the first vertex, or passes an open path.
inline double connection_line_integral(const FastModel& model,
                                       const std::vector<ParameterPoint>& vertices, int level,
                                       const NumericConfig& cfg = {}) {
  require(vertices.size() >= 2, "connection_line_integral: need at least two vertices");
  std::vector<VectorR> a(vertices.size());
  for (size_t k = 0; k < vertices.size(); ++k) {
    a[k] = berry_connection(model, vertices[k], level, cfg).connection;
  }
  double total = 0.0;
  for (size_t k = 0; k + 1 < vertices.size(); ++k) {
    total += 0.5 * (a[k] + a[k + 1]).dot(vertices[k + 1] - vertices[k]);
  }
  return total;
}

// T_ij = sum_{m != n} conj(<m|d_i n>) <m|d_j n>. Hermitian and positive
// semidefinite by construction; its real part is the metric, its imaginary
// part carries the curvature.
inline MatrixC quantum_geometric_tensor(const spectral::CouplingMatrix& coup) {
  return coup.entries.conjugate() * coup.entries.transpose();
}

inline MatrixR metric_from_qgt(const MatrixC& qgt) { return qgt.real(); }

inline MatrixR curvature_from_qgt(const MatrixC& qgt, double hbar) {
  return -2.0 * hbar * qgt.imag();
}

// I_ij = 2 hbar^2 Re sum_m conj(<m|d_i n>) <m|d_j n> / (E_m - E_n).
// Symmetric up to roundoff; asymmetry beyond tolerance is an error, the
// exact symmetric part is returned.
inline MatrixR induced_inertia(const spectral::CouplingMatrix& coup,
                               const NumericConfig& cfg = {}) {
  const int d = coup.parameter_dim();
  const int n = coup.spectral.dim();
  MatrixR inertia = MatrixR::Zero(d, d);
  for (int m = 0; m < n; ++m) {
    if (m == coup.level) continue;
    const double de = coup.spectral.energies[m] - coup.spectral.energies[coup.level];
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        inertia(i, j) += 2.0 * cfg.hbar * cfg.hbar *
                         (std::conj(coup.entries(i, m)) * coup.entries(j, m)).real() / de;
      }
    }
  }
  const double scale = std::max(1.0, inertia.cwiseAbs().maxCoeff());
  const double asym = (inertia - inertia.transpose()).cwiseAbs().maxCoeff();
  if (asym > cfg.inertia_sym_tol * scale) {
    throw NumericError("induced_inertia: asymmetry " + std::to_string(asym) +
                       " exceeds tolerance; couplings are inconsistent");
  }
  return 0.5 * (inertia + inertia.transpose());
}

struct GeometricTensors {
  ParameterPoint point;
  int level = 0;
  double energy = 0.0;       // level energy, the leading-order potential
  double min_gap = 0.0;      // distance to the nearest other level
  VectorR connection;
  double gauge_residual = 0.0;
  MatrixC qgt;
  MatrixR metric;
  MatrixR curvature;
  MatrixR induced_inertia;
};

inline double min_level_gap(const spectral::SpectralData& data, int level) {
  double gap = std::numeric_limits<double>::infinity();
  for (int m = 0; m < data.dim(); ++m) {
    if (m == level) continue;
    gap = std::min(gap, std::abs(data.energies[m] - data.energies[level]));
  }
  return gap;
}

// The full second-order package at one point.
inline GeometricTensors geometry_at(const FastModel& model, const ParameterPoint& x, int level,
                                    const NumericConfig& cfg = {}) {
  const auto data = spectral::eigensystem(model, x, cfg);
  const auto coup = spectral::couplings_from_spectral(model, data, level, cfg);
  GeometricTensors out;
  out.point = x;
  out.level = level;
  out.energy = data.energies[level];
  out.min_gap = min_level_gap(data, level);
  const auto conn = berry_connection(model, x, level, cfg);
  out.connection = conn.connection;
  out.gauge_residual = conn.gauge_residual;
  out.qgt = quantum_geometric_tensor(coup);
  out.metric = metric_from_qgt(out.qgt);
  out.curvature = curvature_from_qgt(out.qgt, cfg.hbar);
  out.induced_inertia = induced_inertia(coup, cfg);
  return out;
}

// Slow-coordinate field assembled from the geometry and a primitive inertia:
// total inertia, its inverse (mobility), and the induced scalar potential
// phi = (hbar^2 / 2) Q_ij g_ij. phi_primitive is the same contraction with
// the bare mobility, the first-order value the induced one corrects.
struct EffectiveField {
  GeometricTensors geo;
  MatrixR total_inertia;
  MatrixR mobility;
  double scalar_potential = 0.0;
  double phi_primitive = 0.0;
};

inline MatrixR checked_inverse(const MatrixR& m, const NumericConfig& cfg,
                               const std::string& what) {
  const int d = static_cast<int>(m.rows());
  const MatrixR inv = m.partialPivLu().solve(MatrixR::Identity(d, d));
  const double residual = (inv * m - MatrixR::Identity(d, d)).cwiseAbs().maxCoeff();
  if (!std::isfinite(residual) || residual > cfg.inverse_residual_tol) {
    throw NumericError(what + ": inverse residual " + std::to_string(residual) + " exceeds " +
                       std::to_string(cfg.inverse_residual_tol) + "; matrix is near singular");
  }
  return inv;
}

inline EffectiveField effective_field(const FastModel& model, const ParameterPoint& x, int level,
                                      const MatrixR& primitive_inertia,
                                      const NumericConfig& cfg = {}) {
  const int d = model.parameter_dim();
  require(primitive_inertia.rows() == d && primitive_inertia.cols() == d,
          "effective_field: primitive inertia must be " + std::to_string(d) + "x" +
              std::to_string(d));
  EffectiveField out;
  out.geo = geometry_at(model, x, level, cfg);
  out.total_inertia = primitive_inertia + out.geo.induced_inertia;
  out.mobility = checked_inverse(out.total_inertia, cfg, "effective_field: total inertia");
  const MatrixR bare_mobility =
      checked_inverse(primitive_inertia, cfg, "effective_field: primitive inertia");
  out.scalar_potential = 0.5 * cfg.hbar * cfg.hbar * (out.mobility * out.geo.metric).trace();
  out.phi_primitive = 0.5 * cfg.hbar * cfg.hbar * (bare_mobility * out.geo.metric).trace();
  return out;
}

inline MatrixR scalar_inertia(double mass, int d) {
  return mass * MatrixR::Identity(d, d);
}

// Grid sweep. Points that fail (degeneracy, gauge trouble) are recorded and
// skipped; the sweep itself only aborts on systematic errors such as a
// non-Hermitian model.
struct GridFailure {
  size_t index = 0;
  ParameterPoint point;
  std::string message;
};

struct GeometryGridResult {
  std::vector<ParameterPoint> points;
  std::vector<std::optional<GeometricTensors>> tensors;
  std::vector<GridFailure> failures;
};

inline GeometryGridResult geometry_grid(const FastModel& model,
                                        const std::vector<ParameterPoint>& points, int level,
                                        const NumericConfig& cfg = {}, int threads = 1) {
  GeometryGridResult result;
  result.points = points;
  result.tensors.assign(points.size(), std::nullopt);
  std::vector<std::optional<GridFailure>> failures(points.size());
  grid::parallel_for(static_cast<int>(points.size()), threads, [&](int i) {
    try {
      result.tensors[i] = geometry_at(model, points[i], level, cfg);
    } catch (const ValidationError&) {
      throw;  // systematic, not a property of this point
    } catch (const Error& e) {
      failures[i] = GridFailure{static_cast<size_t>(i), points[i], e.what()};
    }
  });
  for (auto& f : failures) {
    if (f) result.failures.push_back(std::move(*f));
  }
  return result;
}

}  // namespace adiabat::geometry
