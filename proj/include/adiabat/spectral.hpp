#pragma once

// Spectral layer: eigendecomposition with a deterministic phase convention,
// parallel transport along discretized paths, and first-order derivative
// couplings <m|d_i n> between nondegenerate levels.
//
// Conventions fixed here and relied on everywhere downstream:
//   * energies sorted ascending, levels indexed from 0;
//   * each eigenvector is rephased so its largest-modulus component is real
//     and positive (ties broken toward the lowest index);
//   * couplings come from the sum-over-states identity
//     <m|d_i n> = <m|dH_i|n> / (E_n - E_m), never from differencing
//     eigenvectors (finite differences stay on the oracle side of tests);
//   * any level gap at or below gap_tol_rel * spectral range is an error,
//     never silently regularized.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "adiabat/common.hpp"
#include "adiabat/model.hpp"

namespace adiabat::spectral {

struct SpectralData {
  ParameterPoint point;
  VectorR energies;   // ascending
  MatrixC states;     // orthonormal columns, one per level
  std::string gauge_tag = "deterministic";

  int dim() const { return static_cast<int>(energies.size()); }
  double spectral_range() const { return energies[energies.size() - 1] - energies[0]; }
};

// Residual norms tests and the validate verb check against the type
// contract: orthonormality in max norm, reconstruction in relative
// Frobenius norm.
struct SpectralResiduals {
  double orthonormality;
  double reconstruction;
};

inline SpectralResiduals spectral_residuals(const SpectralData& data, const MatrixC& h) {
  const int n = data.dim();
  const MatrixC gram = data.states.adjoint() * data.states;
  const double ortho = (gram - MatrixC::Identity(n, n)).cwiseAbs().maxCoeff();
  const MatrixC rebuilt =
      data.states * data.energies.asDiagonal().toDenseMatrix().cast<Complex>() *
      data.states.adjoint();
  const double hnorm = h.norm();
  const double recon = hnorm == 0.0 ? (rebuilt - h).norm() : (rebuilt - h).norm() / hnorm;
  return {ortho, recon};
}

namespace detail {

// Largest-modulus component real and positive. Components within the tie
// window of the maximum count as equal and the lowest index wins, so exact
// modulus ties (common in structured models) cannot flip the pivot under
// solver noise.
inline void fix_phase(Eigen::Ref<VectorC> v, double tie_rel) {
  double max_mag = 0.0;
  for (int i = 0; i < v.size(); ++i) max_mag = std::max(max_mag, std::abs(v[i]));
  int pivot_index = 0;
  for (int i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) >= (1.0 - tie_rel) * max_mag) {
      pivot_index = i;
      break;
    }
  }
  const Complex pivot = v[pivot_index];
  v *= std::conj(pivot) / std::abs(pivot);
  // Pivot entry is now real up to roundoff; drop the residue so repeated
  // fixes are idempotent.
  v[pivot_index] = Complex(std::abs(v[pivot_index]), 0.0);
}

}  // namespace detail

inline SpectralData eigensystem(const MatrixC& h, const ParameterPoint& point,
                                const NumericConfig& cfg = {}) {
  require(h.rows() == h.cols(), "eigensystem: matrix is " + std::to_string(h.rows()) + "x" +
                                    std::to_string(h.cols()) + ", expected square");
  const double herm = hermiticity_deviation(h);
  if (herm > cfg.hermiticity_tol) {
    throw ValidationError("eigensystem: input is not Hermitian, relative max-norm deviation " +
                          std::to_string(herm) + " exceeds " + std::to_string(cfg.hermiticity_tol));
  }

  Eigen::SelfAdjointEigenSolver<MatrixC> solver(h);
  if (solver.info() != Eigen::Success) {
    throw NumericError("eigensystem: eigensolver failed to converge");
  }

  SpectralData data;
  data.point = point;
  data.energies = solver.eigenvalues();
  data.states = solver.eigenvectors();
  for (int k = 0; k < data.dim(); ++k) {
    detail::fix_phase(data.states.col(k), cfg.pivot_tie_rel);
  }
  return data;
}

inline SpectralData eigensystem(const FastModel& model, const ParameterPoint& point,
                                const NumericConfig& cfg = {}) {
  return eigensystem(model.hamiltonian(point), point, cfg);
}

// Rephases each level along the path so consecutive overlaps are real and
// positive. An overlap magnitude at or below transport_overlap_min means the
// path under-resolves the state's rotation (or strays near a crossing).
inline std::vector<SpectralData> parallel_transport_gauge(std::vector<SpectralData> path,
                                                          const NumericConfig& cfg = {}) {
  if (path.empty()) return path;
  const int n = path.front().dim();
  for (size_t k = 1; k < path.size(); ++k) {
    require(path[k].dim() == n, "parallel_transport_gauge: dimension changes along the path");
    for (int level = 0; level < n; ++level) {
      const Complex overlap =
          (path[k - 1].states.col(level).adjoint() * path[k].states.col(level))(0);
      const double mag = std::abs(overlap);
      if (mag <= cfg.transport_overlap_min) {
        throw NumericError("parallel_transport_gauge: step " + std::to_string(k) + ", level " +
                           std::to_string(level) + ": |overlap| = " + std::to_string(mag) +
                           "; path too coarse or possible crossing");
      }
      path[k].states.col(level) *= std::conj(overlap) / mag;
    }
    path[k].gauge_tag = "transported";
  }
  path.front().gauge_tag = "transported";
  return path;
}

// First-order couplings for one level. entries(i, m) = <m|d_i n>; the
// diagonal column m = n is exactly zero (the diagonal piece of the
// derivative is gauge, handled by the connection).
struct CouplingMatrix {
  SpectralData spectral;
  int level = 0;
  MatrixC entries;  // D x N

  int parameter_dim() const { return static_cast<int>(entries.rows()); }
};

inline void check_level_gap(const SpectralData& data, int level, const NumericConfig& cfg) {
  const int n = data.dim();
  require(level >= 0 && level < n,
          "level " + std::to_string(level) + " out of range [0, " + std::to_string(n) + ")");
  if (n == 1) return;
  const double tol = cfg.gap_tol_rel * data.spectral_range();
  int worst = -1;
  double worst_gap = 0.0;
  for (int m = 0; m < n; ++m) {
    if (m == level) continue;
    const double gap = std::abs(data.energies[m] - data.energies[level]);
    if (worst < 0 || gap < worst_gap) {
      worst = m;
      worst_gap = gap;
    }
  }
  if (worst_gap <= tol) {
    throw DegeneracyError(level, worst, worst_gap,
                          "level " + std::to_string(level) + " is degenerate with level " +
                              std::to_string(worst) + ": gap " + std::to_string(worst_gap) +
                              " <= tolerance " + std::to_string(tol));
  }
}

// Couplings from an existing decomposition. Exposed separately so gauge
// tests can rephase the states before building entries.
inline CouplingMatrix couplings_from_spectral(const FastModel& model, const SpectralData& data,
                                              int level, const NumericConfig& cfg = {}) {
  require(data.dim() == model.dim(), "couplings: spectral data dimension " +
                                         std::to_string(data.dim()) + " does not match model " +
                                         std::to_string(model.dim()));
  check_level_gap(data, level, cfg);

  const int n = data.dim();
  const int d = model.parameter_dim();
  CouplingMatrix result;
  result.spectral = data;
  result.level = level;
  result.entries = MatrixC::Zero(d, n);
  for (int i = 0; i < d; ++i) {
    const MatrixC grad = model.gradient(data.point, i);
    const VectorC grad_n = grad * data.states.col(level);
    for (int m = 0; m < n; ++m) {
      if (m == level) continue;
      const Complex num = (data.states.col(m).adjoint() * grad_n)(0);
      result.entries(i, m) = num / (data.energies[level] - data.energies[m]);
    }
  }
  return result;
}

inline CouplingMatrix derivative_couplings(const FastModel& model, const ParameterPoint& point,
                                           int level, const NumericConfig& cfg = {}) {
  return couplings_from_spectral(model, eigensystem(model, point, cfg), level, cfg);
}

}  // namespace adiabat::spectral
