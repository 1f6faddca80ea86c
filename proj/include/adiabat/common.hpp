#pragma once

// Shared scalar/matrix aliases, the numeric configuration block, and the
// error taxonomy used across the library.
//
// Error classes map onto the CLI exit contract: ValidationError covers bad
// inputs and violated preconditions (exit 2), NumericError and its children
// cover failures detected while computing (exit 3), IoError covers the
// filesystem (exit 4).

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace adiabat {

using Real = double;
using Complex = std::complex<double>;

using VectorR = Eigen::VectorXd;
using VectorC = Eigen::VectorXcd;
using MatrixR = Eigen::MatrixXd;
using MatrixC = Eigen::MatrixXcd;

// A point in the slow-parameter space. Dimension D is the model's
// parameter_dim(); ops validate it on entry.
using ParameterPoint = Eigen::VectorXd;

struct NumericConfig {
  // Action scale. Every operation reads hbar from here; models are
  // constructed with the same value.
  double hbar = 1.0;

  // Relative max-norm deviation tolerated before an input matrix is
  // rejected as non-Hermitian.
  double hermiticity_tol = 1e-12;

  // Degeneracy guard: a level whose smallest gap to any other level falls
  // at or below gap_tol_rel * (E_max - E_min) is rejected.
  double gap_tol_rel = 1e-8;

  // Base step for gauge-fixed eigenvector differences (the connection's
  // diagonal derivative). One Richardson pass over h and h/2 is applied.
  double fd_step = 1e-3;

  // Phase pivot selection: components within this relative window of the
  // largest modulus count as tied, and the lowest index wins. Keeps the
  // convention stable when moduli are equal up to solver noise.
  double pivot_tie_rel = 1e-6;

  // Allowed imaginary residue in the Berry connection relative to
  // max(1, hbar, |A|_inf); larger residues indicate a gauge inconsistency.
  double gauge_imag_tol = 1e-10;

  // Parallel transport rejects a step whose level overlap magnitude is at
  // or below this threshold.
  double transport_overlap_min = 0.5;

  // Symmetry checks on derived tensors (curvature antisymmetry, inertia
  // symmetry, inverse residual).
  double antisym_tol = 1e-12;
  double inertia_sym_tol = 1e-10;
  double inverse_residual_tol = 1e-10;

  // Quantum propagation: dt * spectral_range / hbar must stay below this.
  double dt_range_max = 0.1;

  // Allowed norm drift of a propagated state per 1e4 steps.
  double norm_drift_tol = 1e-10;

  // Dense per-step matrix exponentials are only sensible up to this size.
  int expm_dim_cap = 512;

  // Fraction of a driven run discarded before time-averaging.
  double transient_fraction = 0.2;
};

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad input, shape mismatch, or violated precondition.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& msg) : Error(msg) {}
};

// Failure detected during computation.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg) : Error(msg) {}
};

// Level gap at or below the guard. Carries the offending pair and gap.
class DegeneracyError : public NumericError {
 public:
  DegeneracyError(int level, int partner, double gap_value, const std::string& msg)
      : NumericError(msg), level_a(level), level_b(partner), gap(gap_value) {}
  int level_a;
  int level_b;
  double gap;
};

// Gauge-fixed quantities failed a smoothness or residue check.
class GaugeError : public NumericError {
 public:
  explicit GaugeError(const std::string& msg) : NumericError(msg) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

// Relative max-norm Hermiticity deviation; 0 for the zero matrix.
inline double hermiticity_deviation(const MatrixC& h) {
  const double scale = h.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  return (h - h.adjoint()).cwiseAbs().maxCoeff() / scale;
}

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

}  // namespace adiabat
