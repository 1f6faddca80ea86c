#pragma once

// Fits and scalar diagnostics applied to sweep outputs: power laws on
// log-log data, the two-variable power fit used by the loop-action audit,
// the oscillator-strength sum for translated wells, and the adiabatic
// smallness ratio.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adiabat/common.hpp"
#include "adiabat/spectral.hpp"

namespace adiabat::analysis {

struct PowerFit {
  double exponent = 0.0;
  double log_prefactor = 0.0;
  double max_log_residual = 0.0;
};

// Least squares of log y against log x. Requires at least 8 strictly
// positive samples spanning at least one decade in x; anything less does
// not pin a slope worth reporting.
inline PowerFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size(), "fit_power_law: size mismatch");
  require(x.size() >= 8, "fit_power_law: need at least 8 samples, got " +
                             std::to_string(x.size()));
  double lo = x[0], hi = x[0];
  for (size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0.0 && y[i] > 0.0, "fit_power_law: samples must be positive");
    lo = std::min(lo, x[i]);
    hi = std::max(hi, x[i]);
  }
  require(hi >= 10.0 * lo, "fit_power_law: x must span at least a decade");

  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = std::log(x[i]);
    rhs[i] = std::log(y[i]);
  }
  const Eigen::Vector2d beta = design.colPivHouseholderQr().solve(rhs);

  PowerFit fit;
  fit.log_prefactor = beta[0];
  fit.exponent = beta[1];
  fit.max_log_residual = (design * beta - rhs).cwiseAbs().maxCoeff();
  return fit;
}

struct TwoPowerFit {
  double exponent_a = 0.0;
  double exponent_b = 0.0;
  double log_prefactor = 0.0;
  double max_log_residual = 0.0;
};

// y = c a^p b^q on log-log, for samples where both a and b vary. Each
// variable needs at least two distinct values or its exponent is free.
inline TwoPowerFit fit_two_powers(const std::vector<double>& a, const std::vector<double>& b,
                                  const std::vector<double>& y) {
  require(a.size() == b.size() && a.size() == y.size(), "fit_two_powers: size mismatch");
  require(a.size() >= 6, "fit_two_powers: need at least 6 samples");
  double a_lo = a[0], a_hi = a[0], b_lo = b[0], b_hi = b[0];
  for (size_t i = 0; i < a.size(); ++i) {
    require(a[i] > 0.0 && b[i] > 0.0 && y[i] > 0.0, "fit_two_powers: samples must be positive");
    a_lo = std::min(a_lo, a[i]);
    a_hi = std::max(a_hi, a[i]);
    b_lo = std::min(b_lo, b[i]);
    b_hi = std::max(b_hi, b[i]);
  }
  require(a_hi > a_lo && b_hi > b_lo, "fit_two_powers: both variables must vary");

  const int n = static_cast<int>(a.size());
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = std::log(a[i]);
    design(i, 2) = std::log(b[i]);
    rhs[i] = std::log(y[i]);
  }
  const Eigen::Vector3d beta = design.colPivHouseholderQr().solve(rhs);

  TwoPowerFit fit;
  fit.log_prefactor = beta[0];
  fit.exponent_a = beta[1];
  fit.exponent_b = beta[2];
  fit.max_log_residual = (design * beta - rhs).cwiseAbs().maxCoeff();
  return fit;
}

// Oscillator-strength sum for a level: (2 m / hbar^2) sum_m (E_m - E_n)
// |<m|x|n>|^2. Equals 1 for a continuum particle of mass m in any
// potential; grid kinetic stencils approach that as the spacing shrinks.
inline double trk_sum(const spectral::SpectralData& data, const MatrixC& position, double mass,
                      int level, double hbar = 1.0) {
  require(position.rows() == data.dim() && position.cols() == data.dim(),
          "trk_sum: position operator has the wrong shape");
  const VectorC xn = position * data.states.col(level);
  double sum = 0.0;
  for (int m = 0; m < data.dim(); ++m) {
    if (m == level) continue;
    const double element = std::norm((data.states.col(m).adjoint() * xn)(0));
    sum += (data.energies[m] - data.energies[level]) * element;
  }
  return 2.0 * mass / (hbar * hbar) * sum;
}

// Adiabatic smallness: max over levels of hbar |v . <m|dn>| / gap. Values
// well below one justify the expansion that produced the effective fields.
inline double smallness_ratio(const spectral::CouplingMatrix& coup, const VectorR& v,
                              double hbar = 1.0) {
  require(v.size() == coup.parameter_dim(), "smallness_ratio: velocity has the wrong dimension");
  double worst = 0.0;
  for (int m = 0; m < coup.spectral.dim(); ++m) {
    if (m == coup.level) continue;
    Complex amp(0.0, 0.0);
    for (int i = 0; i < v.size(); ++i) amp += v[i] * coup.entries(i, m);
    const double gap = std::abs(coup.spectral.energies[m] - coup.spectral.energies[coup.level]);
    worst = std::max(worst, hbar * std::abs(amp) / gap);
  }
  return worst;
}

}  // namespace adiabat::analysis
