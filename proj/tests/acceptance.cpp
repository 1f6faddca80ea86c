// Acceptance gate: one scenario per release criterion, each printing a
// single PASS/FAIL line with the measured numbers. Exits nonzero if any
// scenario fails. Scenarios use only the public headers.

#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "adiabat/adiabat.hpp"

using namespace adiabat;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& label, const std::string& detail) {
  std::printf("[%2d] %s  %s (%s)\n", id, ok ? "PASS" : "FAIL", label.c_str(), detail.c_str());
  if (!ok) ++failures;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

// 1. Closed-form induced inertia of a spin dragged through a rotating field:
//    I = hbar^2 m kappa^2 / g_b for every level m, spin, and coupling.
void criterion_inertia_closed_form() {
  const NumericConfig cfg;
  double worst = 0.0;
  for (int twice_spin : {1, 2, 3}) {
    for (auto [g_b, kappa] : std::vector<std::pair<double, double>>{
             {1.0, 1.0}, {2.0, 0.7}, {0.5, 1.3}}) {
      models::SpinFieldParams sp;
      sp.twice_spin = twice_spin;
      sp.g_b = g_b;
      sp.kappa0 = kappa;
      const models::SpinFieldModel model(models::SpinProfile::planar, sp);
      ParameterPoint x(1);
      x << 0.37;
      const double scale = kappa * kappa / g_b;  // hbar = 1
      for (int level = 0; level < model.dim(); ++level) {
        const double m = 0.5 * twice_spin - level;
        const double expected = m * scale;
        const double got = geometry::geometry_at(model, x, level, cfg).induced_inertia(0, 0);
        worst = std::max(worst, std::abs(got - expected) / scale);
      }
    }
  }
  report(1, worst < 1e-8, "induced inertia matches hbar^2 m kappa^2 / g_b across spins and levels",
         "worst rel dev " + fmt(worst));
}

// 2. Dragging a spin-1 at constant speed shifts its mean energy by
//    (1/2) I V^2: the measured coefficient converges to I and the shift
//    scales as V^2.
void criterion_velocity_convergence() {
  NumericConfig cfg;
  models::SpinFieldParams sp;
  sp.twice_spin = 2;
  sp.g_b = 4.0;
  sp.kappa0 = 1.0;
  const models::SpinFieldModel model(models::SpinProfile::planar, sp);
  ParameterPoint x0(1);
  x0 << 0.0;
  VectorR direction(1);
  direction << 1.0;
  std::vector<double> speeds;
  for (int k = 0; k < 8; ++k) speeds.push_back(0.05 * std::pow(10.0, k / 7.0));
  const auto sweep = dynamics::velocity_sweep(model, 0, x0, direction, speeds, 100.0, 0.01, cfg);

  const double ratio = sweep.rows.front().inertia_estimate / sweep.reference_inertia;
  std::vector<double> vs, shifts;
  for (const auto& row : sweep.rows) {
    vs.push_back(row.speed);
    shifts.push_back(row.mean_shift);
  }
  const auto fit = analysis::fit_power_law(vs, shifts);
  const bool ok = std::abs(ratio - 1.0) < 0.01 && std::abs(fit.exponent - 2.0) < 0.05;
  report(2, ok, "dragged-spin energy shift recovers the induced inertia with V^2 scaling",
         "ratio " + fmt(ratio) + ", slope " + fmt(fit.exponent) + ", reference " +
             fmt(sweep.reference_inertia));
}

// 3. Approaching a conical intersection, sqrt(tr g), the fixed-mobility
//    scalar potential, and the induced inertia diverge as 1/r, 1/r^2, 1/r^3.
void criterion_crossing_exponents() {
  const NumericConfig cfg;
  const auto model = models::TwoLevelCrossingModel::radial_plane();
  std::vector<double> radii, root_metric, phi_fixed, inertia_norm;
  for (int k = 0; k < 10; ++k) {
    const double r = 0.04 * std::pow(12.5, k / 9.0);
    ParameterPoint x(2);
    x << r, 0.0;
    const auto t = geometry::geometry_at(model, x, 0, cfg);
    radii.push_back(r);
    root_metric.push_back(std::sqrt(t.metric.trace()));
    phi_fixed.push_back(0.5 * t.metric.trace());  // unit primitive mobility
    inertia_norm.push_back(t.induced_inertia.norm());
  }
  const double e1 = analysis::fit_power_law(radii, root_metric).exponent;
  const double e2 = analysis::fit_power_law(radii, phi_fixed).exponent;
  const double e3 = analysis::fit_power_law(radii, inertia_norm).exponent;
  const bool ok = std::abs(e1 + 1.0) < 0.05 && std::abs(e2 + 2.0) < 0.05 &&
                  std::abs(e3 + 3.0) < 0.05;
  report(3, ok, "crossing divergences carry exponents -1, -2, -3",
         "sqrt(tr g) " + fmt(e1) + ", phi " + fmt(e2) + ", |I| " + fmt(e3));
}

// 4. A well translated with the slow coordinate drags its particle along:
//    the induced inertia equals the particle mass and the energy-weighted
//    sum rule equals one, with errors falling at least 3x per grid halving.
void criterion_translation_sum_rule() {
  const NumericConfig cfg;
  const auto measure = [&](int points, double spacing) {
    models::MovingWellParams wp;
    wp.points = points;
    wp.spacing = spacing;
    wp.stencil = 5;
    const models::MovingWellModel model(wp);
    ParameterPoint x(1);
    x << 0.0;
    const double inertia = geometry::geometry_at(model, x, 0, cfg).induced_inertia(0, 0);
    const auto data = spectral::eigensystem(model, x, cfg);
    const double sum = analysis::trk_sum(data, model.position_operator(), wp.mass, 0);
    return std::pair<double, double>{std::abs(inertia / wp.mass - 1.0), std::abs(sum - 1.0)};
  };
  const auto coarse = measure(129, 0.25);
  const auto fine = measure(257, 0.125);
  const bool ok = coarse.first < 0.01 && coarse.second < 0.01 &&
                  coarse.first / fine.first >= 3.0 && coarse.second / fine.second >= 3.0;
  report(4, ok, "translated well gives I = m and sum rule 1 with 3x grid convergence",
         "|I/m-1| " + fmt(coarse.first) + " -> " + fmt(fine.first) + ", |trk-1| " +
             fmt(coarse.second) + " -> " + fmt(fine.second));
}

// 5. Filled deformed oscillator shells crank at the rigid-body value; the
//    spherical shape has no cranking inertia at all.
void criterion_rigid_rotation() {
  const NumericConfig cfg;
  double worst = 0.0;
  bool ok = true;
  std::string detail;
  for (int n_fill : {2, 3}) {
    const auto shape = models::self_consistent_frequencies(1.0, n_fill, 1.0, n_fill - 0.5);
    models::CrankedOscillatorParams cp;
    cp.omega_x = shape.omega_x;
    cp.omega_z = shape.omega_z;
    cp.n_max_x = 8;
    cp.n_max_z = 8;
    const models::CrankedOscillatorModel model(cp);
    const double ratio = models::inglis_inertia(model, shape.occupied, 0.0, cfg) /
                         models::rigid_body_inertia(shape);
    worst = std::max(worst, std::abs(ratio - 1.0));
    detail += "N=" + std::to_string(n_fill) + " ratio " + fmt(ratio) + ", ";
  }
  ok = worst < 0.02;

  models::CrankedOscillatorParams sphere;
  sphere.omega_x = 1.0;
  sphere.omega_z = 1.0;
  sphere.n_max_x = 8;
  sphere.n_max_z = 8;
  const models::CrankedOscillatorModel spherical(sphere);
  const double still =
      models::inglis_inertia(spherical, models::lowest_orbitals(1.0, 1.0, 1), 0.0, cfg);
  ok = ok && std::abs(still) <= 1e-10;
  report(5, ok, "cranked shells rotate rigidly and the spherical shape does not rotate",
         detail + "spherical " + fmt(still));
}

// 6. Rephasing eigenvectors changes nothing, and only the sum of primitive
//    and induced inertia enters the effective fields.
void criterion_convention_independence() {
  const NumericConfig cfg;
  models::SpinFieldParams sp;
  sp.twice_spin = 2;
  sp.g_b = 2.0;
  const models::SpinFieldModel model(models::SpinProfile::sphere, sp);
  ParameterPoint x(2);
  x << 0.9, 0.4;

  auto data = spectral::eigensystem(model, x, cfg);
  const auto coup = spectral::couplings_from_spectral(model, data, 0, cfg);
  const MatrixC qgt = geometry::quantum_geometric_tensor(coup);
  const MatrixR inertia = geometry::induced_inertia(coup, cfg);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  for (int m = 0; m < data.dim(); ++m)
    data.states.col(m) *= std::exp(Complex(0.0, angle(rng)));
  const auto coup2 = spectral::couplings_from_spectral(model, data, 0, cfg);
  const MatrixC qgt2 = geometry::quantum_geometric_tensor(coup2);
  const MatrixR inertia2 = geometry::induced_inertia(coup2, cfg);
  const double gauge_dev =
      std::max((qgt - qgt2).cwiseAbs().maxCoeff() / qgt.cwiseAbs().maxCoeff(),
               (inertia - inertia2).cwiseAbs().maxCoeff() / inertia.cwiseAbs().maxCoeff());

  // Shuffle 0.3 units of inertia from the induced to the primitive ledger;
  // the total and everything downstream of it must not move.
  const auto field1 = geometry::effective_field(model, x, 0, geometry::scalar_inertia(5.0, 2), cfg);
  geometry::EffectiveField field2;
  field2.geo = field1.geo;
  field2.geo.induced_inertia -= 0.3 * MatrixR::Identity(2, 2);
  field2.total_inertia = geometry::scalar_inertia(5.3, 2) + field2.geo.induced_inertia;
  field2.mobility = geometry::checked_inverse(field2.total_inertia, cfg, "shuffle");
  const double phi2 = 0.5 * cfg.hbar * cfg.hbar * (field2.mobility * field2.geo.metric).trace();
  const double shuffle_dev =
      std::max((field1.total_inertia - field2.total_inertia).cwiseAbs().maxCoeff(),
               std::abs(field1.scalar_potential - phi2));

  const bool ok = gauge_dev < 1e-12 && shuffle_dev < 1e-10;
  report(6, ok, "tensors ignore eigenvector phases and only total inertia matters",
         "rephase dev " + fmt(gauge_dev) + ", shuffle dev " + fmt(shuffle_dev));
}

// 7. Ground levels acquire positive-semidefinite induced inertia; the top
//    level of a spin is lighter along the drag direction, not heavier.
void criterion_sign_structure() {
  const NumericConfig cfg;
  double min_rel_eig = 0.0;
  for (int seed = 1; seed <= 100; ++seed) {
    models::RandomHermitianParams rp;
    rp.dim = 6;
    rp.parameter_dim = 2;
    rp.seed = static_cast<std::uint64_t>(seed);
    const models::RandomHermitianModel model(rp);
    ParameterPoint x(2);
    x << 0.1, -0.2;
    const MatrixR inertia = geometry::geometry_at(model, x, 0, cfg).induced_inertia;
    Eigen::SelfAdjointEigenSolver<MatrixR> eig(inertia);
    min_rel_eig = std::min(min_rel_eig, eig.eigenvalues().minCoeff() / inertia.trace());
  }

  models::SpinFieldParams sp;
  sp.twice_spin = 1;
  sp.g_b = 2.0;
  const models::SpinFieldModel spin(models::SpinProfile::planar, sp);
  ParameterPoint x(1);
  x << 0.1;
  const double top = geometry::geometry_at(spin, x, 1, cfg).induced_inertia(0, 0);

  const bool ok = min_rel_eig >= -1e-12 && top < 0.0;
  report(7, ok, "ground-level inertia is positive semidefinite; the top spin level is lighter",
         "min eig/trace " + fmt(min_rel_eig) + ", top-level inertia " + fmt(top));
}

// 8. Sweeping an avoided crossing leaks exponentially in gap^2 / speed and
//    matches the closed-form crossing probability.
void criterion_exponential_leakage() {
  const NumericConfig cfg;
  const double slope = 1.0;
  const double x_max = 8.0;
  const std::vector<double> deltas{0.3, 0.35, 0.4, 0.45};
  const std::vector<double> speeds{0.8, 1.0, 1.25};
  double worst_corr = -1.0, worst_rel = 0.0;
  for (double v : speeds) {
    std::vector<double> d2, logp;
    for (double delta : deltas) {
      const auto model = models::TwoLevelCrossingModel::linear_sweep(delta, slope);
      ParameterPoint start(1);
      start << -x_max;
      ParameterPoint vel(1);
      vel << v;
      const auto leak =
          dynamics::leakage_run(model, dynamics::linear_path(start, vel), 0, 2.0 * x_max / v,
                                0.005, cfg);
      const double predicted = std::exp(-M_PI * delta * delta / (slope * v));
      worst_rel = std::max(worst_rel, std::abs(leak.final_leakage / predicted - 1.0));
      d2.push_back(delta * delta);
      logp.push_back(std::log(leak.final_leakage));
    }
    double mx = 0, my = 0;
    for (size_t i = 0; i < d2.size(); ++i) {
      mx += d2[i] / d2.size();
      my += logp[i] / d2.size();
    }
    double sxy = 0, sxx = 0, syy = 0;
    for (size_t i = 0; i < d2.size(); ++i) {
      sxy += (d2[i] - mx) * (logp[i] - my);
      sxx += (d2[i] - mx) * (d2[i] - mx);
      syy += (logp[i] - my) * (logp[i] - my);
    }
    worst_corr = std::max(worst_corr, sxy / std::sqrt(sxx * syy));
  }
  const bool ok = worst_corr < -0.999 && worst_rel < 0.10;
  char corr[32];
  std::snprintf(corr, sizeof(corr), "%.8f", worst_corr);
  report(8, ok, "crossing leakage is exponential in gap^2/speed and matches the closed form",
         "worst corr " + std::string(corr) + ", worst rel dev " + fmt(worst_rel));
}

// 9. Around closed loops the three induced actions scale as T, V^2 T^2,
//    and V^2 T.
void criterion_action_orders() {
  const NumericConfig cfg;
  models::SpinFieldParams sp;
  sp.twice_spin = 1;
  sp.g_b = 2.0;
  sp.tilt_c = 0.5;
  const models::SpinFieldModel model(models::SpinProfile::tilt, sp);
  ParameterPoint center(2);
  center << 0.3, 0.2;
  const fields::ExactFieldProvider provider(model, 0, geometry::scalar_inertia(30.0, 2), cfg);

  std::vector<double> vs, ts, scalar, berry, inertial;
  for (double period : {4.0, 6.0, 9.0}) {
    for (double speed : {0.02, 0.03, 0.045}) {
      const auto a = dynamics::loop_actions(provider, center, speed, period);
      vs.push_back(speed);
      ts.push_back(period);
      scalar.push_back(std::abs(a.scalar_action));
      berry.push_back(std::abs(a.berry_action));
      inertial.push_back(std::abs(a.inertial_action));
    }
  }
  const auto fs = analysis::fit_two_powers(vs, ts, scalar);
  const auto fb = analysis::fit_two_powers(vs, ts, berry);
  const auto fi = analysis::fit_two_powers(vs, ts, inertial);
  const bool ok = std::abs(fs.exponent_a) < 0.05 && std::abs(fs.exponent_b - 1.0) < 0.05 &&
                  std::abs(fb.exponent_a - 2.0) < 0.05 && std::abs(fb.exponent_b - 2.0) < 0.05 &&
                  std::abs(fi.exponent_a - 2.0) < 0.05 && std::abs(fi.exponent_b - 1.0) < 0.05;
  report(9, ok, "loop actions scale as T, V^2 T^2, and V^2 T",
         "scalar (" + fmt(fs.exponent_a) + "," + fmt(fs.exponent_b) + "), berry (" +
             fmt(fb.exponent_a) + "," + fmt(fb.exponent_b) + "), inertial (" +
             fmt(fi.exponent_a) + "," + fmt(fi.exponent_b) + ")");
}

// 10. The effective flow tracks the exact coupled dynamics better as the
//     primitive mass grows: at fixed kinetic energy the mass-weighted
//     velocity deviation halves per mass quadrupling.
void criterion_effective_tracking() {
  const NumericConfig cfg;
  models::SpinFieldParams sp;
  sp.twice_spin = 1;
  sp.g_b = 3.0;
  sp.kappa0 = 1.0;
  sp.ripple_amp = 0.15;
  sp.ripple_q = 1.1;
  const models::SpinFieldModel model(models::SpinProfile::ripple, sp);

  const auto deviation = [&](double mass) {
    const double v0 = 0.3 * std::sqrt(20.0 / mass);
    ParameterPoint x0(1);
    x0 << 0.0;
    VectorR vel(1);
    vel << v0;
    const MatrixR primitive = geometry::scalar_inertia(mass, 1);
    const fields::ExactFieldProvider provider(model, 0, primitive, cfg);
    const auto p0 = dynamics::momentum_for_velocity(provider, x0, vel);
    const auto eff = dynamics::effective_trajectory(provider, x0, p0, 16.0, 4e-3, 4, cfg);
    const auto psi0 = dynamics::dressed_state(model, x0, vel, 0, cfg);
    const auto coup =
        dynamics::coupled_reference(model, primitive, x0, vel, psi0, 16.0, 4e-3, 0, 4, cfg);
    double dev = 0.0;
    const size_t n = std::min(eff.samples.size(), coup.samples.size());
    for (size_t k = 0; k < n; ++k) {
      dev = std::max(dev,
                     (eff.samples[k].velocity - coup.samples[k].velocity).cwiseAbs().maxCoeff());
    }
    return mass * dev;
  };

  const double m10 = deviation(10.0);
  const double m20 = deviation(20.0);
  const double m40 = deviation(40.0);
  const double m80 = deviation(80.0);
  const double r1 = m40 / m10;
  const double r2 = m80 / m20;
  const bool ok = r1 > 0.375 && r1 < 0.625 && r2 > 0.375 && r2 < 0.625;
  report(10, ok, "effective flow error halves per quadrupling of the primitive mass",
         "ratios " + fmt(r1) + ", " + fmt(r2) + " [mu " + fmt(m10) + " " + fmt(m20) + " " +
             fmt(m40) + " " + fmt(m80) + "]");
}

}  // namespace

int main() {
  criterion_inertia_closed_form();
  criterion_velocity_convergence();
  criterion_crossing_exponents();
  criterion_translation_sum_rule();
  criterion_rigid_rotation();
  criterion_convention_independence();
  criterion_sign_structure();
  criterion_exponential_leakage();
  criterion_action_orders();
  criterion_effective_tracking();
  if (failures == 0) {
    std::printf("all acceptance scenarios passed\n");
    return 0;
  }
  std::printf("%d acceptance scenario(s) failed\n", failures);
  return 1;
}
