#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <random>

#include "adiabat/models.hpp"
#include "adiabat/spectral.hpp"

using namespace adiabat;
using Catch::Matchers::WithinAbs;

namespace {

ParameterPoint point1(double x) {
  ParameterPoint p(1);
  p[0] = x;
  return p;
}

ParameterPoint point2(double a, double b) {
  ParameterPoint p(2);
  p[0] = a;
  p[1] = b;
  return p;
}

}  // namespace

TEST_CASE("eigensystem reproduces a closed-form two-level spectrum") {
  // H = d . sigma with d = (1, 2, 2) has eigenvalues -+ 3.
  MatrixC h(2, 2);
  h << Complex(2, 0), Complex(1, -2), Complex(1, 2), Complex(-2, 0);
  const auto data = spectral::eigensystem(h, point1(0.0));

  REQUIRE_THAT(data.energies[0], WithinAbs(-3.0, 1e-13));
  REQUIRE_THAT(data.energies[1], WithinAbs(3.0, 1e-13));

  const auto res = spectral::spectral_residuals(data, h);
  REQUIRE(res.orthonormality < 1e-12);
  REQUIRE(res.reconstruction < 1e-10);
}

TEST_CASE("eigensystem phase convention is deterministic and idempotent") {
  models::RandomHermitianParams rp;
  rp.dim = 7;
  rp.seed = 42;
  const models::RandomHermitianModel model(rp);
  const auto x = point2(0.3, -0.9);

  const auto a = spectral::eigensystem(model, x);
  const auto b = spectral::eigensystem(model, x);
  REQUIRE((a.states - b.states).cwiseAbs().maxCoeff() == 0.0);

  // Largest-modulus component of every column is real and positive.
  for (int k = 0; k < a.dim(); ++k) {
    int pivot = 0;
    a.states.col(k).cwiseAbs().maxCoeff(&pivot);
    const Complex v = a.states(pivot, k);
    REQUIRE(v.real() > 0.0);
    REQUIRE(std::abs(v.imag()) < 1e-14 * std::abs(v));
  }
}

TEST_CASE("eigensystem validates its input") {
  MatrixC bad(2, 2);
  bad << Complex(0, 0), Complex(1, 0), Complex(0.5, 0), Complex(0, 0);
  REQUIRE_THROWS_AS(spectral::eigensystem(bad, point1(0.0)), ValidationError);

  MatrixC rect(2, 3);
  rect.setZero();
  REQUIRE_THROWS_AS(spectral::eigensystem(rect, point1(0.0)), ValidationError);
}

TEST_CASE("parallel transport makes consecutive overlaps real positive") {
  models::SpinFieldParams sp;
  const models::SpinFieldModel model(models::SpinProfile::sphere, sp);

  std::vector<spectral::SpectralData> path;
  for (int k = 0; k <= 40; ++k) {
    path.push_back(spectral::eigensystem(model, point2(0.9, 2.0 * M_PI * k / 40.0)));
  }
  const auto transported = spectral::parallel_transport_gauge(path);
  for (size_t k = 1; k < transported.size(); ++k) {
    for (int level = 0; level < 2; ++level) {
      const Complex o = (transported[k - 1].states.col(level).adjoint() *
                         transported[k].states.col(level))(0);
      REQUIRE(o.real() > 0.0);
      REQUIRE(std::abs(o.imag()) < 1e-12);
    }
  }
  REQUIRE(transported.back().gauge_tag == "transported");
}

TEST_CASE("parallel transport rejects under-resolved paths") {
  models::SpinFieldParams sp;
  const models::SpinFieldModel model(models::SpinProfile::sphere, sp);
  // Two antipodal-ish points: the overlap magnitude falls below 0.5.
  std::vector<spectral::SpectralData> path;
  path.push_back(spectral::eigensystem(model, point2(0.2, 0.0)));
  path.push_back(spectral::eigensystem(model, point2(2.9, 0.0)));
  REQUIRE_THROWS_AS(spectral::parallel_transport_gauge(path), NumericError);
}

TEST_CASE("degenerate levels are a hard error") {
  const auto model = models::TwoLevelCrossingModel::linear_sweep(0.0, 1.0);
  REQUIRE_THROWS_AS(spectral::derivative_couplings(model, point1(0.0), 0), DegeneracyError);

  try {
    spectral::derivative_couplings(model, point1(0.0), 0);
    FAIL("expected DegeneracyError");
  } catch (const DegeneracyError& e) {
    REQUIRE(e.level_a == 0);
    REQUIRE(e.level_b == 1);
    REQUIRE(e.gap == 0.0);
  }
}

TEST_CASE("two-level coupling matches its closed form") {
  // d = (delta, 0, slope X) at X = 0: levels -+ delta, and
  // <1|dH|0> / (E_0 - E_1) = -slope / (2 delta).
  const double delta = 0.5, slope = 1.0;
  const auto model = models::TwoLevelCrossingModel::linear_sweep(delta, slope);
  const auto coup = spectral::derivative_couplings(model, point1(0.0), 0);

  REQUIRE(coup.entries.rows() == 1);
  REQUIRE(coup.entries.cols() == 2);
  REQUIRE(coup.entries(0, 0) == Complex(0.0, 0.0));
  REQUIRE_THAT(coup.entries(0, 1).real(), WithinAbs(-slope / (2.0 * delta), 1e-12));
  REQUIRE_THAT(coup.entries(0, 1).imag(), WithinAbs(0.0, 1e-12));
}

TEST_CASE("couplings agree with differentiated eigenvectors") {
  models::RandomHermitianParams rp;
  rp.dim = 6;
  rp.parameter_dim = 2;
  rp.seed = 7;
  const models::RandomHermitianModel model(rp);
  const auto x = point2(0.15, -0.4);
  const int level = 2;

  const auto coup = spectral::derivative_couplings(model, x, level);
  const auto center = spectral::eigensystem(model, x);

  const double h = 1e-4;
  for (int i = 0; i < 2; ++i) {
    ParameterPoint xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const auto plus = spectral::eigensystem(model, xp);
    const auto minus = spectral::eigensystem(model, xm);
    const VectorC deriv = (plus.states.col(level) - minus.states.col(level)) / (2.0 * h);
    for (int m = 0; m < model.dim(); ++m) {
      if (m == level) continue;
      const Complex fd = (center.states.col(m).adjoint() * deriv)(0);
      REQUIRE_THAT(std::abs(fd - coup.entries(i, m)), WithinAbs(0.0, 1e-6));
    }
  }
}

TEST_CASE("couplings for two levels are antisymmetric under exchange") {
  // <m|d n> = -conj(<n|d m>) for any pair of nondegenerate levels.
  models::RandomHermitianParams rp;
  rp.dim = 5;
  rp.seed = 11;
  const models::RandomHermitianModel model(rp);
  const auto x = point2(0.2, 0.6);

  const auto data = spectral::eigensystem(model, x);
  const auto c1 = spectral::couplings_from_spectral(model, data, 1);
  const auto c3 = spectral::couplings_from_spectral(model, data, 3);
  for (int i = 0; i < 2; ++i) {
    REQUIRE_THAT(std::abs(c1.entries(i, 3) + std::conj(c3.entries(i, 1))),
                 WithinAbs(0.0, 1e-12));
  }
}

TEST_CASE("coupling rejects mismatched spectral data") {
  models::RandomHermitianParams rp;
  rp.dim = 4;
  const models::RandomHermitianModel model(rp);
  models::RandomHermitianParams rp2;
  rp2.dim = 5;
  const models::RandomHermitianModel other(rp2);

  const auto data = spectral::eigensystem(other, point2(0.0, 0.0));
  REQUIRE_THROWS_AS(spectral::couplings_from_spectral(model, data, 0), ValidationError);
}
