#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "adiabat/fields.hpp"
#include "adiabat/models.hpp"

using namespace adiabat;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ParameterPoint point2(double a, double b) {
  ParameterPoint p(2);
  p << a, b;
  return p;
}

// Fields linear in each coordinate; multilinear interpolation is exact on
// these, nodes and interiors alike.
fields::FieldSample linear_sample(const ParameterPoint& x) {
  fields::FieldSample s;
  s.potential = 1.0 + 2.0 * x[0] - x[1];
  s.scalar_potential = 0.5 - 0.3 * x[0] + 0.1 * x[1];
  s.connection = VectorR(2);
  s.connection << 0.2 * x[1], -0.4 * x[0];
  s.mobility = MatrixR::Identity(2, 2) * (1.0 + 0.05 * x[0]);
  s.total_inertia = MatrixR::Identity(2, 2);
  s.induced_inertia = MatrixR::Zero(2, 2);
  return s;
}

}  // namespace

TEST_CASE("grid provider reproduces linear fields exactly") {
  const std::vector<grid::AxisSpec> axes = {{"x", 0.0, 2.0, 5}, {"y", -1.0, 1.0, 4}};
  const fields::GridFieldProvider provider(axes, linear_sample);

  for (const auto& x : {point2(0.37, -0.52), point2(1.93, 0.88), point2(0.0, -1.0)}) {
    const auto got = provider.sample(x);
    const auto want = linear_sample(x);
    REQUIRE_THAT(got.potential, WithinAbs(want.potential, 1e-13));
    REQUIRE_THAT(got.scalar_potential, WithinAbs(want.scalar_potential, 1e-13));
    REQUIRE((got.connection - want.connection).norm() < 1e-13);
    REQUIRE((got.mobility - want.mobility).norm() < 1e-13);

    const auto d = provider.derivs(x);
    REQUIRE_THAT(d.d_potential[0], WithinAbs(2.0, 1e-12));
    REQUIRE_THAT(d.d_potential[1], WithinAbs(-1.0, 1e-12));
    REQUIRE_THAT(d.d_scalar[0], WithinAbs(-0.3, 1e-12));
    REQUIRE_THAT(d.connection_jacobian(0, 1), WithinAbs(-0.4, 1e-12));
    REQUIRE_THAT(d.connection_jacobian(1, 0), WithinAbs(0.2, 1e-12));
    REQUIRE_THAT(d.d_mobility[0](0, 0), WithinAbs(0.05, 1e-12));
  }
}

TEST_CASE("grid provider rejects points outside its box") {
  const std::vector<grid::AxisSpec> axes = {{"x", 0.0, 2.0, 5}, {"y", -1.0, 1.0, 4}};
  const fields::GridFieldProvider provider(axes, linear_sample);
  REQUIRE_THROWS_AS(provider.sample(point2(2.2, 0.0)), ValidationError);
  REQUIRE_THROWS_AS(provider.sample(point2(1.0, -1.5)), ValidationError);
}

TEST_CASE("grid refinement shrinks the deviation from the exact provider") {
  models::SpinFieldParams sp;
  sp.g_b = 2.0;
  const models::SpinFieldModel model(models::SpinProfile::sphere, sp);
  const MatrixR primitive = 2.0 * MatrixR::Identity(2, 2);
  const fields::ExactFieldProvider exact(model, 0, primitive);

  auto deviation = [&](int count) {
    std::vector<grid::AxisSpec> axes = {{"theta", 0.7, 1.1, count}, {"phi", 0.2, 0.6, count}};
    const fields::GridFieldProvider coarse(
        axes, [&](const ParameterPoint& x) { return exact.sample(x); });
    const std::vector<ParameterPoint> probes = {point2(0.77, 0.31), point2(0.93, 0.49),
                                                point2(1.04, 0.26)};
    return fields::provider_deviation(coarse, exact, probes);
  };

  const auto low = deviation(5);
  const auto high = deviation(9);
  CAPTURE(low.scalar_potential, high.scalar_potential, low.connection, high.connection);
  REQUIRE(high.scalar_potential < low.scalar_potential);
  REQUIRE(low.scalar_potential / high.scalar_potential >= 2.5);
  REQUIRE(low.connection / high.connection >= 2.5);
  REQUIRE(low.mobility / high.mobility >= 2.5);
}

TEST_CASE("external potential enters the force with its analytic gradient") {
  models::SpinFieldParams sp;
  sp.g_b = 2.0;
  const models::SpinFieldModel model(models::SpinProfile::planar, sp);
  const double f = 1.3;
  fields::ExternalPotential pull;
  pull.value = [f](const ParameterPoint& x) { return -f * x[0]; };
  pull.gradient = [f](const ParameterPoint& x) {
    VectorR g(1);
    g << -f;
    return g;
  };
  const fields::ExactFieldProvider provider(model, 0, MatrixR::Identity(1, 1), {}, pull);

  ParameterPoint x(1);
  x << 0.4;
  // The level energy of this model is flat, so the tilt is the whole force.
  REQUIRE_THAT(provider.sample(x).potential,
               WithinAbs(spectral::eigensystem(model, x).energies[0] - f * 0.4, 1e-12));
  REQUIRE_THAT(provider.derivs(x).d_potential[0], WithinAbs(-f, 1e-10));
}
