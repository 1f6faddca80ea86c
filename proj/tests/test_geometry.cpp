#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "adiabat/geometry.hpp"
#include "adiabat/models.hpp"

using namespace adiabat;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

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

double rel_dev(const MatrixR& got, const MatrixR& want) {
  const double scale = std::max(1e-300, want.cwiseAbs().maxCoeff());
  return (got - want).cwiseAbs().maxCoeff() / scale;
}

}  // namespace

TEST_CASE("tensors match spin closed forms on the sphere") {
  for (int twice_spin : {1, 3}) {
    models::SpinFieldParams sp;
    sp.twice_spin = twice_spin;
    sp.g_b = 1.3;
    const models::SpinFieldModel model(models::SpinProfile::sphere, sp);
    const auto x = point2(0.8, 1.1);

    for (int level = 0; level <= twice_spin; ++level) {
      CAPTURE(twice_spin, level);
      const auto geo = geometry::geometry_at(model, x, level);
      const auto ref = *model.analytic_reference(x, level);
      REQUIRE(rel_dev(geo.metric, *ref.metric) < 1e-11);
      REQUIRE(rel_dev(geo.curvature, *ref.curvature) < 1e-11);
      REQUIRE(rel_dev(geo.induced_inertia, *ref.induced_inertia) < 1e-11);
    }
  }
}

TEST_CASE("tensors match the conical-intersection closed forms") {
  const auto model = models::TwoLevelCrossingModel::radial_plane();
  for (double r : {0.7, 2.0}) {
    for (int level : {0, 1}) {
      CAPTURE(r, level);
      const auto x = point2(r * 0.6, r * 0.8);
      const auto geo = geometry::geometry_at(model, x, level);
      const auto ref = *model.analytic_reference(x, level);
      REQUIRE(rel_dev(geo.metric, *ref.metric) < 1e-11);
      REQUIRE(rel_dev(geo.curvature, *ref.curvature) < 1e-11);
      REQUIRE(rel_dev(geo.induced_inertia, *ref.induced_inertia) < 1e-11);
    }
  }
}

TEST_CASE("couplings-based tensors are gauge invariant") {
  models::RandomHermitianParams rp;
  rp.dim = 6;
  rp.parameter_dim = 2;
  rp.seed = 31;
  const models::RandomHermitianModel model(rp);
  const auto x = point2(0.25, -0.55);
  const int level = 1;

  auto data = spectral::eigensystem(model, x);
  const auto coup = spectral::couplings_from_spectral(model, data, level);
  const MatrixC qgt = geometry::quantum_geometric_tensor(coup);
  const MatrixR inertia = geometry::induced_inertia(coup);

  // Rephase every eigenvector and rebuild.
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  for (int k = 0; k < data.dim(); ++k) {
    data.states.col(k) *= std::exp(Complex(0.0, angle(rng)));
  }
  const auto coup2 = spectral::couplings_from_spectral(model, data, level);
  const MatrixC qgt2 = geometry::quantum_geometric_tensor(coup2);
  const MatrixR inertia2 = geometry::induced_inertia(coup2);

  REQUIRE((qgt2 - qgt).cwiseAbs().maxCoeff() / qgt.cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE(rel_dev(inertia2, inertia) < 1e-12);
}

TEST_CASE("metric is symmetric PSD and curvature antisymmetric") {
  models::RandomHermitianParams rp;
  rp.dim = 7;
  rp.parameter_dim = 3;
  rp.seed = 17;
  const models::RandomHermitianModel model(rp);
  ParameterPoint x(3);
  x << 0.2, -0.1, 0.4;

  const auto geo = geometry::geometry_at(model, x, 0);
  REQUIRE((geo.metric - geo.metric.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE((geo.curvature + geo.curvature.transpose()).cwiseAbs().maxCoeff() < 1e-12);

  Eigen::SelfAdjointEigenSolver<MatrixR> es(geo.metric);
  REQUIRE(es.eigenvalues().minCoeff() > -1e-12);

  // Ground level: induced inertia is PSD as well.
  Eigen::SelfAdjointEigenSolver<MatrixR> ei(geo.induced_inertia);
  REQUIRE(ei.eigenvalues().minCoeff() > -1e-12);
}

TEST_CASE("connection matches the aligned-level closed form") {
  // Deterministic gauge on the sphere below the equator keeps the first
  // component as pivot: A_theta = 0, A_phi = -hbar (1 - cos theta)/2.
  models::SpinFieldParams sp;
  const models::SpinFieldModel model(models::SpinProfile::sphere, sp);
  const double theta = 0.9, phi = 0.4;

  const auto conn = geometry::berry_connection(model, point2(theta, phi), 0);
  REQUIRE_THAT(conn.connection[0], WithinAbs(0.0, 1e-10));
  REQUIRE_THAT(conn.connection[1], WithinAbs(-0.5 * (1.0 - std::cos(theta)), 1e-10));
  REQUIRE(conn.gauge_residual < 1e-10);
}

TEST_CASE("connection flags a pivot switch inside the stencil") {
  models::SpinFieldParams sp;
  const models::SpinFieldModel model(models::SpinProfile::sphere, sp);
  // At theta = pi/2 the pivot component changes across the stencil and the
  // two gauges differ by a large phase at this azimuth.
  REQUIRE_THROWS_AS(geometry::berry_connection(model, point2(M_PI / 2.0, 1.8), 0), GaugeError);
}

TEST_CASE("loop integral of the connection matches holonomy and flux") {
  models::SpinFieldParams sp;
  const models::SpinFieldModel model(models::SpinProfile::sphere, sp);
  const double theta0 = 0.8;
  const int segments = 480;

  std::vector<ParameterPoint> loop;
  for (int k = 0; k <= segments; ++k) {
    loop.push_back(point2(theta0, 2.0 * M_PI * k / segments));
  }
  const double integral = geometry::connection_line_integral(model, loop, 0);

  // Cap flux of F_theta_phi = -(hbar/2) sin theta.
  const double flux = -M_PI * (1.0 - std::cos(theta0));
  REQUIRE_THAT(integral, WithinAbs(flux, 1e-8));

  // Discrete holonomy of the transported frame, an independent oracle.
  Complex prod(1.0, 0.0);
  std::vector<spectral::SpectralData> path;
  for (const auto& x : loop) path.push_back(spectral::eigensystem(model, x));
  for (size_t k = 0; k + 1 < path.size(); ++k) {
    prod *= (path[k].states.col(0).adjoint() * path[k + 1].states.col(0))(0);
  }
  const double holonomy = -std::arg(prod);
  const double two_pi = 2.0 * M_PI;
  double diff = std::fmod(integral - holonomy, two_pi);
  if (diff > M_PI) diff -= two_pi;
  if (diff < -M_PI) diff += two_pi;
  REQUIRE_THAT(diff, WithinAbs(0.0, 1e-4));
}

TEST_CASE("effective field assembles mobility and scalar potential") {
  // Uniform planar rotation: g = kappa^2/4, I = hbar^2 kappa^2/(2 g_b).
  // With kappa = g_b = 1 and unit mass: total = 3/2, phi = 1/12, bare 1/8.
  models::SpinFieldParams sp;
  const models::SpinFieldModel model(models::SpinProfile::planar, sp);
  const auto field =
      geometry::effective_field(model, point1(0.3), 0, geometry::scalar_inertia(1.0, 1));

  REQUIRE_THAT(field.total_inertia(0, 0), WithinRel(1.5, 1e-10));
  REQUIRE_THAT(field.mobility(0, 0), WithinRel(2.0 / 3.0, 1e-10));
  REQUIRE_THAT(field.scalar_potential, WithinRel(1.0 / 12.0, 1e-10));
  REQUIRE_THAT(field.phi_primitive, WithinRel(1.0 / 8.0, 1e-10));
}

TEST_CASE("mobility inverts the total inertia to tolerance") {
  models::RandomHermitianParams rp;
  rp.dim = 6;
  rp.parameter_dim = 2;
  rp.seed = 23;
  const models::RandomHermitianModel model(rp);
  const auto x = point2(0.3, 0.1);

  const auto field = geometry::effective_field(model, x, 0, geometry::scalar_inertia(2.0, 2));
  const MatrixR residual = field.mobility * field.total_inertia - MatrixR::Identity(2, 2);
  REQUIRE(residual.cwiseAbs().maxCoeff() < 1e-10);

  // Induced inertia is PSD on the ground level, so the induced potential
  // cannot exceed the bare one.
  REQUIRE(field.scalar_potential <= field.phi_primitive + 1e-15);
}

TEST_CASE("singular total inertia is an error") {
  models::SpinFieldParams sp;
  const models::SpinFieldModel model(models::SpinProfile::planar, sp);
  // Excited level has negative induced inertia -hbar^2/2; a bare mass of
  // exactly hbar^2/2 makes the total singular.
  REQUIRE_THROWS_AS(
      geometry::effective_field(model, point1(0.0), 1, geometry::scalar_inertia(0.5, 1)),
      NumericError);
}

TEST_CASE("geometry grid records failures and keeps going") {
  const auto model = models::TwoLevelCrossingModel::radial_plane();
  grid::AxisSpec ax{"x", -1.0, 1.0, 5};
  grid::AxisSpec ay{"y", 0.0, 0.0, 1};
  const auto points = grid::grid_points({ax, ay});
  REQUIRE(points.size() == 5);

  const auto result = geometry::geometry_grid(model, points, 0);
  REQUIRE(result.failures.size() == 1);
  REQUIRE(result.failures[0].point[0] == 0.0);
  int good = 0;
  for (const auto& t : result.tensors) good += t.has_value() ? 1 : 0;
  REQUIRE(good == 4);

  // Same sweep on two threads gives identical tensors.
  const auto threaded = geometry::geometry_grid(model, points, 0, {}, 2);
  REQUIRE(threaded.failures.size() == 1);
  for (size_t i = 0; i < points.size(); ++i) {
    REQUIRE(result.tensors[i].has_value() == threaded.tensors[i].has_value());
    if (result.tensors[i]) {
      REQUIRE((result.tensors[i]->metric - threaded.tensors[i]->metric).cwiseAbs().maxCoeff() ==
              0.0);
    }
  }
}

namespace {

// Deliberately broken model: non-Hermitian output must escalate out of the
// grid sweep instead of being recorded as a per-point failure.
class BrokenModel final : public FastModel {
 public:
  int dim() const override { return 2; }
  int parameter_dim() const override { return 1; }
  std::string name() const override { return "broken"; }
  MatrixC hamiltonian(const ParameterPoint&) const override {
    MatrixC h(2, 2);
    h << Complex(0, 0), Complex(1, 0), Complex(0, 0), Complex(0, 0);
    return h;
  }
  MatrixC gradient(const ParameterPoint&, int) const override {
    return MatrixC::Zero(2, 2);
  }
};

}  // namespace

TEST_CASE("grid escalates systematic validation failures") {
  const BrokenModel model;
  grid::AxisSpec ax{"x", 0.0, 1.0, 3};
  const auto points = grid::grid_points({ax});
  REQUIRE_THROWS_AS(geometry::geometry_grid(model, points, 0), ValidationError);
}
