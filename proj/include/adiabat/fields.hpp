#pragma once

// Field providers: the slow-coordinate integrator asks one of these for the
// effective fields (potential, induced scalar, connection, mobility) and
// their first derivatives at a point. Providers differ in where the numbers
// come from: straight from the quantum model, from closed forms, or from a
// precomputed grid.

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "adiabat/common.hpp"
#include "adiabat/geometry.hpp"
#include "adiabat/grid.hpp"
#include "adiabat/model.hpp"

namespace adiabat::fields {

struct FieldSample {
  double potential = 0.0;         // level energy plus any external term
  double scalar_potential = 0.0;  // induced scalar phi
  VectorR connection;             // A
  MatrixR mobility;               // inverse of the total inertia
  MatrixR total_inertia;
  MatrixR induced_inertia;
};

struct FieldDerivs {
  VectorR d_potential;
  VectorR d_scalar;
  MatrixR connection_jacobian;      // (i, j) = d A_j / d X_i
  std::vector<MatrixR> d_mobility;  // element i = d mobility / d X_i
};

class EffectiveFieldProvider {
 public:
  virtual ~EffectiveFieldProvider() = default;

  virtual int parameter_dim() const = 0;
  virtual FieldSample sample(const ParameterPoint& x) const = 0;

  // Central differences of sample(); the step is small enough for smooth
  // fields and providers with exact derivatives override this.
  virtual FieldDerivs derivs(const ParameterPoint& x) const {
    const int d = parameter_dim();
    const double h = derivative_step();
    FieldDerivs out;
    out.d_potential = VectorR::Zero(d);
    out.d_scalar = VectorR::Zero(d);
    out.connection_jacobian = MatrixR::Zero(d, d);
    out.d_mobility.assign(d, MatrixR::Zero(d, d));
    for (int i = 0; i < d; ++i) {
      ParameterPoint xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const FieldSample plus = sample(xp);
      const FieldSample minus = sample(xm);
      out.d_potential[i] = (plus.potential - minus.potential) / (2.0 * h);
      out.d_scalar[i] = (plus.scalar_potential - minus.scalar_potential) / (2.0 * h);
      out.connection_jacobian.row(i) =
          ((plus.connection - minus.connection) / (2.0 * h)).transpose();
      out.d_mobility[i] = (plus.mobility - minus.mobility) / (2.0 * h);
    }
    return out;
  }

  virtual double derivative_step() const { return 1e-4; }
};

// External contribution added on top of the level energy. The gradient is
// analytic; forces are too sensitive to stack finite differences on top of
// the provider's own.
struct ExternalPotential {
  std::function<double(const ParameterPoint&)> value;
  std::function<VectorR(const ParameterPoint&)> gradient;
};

// Fields computed from the quantum model at every call. Authoritative and
// slow; the reference provider for everything else.
class ExactFieldProvider final : public EffectiveFieldProvider {
 public:
  ExactFieldProvider(const FastModel& model, int level, MatrixR primitive_inertia,
                     NumericConfig cfg = {}, ExternalPotential external = {})
      : model_(model),
        level_(level),
        primitive_(std::move(primitive_inertia)),
        cfg_(cfg),
        external_(std::move(external)) {
    require(primitive_.rows() == model.parameter_dim() &&
                primitive_.cols() == model.parameter_dim(),
            "ExactFieldProvider: primitive inertia has the wrong shape");
  }

  int parameter_dim() const override { return model_.parameter_dim(); }

  FieldSample sample(const ParameterPoint& x) const override {
    const auto field = geometry::effective_field(model_, x, level_, primitive_, cfg_);
    FieldSample out;
    out.potential = field.geo.energy + (external_.value ? external_.value(x) : 0.0);
    out.scalar_potential = field.scalar_potential;
    out.connection = field.geo.connection;
    out.mobility = field.mobility;
    out.total_inertia = field.total_inertia;
    out.induced_inertia = field.geo.induced_inertia;
    return out;
  }

  FieldDerivs derivs(const ParameterPoint& x) const override {
    FieldDerivs out = EffectiveFieldProvider::derivs(x);
    if (external_.value) {
      require(static_cast<bool>(external_.gradient),
              "ExactFieldProvider: external potential needs a gradient");
      // The base difference already included the external value; replace
      // that part with the analytic gradient.
      const double h = derivative_step();
      for (int i = 0; i < parameter_dim(); ++i) {
        ParameterPoint xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        out.d_potential[i] -= (external_.value(xp) - external_.value(xm)) / (2.0 * h);
      }
      out.d_potential += external_.gradient(x);
    }
    return out;
  }

  double derivative_step() const override { return cfg_.fd_step; }

 private:
  const FastModel& model_;
  int level_;
  MatrixR primitive_;
  NumericConfig cfg_;
  ExternalPotential external_;
};

// Closed-form fields supplied as callables; tests drive the integrator with
// these to compare against textbook trajectories.
class AnalyticFieldProvider final : public EffectiveFieldProvider {
 public:
  using SampleFn = std::function<FieldSample(const ParameterPoint&)>;

  AnalyticFieldProvider(int dim, SampleFn fn, double step = 1e-5)
      : dim_(dim), fn_(std::move(fn)), step_(step) {}

  int parameter_dim() const override { return dim_; }
  FieldSample sample(const ParameterPoint& x) const override { return fn_(x); }
  double derivative_step() const override { return step_; }

 private:
  int dim_;
  SampleFn fn_;
  double step_;
};

// Multilinear interpolation of samples stored on a Cartesian grid. Inside a
// cell the derivative of the interpolant is analytic; across faces it is
// only piecewise continuous, which is the price of this provider. Points
// outside the grid are rejected.
class GridFieldProvider final : public EffectiveFieldProvider {
 public:
  GridFieldProvider(std::vector<grid::AxisSpec> axes,
                    const std::function<FieldSample(const ParameterPoint&)>& generator,
                    int threads = 1)
      : axes_(std::move(axes)) {
    for (const auto& axis : axes_) {
      require(axis.count >= 2, "GridFieldProvider: axis '" + axis.name + "' needs >= 2 nodes");
      values_.push_back(grid::axis_values(axis));
    }
    const auto points = grid::grid_points(axes_);
    nodes_.resize(points.size());
    grid::parallel_for(static_cast<int>(points.size()), threads,
                       [&](int i) { nodes_[i] = generator(points[i]); });
  }

  int parameter_dim() const override { return static_cast<int>(axes_.size()); }

  FieldSample sample(const ParameterPoint& x) const override {
    return blend(locate(x)).first;
  }

  FieldDerivs derivs(const ParameterPoint& x) const override {
    return blend(locate(x)).second;
  }

  double node_spacing(int axis) const {
    return (axes_[axis].hi - axes_[axis].lo) / (axes_[axis].count - 1);
  }

 private:
  struct Cell {
    std::vector<int> base;      // lower node index per axis
    std::vector<double> frac;   // position inside the cell, in [0, 1]
  };

  Cell locate(const ParameterPoint& x) const {
    const int d = parameter_dim();
    require(static_cast<int>(x.size()) == d, "GridFieldProvider: point has wrong dimension");
    Cell cell;
    cell.base.resize(d);
    cell.frac.resize(d);
    for (int a = 0; a < d; ++a) {
      const auto& axis = axes_[a];
      const double step = node_spacing(a);
      const double u = (x[a] - axis.lo) / step;
      if (u < -1e-9 || u > axis.count - 1 + 1e-9) {
        throw ValidationError("GridFieldProvider: point outside grid on axis '" + axis.name +
                              "'");
      }
      int base = static_cast<int>(std::floor(u));
      base = std::max(0, std::min(base, axis.count - 2));
      cell.base[a] = base;
      cell.frac[a] = std::min(1.0, std::max(0.0, u - base));
    }
    return cell;
  }

  size_t flat_index(const std::vector<int>& idx) const {
    size_t flat = 0;
    for (size_t a = 0; a < axes_.size(); ++a) {
      flat = flat * values_[a].size() + static_cast<size_t>(idx[a]);
    }
    return flat;
  }

  std::pair<FieldSample, FieldDerivs> blend(const Cell& cell) const {
    const int d = parameter_dim();
    FieldSample acc = zero_like(nodes_.front());
    FieldDerivs dacc;
    dacc.d_potential = VectorR::Zero(d);
    dacc.d_scalar = VectorR::Zero(d);
    dacc.connection_jacobian = MatrixR::Zero(d, d);
    dacc.d_mobility.assign(d, MatrixR::Zero(d, d));

    std::vector<int> idx(d);
    for (int corner = 0; corner < (1 << d); ++corner) {
      double w = 1.0;
      for (int a = 0; a < d; ++a) {
        const bool hi = corner & (1 << a);
        idx[a] = cell.base[a] + (hi ? 1 : 0);
        w *= hi ? cell.frac[a] : 1.0 - cell.frac[a];
      }
      const FieldSample& node = nodes_[flat_index(idx)];
      accumulate(acc, node, w);
      // Derivative of the blend weight along each axis.
      for (int a = 0; a < d; ++a) {
        double dw = 1.0 / node_spacing(a);
        for (int b = 0; b < d; ++b) {
          const bool hi = corner & (1 << b);
          if (b == a) {
            dw *= hi ? 1.0 : -1.0;
          } else {
            dw *= hi ? cell.frac[b] : 1.0 - cell.frac[b];
          }
        }
        dacc.d_potential[a] += dw * node.potential;
        dacc.d_scalar[a] += dw * node.scalar_potential;
        dacc.connection_jacobian.row(a) += dw * node.connection.transpose();
        dacc.d_mobility[a] += dw * node.mobility;
      }
    }
    return {std::move(acc), std::move(dacc)};
  }

  static FieldSample zero_like(const FieldSample& ref) {
    FieldSample z;
    z.connection = VectorR::Zero(ref.connection.size());
    z.mobility = MatrixR::Zero(ref.mobility.rows(), ref.mobility.cols());
    z.total_inertia = z.mobility;
    z.induced_inertia = z.mobility;
    return z;
  }

  static void accumulate(FieldSample& acc, const FieldSample& node, double w) {
    acc.potential += w * node.potential;
    acc.scalar_potential += w * node.scalar_potential;
    acc.connection += w * node.connection;
    acc.mobility += w * node.mobility;
    acc.total_inertia += w * node.total_inertia;
    acc.induced_inertia += w * node.induced_inertia;
  }

  std::vector<grid::AxisSpec> axes_;
  std::vector<std::vector<double>> values_;
  std::vector<FieldSample> nodes_;
};

// Worst relative disagreement between two providers over a set of probe
// points, per field. Doubling grid resolution should shrink these by about
// four; the refinement report in sweep outputs is built from this.
struct ProviderDeviation {
  double potential = 0.0;
  double scalar_potential = 0.0;
  double connection = 0.0;
  double mobility = 0.0;
};

inline ProviderDeviation provider_deviation(const EffectiveFieldProvider& a,
                                            const EffectiveFieldProvider& b,
                                            const std::vector<ParameterPoint>& probes) {
  require(!probes.empty(), "provider_deviation: no probe points");
  ProviderDeviation dev;
  for (const auto& x : probes) {
    const FieldSample sa = a.sample(x);
    const FieldSample sb = b.sample(x);
    const auto rel = [](double num, double scale) {
      return num / std::max(1e-12, scale);
    };
    dev.potential = std::max(dev.potential, rel(std::abs(sa.potential - sb.potential),
                                                std::abs(sb.potential)));
    dev.scalar_potential =
        std::max(dev.scalar_potential, rel(std::abs(sa.scalar_potential - sb.scalar_potential),
                                           std::abs(sb.scalar_potential)));
    dev.connection =
        std::max(dev.connection, rel((sa.connection - sb.connection).cwiseAbs().maxCoeff(),
                                     sb.connection.cwiseAbs().maxCoeff()));
    dev.mobility = std::max(dev.mobility, rel((sa.mobility - sb.mobility).cwiseAbs().maxCoeff(),
                                              sb.mobility.cwiseAbs().maxCoeff()));
  }
  return dev;
}

}  // namespace adiabat::fields
