#pragma once

// The fast-subsystem contract. A model exposes a Hermitian Hamiltonian over
// a D-dimensional slow-parameter space together with its analytic parameter
// gradient; everything downstream (couplings, tensors, propagation) is built
// from these two callbacks.

#include <optional>
#include <string>
#include <vector>

#include "adiabat/common.hpp"

namespace adiabat {

// Closed-form tensors a model can volunteer for validation. Any member may
// be absent; tests compare whatever is present.
struct ReferenceTensors {
  std::optional<MatrixR> metric;
  std::optional<MatrixR> curvature;
  std::optional<MatrixR> induced_inertia;
};

class FastModel {
 public:
  virtual ~FastModel() = default;

  // Fast-space dimension N.
  virtual int dim() const = 0;

  // Slow-parameter count D.
  virtual int parameter_dim() const = 0;

  virtual std::string name() const = 0;

  virtual std::vector<std::string> parameter_names() const {
    std::vector<std::string> names;
    names.reserve(static_cast<size_t>(parameter_dim()));
    for (int i = 0; i < parameter_dim(); ++i) names.push_back("x" + std::to_string(i));
    return names;
  }

  // N x N Hermitian matrix at X.
  virtual MatrixC hamiltonian(const ParameterPoint& x) const = 0;

  // dH/dX_i at X, also Hermitian.
  virtual MatrixC gradient(const ParameterPoint& x, int i) const = 0;

  // Closed-form tensors for level n at X, where known.
  virtual std::optional<ReferenceTensors> analytic_reference(const ParameterPoint& x, int n) const {
    (void)x;
    (void)n;
    return std::nullopt;
  }

 protected:
  void check_point(const ParameterPoint& x) const {
    require(static_cast<int>(x.size()) == parameter_dim(),
            name() + ": parameter point has dimension " + std::to_string(x.size()) +
                ", expected " + std::to_string(parameter_dim()));
  }

  void check_direction(int i) const {
    require(i >= 0 && i < parameter_dim(),
            name() + ": gradient direction " + std::to_string(i) + " out of range [0, " +
                std::to_string(parameter_dim()) + ")");
  }
};

// Max-norm mismatch between the analytic gradient and a central difference
// of the Hamiltonian. Second order in h; used by model validation tests.
inline double gradient_fd_deviation(const FastModel& model, const ParameterPoint& x, int i,
                                    double h) {
  ParameterPoint xp = x;
  ParameterPoint xm = x;
  xp[i] += h;
  xm[i] -= h;
  const MatrixC fd = (model.hamiltonian(xp) - model.hamiltonian(xm)) / (2.0 * h);
  return (model.gradient(x, i) - fd).cwiseAbs().maxCoeff();
}

}  // namespace adiabat
