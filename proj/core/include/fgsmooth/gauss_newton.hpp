#pragma once

#include "fgsmooth/problem.hpp"
#include "fgsmooth/solvers.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace fgs {

/// Nonlinear smoothing problem with additive noise: X_{k+1} = f_k(X_k) + w_k
/// and Z_j = h_j(states...) + V_j. Inputs u_k are curried into the dynamics
/// callbacks. Covariances follow the LinearProblem conventions (P0, Q PSD;
/// R strictly PD).
struct NonlinearProblem {
  VariableLayout layout;
  VectorXd initial;  // stacked initial guess

  VectorXd prior_mean;
  MatrixXd prior_cov;

  struct Dynamics {
    std::function<VectorXd(const VectorXd&)> f;
    std::function<MatrixXd(const VectorXd&)> jacobian;
    MatrixXd process_cov;
  };
  std::vector<Dynamics> dynamics;  // one per consecutive pair

  struct Observation {
    std::vector<int> involved;
    std::function<VectorXd(const std::vector<VectorXd>&)> h;
    std::function<std::vector<MatrixXd>(const std::vector<VectorXd>&)>
        jacobians;
    MatrixXd noise_cov;
    VectorXd measured;
  };
  std::vector<Observation> observations;
};

struct GNConfig {
  int max_iterations = 25;
  double tolerance = 0.0;  // <=0: defaults to 1e-9 * total state dimension
  SolverKind backend = SolverKind::Scbifm;
  Precision precision = Precision::Double;
  bool step_halving = false;  // guard against cost increases, off by default
  int max_halvings = 4;
};

struct GNResult {
  VectorXd estimate;
  struct Iteration {
    std::optional<double> cost;  // cost at the iterate (undefined if any
                                 // covariance block is singular)
    double step_norm = 0.0;
    int halvings = 0;
  };
  std::vector<Iteration> trace;
  bool converged = false;
  bool hit_max_iterations = false;
};

/// Relinearizes the problem at the given stacked estimate: residuals are
/// prior_mean - X_0, f(X_k) - X_{k+1} and Z - h(...), Jacobians come from
/// the providers. Throws NonFiniteJacobian on non-finite entries.
LinearProblem linearize(const NonlinearProblem& np, const VectorXd& estimate);

/// Total weighted residual cost at an estimate; requires PD covariances.
double nonlinear_cost(const NonlinearProblem& np, const VectorXd& estimate);

/// Plain Gauss-Newton: solve the linearization with the configured backend,
/// apply the additive update, repeat until the step norm drops below the
/// threshold or iterations run out (flagged, not fatal).
GNResult gn_solve(const NonlinearProblem& np, const GNConfig& cfg);

}  // namespace fgs
