#include "fgsmooth/gauss_newton.hpp"

#include <cmath>

namespace fgs {

namespace {

std::vector<VectorXd> gather_states(const NonlinearProblem& np,
                                    const VectorXd& estimate,
                                    const std::vector<int>& involved) {
  std::vector<VectorXd> states;
  states.reserve(involved.size());
  for (int i : involved)
    states.push_back(
        estimate.segment(np.layout.offset(i), np.layout.dim(i)));
  return states;
}

void require_finite(const MatrixXd& m, const std::string& what) {
  if (!m.allFinite())
    throw SolveError(ErrorCode::NonFiniteJacobian, what + " is not finite");
}

}  // namespace

LinearProblem linearize(const NonlinearProblem& np, const VectorXd& estimate) {
  if (estimate.size() != np.layout.total_dim())
    throw SolveError(ErrorCode::DimensionMismatch, "estimate size");

  LinearProblem lp;
  lp.layout = np.layout;
  lp.prior.a0 =
      np.prior_mean - estimate.head(np.layout.dim(0));
  lp.prior.P0 = np.prior_cov;

  for (size_t k = 0; k < np.dynamics.size(); ++k) {
    const auto& dyn = np.dynamics[k];
    const VectorXd xk =
        estimate.segment(np.layout.offset(static_cast<int>(k)),
                         np.layout.dim(static_cast<int>(k)));
    const VectorXd xk1 =
        estimate.segment(np.layout.offset(static_cast<int>(k) + 1),
                         np.layout.dim(static_cast<int>(k) + 1));
    PropagationFactor f;
    f.k = static_cast<int>(k);
    f.F = dyn.jacobian(xk);
    require_finite(f.F, "dynamics Jacobian at k=" + std::to_string(k));
    f.a = dyn.f(xk) - xk1;
    require_finite(f.a, "dynamics residual at k=" + std::to_string(k));
    f.Q = dyn.process_cov;
    lp.props.push_back(std::move(f));
  }

  for (const auto& o : np.observations) {
    const auto states = gather_states(np, estimate, o.involved);
    ObservationFactor f;
    const auto jacs = o.jacobians(states);
    if (jacs.size() != o.involved.size())
      throw SolveError(ErrorCode::DimensionMismatch,
                       "observation Jacobian count");
    for (size_t i = 0; i < o.involved.size(); ++i) {
      require_finite(jacs[i], "observation Jacobian");
      f.involved.emplace_back(o.involved[i], jacs[i]);
    }
    f.c = o.measured - o.h(states);
    require_finite(f.c, "observation residual");
    f.R = o.noise_cov;
    lp.obs.push_back(std::move(f));
  }
  lp.validate();
  return lp;
}

double nonlinear_cost(const NonlinearProblem& np, const VectorXd& estimate) {
  // The linearized cost at a zero step equals the nonlinear cost for
  // additive-noise models.
  return eval_cost(linearize(np, estimate), VectorXd::Zero(estimate.size()));
}

GNResult gn_solve(const NonlinearProblem& np, const GNConfig& cfg) {
  if (cfg.max_iterations <= 0)
    throw SolveError(ErrorCode::SolverFailure, "max_iterations must be > 0");
  const double tol = cfg.tolerance > 0.0
                         ? cfg.tolerance
                         : 1e-9 * static_cast<double>(np.layout.total_dim());

  GNResult result;
  VectorXd estimate = np.initial;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    const LinearProblem lp = linearize(np, estimate);
    GNResult::Iteration rec;
    try {
      rec.cost = eval_cost(lp, VectorXd::Zero(estimate.size()));
    } catch (const SolveError&) {
      rec.cost = std::nullopt;  // singular covariance: cost undefined
    }

    const Solution sol = solve(cfg.backend, lp, cfg.precision);
    VectorXd step = sol.delta;

    if (cfg.step_halving && rec.cost) {
      while (rec.halvings < cfg.max_halvings &&
             nonlinear_cost(np, VectorXd(estimate + step)) > *rec.cost) {
        step *= 0.5;
        ++rec.halvings;
      }
    }

    estimate += step;
    rec.step_norm = step.norm();
    result.trace.push_back(rec);
    if (rec.step_norm < tol) {
      result.converged = true;
      break;
    }
  }
  result.hit_max_iterations = !result.converged;
  result.estimate = std::move(estimate);
  return result;
}

}  // namespace fgs
