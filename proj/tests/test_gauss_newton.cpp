#include "fgsmooth/experiments.hpp"
#include "fgsmooth/gauss_newton.hpp"
#include "support/desk_problem.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

using fgs::MatrixXd;
using fgs::VectorXd;

namespace {

fgs::NonlinearProblem linear_np() {
  // Linear dynamics and observation: Gauss-Newton is exact in one step.
  fgs::NonlinearProblem np;
  np.layout = fgs::VariableLayout::uniform(3, 1);
  np.prior_mean = VectorXd::Constant(1, 1.0);
  np.prior_cov = MatrixXd::Identity(1, 1);
  for (int k = 0; k < 2; ++k) {
    fgs::NonlinearProblem::Dynamics dyn;
    dyn.f = [](const VectorXd& x) {
      return VectorXd::Constant(1, 0.8 * x(0) + 0.2).eval();
    };
    dyn.jacobian = [](const VectorXd&) {
      return MatrixXd::Constant(1, 1, 0.8).eval();
    };
    dyn.process_cov = 0.5 * MatrixXd::Identity(1, 1);
    np.dynamics.push_back(std::move(dyn));
  }
  fgs::NonlinearProblem::Observation obs;
  obs.involved = {2};
  obs.h = [](const std::vector<VectorXd>& s) {
    return VectorXd::Constant(1, 2.0 * s[0](0)).eval();
  };
  obs.jacobians = [](const std::vector<VectorXd>&) {
    return std::vector<MatrixXd>{MatrixXd::Constant(1, 1, 2.0)};
  };
  obs.noise_cov = MatrixXd::Identity(1, 1);
  obs.measured = VectorXd::Constant(1, 3.0);
  np.observations.push_back(std::move(obs));
  np.initial = VectorXd::Zero(3);
  return np;
}

}  // namespace

TEST_CASE("quadratic problems converge in one iteration") {
  fgs::GNConfig cfg;
  cfg.backend = fgs::SolverKind::Batch;
  const auto result = fgs::gn_solve(linear_np(), cfg);
  CHECK(result.converged);
  // One real step, then a vanishing one that triggers the threshold.
  REQUIRE(result.trace.size() == 2);
  CHECK(result.trace[1].step_norm < 1e-9 * 3);

  // The fixed point solves the linearized problem exactly.
  const auto lp = fgs::linearize(linear_np(), result.estimate);
  const VectorXd expected = oracles::solve_dense(lp);
  CHECK(expected.norm() < 1e-9);
}

TEST_CASE("range Jacobian matches the analytic derivative") {
  // h(p) = sqrt(p^2 + 1) at p = 1 has slope 1/sqrt(2).
  const auto np = testsupport::make_desk_problem();
  const auto& obs = np.observations.front();
  std::vector<VectorXd> at{VectorXd::Constant(1, 1.0)};
  const double h_slope = obs.jacobians(at)[0](0, 0);
  CHECK(h_slope == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));

  const auto fd = oracles::fd_jacobian(
      [&](const VectorXd& x) {
        return obs.h({x});
      },
      at[0]);
  CHECK(std::abs(fd(0, 0) - h_slope) / std::abs(h_slope) < 1e-5);
}

TEST_CASE("all desk Jacobians validate against central differences") {
  const auto np = testsupport::make_desk_problem();
  const VectorXd at = np.initial;
  for (size_t k = 0; k < np.dynamics.size(); ++k) {
    const VectorXd xk = at.segment(static_cast<Eigen::Index>(k), 1);
    const MatrixXd analytic = np.dynamics[k].jacobian(xk);
    const MatrixXd fd = oracles::fd_jacobian(np.dynamics[k].f, xk);
    CHECK((analytic - fd).norm() / std::max(1.0, fd.norm()) < 1e-5);
  }
  for (const auto& obs : np.observations) {
    std::vector<VectorXd> states;
    for (int i : obs.involved)
      states.push_back(at.segment(np.layout.offset(i), 1));
    const auto analytic = obs.jacobians(states);
    for (size_t i = 0; i < states.size(); ++i) {
      auto partial = [&](const VectorXd& x) {
        auto moved = states;
        moved[i] = x;
        return obs.h(moved);
      };
      const MatrixXd fd = oracles::fd_jacobian(partial, states[i]);
      CHECK((analytic[i] - fd).norm() / std::max(1.0, fd.norm()) < 1e-5);
    }
  }
}

TEST_CASE("toy linearized at ground truth has zero residuals") {
  fgs::ToyConfig cfg;
  cfg.dt = 0.1;
  const auto toy = fgs::make_toy(cfg);
  // The noise-free problem built with exact initialization: its residual
  // vector is consistent, so the truth yields zero cost.
  CHECK(fgs::eval_cost(toy.problem, toy.truth) == doctest::Approx(0.0));
}

TEST_CASE("desk problem: cost non-increasing, gradient vanishes") {
  const auto np = testsupport::make_desk_problem();
  fgs::GNConfig cfg;
  cfg.backend = fgs::SolverKind::Batch;
  const auto result = fgs::gn_solve(np, cfg);
  CHECK(result.converged);

  for (size_t i = 1; i < result.trace.size(); ++i) {
    REQUIRE(result.trace[i].cost.has_value());
    CHECK(*result.trace[i].cost <=
          *result.trace[i - 1].cost * (1.0 + 1e-12));
  }

  const auto grad = oracles::fd_gradient(
      [&](const VectorXd& x) { return fgs::nonlinear_cost(np, x); },
      result.estimate);
  CHECK(grad.norm() < 1e-8);
}

TEST_CASE("scbifm and batch backends land on the same optimum") {
  const auto np = testsupport::make_desk_problem();
  fgs::GNConfig batch_cfg, sc_cfg;
  batch_cfg.backend = fgs::SolverKind::Batch;
  sc_cfg.backend = fgs::SolverKind::Scbifm;
  const auto a = fgs::gn_solve(np, batch_cfg);
  const auto b = fgs::gn_solve(np, sc_cfg);
  CHECK((a.estimate - b.estimate).norm() /
            std::max(a.estimate.norm(), b.estimate.norm()) <
        1e-7);
}

TEST_CASE("non-finite Jacobians are rejected") {
  auto np = linear_np();
  np.dynamics[0].jacobian = [](const VectorXd&) {
    return MatrixXd::Constant(1, 1, std::numeric_limits<double>::quiet_NaN())
        .eval();
  };
  try {
    fgs::linearize(np, np.initial);
    FAIL("expected NonFiniteJacobian");
  } catch (const fgs::SolveError& e) {
    CHECK(e.code() == fgs::ErrorCode::NonFiniteJacobian);
  }
}

TEST_CASE("iteration budget is flagged, not fatal") {
  auto np = testsupport::make_desk_problem();
  fgs::GNConfig cfg;
  cfg.max_iterations = 1;
  const auto result = fgs::gn_solve(np, cfg);
  CHECK(result.hit_max_iterations);
  CHECK(result.trace.size() == 1);
  CHECK(result.estimate.allFinite());
}

TEST_CASE("step halving guard stays inactive on a healthy problem") {
  auto np = testsupport::make_desk_problem();
  fgs::GNConfig cfg;
  cfg.backend = fgs::SolverKind::Batch;
  cfg.step_halving = true;
  const auto result = fgs::gn_solve(np, cfg);
  CHECK(result.converged);
  for (const auto& it : result.trace) CHECK(it.halvings == 0);
}
