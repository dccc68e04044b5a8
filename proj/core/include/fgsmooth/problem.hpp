#pragma once

#include "fgsmooth/types.hpp"

#include <tuple>
#include <vector>

namespace fgs {

/// Index map for the stacked correction vector over time-indexed variables
/// X_0..X_N. Dimensions are fixed per problem; they are uniform except for
/// the toy study's reduced initial state.
class VariableLayout {
 public:
  VariableLayout() = default;

  static VariableLayout uniform(int count, int dim);
  static VariableLayout with_dims(std::vector<int> dims);

  int count() const { return static_cast<int>(dims_.size()); }
  int dim(int k) const { return dims_.at(static_cast<size_t>(k)); }
  int offset(int k) const { return offsets_.at(static_cast<size_t>(k)); }
  int total_dim() const { return total_; }
  bool is_uniform() const;

 private:
  std::vector<int> dims_;
  std::vector<int> offsets_;
  int total_ = 0;
};

/// ||dX_0 - a0||^2 over covariance P0 (symmetric PSD, may be singular).
struct PriorFactor {
  VectorXd a0;
  MatrixXd P0;
};

/// ||dX_{k+1} - F dX_k - a||^2 over covariance Q (symmetric PSD, zero
/// allowed). `a` is the affine term of the chain: the Gauss-Newton residual
/// f(X_k,u_k)-X_{k+1}, or the raw input contribution for a directly linear
/// model.
struct PropagationFactor {
  int k = 0;  // links X_k -> X_{k+1}
  MatrixXd F;
  VectorXd a;
  MatrixXd Q;
};

/// ||sum_i H_i dX_i - c||^2 over covariance R (strictly PD). The anchor is
/// the largest involved index; all indices are distinct and <= anchor.
struct ObservationFactor {
  std::vector<std::pair<int, MatrixXd>> involved;  // (time index, H block)
  VectorXd c;
  MatrixXd R;

  int anchor() const;
  bool unary() const { return involved.size() == 1; }
  int residual_dim() const { return static_cast<int>(c.size()); }
};

/// One linearized least-squares instance: prior, a propagation factor per
/// consecutive pair, and observation factors. Immutable after validate().
struct LinearProblem {
  VariableLayout layout;
  PriorFactor prior;
  std::vector<PropagationFactor> props;
  std::vector<ObservationFactor> obs;

  int num_states() const { return layout.count(); }

  /// Checks every structural invariant (dimensions, one propagation per
  /// pair, PSD/PD covariances). Throws SolveError on violation.
  void validate() const;
};

/// Stacked form (A, b, Sigma) with Sigma = blkdiag(P0, Q..., R...). Row
/// order: prior, propagations by k, observations in list order.
std::tuple<MatrixXd, VectorXd, MatrixXd> assemble_stacked(
    const LinearProblem& p);

/// Whitened Jacobian Sigma^{-1/2} A, assembled per factor block in binary64.
/// Diagnostic companion of condition_number; requires all blocks PD.
MatrixXd assemble_whitened(const LinearProblem& p);

/// ||A dx - b||^2_Sigma with Mahalanobis weighting per factor block.
/// Requires every covariance block strictly positive definite.
double eval_cost(const LinearProblem& p, const VectorXd& dx);

namespace detail {

/// Per-precision copy of the problem data. Building one rounds every number
/// to the target scalar once, so all solvers see identical inputs.
template <class T>
struct ProblemData {
  VecX<T> a0;
  MatX<T> P0;
  struct Prop {
    MatX<T> F;
    VecX<T> a;
    MatX<T> Q;
  };
  std::vector<Prop> props;
  struct Obs {
    std::vector<std::pair<int, MatX<T>>> involved;
    VecX<T> c;
    MatX<T> R;
    int anchor;
  };
  std::vector<Obs> obs;
};

template <class T>
ProblemData<T> cast_problem(const LinearProblem& p) {
  ProblemData<T> d;
  d.a0 = p.prior.a0.cast<T>();
  d.P0 = p.prior.P0.cast<T>();
  d.props.reserve(p.props.size());
  for (const auto& f : p.props)
    d.props.push_back({f.F.cast<T>(), f.a.cast<T>(), f.Q.cast<T>()});
  d.obs.reserve(p.obs.size());
  for (const auto& f : p.obs) {
    typename ProblemData<T>::Obs o;
    for (const auto& [i, h] : f.involved)
      o.involved.emplace_back(i, h.template cast<T>());
    o.c = f.c.cast<T>();
    o.R = f.R.cast<T>();
    o.anchor = f.anchor();
    d.obs.push_back(std::move(o));
  }
  return d;
}

}  // namespace detail
}  // namespace fgs
