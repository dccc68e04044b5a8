#pragma once

#include "fgsmooth/numeric.hpp"
#include "fgsmooth/problem.hpp"

#include <utility>
#include <vector>

namespace fgs {

/// Filtering marginal P(X_k | Z_0..Z_k) ~ N(x, P). P may be singular.
template <class T>
struct ForwardBelief {
  VecX<T> x;
  MatX<T> P;
};

/// Backward information over strictly future measurements,
/// P(X_k | Z_{k+1}..Z_N) ~ N(J^{-1}y, J^{-1}) with J_N = 0 exactly.
template <class T>
struct BackwardBelief {
  VecX<T> y;
  MatX<T> J;
};

namespace detail {

inline std::vector<std::vector<int>> group_obs_by_anchor(
    int num_states, const LinearProblem& p) {
  std::vector<std::vector<int>> anchored(static_cast<size_t>(num_states));
  for (size_t j = 0; j < p.obs.size(); ++j)
    anchored[static_cast<size_t>(p.obs[j].anchor())].push_back(
        static_cast<int>(j));
  return anchored;
}

inline void require_unary(const LinearProblem& p) {
  for (size_t j = 0; j < p.obs.size(); ++j)
    if (!p.obs[j].unary())
      throw SolveError(ErrorCode::NonUnaryFactor,
                       "observation " + std::to_string(j) + " involves " +
                           std::to_string(p.obs[j].involved.size()) +
                           " states; use the stochastic-cloning solver");
}

/// Kalman update with Joseph-form covariance; the innovation covariance
/// H P H^T + R is the only matrix inverted.
template <class T>
void kalman_update(VecX<T>& x, MatX<T>& P, const MatX<T>& h,
                   const VecX<T>& c, const MatX<T>& r_cov) {
  MatX<T> s = h * P * h.transpose() + r_cov;
  MatX<T> k;
  try {
    k = chol_solve<T>(s, MatX<T>(h * P)).transpose();
  } catch (const SolveError&) {
    throw SolveError(ErrorCode::NotPositiveDefinite,
                     "innovation covariance not PD");
  }
  x += k * (c - h * x);
  const MatX<T> ikh = MatX<T>::Identity(P.rows(), P.cols()) - k * h;
  P = ikh * P * ikh.transpose() + k * r_cov * k.transpose();
  P = ((P + P.transpose()) * T(0.5)).eval();
}

/// Information update y += H^T R^{-1} c, J += H^T R^{-1} H.
template <class T>
void information_update(VecX<T>& y, MatX<T>& J, const MatX<T>& h,
                        const VecX<T>& c, const MatX<T>& r_cov) {
  const auto r_chol = SpdFactorization<T>::factor(r_cov);
  const MatX<T> wh = r_chol.forward_solve(h);
  const VecX<T> wc = r_chol.forward_solve(c);
  J += wh.transpose() * wh;
  y += wh.transpose() * wc;
}

}  // namespace detail

/// Standard Kalman recursion over the chain; valid with P0 and Q exactly
/// zero. Beliefs are the post-update marginals at each k.
template <class T>
std::vector<ForwardBelief<T>> forward_pass(const LinearProblem& p) {
  detail::require_unary(p);
  const auto d = detail::cast_problem<T>(p);
  const int n = p.layout.count();
  const auto anchored = detail::group_obs_by_anchor(n, p);

  std::vector<ForwardBelief<T>> out;
  out.reserve(static_cast<size_t>(n));
  VecX<T> x = d.a0;
  MatX<T> P = d.P0;
  for (int k = 0; k < n; ++k) {
    if (k > 0) {
      const auto& f = d.props[static_cast<size_t>(k - 1)];
      x = (f.F * x + f.a).eval();
      P = (f.F * P * f.F.transpose() + f.Q).eval();
    }
    for (int j : anchored[static_cast<size_t>(k)]) {
      const auto& o = d.obs[static_cast<size_t>(j)];
      detail::kalman_update<T>(x, P, o.involved.front().second, o.c, o.R);
    }
    out.push_back({x, P});
  }
  return out;
}

/// Information recursion in reverse time. Beliefs carry the information of
/// strictly future measurements (the update at k is folded in before
/// backpropagating to k-1), so out[N] is exactly zero.
template <class T>
std::vector<BackwardBelief<T>> backward_pass(const LinearProblem& p) {
  detail::require_unary(p);
  const auto d = detail::cast_problem<T>(p);
  const int n = p.layout.count();
  const auto anchored = detail::group_obs_by_anchor(n, p);

  std::vector<BackwardBelief<T>> out(static_cast<size_t>(n));
  VecX<T> y = VecX<T>::Zero(p.layout.dim(n - 1));
  MatX<T> J = MatX<T>::Zero(p.layout.dim(n - 1), p.layout.dim(n - 1));
  for (int k = n - 1; k >= 0; --k) {
    out[static_cast<size_t>(k)] = {y, J};
    if (k == 0) break;
    for (int j : anchored[static_cast<size_t>(k)]) {
      const auto& o = d.obs[static_cast<size_t>(j)];
      detail::information_update<T>(y, J, o.involved.front().second, o.c, o.R);
    }
    // J_{k-1} = F^T (I + J Q)^{-1} J F and the matching vector recursion;
    // the regularized inverse is well posed for any PSD J, Q.
    const auto& f = d.props[static_cast<size_t>(k - 1)];
    const MatX<T> reg =
        MatX<T>::Identity(J.rows(), J.cols()) + J * f.Q;
    const MatX<T> jr = lu_solve<T>(reg, J);
    const VecX<T> yr = lu_solve<T>(reg, VecX<T>(y - J * f.a));
    J = (f.F.transpose() * jr * f.F).eval();
    y = (f.F.transpose() * yr).eval();
  }
  return out;
}

/// Push-through fusion: X* = (I + P J)^{-1}(x + P y) and
/// P_{k|N} = (I + P J)^{-1} P. Neither P^{-1} nor J^{-1} is formed.
template <class T>
std::pair<VecX<T>, MatX<T>> fuse(const ForwardBelief<T>& fwd,
                                 const BackwardBelief<T>& bwd) {
  const MatX<T> ipj =
      MatX<T>::Identity(fwd.P.rows(), fwd.P.cols()) + fwd.P * bwd.J;
  VecX<T> x = lu_solve<T>(ipj, VecX<T>(fwd.x + fwd.P * bwd.y));
  MatX<T> cov = lu_solve<T>(ipj, fwd.P);
  return {std::move(x), std::move(cov)};
}

template <class T>
std::pair<VecX<T>, std::vector<MatX<T>>> bifm_solve_in(
    const LinearProblem& p) {
  const auto fwd = forward_pass<T>(p);
  const auto bwd = backward_pass<T>(p);
  VecX<T> delta(p.layout.total_dim());
  std::vector<MatX<T>> marginals;
  marginals.reserve(fwd.size());
  for (int k = 0; k < p.layout.count(); ++k) {
    auto [x, cov] = fuse<T>(fwd[static_cast<size_t>(k)],
                            bwd[static_cast<size_t>(k)]);
    delta.segment(p.layout.offset(k), p.layout.dim(k)) = x;
    marginals.push_back(std::move(cov));
  }
  return {std::move(delta), std::move(marginals)};
}

}  // namespace fgs
