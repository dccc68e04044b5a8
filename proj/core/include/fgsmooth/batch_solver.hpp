#pragma once

#include "fgsmooth/numeric.hpp"
#include "fgsmooth/problem.hpp"
#include "fgsmooth/solvers.hpp"

namespace fgs {
namespace detail {

/// x = A1^{-1} r by block forward substitution down the chain
/// (x_0 = r_0, x_{k+1} = F_k x_k + r_{k+1}); A1 is never formed.
template <class T>
VecX<T> chain_forward_solve(const VariableLayout& layout,
                            const ProblemData<T>& d, const VecX<T>& r) {
  VecX<T> x(layout.total_dim());
  x.head(layout.dim(0)) = r.head(layout.dim(0));
  for (int k = 0; k + 1 < layout.count(); ++k) {
    const auto& f = d.props[static_cast<size_t>(k)];
    x.segment(layout.offset(k + 1), layout.dim(k + 1)) =
        f.F * x.segment(layout.offset(k), layout.dim(k)) +
        r.segment(layout.offset(k + 1), layout.dim(k + 1));
  }
  return x;
}

/// Y = A1^{-T} H by the transposed recursion (y_N = h_N,
/// y_k = h_k + F_k^T y_{k+1}), columns solved together.
template <class T>
MatX<T> chain_backward_solve(const VariableLayout& layout,
                             const ProblemData<T>& d, const MatX<T>& h) {
  MatX<T> y(layout.total_dim(), h.cols());
  const int n = layout.count();
  y.middleRows(layout.offset(n - 1), layout.dim(n - 1)) =
      h.middleRows(layout.offset(n - 1), layout.dim(n - 1));
  for (int k = n - 2; k >= 0; --k) {
    const auto& f = d.props[static_cast<size_t>(k)];
    y.middleRows(layout.offset(k), layout.dim(k)) =
        h.middleRows(layout.offset(k), layout.dim(k)) +
        f.F.transpose() *
            y.middleRows(layout.offset(k + 1), layout.dim(k + 1));
  }
  return y;
}

/// Gain-form batch solve for the default chain split. Sigma1 only ever
/// appears as a multiplier, so singular (or exactly zero) prior/process
/// covariances pass through untouched.
template <class T>
VecX<T> batch_solve_chain_in(const VariableLayout& layout,
                             const ProblemData<T>& d) {
  const int n = layout.total_dim();
  int m2 = 0;
  for (const auto& f : d.obs) m2 += static_cast<int>(f.c.size());

  VecX<T> b1(n);
  b1.head(layout.dim(0)) = d.a0;
  for (int k = 0; k + 1 < layout.count(); ++k)
    b1.segment(layout.offset(k + 1), layout.dim(k + 1)) =
        d.props[static_cast<size_t>(k)].a;

  if (m2 == 0) return chain_forward_solve(layout, d, b1);

  // J = A2 A1^{-1}, one transposed chain solve per observation block.
  MatX<T> j(m2, n);
  VecX<T> b2(m2);
  int r = 0;
  for (const auto& f : d.obs) {
    const int dz = static_cast<int>(f.c.size());
    MatX<T> ht = MatX<T>::Zero(n, dz);
    for (const auto& [i, h] : f.involved)
      ht.middleRows(layout.offset(i), h.cols()) = h.transpose();
    j.middleRows(r, dz) = chain_backward_solve(layout, d, ht).transpose();
    b2.segment(r, dz) = f.c;
    r += dz;
  }

  // Sigma1 * X applied block-diagonally.
  auto sigma1_apply = [&](const MatX<T>& x) {
    MatX<T> out(n, x.cols());
    out.topRows(layout.dim(0)) = d.P0 * x.topRows(layout.dim(0));
    for (int k = 0; k + 1 < layout.count(); ++k)
      out.middleRows(layout.offset(k + 1), layout.dim(k + 1)) =
          d.props[static_cast<size_t>(k)].Q *
          x.middleRows(layout.offset(k + 1), layout.dim(k + 1));
    return out;
  };

  MatX<T> m = j * sigma1_apply(j.transpose());
  r = 0;
  for (const auto& f : d.obs) {
    const int dz = static_cast<int>(f.c.size());
    m.block(r, r, dz, dz) += f.R;
    r += dz;
  }

  // dx = A1^{-1}(b1 + K(b2 - J b1)), K = Sigma1 J^T M^{-1}.
  const VecX<T> innov = b2 - j * b1;
  MatX<T> s;
  try {
    s = chol_solve<T>(m, innov);
  } catch (const SolveError& e) {
    if (e.code() == ErrorCode::NotPositiveDefinite)
      throw SolveError(ErrorCode::NotPositiveDefinite,
                       "J Sigma1 J^T + Sigma2 not PD; malformed split");
    throw;
  }
  const VecX<T> correction = sigma1_apply(MatX<T>(j.transpose() * s));
  const VecX<T> rhs = b1 + correction;
  return chain_forward_solve(layout, d, rhs);
}

}  // namespace detail
}  // namespace fgs
