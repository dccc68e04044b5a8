#pragma once

#include "fgsmooth/numeric.hpp"
#include "fgsmooth/problem.hpp"

namespace fgs {

/// Whitened-QR solve in scalar type T. Whitening is per factor block; a
/// block whose Cholesky fails in the active precision raises
/// SingularCovariance, which is the expected failure mode as Q -> 0.
template <class T>
VecX<T> sqrt_solve_in(const VariableLayout& layout,
                      const detail::ProblemData<T>& d) {
  const int n = layout.total_dim();
  int rows = static_cast<int>(d.a0.size());
  for (const auto& f : d.props) rows += static_cast<int>(f.a.size());
  for (const auto& f : d.obs) rows += static_cast<int>(f.c.size());

  MatX<T> wa = MatX<T>::Zero(rows, n);
  VecX<T> wb = VecX<T>::Zero(rows);

  auto factor_of = [](const MatX<T>& cov) {
    try {
      return SpdFactorization<T>::factor(cov);
    } catch (const SolveError&) {
      throw SolveError(ErrorCode::SingularCovariance,
                       "covariance block not invertible in the active precision");
    }
  };

  int r = 0;
  {
    const int d0 = static_cast<int>(d.a0.size());
    const auto l = factor_of(d.P0);
    wa.block(r, 0, d0, d0) =
        l.forward_solve(MatX<T>::Identity(d0, d0));
    wb.segment(r, d0) = l.forward_solve(d.a0);
    r += d0;
  }
  for (size_t k = 0; k < d.props.size(); ++k) {
    const auto& f = d.props[k];
    const int dk1 = static_cast<int>(f.a.size());
    const auto l = factor_of(f.Q);
    wa.block(r, layout.offset(static_cast<int>(k)), dk1, f.F.cols()) =
        l.forward_solve(MatX<T>(-f.F));
    wa.block(r, layout.offset(static_cast<int>(k) + 1), dk1, dk1) =
        l.forward_solve(MatX<T>::Identity(dk1, dk1));
    wb.segment(r, dk1) = l.forward_solve(f.a);
    r += dk1;
  }
  for (const auto& f : d.obs) {
    const int dz = static_cast<int>(f.c.size());
    const auto l = factor_of(f.R);
    for (const auto& [i, h] : f.involved)
      wa.block(r, layout.offset(i), dz, h.cols()) = l.forward_solve(h);
    wb.segment(r, dz) = l.forward_solve(f.c);
    r += dz;
  }
  return qr_solve<T>(wa, wb);
}

}  // namespace fgs
