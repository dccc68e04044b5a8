#pragma once

#include "fgsmooth/bifm.hpp"
#include "fgsmooth/clone_schedule.hpp"
#include "fgsmooth/numeric.hpp"
#include "fgsmooth/problem.hpp"

#include <algorithm>
#include <utility>
#include <vector>

namespace fgs {

/// Forward marginal over the augmented state X_{I_k}. `indices` lists the
/// variable index per block (live state first), `dims` the block sizes.
template <class T>
struct AugmentedForwardBelief {
  std::vector<int> indices;
  std::vector<int> dims;
  VecX<T> x;
  MatX<T> P;

  int total_dim() const { return static_cast<int>(x.size()); }
  int block_offset(int b) const {
    int off = 0;
    for (int j = 0; j < b; ++j) off += dims[static_cast<size_t>(j)];
    return off;
  }
};

/// Backward information over the augmented state; new blocks enter padded
/// with zeros and only collapse into their source when discarded.
template <class T>
struct AugmentedBackwardBelief {
  std::vector<int> indices;
  std::vector<int> dims;
  VecX<T> y;
  MatX<T> J;

  int block_offset(int b) const {
    int off = 0;
    for (int j = 0; j < b; ++j) off += dims[static_cast<size_t>(j)];
    return off;
  }
};

/// Duplicates the live (front) block with full correlation: covariance
/// becomes C P C^T whose new cross-block is the live marginal, copied.
template <class T>
AugmentedForwardBelief<T> clone_create(const AugmentedForwardBelief<T>& b) {
  const int d0 = b.dims.front();
  const int n = b.total_dim();
  AugmentedForwardBelief<T> out;
  out.indices = b.indices;
  out.indices.insert(out.indices.begin() + 1, b.indices.front());
  out.dims = b.dims;
  out.dims.insert(out.dims.begin() + 1, d0);
  out.x.resize(n + d0);
  out.x.head(d0) = b.x.head(d0);
  out.x.tail(n) = b.x;
  out.P.resize(n + d0, n + d0);
  out.P.topLeftCorner(d0, d0) = b.P.topLeftCorner(d0, d0);
  out.P.topRightCorner(d0, n) = b.P.topRows(d0);
  out.P.bottomLeftCorner(n, d0) = b.P.leftCols(d0);
  out.P.bottomRightCorner(n, n) = b.P;
  return out;
}

namespace detail {

/// Keeps the listed block positions (in order); marginalization is plain
/// row/column selection on a covariance-form belief.
template <class T>
AugmentedForwardBelief<T> select_blocks(const AugmentedForwardBelief<T>& b,
                                        const std::vector<int>& keep) {
  AugmentedForwardBelief<T> out;
  int total = 0;
  for (int pos : keep) {
    out.indices.push_back(b.indices[static_cast<size_t>(pos)]);
    out.dims.push_back(b.dims[static_cast<size_t>(pos)]);
    total += b.dims[static_cast<size_t>(pos)];
  }
  out.x.resize(total);
  out.P.resize(total, total);
  int ro = 0;
  for (int rp : keep) {
    const int rd = b.dims[static_cast<size_t>(rp)];
    out.x.segment(ro, rd) = b.x.segment(b.block_offset(rp), rd);
    int co = 0;
    for (int cp : keep) {
      const int cd = b.dims[static_cast<size_t>(cp)];
      out.P.block(ro, co, rd, cd) =
          b.P.block(b.block_offset(rp), b.block_offset(cp), rd, cd);
      co += cd;
    }
    ro += rd;
  }
  return out;
}

}  // namespace detail

/// Marginalizes out the clone blocks of the given variable indices. The
/// live (front) block is never dropped; for a duplicated index the stored
/// clone goes, recovering the pre-clone belief exactly.
template <class T>
AugmentedForwardBelief<T> clone_discard_forward(
    const AugmentedForwardBelief<T>& b, const std::vector<int>& drop) {
  std::vector<int> keep;
  for (int pos = 0; pos < static_cast<int>(b.indices.size()); ++pos)
    keep.push_back(pos);
  for (int idx : drop) {
    for (int j = static_cast<int>(keep.size()) - 1; j >= 1; --j) {
      if (b.indices[static_cast<size_t>(keep[static_cast<size_t>(j)])] == idx) {
        keep.erase(keep.begin() + j);
        break;
      }
    }
  }
  return detail::select_blocks(b, keep);
}

/// Collapses block `drop` of an information pair into block `keep`: the
/// uncloning sums y_k += y_l, J_kk += J_kl + J_lk + J_ll with the matching
/// row/column folds, then removal of the dropped block. This is C^T (.) C
/// for the cloning matrix C, the reverse-time counterpart of clone_create.
template <class T>
void unclone_collapse(MatX<T>& J, VecX<T>& y, std::vector<int>& dims,
                      int keep, int drop) {
  if (keep == drop || dims.at(static_cast<size_t>(keep)) !=
                          dims.at(static_cast<size_t>(drop)))
    throw SolveError(ErrorCode::DimensionMismatch,
                     "unclone_collapse needs two distinct equal-size blocks");
  auto offset = [&dims](int b) {
    int off = 0;
    for (int j = 0; j < b; ++j) off += dims[static_cast<size_t>(j)];
    return off;
  };
  const int d = dims[static_cast<size_t>(keep)];
  const int ko = offset(keep), dro = offset(drop);
  y.segment(ko, d) += y.segment(dro, d);
  J.middleRows(ko, d) += J.middleRows(dro, d);
  J.middleCols(ko, d) += J.middleCols(dro, d);

  const int n = static_cast<int>(y.size());
  VecX<T> y2(n - d);
  y2.head(dro) = y.head(dro);
  y2.tail(n - dro - d) = y.tail(n - dro - d);
  MatX<T> j2(n - d, n - d);
  j2.topLeftCorner(dro, dro) = J.topLeftCorner(dro, dro);
  j2.topRightCorner(dro, n - dro - d) = J.topRightCorner(dro, n - dro - d);
  j2.bottomLeftCorner(n - dro - d, dro) = J.bottomLeftCorner(n - dro - d, dro);
  j2.bottomRightCorner(n - dro - d, n - dro - d) =
      J.bottomRightCorner(n - dro - d, n - dro - d);
  y = std::move(y2);
  J = std::move(j2);
  dims.erase(dims.begin() + drop);
}

namespace detail {

template <class T>
MatX<T> dense_obs_matrix(const typename ProblemData<T>::Obs& o,
                         const std::vector<int>& indices,
                         const std::vector<int>& dims, int k) {
  int total = 0;
  for (int d : dims) total += d;
  MatX<T> h = MatX<T>::Zero(o.c.size(), total);
  for (const auto& [i, hi] : o.involved) {
    int pos = -1;
    if (i == k) {
      pos = 0;  // live state
    } else {
      for (size_t j = 1; j < indices.size(); ++j)
        if (indices[j] == i) {
          pos = static_cast<int>(j);
          break;
        }
    }
    if (pos < 0)
      throw SolveError(ErrorCode::ScheduleMismatch,
                       "factor anchored at " + std::to_string(k) +
                           " references state " + std::to_string(i) +
                           " absent from the augmented state");
    int off = 0;
    for (int j = 0; j < pos; ++j) off += dims[static_cast<size_t>(j)];
    h.middleCols(off, hi.cols()) = hi;
  }
  return h;
}

inline void check_schedule(const LinearProblem& p, const CloneSchedule& sched) {
  if (sched.steps() != p.layout.count())
    throw SolveError(ErrorCode::ScheduleMismatch,
                     "schedule covers " + std::to_string(sched.steps()) +
                         " steps for " + std::to_string(p.layout.count()) +
                         " states");
  for (int k = 0; k < sched.steps(); ++k)
    if (sched.composition(k).front() != k)
      throw SolveError(ErrorCode::ScheduleMismatch,
                       "live state missing at k=" + std::to_string(k));
}

}  // namespace detail

/// Kalman filter on the cloned system: per step discard spent clones,
/// propagate (clones static), duplicate the arriving state when later
/// factors need it, then update with the stacked observation rows.
template <class T>
std::vector<AugmentedForwardBelief<T>> forward_pass_sc(
    const LinearProblem& p, const CloneSchedule& sched) {
  detail::check_schedule(p, sched);
  const auto d = detail::cast_problem<T>(p);
  const int n = p.layout.count();
  const auto anchored = detail::group_obs_by_anchor(n, p);

  std::vector<AugmentedForwardBelief<T>> out;
  out.reserve(static_cast<size_t>(n));

  AugmentedForwardBelief<T> bel;
  bel.indices = {0};
  bel.dims = {p.layout.dim(0)};
  bel.x = d.a0;
  bel.P = d.P0;

  for (int k = 0; k < n; ++k) {
    if (k > 0) {
      // Discard clones that no current or future factor awaits.
      const auto& target = sched.composition(k);
      std::vector<int> keep{0};
      size_t t = sched.has_duplicate(k) ? 2 : 1;  // skip live + incoming dup
      for (size_t j = 1; j < bel.indices.size(); ++j) {
        if (t < target.size() && bel.indices[j] == target[t]) {
          keep.push_back(static_cast<int>(j));
          ++t;
        }
      }
      if (t != target.size())
        throw SolveError(ErrorCode::ScheduleMismatch,
                         "augmented state diverged from schedule at k=" +
                             std::to_string(k));
      bel = detail::select_blocks(bel, keep);

      // Propagate the live block; clones are static.
      const auto& f = d.props[static_cast<size_t>(k - 1)];
      const int dk = p.layout.dim(k);
      const int dprev = static_cast<int>(f.F.cols());
      const int rest = bel.total_dim() - dprev;
      AugmentedForwardBelief<T> next;
      next.indices = bel.indices;
      next.indices.front() = k;
      next.dims = bel.dims;
      next.dims.front() = dk;
      next.x.resize(dk + rest);
      next.x.head(dk) = f.F * bel.x.head(dprev) + f.a;
      next.x.tail(rest) = bel.x.tail(rest);
      next.P.resize(dk + rest, dk + rest);
      next.P.topLeftCorner(dk, dk) =
          f.F * bel.P.topLeftCorner(dprev, dprev) * f.F.transpose() + f.Q;
      next.P.topRightCorner(dk, rest) = f.F * bel.P.topRightCorner(dprev, rest);
      next.P.bottomLeftCorner(rest, dk) =
          next.P.topRightCorner(dk, rest).transpose();
      next.P.bottomRightCorner(rest, rest) = bel.P.bottomRightCorner(rest, rest);
      bel = std::move(next);
    }

    if (sched.has_duplicate(k)) bel = clone_create(bel);

    for (int j : anchored[static_cast<size_t>(k)]) {
      const auto& o = d.obs[static_cast<size_t>(j)];
      const MatX<T> h = detail::dense_obs_matrix<T>(o, bel.indices, bel.dims, k);
      detail::kalman_update<T>(bel.x, bel.P, h, o.c, o.R);
    }
    out.push_back(bel);
  }
  return out;
}

/// Reverse-time information recursion on the cloned system. Crossing a
/// duplication point collapses the pair by the uncloning sums
/// (y_k += y_l, J_kk += J_kl + J_lk + J_ll, with the matching cross-row
/// folds); states discarded forward re-enter padded with zeros.
template <class T>
std::vector<AugmentedBackwardBelief<T>> backward_pass_sc(
    const LinearProblem& p, const CloneSchedule& sched) {
  detail::check_schedule(p, sched);
  const auto d = detail::cast_problem<T>(p);
  const int n = p.layout.count();
  const auto anchored = detail::group_obs_by_anchor(n, p);

  auto comp_dims = [&](const std::vector<int>& comp) {
    std::vector<int> dims;
    dims.reserve(comp.size());
    for (int idx : comp) dims.push_back(p.layout.dim(idx));
    return dims;
  };

  std::vector<AugmentedBackwardBelief<T>> out(static_cast<size_t>(n));

  AugmentedBackwardBelief<T> bel;
  bel.indices = sched.composition(n - 1);
  bel.dims = comp_dims(bel.indices);
  int total = 0;
  for (int dd : bel.dims) total += dd;
  bel.y = VecX<T>::Zero(total);
  bel.J = MatX<T>::Zero(total, total);

  for (int k = n - 1; k >= 0; --k) {
    out[static_cast<size_t>(k)] = bel;
    if (k == 0) break;

    for (int j : anchored[static_cast<size_t>(k)]) {
      const auto& o = d.obs[static_cast<size_t>(j)];
      const MatX<T> h = detail::dense_obs_matrix<T>(o, bel.indices, bel.dims, k);
      detail::information_update<T>(bel.y, bel.J, h, o.c, o.R);
    }

    // Un-clone the arrival duplicate of k: apply C^T on both sides.
    if (sched.has_duplicate(k)) {
      unclone_collapse<T>(bel.J, bel.y, bel.dims, 0, 1);
      bel.indices.erase(bel.indices.begin() + 1);
    }

    // Backward step through the propagation: regularized inverse with the
    // process noise in the live block, then F^T on the live rows/columns.
    const auto& f = d.props[static_cast<size_t>(k - 1)];
    const int dk = p.layout.dim(k);
    const int dprev = static_cast<int>(f.F.cols());
    const int rest = static_cast<int>(bel.y.size()) - dk;

    MatX<T> reg = MatX<T>::Identity(bel.J.rows(), bel.J.cols());
    reg.leftCols(dk) += bel.J.leftCols(dk) * f.Q;
    VecX<T> u = VecX<T>::Zero(bel.y.size());
    u.head(dk) = f.a;
    const MatX<T> jr = lu_solve<T>(reg, bel.J);
    const VecX<T> yr = lu_solve<T>(reg, VecX<T>(bel.y - bel.J * u));

    AugmentedBackwardBelief<T> prev;
    prev.indices = bel.indices;
    prev.indices.front() = k - 1;
    prev.dims = bel.dims;
    prev.dims.front() = dprev;
    prev.y.resize(dprev + rest);
    prev.y.head(dprev) = f.F.transpose() * yr.head(dk);
    prev.y.tail(rest) = yr.tail(rest);
    prev.J.resize(dprev + rest, dprev + rest);
    prev.J.topLeftCorner(dprev, dprev) =
        f.F.transpose() * jr.topLeftCorner(dk, dk) * f.F;
    prev.J.topRightCorner(dprev, rest) =
        f.F.transpose() * jr.topRightCorner(dk, rest);
    prev.J.bottomLeftCorner(rest, dprev) =
        jr.bottomLeftCorner(rest, dk) * f.F;
    prev.J.bottomRightCorner(rest, rest) = jr.bottomRightCorner(rest, rest);

    // Zero-pad the states that the forward pass discarded entering k: in
    // reverse they are created with no correlation to the rest.
    const auto& target = sched.composition(k - 1);
    const auto target_dims = comp_dims(target);
    int padded_total = 0;
    for (int dd : target_dims) padded_total += dd;

    AugmentedBackwardBelief<T> padded;
    padded.indices = target;
    padded.dims = target_dims;
    padded.y = VecX<T>::Zero(padded_total);
    padded.J = MatX<T>::Zero(padded_total, padded_total);

    // Map each block of prev to its slot in the target composition: the
    // live block to slot 0, the surviving clone tail (which starts with
    // the arrival duplicate of k-1 when one exists) in order.
    std::vector<int> slot(prev.indices.size(), -1);
    slot[0] = 0;
    {
      size_t t = 1;
      for (size_t j = 1; j < prev.indices.size(); ++j) {
        while (t < target.size() && target[t] != prev.indices[j]) ++t;
        if (t == target.size())
          throw SolveError(ErrorCode::ScheduleMismatch,
                           "backward composition diverged at k=" +
                               std::to_string(k - 1));
        slot[j] = static_cast<int>(t);
        ++t;
      }
    }
    auto target_offset = [&](int pos) {
      int off = 0;
      for (int j = 0; j < pos; ++j) off += target_dims[static_cast<size_t>(j)];
      return off;
    };
    for (size_t bj = 0; bj < prev.indices.size(); ++bj) {
      const int rd = prev.dims[bj];
      padded.y.segment(target_offset(slot[bj]), rd) =
          prev.y.segment(prev.block_offset(static_cast<int>(bj)), rd);
      for (size_t bi = 0; bi < prev.indices.size(); ++bi) {
        const int cd = prev.dims[bi];
        padded.J.block(target_offset(slot[bj]), target_offset(slot[bi]), rd,
                       cd) =
            prev.J.block(prev.block_offset(static_cast<int>(bj)),
                         prev.block_offset(static_cast<int>(bi)), rd, cd);
      }
    }
    bel = std::move(padded);
  }
  return out;
}

template <class T>
std::pair<VecX<T>, std::vector<MatX<T>>> scbifm_solve_in(
    const LinearProblem& p, const CloneSchedule& sched) {
  const auto fwd = forward_pass_sc<T>(p, sched);
  const auto bwd = backward_pass_sc<T>(p, sched);
  VecX<T> delta(p.layout.total_dim());
  std::vector<MatX<T>> marginals;
  marginals.reserve(fwd.size());
  for (int k = 0; k < p.layout.count(); ++k) {
    const auto& fk = fwd[static_cast<size_t>(k)];
    const auto& bk = bwd[static_cast<size_t>(k)];
    // Fusion over the full augmented belief, then extraction of the live
    // block; marginalizing the information side first would cost more.
    const MatX<T> ipj =
        MatX<T>::Identity(fk.P.rows(), fk.P.cols()) + fk.P * bk.J;
    const VecX<T> xs = lu_solve<T>(ipj, VecX<T>(fk.x + fk.P * bk.y));
    const MatX<T> cov = lu_solve<T>(ipj, fk.P);
    const int dk = p.layout.dim(k);
    delta.segment(p.layout.offset(k), dk) = xs.head(dk);
    marginals.push_back(cov.topLeftCorner(dk, dk));
  }
  return {std::move(delta), std::move(marginals)};
}

}  // namespace fgs
