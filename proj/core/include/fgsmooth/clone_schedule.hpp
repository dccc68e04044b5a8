#pragma once

#include "fgsmooth/problem.hpp"

#include <vector>

namespace fgs {

/// Time-indexed composition of the augmented state. composition(k) lists
/// the variable index of each block at update time k, newest first: the
/// live state in front, then clones in descending index order. A duplicate
/// of k itself appears right behind the live state whenever k is involved
/// in a factor anchored strictly later.
class CloneSchedule {
 public:
  CloneSchedule() = default;
  explicit CloneSchedule(std::vector<std::vector<int>> compositions)
      : compositions_(std::move(compositions)) {}

  int steps() const { return static_cast<int>(compositions_.size()); }
  const std::vector<int>& composition(int k) const {
    return compositions_.at(static_cast<size_t>(k));
  }

  /// Composition once factors anchored at k have fired and spent clones are
  /// dropped; equals composition(k+1) minus the propagation effects, and
  /// {N} alone at the end of a fully consumed chain.
  std::vector<int> post_update_composition(int k) const;

  /// Block position of variable `index` inside composition(k): the live
  /// state for index == k, the stored clone otherwise.
  int block_of(int k, int index) const;

  bool has_duplicate(int k) const;

 private:
  std::vector<std::vector<int>> compositions_;
};

/// Minimal schedule for the problem's observation factors: index i is kept
/// at time k iff some factor anchored at or after k (and strictly after i)
/// still involves it. Order-independent w.r.t. the obs list.
CloneSchedule build_clone_schedule(const LinearProblem& p);

}  // namespace fgs
