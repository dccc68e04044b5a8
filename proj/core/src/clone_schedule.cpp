#include "fgsmooth/clone_schedule.hpp"

#include <algorithm>

namespace fgs {

std::vector<int> CloneSchedule::post_update_composition(int k) const {
  const auto& comp = composition(k);
  const bool last = k + 1 >= steps();
  const auto& next = last ? comp : composition(k + 1);
  std::vector<int> out;
  out.push_back(comp.front());
  for (size_t j = 1; j < comp.size(); ++j) {
    const int idx = comp[j];
    // A clone survives the update at k iff it still appears at k+1.
    if (!last && std::count(next.begin(), next.end(), idx) > 0)
      out.push_back(idx);
  }
  return out;
}

int CloneSchedule::block_of(int k, int index) const {
  const auto& comp = composition(k);
  if (index == comp.front()) return 0;
  for (size_t j = 1; j < comp.size(); ++j)
    if (comp[j] == index) return static_cast<int>(j);
  throw SolveError(ErrorCode::ScheduleMismatch,
                   "index " + std::to_string(index) +
                       " absent from augmented state at k=" + std::to_string(k));
}

bool CloneSchedule::has_duplicate(int k) const {
  const auto& comp = composition(k);
  return comp.size() >= 2 && comp[1] == comp[0];
}

CloneSchedule build_clone_schedule(const LinearProblem& p) {
  const int n = p.layout.count();
  // anchors[i] = anchor times of factors involving i, ignoring factors
  // anchored at i itself (those use the live state, no clone needed).
  std::vector<std::vector<int>> anchors(static_cast<size_t>(n));
  for (const auto& f : p.obs) {
    const int a = f.anchor();
    for (const auto& [i, h] : f.involved)
      if (a > i) anchors[static_cast<size_t>(i)].push_back(a);
  }

  std::vector<std::vector<int>> comps(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) {
    auto& comp = comps[static_cast<size_t>(k)];
    comp.push_back(k);  // live state first
    for (int i = k; i >= 0; --i) {
      const auto& as = anchors[static_cast<size_t>(i)];
      if (std::any_of(as.begin(), as.end(), [k](int a) { return a >= k; }))
        comp.push_back(i);
    }
  }
  return CloneSchedule(std::move(comps));
}

}  // namespace fgs
