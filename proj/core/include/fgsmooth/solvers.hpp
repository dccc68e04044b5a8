#pragma once

#include "fgsmooth/problem.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fgs {

/// Stacked correction vector plus, for the smoother-based solvers, the
/// per-variable posterior covariances.
struct Solution {
  VectorXd delta;
  std::vector<MatrixXd> marginals;  // empty when the solver produces none

  bool has_marginals() const { return !marginals.empty(); }

  VectorXd state(const VariableLayout& layout, int k) const {
    return delta.segment(layout.offset(k), layout.dim(k));
  }
};

enum class SolverKind { Sqrt, Batch, Bifm, Scbifm };

inline const char* solver_name(SolverKind s) {
  switch (s) {
    case SolverKind::Sqrt: return "sqrt";
    case SolverKind::Batch: return "batch";
    case SolverKind::Bifm: return "bifm";
    case SolverKind::Scbifm: return "scbifm";
  }
  return "?";
}

std::optional<SolverKind> solver_from_name(const std::string& name);
std::optional<Precision> precision_from_name(const std::string& name);

/// Whitened least squares through QR on Sigma^{-1/2}A. The baseline that
/// has no graceful path for singular covariance blocks.
Solution solve_sqrt(const LinearProblem& p,
                    Precision prec = Precision::Double);

/// Row split for the batch solver: factor ids with 0 = prior, 1..N-1 = the
/// propagation factors, N.. = observations in list order.
struct BatchSplit {
  std::vector<int> rows1;
  std::vector<int> rows2;
};

/// Prior + propagations into the square lower block-triangular A1,
/// observations into A2.
BatchSplit default_split(const LinearProblem& p);

/// Gain-form solve dx = A1^{-1}((I-KJ)b1 + Kb2) that multiplies by Sigma1
/// instead of inverting it; exact for singular and even zero Sigma1.
Solution solve_batch(const LinearProblem& p, const BatchSplit& split,
                     Precision prec = Precision::Double);
Solution solve_batch(const LinearProblem& p,
                     Precision prec = Precision::Double);

/// Two-filter smoother for unary-observation chains; never inverts Q or P.
Solution solve_bifm(const LinearProblem& p,
                    Precision prec = Precision::Double);

/// BIFM on the stochastically cloned augmented system; handles relative
/// observations while keeping the no-inversion property.
Solution solve_scbifm(const LinearProblem& p,
                      Precision prec = Precision::Double);

Solution solve(SolverKind kind, const LinearProblem& p,
               Precision prec = Precision::Double);

}  // namespace fgs
