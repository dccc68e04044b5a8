#include "fgsmooth/solvers.hpp"

#include "fgsmooth/batch_solver.hpp"
#include "fgsmooth/bifm.hpp"
#include "fgsmooth/numeric.hpp"
#include "fgsmooth/scbifm.hpp"
#include "fgsmooth/sqrt_solver.hpp"

#include <algorithm>
#include <numeric>

namespace fgs {

std::optional<SolverKind> solver_from_name(const std::string& name) {
  if (name == "sqrt") return SolverKind::Sqrt;
  if (name == "batch") return SolverKind::Batch;
  if (name == "bifm") return SolverKind::Bifm;
  if (name == "scbifm") return SolverKind::Scbifm;
  return std::nullopt;
}

std::optional<Precision> precision_from_name(const std::string& name) {
  if (name == "single") return Precision::Single;
  if (name == "double") return Precision::Double;
  return std::nullopt;
}

namespace {

template <class T>
Solution run_sqrt(const LinearProblem& p) {
  const auto d = detail::cast_problem<T>(p);
  const VecX<T> x = sqrt_solve_in<T>(p.layout, d);
  return {x.template cast<double>(), {}};
}

template <class T>
Solution run_batch_chain(const LinearProblem& p) {
  const auto d = detail::cast_problem<T>(p);
  const VecX<T> x = detail::batch_solve_chain_in<T>(p.layout, d);
  return {x.template cast<double>(), {}};
}

template <class T>
Solution run_smoother(
    std::pair<VecX<T>, std::vector<MatX<T>>> (*core)(const LinearProblem&),
    const LinearProblem& p) {
  auto [x, covs] = core(p);
  Solution s;
  s.delta = x.template cast<double>();
  s.marginals.reserve(covs.size());
  for (const auto& c : covs) s.marginals.push_back(c.template cast<double>());
  return s;
}

bool sigma1_singular(const LinearProblem& p) {
  auto singular = [](const MatrixXd& m) {
    const double tol = 1e-12 * std::max(1.0, std::abs(m.trace()));
    return min_symmetric_eigenvalue(m) <= tol;
  };
  if (singular(p.prior.P0)) return true;
  for (const auto& f : p.props)
    if (singular(f.Q)) return true;
  return false;
}

// Factor ids: 0 = prior, 1..N-1 = propagations, then observations.
bool is_chain_split(const LinearProblem& p, const BatchSplit& split) {
  const int n_chain = 1 + static_cast<int>(p.props.size());
  if (static_cast<int>(split.rows1.size()) != n_chain) return false;
  std::vector<int> sorted1 = split.rows1;
  std::sort(sorted1.begin(), sorted1.end());
  for (int i = 0; i < n_chain; ++i)
    if (sorted1[static_cast<size_t>(i)] != i) return false;
  return true;
}

/// Dense gain-form solve for a caller-chosen split; A1 is gathered from the
/// selected factor rows and LU-factored once.
template <class T>
VecX<T> batch_solve_dense(const LinearProblem& p, const BatchSplit& split) {
  auto [a, b, sigma] = assemble_stacked(p);
  const int total = p.layout.total_dim();

  // Row span per factor id in the stacked system.
  std::vector<std::pair<int, int>> spans;
  int r = 0;
  spans.emplace_back(r, p.layout.dim(0));
  r += p.layout.dim(0);
  for (const auto& f : p.props) {
    spans.emplace_back(r, static_cast<int>(f.a.size()));
    r += static_cast<int>(f.a.size());
  }
  for (const auto& f : p.obs) {
    spans.emplace_back(r, f.residual_dim());
    r += f.residual_dim();
  }

  auto gather = [&](const std::vector<int>& ids, MatX<T>& ga, VecX<T>& gb,
                    MatX<T>& gs) {
    int rows = 0;
    for (int id : ids) rows += spans.at(static_cast<size_t>(id)).second;
    ga.setZero(rows, total);
    gb.setZero(rows);
    gs.setZero(rows, rows);
    int o = 0;
    for (int id : ids) {
      const auto [start, len] = spans.at(static_cast<size_t>(id));
      ga.middleRows(o, len) = a.middleRows(start, len).template cast<T>();
      gb.segment(o, len) = b.segment(start, len).template cast<T>();
      gs.block(o, o, len, len) =
          sigma.block(start, start, len, len).template cast<T>();
      o += len;
    }
  };

  MatX<T> a1, s1, a2, s2;
  VecX<T> b1, b2;
  gather(split.rows1, a1, b1, s1);
  gather(split.rows2, a2, b2, s2);
  if (a1.rows() != total)
    throw SolveError(ErrorCode::IllPosed,
                     "A1 must be square: got " + std::to_string(a1.rows()) +
                         " rows for " + std::to_string(total) + " columns");

  Eigen::PartialPivLU<MatX<T>> lu(a1);
  if (a2.rows() == 0) return lu.solve(b1);

  const MatX<T> jt = lu.transpose().solve(MatX<T>(a2.transpose()));
  const MatX<T> j = jt.transpose();
  MatX<T> m = j * s1 * jt + s2;
  const VecX<T> s = chol_solve<T>(m, VecX<T>(b2 - j * b1));
  const VecX<T> rhs = b1 + s1 * (jt * s);
  return lu.solve(rhs);
}

}  // namespace

Solution solve_sqrt(const LinearProblem& p, Precision prec) {
  p.validate();
  return prec == Precision::Single ? run_sqrt<float>(p) : run_sqrt<double>(p);
}

BatchSplit default_split(const LinearProblem& p) {
  BatchSplit split;
  const int n_chain = 1 + static_cast<int>(p.props.size());
  split.rows1.resize(static_cast<size_t>(n_chain));
  std::iota(split.rows1.begin(), split.rows1.end(), 0);
  split.rows2.resize(p.obs.size());
  std::iota(split.rows2.begin(), split.rows2.end(), n_chain);
  if (split.rows2.empty() && sigma1_singular(p))
    throw SolveError(ErrorCode::IllPosed,
                     "no well-conditioned factors to determine the singular "
                     "directions");
  return split;
}

Solution solve_batch(const LinearProblem& p, const BatchSplit& split,
                     Precision prec) {
  p.validate();
  if (is_chain_split(p, split)) {
    return prec == Precision::Single ? run_batch_chain<float>(p)
                                     : run_batch_chain<double>(p);
  }
  if (prec == Precision::Single)
    return {batch_solve_dense<float>(p, split).cast<double>(), {}};
  return {batch_solve_dense<double>(p, split), {}};
}

Solution solve_batch(const LinearProblem& p, Precision prec) {
  return solve_batch(p, default_split(p), prec);
}

Solution solve_bifm(const LinearProblem& p, Precision prec) {
  p.validate();
  return prec == Precision::Single
             ? run_smoother<float>(&bifm_solve_in<float>, p)
             : run_smoother<double>(&bifm_solve_in<double>, p);
}

namespace {

template <class T>
std::pair<VecX<T>, std::vector<MatX<T>>> scbifm_with_schedule(
    const LinearProblem& p) {
  return scbifm_solve_in<T>(p, build_clone_schedule(p));
}

}  // namespace

Solution solve_scbifm(const LinearProblem& p, Precision prec) {
  p.validate();
  return prec == Precision::Single
             ? run_smoother<float>(&scbifm_with_schedule<float>, p)
             : run_smoother<double>(&scbifm_with_schedule<double>, p);
}

Solution solve(SolverKind kind, const LinearProblem& p, Precision prec) {
  switch (kind) {
    case SolverKind::Sqrt: return solve_sqrt(p, prec);
    case SolverKind::Batch: return solve_batch(p, prec);
    case SolverKind::Bifm: return solve_bifm(p, prec);
    case SolverKind::Scbifm: return solve_scbifm(p, prec);
  }
  throw SolveError(ErrorCode::SolverFailure, "unknown solver kind");
}

}  // namespace fgs
