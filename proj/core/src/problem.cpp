#include "fgsmooth/problem.hpp"

#include "fgsmooth/numeric.hpp"

#include <algorithm>
#include <set>

namespace fgs {

VariableLayout VariableLayout::uniform(int count, int dim) {
  return with_dims(std::vector<int>(static_cast<size_t>(count), dim));
}

VariableLayout VariableLayout::with_dims(std::vector<int> dims) {
  VariableLayout l;
  if (dims.empty())
    throw SolveError(ErrorCode::DimensionMismatch, "layout with no variables");
  l.offsets_.reserve(dims.size());
  int off = 0;
  for (int d : dims) {
    if (d <= 0)
      throw SolveError(ErrorCode::DimensionMismatch,
                       "non-positive variable dimension");
    l.offsets_.push_back(off);
    off += d;
  }
  l.dims_ = std::move(dims);
  l.total_ = off;
  return l;
}

bool VariableLayout::is_uniform() const {
  return std::all_of(dims_.begin(), dims_.end(),
                     [&](int d) { return d == dims_.front(); });
}

int ObservationFactor::anchor() const {
  int a = -1;
  for (const auto& [i, h] : involved) a = std::max(a, i);
  return a;
}

namespace {

// PSD within -1e-9 * trace on the smallest eigenvalue. An indefinite
// matrix with nonpositive trace fails outright.
bool is_psd(const MatrixXd& m) {
  if (m.rows() != m.cols()) return false;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() >
      1e-6 * std::max(1.0, m.cwiseAbs().maxCoeff()))
    return false;
  return min_symmetric_eigenvalue(m) >= -1e-9 * m.trace();
}

bool is_pd(const MatrixXd& m) {
  return is_psd(m) && min_symmetric_eigenvalue(m) > 0.0;
}

}  // namespace

void LinearProblem::validate() const {
  const int n = layout.count();
  if (n <= 0)
    throw SolveError(ErrorCode::DimensionMismatch, "problem with no states");
  if (prior.a0.size() != layout.dim(0) || prior.P0.rows() != layout.dim(0) ||
      prior.P0.cols() != layout.dim(0))
    throw SolveError(ErrorCode::DimensionMismatch, "prior block size");
  if (!is_psd(prior.P0))
    throw SolveError(ErrorCode::NotPositiveDefinite, "prior covariance not PSD");

  if (static_cast<int>(props.size()) != n - 1)
    throw SolveError(ErrorCode::DimensionMismatch,
                     "need exactly one propagation factor per consecutive pair");
  for (int k = 0; k < n - 1; ++k) {
    const auto& f = props[static_cast<size_t>(k)];
    if (f.k != k)
      throw SolveError(ErrorCode::DimensionMismatch,
                       "propagation factors out of order");
    const int dk = layout.dim(k), dk1 = layout.dim(k + 1);
    if (f.F.rows() != dk1 || f.F.cols() != dk || f.a.size() != dk1 ||
        f.Q.rows() != dk1 || f.Q.cols() != dk1)
      throw SolveError(ErrorCode::DimensionMismatch,
                       "propagation block size at k=" + std::to_string(k));
    if (!is_psd(f.Q))
      throw SolveError(ErrorCode::NotPositiveDefinite,
                       "process covariance not PSD at k=" + std::to_string(k));
  }

  for (size_t j = 0; j < obs.size(); ++j) {
    const auto& f = obs[j];
    if (f.involved.empty())
      throw SolveError(ErrorCode::DimensionMismatch,
                       "observation " + std::to_string(j) + " involves no state");
    std::set<int> seen;
    const int dz = f.residual_dim();
    if (dz <= 0 || f.R.rows() != dz || f.R.cols() != dz)
      throw SolveError(ErrorCode::DimensionMismatch,
                       "observation " + std::to_string(j) + " residual/noise size");
    for (const auto& [i, h] : f.involved) {
      if (i < 0 || i >= n)
        throw SolveError(ErrorCode::DimensionMismatch,
                         "observation index out of range");
      if (!seen.insert(i).second)
        throw SolveError(ErrorCode::DimensionMismatch,
                         "observation involves a state twice");
      if (h.rows() != dz || h.cols() != layout.dim(i))
        throw SolveError(ErrorCode::DimensionMismatch,
                         "observation H block size at index " + std::to_string(i));
    }
    // BIFM-family solvers invert R, so positive definiteness is a model
    // invariant, not a per-solver check.
    if (!is_pd(f.R))
      throw SolveError(ErrorCode::NotPositiveDefinite,
                       "observation covariance not PD");
  }
}

std::tuple<MatrixXd, VectorXd, MatrixXd> assemble_stacked(
    const LinearProblem& p) {
  const int n = p.layout.total_dim();
  int rows = p.layout.dim(0);
  for (const auto& f : p.props) rows += static_cast<int>(f.a.size());
  for (const auto& f : p.obs) rows += f.residual_dim();

  MatrixXd a = MatrixXd::Zero(rows, n);
  VectorXd b = VectorXd::Zero(rows);
  MatrixXd sigma = MatrixXd::Zero(rows, rows);

  int r = 0;
  const int d0 = p.layout.dim(0);
  a.block(0, 0, d0, d0).setIdentity();
  b.head(d0) = p.prior.a0;
  sigma.block(0, 0, d0, d0) = p.prior.P0;
  r += d0;

  for (const auto& f : p.props) {
    const int dk1 = static_cast<int>(f.a.size());
    a.block(r, p.layout.offset(f.k), dk1, p.layout.dim(f.k)) = -f.F;
    a.block(r, p.layout.offset(f.k + 1), dk1, dk1).setIdentity();
    b.segment(r, dk1) = f.a;
    sigma.block(r, r, dk1, dk1) = f.Q;
    r += dk1;
  }

  for (const auto& f : p.obs) {
    const int dz = f.residual_dim();
    for (const auto& [i, h] : f.involved)
      a.block(r, p.layout.offset(i), dz, p.layout.dim(i)) = h;
    b.segment(r, dz) = f.c;
    sigma.block(r, r, dz, dz) = f.R;
    r += dz;
  }
  return {std::move(a), std::move(b), std::move(sigma)};
}

MatrixXd assemble_whitened(const LinearProblem& p) {
  auto [a, b, sigma] = assemble_stacked(p);
  MatrixXd wa(a.rows(), a.cols());
  int r = 0;
  auto whiten = [&](const MatrixXd& cov) {
    const int d = static_cast<int>(cov.rows());
    SpdFactorization<double> f;
    try {
      f = SpdFactorization<double>::factor(cov);
    } catch (const SolveError&) {
      throw SolveError(ErrorCode::SingularCovariance,
                       "cannot whiten singular covariance block");
    }
    wa.middleRows(r, d) = f.forward_solve(a.middleRows(r, d));
    r += d;
  };
  whiten(p.prior.P0);
  for (const auto& f : p.props) whiten(f.Q);
  for (const auto& f : p.obs) whiten(f.R);
  return wa;
}

double eval_cost(const LinearProblem& p, const VectorXd& dx) {
  if (dx.size() != p.layout.total_dim())
    throw SolveError(ErrorCode::DimensionMismatch, "eval_cost state size");
  double cost = 0.0;
  auto add = [&cost](const MatrixXd& cov, const VectorXd& e) {
    SpdFactorization<double> f;
    try {
      f = SpdFactorization<double>::factor(cov);
    } catch (const SolveError&) {
      throw SolveError(ErrorCode::SingularCovariance,
                       "cost undefined for singular covariance block");
    }
    cost += f.forward_solve(e).squaredNorm();
  };

  add(p.prior.P0, dx.head(p.layout.dim(0)) - p.prior.a0);
  for (const auto& f : p.props) {
    const VectorXd e =
        dx.segment(p.layout.offset(f.k + 1), p.layout.dim(f.k + 1)) -
        f.F * dx.segment(p.layout.offset(f.k), p.layout.dim(f.k)) - f.a;
    add(f.Q, e);
  }
  for (const auto& f : p.obs) {
    VectorXd e = -f.c;
    for (const auto& [i, h] : f.involved)
      e += h * dx.segment(p.layout.offset(i), p.layout.dim(i));
    add(f.R, e);
  }
  return cost;
}

}  // namespace fgs
