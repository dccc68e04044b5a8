#include "support/oracles.hpp"

#include <algorithm>

namespace oracles {

namespace {

// Dense selection matrix keeping the listed block positions of a
// composition with uniform-by-position dims.
MatrixXd selection_matrix(const std::vector<int>& dims,
                          const std::vector<int>& keep) {
  int total = 0;
  for (int d : dims) total += d;
  int kept = 0;
  for (int pos : keep) kept += dims[static_cast<size_t>(pos)];
  MatrixXd d_mat = MatrixXd::Zero(kept, total);
  int row = 0;
  for (int pos : keep) {
    int off = 0;
    for (int j = 0; j < pos; ++j) off += dims[static_cast<size_t>(j)];
    const int dim = dims[static_cast<size_t>(pos)];
    d_mat.block(row, off, dim, dim).setIdentity();
    row += dim;
  }
  return d_mat;
}

std::vector<int> comp_dims(const fgs::LinearProblem& p,
                           const std::vector<int>& comp) {
  std::vector<int> dims;
  for (int idx : comp) dims.push_back(p.layout.dim(idx));
  return dims;
}

int total_of(const std::vector<int>& dims) {
  int t = 0;
  for (int d : dims) t += d;
  return t;
}

}  // namespace

std::vector<AugmentedFilterState> augmented_kalman_filter(
    const fgs::LinearProblem& p, const fgs::CloneSchedule& sched) {
  const int n = p.layout.count();
  std::vector<AugmentedFilterState> out;

  AugmentedFilterState st;
  st.composition = {0};
  st.x = p.prior.a0;
  st.P = p.prior.P0;

  for (int k = 0; k < n; ++k) {
    if (k > 0) {
      const auto& target = sched.composition(k);
      const auto& f = p.props[static_cast<size_t>(k - 1)];

      // D_k: drop the clones that are absent from the next composition.
      std::vector<int> keep{0};
      {
        size_t t = sched.has_duplicate(k) ? 2 : 1;
        for (size_t j = 1; j < st.composition.size(); ++j) {
          if (t < target.size() && st.composition[j] == target[t]) {
            keep.push_back(static_cast<int>(j));
            ++t;
          }
        }
      }
      const MatrixXd d_mat = selection_matrix(comp_dims(p, st.composition), keep);

      // F^p_k: propagate the live block, clones static.
      std::vector<int> kept_comp;
      for (int pos : keep)
        kept_comp.push_back(st.composition[static_cast<size_t>(pos)]);
      const auto kept_dims = comp_dims(p, kept_comp);
      const int kept_total = total_of(kept_dims);
      const int rest = kept_total - p.layout.dim(k - 1);
      MatrixXd fp = MatrixXd::Zero(p.layout.dim(k) + rest, kept_total);
      fp.topLeftCorner(p.layout.dim(k), p.layout.dim(k - 1)) = f.F;
      fp.bottomRightCorner(rest, rest).setIdentity();

      // Dup_{k+1}: duplicate the arriving state when needed.
      MatrixXd dup = MatrixXd::Identity(p.layout.dim(k) + rest,
                                        p.layout.dim(k) + rest);
      if (sched.has_duplicate(k)) {
        MatrixXd c = MatrixXd::Zero(2 * p.layout.dim(k) + rest,
                                    p.layout.dim(k) + rest);
        c.topLeftCorner(p.layout.dim(k), p.layout.dim(k)).setIdentity();
        c.block(p.layout.dim(k), 0, p.layout.dim(k), p.layout.dim(k))
            .setIdentity();
        c.bottomRightCorner(rest, rest).setIdentity();
        dup = c;
      }

      const MatrixXd f_tilde = dup * fp * d_mat;
      VectorXd u_tilde = VectorXd::Zero(p.layout.dim(k) + rest);
      u_tilde.head(p.layout.dim(k)) = f.a;
      MatrixXd q_tilde =
          MatrixXd::Zero(p.layout.dim(k) + rest, p.layout.dim(k) + rest);
      q_tilde.topLeftCorner(p.layout.dim(k), p.layout.dim(k)) = f.Q;

      st.x = f_tilde * st.x + dup * u_tilde;
      st.P = f_tilde * st.P * f_tilde.transpose() +
             dup * q_tilde * dup.transpose();
      st.composition = target;
    } else if (sched.has_duplicate(0)) {
      const int d0 = p.layout.dim(0);
      MatrixXd c = MatrixXd::Zero(2 * d0, d0);
      c.topRows(d0).setIdentity();
      c.bottomRows(d0).setIdentity();
      st.x = c * st.x;
      st.P = (c * st.P * c.transpose()).eval();
      st.composition = sched.composition(0);
    }

    // Updates with the stacked observation rows anchored at k.
    for (const auto& obs : p.obs) {
      if (obs.anchor() != k) continue;
      const auto dims = comp_dims(p, st.composition);
      MatrixXd h = MatrixXd::Zero(obs.residual_dim(), total_of(dims));
      for (const auto& [i, hi] : obs.involved) {
        int pos = -1;
        if (i == k) {
          pos = 0;
        } else {
          for (size_t j = 1; j < st.composition.size(); ++j)
            if (st.composition[j] == i) {
              pos = static_cast<int>(j);
              break;
            }
        }
        int off = 0;
        for (int j = 0; j < pos; ++j) off += dims[static_cast<size_t>(j)];
        h.middleCols(off, hi.cols()) = hi;
      }
      const MatrixXd s = h * st.P * h.transpose() + obs.R;
      const MatrixXd gain = st.P * h.transpose() * s.fullPivLu().inverse();
      st.x += gain * (obs.c - h * st.x);
      const MatrixXd ikh =
          MatrixXd::Identity(st.P.rows(), st.P.cols()) - gain * h;
      st.P = ikh * st.P * ikh.transpose() + gain * obs.R * gain.transpose();
      st.P = 0.5 * (st.P + st.P.transpose());
    }
    out.push_back(st);
  }
  return out;
}

std::pair<MatrixXd, VectorXd> observe_then_marginalize(
    const MatrixXd& J, const VectorXd& y, int keep_offset, int drop_offset,
    int dim, double r_small) {
  const int n = static_cast<int>(J.rows());
  MatrixXd s = MatrixXd::Zero(dim, n);
  s.middleCols(keep_offset, dim).setIdentity();
  s.middleCols(drop_offset, dim) -= MatrixXd::Identity(dim, dim);

  const MatrixXd r_inv = MatrixXd::Identity(dim, dim) / r_small;
  const MatrixXd j_obs = J + s.transpose() * r_inv * s;
  const VectorXd y_obs = y;  // the virtual measurement takes value zero

  // Schur-marginalize the drop block.
  std::vector<int> keep_rows;
  for (int i = 0; i < n; ++i)
    if (i < drop_offset || i >= drop_offset + dim) keep_rows.push_back(i);
  const int m = static_cast<int>(keep_rows.size());
  MatrixXd jaa(m, m), jab(m, dim), jbb(dim, dim);
  VectorXd ya(m), yb(dim);
  for (int r = 0; r < m; ++r) {
    ya(r) = y_obs(keep_rows[static_cast<size_t>(r)]);
    for (int c = 0; c < m; ++c)
      jaa(r, c) = j_obs(keep_rows[static_cast<size_t>(r)],
                        keep_rows[static_cast<size_t>(c)]);
    for (int c = 0; c < dim; ++c)
      jab(r, c) = j_obs(keep_rows[static_cast<size_t>(r)], drop_offset + c);
  }
  for (int r = 0; r < dim; ++r) {
    yb(r) = y_obs(drop_offset + r);
    for (int c = 0; c < dim; ++c)
      jbb(r, c) = j_obs(drop_offset + r, drop_offset + c);
  }
  const MatrixXd jbb_inv = jbb.fullPivLu().inverse();
  return {jaa - jab * jbb_inv * jab.transpose(), ya - jab * jbb_inv * yb};
}

MatrixXd random_spd(fgs::Rng& rng, int dim, double min_eig, double max_eig) {
  MatrixXd g(dim, dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) g(r, c) = rng.normal();
  const Eigen::HouseholderQR<MatrixXd> qr(g);
  const MatrixXd q = qr.householderQ();
  VectorXd eig(dim);
  for (int i = 0; i < dim; ++i)
    eig(i) = min_eig + (max_eig - min_eig) * rng.uniform();
  return q * eig.asDiagonal() * q.transpose();
}

fgs::LinearProblem random_problem(fgs::Rng& rng,
                                  const RandomProblemOptions& opt) {
  const int n = 2 + static_cast<int>(rng.uniform() * (opt.max_states - 1));
  const int d = 1 + static_cast<int>(rng.uniform() * opt.max_dim);

  auto randn_vec = [&](int size) {
    VectorXd v(size);
    for (int i = 0; i < size; ++i) v(i) = rng.normal();
    return v;
  };

  fgs::LinearProblem p;
  p.layout = fgs::VariableLayout::uniform(n, d);
  p.prior.a0 = randn_vec(d);
  p.prior.P0 = random_spd(rng, d, opt.min_eig, opt.max_eig);
  for (int k = 0; k + 1 < n; ++k) {
    fgs::PropagationFactor f;
    f.k = k;
    MatrixXd jitter(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) jitter(r, c) = rng.normal();
    f.F = MatrixXd::Identity(d, d) + 0.3 * jitter;
    f.a = randn_vec(d);
    f.Q = random_spd(rng, d, opt.min_eig, opt.max_eig);
    p.props.push_back(std::move(f));
  }

  const int num_obs = 1 + static_cast<int>(rng.uniform() * 4);
  for (int j = 0; j < num_obs; ++j) {
    fgs::ObservationFactor f;
    const int dz = 1 + static_cast<int>(rng.uniform() * d);
    const int anchor = static_cast<int>(rng.uniform() * n);
    const bool pairwise = !opt.unary_only && anchor > 0 && rng.uniform() < 0.5;
    auto randn_mat = [&](int rows, int cols) {
      MatrixXd m(rows, cols);
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = rng.normal();
      return m;
    };
    if (pairwise) {
      const int other = static_cast<int>(rng.uniform() * anchor);
      f.involved.emplace_back(other, randn_mat(dz, d));
    }
    f.involved.emplace_back(anchor, randn_mat(dz, d));
    f.c = randn_vec(dz);
    f.R = random_spd(rng, dz, opt.min_eig, opt.max_eig);
    p.obs.push_back(std::move(f));
  }
  p.validate();
  return p;
}

}  // namespace oracles
