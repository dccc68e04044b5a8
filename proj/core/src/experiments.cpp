#include "fgsmooth/experiments.hpp"

#include "fgsmooth/numeric.hpp"
#include "fgsmooth/rng.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace fgs {

namespace {

double input_at(const ToyConfig& cfg, int k) {
  if (!cfg.input_profile.empty())
    return cfg.input_profile.at(static_cast<size_t>(k));
  return cfg.input;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

ToyProblem make_toy(const ToyConfig& cfg) {
  if (cfg.dt <= 0.0) throw std::invalid_argument("toy dt must be positive");
  if (cfg.chain_length < 2)
    throw std::invalid_argument("toy chain needs at least 3 states");
  const int n = cfg.chain_length;  // states 0..n
  const double dt = cfg.dt;

  Rng rng(Rng::derive(cfg.seed, 0));

  const MatrixXd f_full = [&] {
    MatrixXd f = MatrixXd::Identity(3, 3);
    f(1, 0) = -dt;
    f(2, 1) = dt;
    return f;
  }();
  // Process noise standard deviations sqrt(dt)*sigma: bias random walk,
  // accelerometer, integration uncertainty.
  const double sq = std::sqrt(dt);
  const VectorXd q_std =
      (VectorXd(3) << sq * cfg.sigma_bias, sq * cfg.sigma_acc,
       sq * cfg.sigma_int)
          .finished();
  const VectorXd q_diag = q_std.array().square();

  LinearProblem p;
  std::vector<int> dims(static_cast<size_t>(n + 1), 3);
  if (cfg.remove_p0) dims[0] = 2;  // p_0 fixed at zero and dropped
  p.layout = VariableLayout::with_dims(dims);

  // Ground truth by exact forward integration; with noise on, the sampled
  // process noise enters the truth as well.
  MatrixXd truth_states(3, n + 1);
  truth_states.col(0) << cfg.bias0, cfg.vel0, cfg.pos0;
  std::vector<VectorXd> w(static_cast<size_t>(n), VectorXd::Zero(3));
  if (cfg.with_noise) {
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < 3; ++i)
        w[static_cast<size_t>(k)](i) = q_std(i) * rng.normal();
  }
  for (int k = 0; k < n; ++k) {
    VectorXd u = VectorXd::Zero(3);
    u(1) = input_at(cfg, k);
    truth_states.col(k + 1) =
        f_full * truth_states.col(k) + u + w[static_cast<size_t>(k)];
  }

  // Prior: exact initialization when noise-free, sampled otherwise.
  const int d0 = p.layout.dim(0);
  VectorXd prior_sigma(d0);
  prior_sigma(0) = cfg.sigma_bias0;
  prior_sigma(1) = cfg.sigma_vel0;
  if (!cfg.remove_p0) prior_sigma(2) = cfg.sigma_pos0;
  p.prior.a0 = truth_states.col(0).head(d0);
  if (cfg.with_noise)
    for (int i = 0; i < d0; ++i)
      p.prior.a0(i) += prior_sigma(i) * rng.normal();
  p.prior.P0 = prior_sigma.array().square().matrix().asDiagonal();

  for (int k = 0; k < n; ++k) {
    PropagationFactor f;
    f.k = k;
    f.F = (k == 0 && cfg.remove_p0) ? MatrixXd(f_full.leftCols(2)) : f_full;
    f.a = VectorXd::Zero(3);
    f.a(1) = input_at(cfg, k);
    f.Q = q_diag.asDiagonal();
    p.props.push_back(std::move(f));
  }

  // Relative displacement measurements p_{N-1} - p_0 and p_N - p_{N-2};
  // the first becomes unary once positions are taken relative to p_0.
  const MatrixXd h = (MatrixXd(1, 3) << 0, 0, 1).finished();
  auto measure = [&](int from, int to) {
    ObservationFactor f;
    VectorXd z(1);
    z(0) = truth_states(2, to) - truth_states(2, from);
    if (cfg.with_noise) z(0) += cfg.sigma_obs * rng.normal();
    if (cfg.remove_p0 && from == 0) {
      f.involved.emplace_back(to, h);
    } else {
      f.involved.emplace_back(from, MatrixXd(-h));
      f.involved.emplace_back(to, h);
    }
    f.c = z;
    f.R = MatrixXd::Constant(1, 1, cfg.sigma_obs * cfg.sigma_obs);
    return f;
  };
  p.obs.push_back(measure(0, n - 1));
  p.obs.push_back(measure(n - 2, n));
  p.validate();

  VectorXd truth(p.layout.total_dim());
  if (cfg.remove_p0) {
    // Positions are estimated relative to the (fixed) initial one.
    truth_states.row(2).array() -= truth_states(2, 0);
  }
  for (int k = 0; k <= n; ++k) {
    const int dk = p.layout.dim(k);
    truth.segment(p.layout.offset(k), dk) = truth_states.col(k).head(dk);
  }
  return {std::move(p), std::move(truth)};
}

ToyConfig conditioning_sweep_config() {
  ToyConfig cfg;
  cfg.with_noise = false;
  cfg.remove_p0 = true;
  cfg.bias0 = 0.005;
  cfg.vel0 = 0.8;
  return cfg;
}

double SweepResult::mean_distance(double dt, SolverKind solver,
                                  Precision prec) const {
  double sum = 0.0;
  int count = 0;
  for (const auto& r : mc_rows) {
    if (r.dt == dt && r.solver == solver && r.precision == prec) {
      sum += r.distance;
      ++count;
    }
  }
  if (count == 0) return kInf;
  return sum / count;
}

SweepResult run_dt_sweep(const ToyConfig& base, const std::vector<double>& dts,
                         const std::vector<SolverKind>& solvers,
                         const std::vector<Precision>& precisions) {
  if (base.with_noise)
    throw std::invalid_argument("dt sweep requires a noise-free config");
  if (!base.remove_p0)
    throw std::invalid_argument("dt sweep requires remove_p0");

  SweepResult result;
  for (double dt : dts) {
    ToyConfig cfg = base;
    cfg.dt = dt;
    const ToyProblem toy = make_toy(cfg);
    const double cond = condition_number(assemble_whitened(toy.problem));
    for (SolverKind solver : solvers) {
      for (Precision prec : precisions) {
        double dist = kInf;
        try {
          const Solution sol = solve(solver, toy.problem, prec);
          dist = (sol.delta - toy.truth).norm();
        } catch (const SolveError&) {
          // recorded as +inf
        }
        result.rows.push_back({dt, solver, prec, cond, dist});
      }
    }
  }
  return result;
}

SweepResult run_monte_carlo(int runs, const ToyConfig& base,
                            const std::vector<double>& dts,
                            const std::vector<SolverKind>& solvers,
                            const std::vector<Precision>& precisions,
                            uint64_t seed) {
  if (runs <= 0) throw std::invalid_argument("runs must be positive");
  SweepResult result;
  for (size_t di = 0; di < dts.size(); ++di) {
    for (int run = 0; run < runs; ++run) {
      ToyConfig cfg = base;
      cfg.dt = dts[di];
      cfg.with_noise = true;
      cfg.seed = Rng::derive(seed, di * static_cast<size_t>(runs) +
                                       static_cast<size_t>(run));
      const ToyProblem toy = make_toy(cfg);
      const VectorXd reference = solve_batch(toy.problem).delta;
      for (SolverKind solver : solvers) {
        for (Precision prec : precisions) {
          double dist = kInf;
          try {
            const Solution sol = solve(solver, toy.problem, prec);
            dist = (sol.delta - reference).norm();
          } catch (const SolveError&) {
          }
          result.mc_rows.push_back({run, dts[di], solver, prec, dist});
        }
      }
    }
  }
  return result;
}

namespace {

// Scientific notation with 9 significant digits, locale-independent.
std::string sci(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto [end, ec] =
      std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::scientific, 8);
  return std::string(buf, end);
}

}  // namespace

void write_sweep_csv(std::ostream& os, const SweepResult& result) {
  os << "dt,solver,precision,cond,distance\n";
  for (const auto& r : result.rows) {
    os << sci(r.dt) << ',' << solver_name(r.solver) << ','
       << precision_name(r.precision) << ',' << sci(r.cond) << ','
       << sci(r.distance) << '\n';
  }
}

void write_mc_csv(std::ostream& os, const SweepResult& result) {
  os << "run,dt,solver,precision,distance\n";
  for (const auto& r : result.mc_rows) {
    os << r.run << ',' << sci(r.dt) << ',' << solver_name(r.solver) << ','
       << precision_name(r.precision) << ',' << sci(r.distance) << '\n';
  }
}

}  // namespace fgs
