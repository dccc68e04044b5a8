#pragma once

#include "fgsmooth/problem.hpp"
#include "fgsmooth/solvers.hpp"

#include <iosfwd>
#include <vector>

namespace fgs {

/// Linear accelerometer-bias navigation chain: state (b, v, p), transition
/// [[1,0,0],[-dt,1,0],[0,dt,1]], constant input entering the velocity row,
/// and relative position observations at the last two steps. With remove_p0
/// the positions are expressed relative to p_0 and the initial state shrinks
/// to (b, v), which turns the first observation into a unary one.
struct ToyConfig {
  double dt = 1e-2;
  int chain_length = 4;  // states 0..N

  // Process noise: the covariance diagonal is sqrt(dt) * sigma, the values
  // below reflecting high-grade inertial sensors.
  double sigma_bias = 1e-3;
  double sigma_acc = 1e-2;
  double sigma_int = 1e-3;

  // Initial standard deviations and observation variance.
  double sigma_bias0 = 1e-2;
  double sigma_vel0 = 1.0;
  double sigma_pos0 = 1.0;
  double sigma_obs = 0.1;

  double input = 1.0;                 // constant acceleration command u_k
  std::vector<double> input_profile;  // optional per-step override

  // True initial state (bias, velocity, position) the data is generated
  // from; the prior is centered on it (exactly when noise-free).
  double bias0 = 0.0;
  double vel0 = 0.0;
  double pos0 = 0.0;

  bool with_noise = false;
  bool remove_p0 = false;
  uint64_t seed = 0;
};

struct ToyProblem {
  LinearProblem problem;
  VectorXd truth;  // stacked ground-truth trajectory over problem.layout
};

ToyProblem make_toy(const ToyConfig& cfg);

/// Canonical configuration of the noise-free conditioning study: positions
/// relative to p_0, and a generic cruising trajectory (nonzero bias and
/// fractional velocity) so that no state component is exactly representable
/// in binary32 — a degenerate all-integer trajectory would hide the
/// floating-point behavior the study measures.
ToyConfig conditioning_sweep_config();

struct SweepRow {
  double dt;
  SolverKind solver;
  Precision precision;
  double cond;
  double distance;
};

struct McRow {
  int run;
  double dt;
  SolverKind solver;
  Precision precision;
  double distance;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<McRow> mc_rows;

  double mean_distance(double dt, SolverKind solver, Precision prec) const;
};

/// Noise-free conditioning study: per dt, the condition number of the
/// whitened Jacobian and each solver's distance to the true minimum (the
/// exactly-initialized ground truth). Requires a noise-free config with
/// remove_p0 set; solver failures record +inf, never abort.
SweepResult run_dt_sweep(const ToyConfig& base, const std::vector<double>& dts,
                         const std::vector<SolverKind>& solvers,
                         const std::vector<Precision>& precisions);

/// Noisy Monte-Carlo study: per run and dt, distance of every
/// (solver, precision) to the Batch-Double reference on the same data.
/// Per-run seeds derive from the master seed, so results are reproducible
/// bit-exactly.
SweepResult run_monte_carlo(int runs, const ToyConfig& base,
                            const std::vector<double>& dts,
                            const std::vector<SolverKind>& solvers,
                            const std::vector<Precision>& precisions,
                            uint64_t seed);

/// CSV emission, header `dt,solver,precision,cond,distance`, scientific
/// notation with 9 significant digits.
void write_sweep_csv(std::ostream& os, const SweepResult& result);

/// CSV emission, header `run,dt,solver,precision,distance`.
void write_mc_csv(std::ostream& os, const SweepResult& result);

}  // namespace fgs
