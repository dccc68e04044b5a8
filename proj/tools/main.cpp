#include "fgsmooth/fgsmooth.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace {

std::vector<fgs::SolverKind> parse_solvers(const std::string& csv) {
  std::vector<fgs::SolverKind> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto s = fgs::solver_from_name(item);
    if (!s) throw CLI::ValidationError("--solvers", "unknown solver '" + item + "'");
    out.push_back(*s);
  }
  if (out.empty()) throw CLI::ValidationError("--solvers", "empty solver list");
  return out;
}

std::vector<fgs::Precision> parse_precisions(const std::string& csv) {
  std::vector<fgs::Precision> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto p = fgs::precision_from_name(item);
    if (!p)
      throw CLI::ValidationError("--precisions", "unknown precision '" + item + "'");
    out.push_back(*p);
  }
  if (out.empty()) throw CLI::ValidationError("--precisions", "empty list");
  return out;
}

std::vector<double> parse_dts(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw CLI::ValidationError("--dts", "bad time step '" + item + "'");
    }
    if (out.back() <= 0.0)
      throw CLI::ValidationError("--dts", "time steps must be positive");
  }
  if (out.empty()) throw CLI::ValidationError("--dts", "empty dt list");
  return out;
}

int cmd_solve(const std::string& input, const std::string& solver,
              const std::string& precision) {
  const auto kind = fgs::solver_from_name(solver);
  const auto prec = fgs::precision_from_name(precision);
  if (!kind || !prec) {
    std::cerr << "ParseError: unknown solver or precision\n";
    return 1;
  }
  fgs::LinearProblem problem;
  try {
    problem = fgs::read_problem_file(input);
  } catch (const fgs::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  try {
    const fgs::Solution sol = fgs::solve(*kind, problem, *prec);
    char buf[40];
    for (int k = 0; k < problem.layout.count(); ++k) {
      std::printf("X%d:", k);
      const fgs::VectorXd x = sol.state(problem.layout, k);
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        std::snprintf(buf, sizeof(buf), " %.9e", x(i));
        std::fputs(buf, stdout);
      }
      std::printf("\n");
    }
    return 0;
  } catch (const fgs::SolveError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
}

int write_csv_file(const std::string& path, const fgs::SweepResult& result,
                   bool monte_carlo) {
  std::ofstream f(path);
  if (!f) {
    std::cerr << "ParseError: cannot open output '" << path << "'\n";
    return 1;
  }
  if (monte_carlo)
    fgs::write_mc_csv(f, result);
  else
    fgs::write_sweep_csv(f, result);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Factor-graph smoothing solvers and conditioning experiments"};
  app.require_subcommand(1);

  std::string input, out;
  std::string solver = "scbifm", precision = "double";
  std::string solvers_csv = "sqrt,batch,scbifm";
  std::string precisions_csv = "single,double";
  std::string dts_csv = "1e-1,1e-2,1e-3,1e-4";
  int runs = 200;
  uint64_t seed = 42;

  auto* solve_cmd = app.add_subcommand("solve", "Solve a problem file");
  solve_cmd->add_option("--input", input, "problem file")->required();
  solve_cmd->add_option("--solver", solver, "sqrt|batch|bifm|scbifm");
  solve_cmd->add_option("--precision", precision, "single|double");

  auto* sweep_cmd =
      app.add_subcommand("toy-sweep", "Noise-free conditioning sweep over dt");
  sweep_cmd->add_option("--dts", dts_csv, "comma list of time steps");
  sweep_cmd->add_option("--solvers", solvers_csv, "comma list of solvers");
  sweep_cmd->add_option("--precisions", precisions_csv, "comma list");
  sweep_cmd->add_option("--out", out, "output CSV path")->required();

  auto* mc_cmd =
      app.add_subcommand("monte-carlo", "Noisy Monte-Carlo solver comparison");
  mc_cmd->add_option("--runs", runs, "number of runs per dt");
  mc_cmd->add_option("--seed", seed, "master RNG seed");
  mc_cmd->add_option("--dts", dts_csv, "comma list of time steps");
  mc_cmd->add_option("--solvers", solvers_csv, "comma list of solvers");
  mc_cmd->add_option("--precisions", precisions_csv, "comma list");
  mc_cmd->add_option("--out", out, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "ParseError: " << e.what() << "\n";
    return 1;
  }

  try {
    if (solve_cmd->parsed()) return cmd_solve(input, solver, precision);

    const auto solver_list = parse_solvers(solvers_csv);
    const auto precision_list = parse_precisions(precisions_csv);
    const auto dts = parse_dts(dts_csv);

    if (sweep_cmd->parsed()) {
      const auto result = fgs::run_dt_sweep(fgs::conditioning_sweep_config(),
                                            dts, solver_list, precision_list);
      return write_csv_file(out, result, false);
    }

    if (mc_cmd->parsed()) {
      if (runs <= 0) {
        std::cerr << "ParseError: --runs must be positive\n";
        return 1;
      }
      fgs::ToyConfig cfg;
      const auto result = fgs::run_monte_carlo(runs, cfg, dts, solver_list,
                                               precision_list, seed);
      if (const int rc = write_csv_file(out, result, true)) return rc;
      std::printf("mean distance to batch-double over %d runs\n", runs);
      for (double dt : dts) {
        for (const auto s : solver_list) {
          for (const auto p : precision_list) {
            std::printf("dt=%.3e %-7s %-6s %.9e\n", dt, fgs::solver_name(s),
                        fgs::precision_name(p),
                        result.mean_distance(dt, s, p));
          }
        }
      }
      return 0;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "ParseError: " << e.what() << "\n";
    return 1;
  } catch (const fgs::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const fgs::SolveError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "ParseError: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
