#pragma once

#include "fgsmooth/problem.hpp"

#include <iosfwd>
#include <string>

namespace fgs {

/// Line-oriented problem format (uniform state dimension, decimal numbers,
/// locale-independent, `#` starts a comment):
///
///   vars <count> <d_x>
///   prior <a0...> cov <P0 row-major...>
///   prop <k> <F row-major...> <a...> cov <Q row-major...>
///   obs <anchor> <i>:<H_i row-major...> ... resid <c...> cov <R row-major...>
///
/// The residual length between `resid` and `cov` fixes the observation
/// dimension; every `<i>:` block then carries d_z*d_x entries.
LinearProblem read_problem(std::istream& is);
LinearProblem read_problem_file(const std::string& path);

void write_problem(std::ostream& os, const LinearProblem& p);

}  // namespace fgs
