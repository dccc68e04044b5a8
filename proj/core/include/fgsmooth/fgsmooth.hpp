#pragma once

#include "fgsmooth/clone_schedule.hpp"
#include "fgsmooth/experiments.hpp"
#include "fgsmooth/gauss_newton.hpp"
#include "fgsmooth/numeric.hpp"
#include "fgsmooth/problem.hpp"
#include "fgsmooth/problem_io.hpp"
#include "fgsmooth/solvers.hpp"
#include "fgsmooth/types.hpp"
