#pragma once

#include "traffic/scheduler.hpp"

namespace traffic {

/// Exhaustive reference solver for desk-scale instances: enumerates every
/// route choice and every window-respecting enter/exit assignment, validating
/// constraints and scoring objectives from scratch. Guarded to at most 3
/// controlled vehicles, 8 streets and horizon 15; larger instances are
/// refused with std::invalid_argument. Test oracle only.
SolveResult brute_force_solve(const SchedulingInstance& instance);

}  // namespace traffic
