#pragma once

#include <compare>
#include <string>
#include <vector>

#include "traffic/network.hpp"
#include "traffic/preprocess.hpp"

namespace traffic {

/// One scheduling round: controlled vehicles pick a route and enter/exit
/// steps, simulated vehicles are fixed constants. All times are absolute
/// steps in [0, horizon].
struct SchedulingInstance {
    Network network;  // contracted
    Step horizon = 0;
    std::vector<VehicleState> controlled;
    std::vector<VehicleState> simulated;

    /// Ledger of all simulated vehicles' fixed events.
    OccupancyLedger base_ledger() const;

    /// Throws std::runtime_error when the instance invariants fail.
    void validate() const;
};

struct PlanEvent {
    int street = -1;
    Step enter = 0;
    Step exit = 0;
    bool operator==(const PlanEvent&) const = default;
};

struct VehiclePlan {
    std::string vehicle;
    std::string route;
    std::vector<PlanEvent> events;  // in route order
    bool operator==(const VehiclePlan&) const = default;
};

/// Solver output: one plan per controlled vehicle plus the simulated
/// vehicles' fixed events echoed verbatim.
struct Schedule {
    std::vector<VehiclePlan> plans;
    const VehiclePlan* find(const std::string& vehicle) const;
};

struct Objective {
    Cost primary = 0;    // sum of chosen route costs over controlled vehicles
    Cost secondary = 0;  // sum of street occupancy over grounded enter instants
    auto operator<=>(const Objective&) const = default;
};

enum class SolveStatus { proven, anytime, infeasible, timeout };
const char* to_string(SolveStatus s);

struct SolveOptions {
    double budget_secs = 5.0;  // <= 0 means no budget
    int workers = 1;
    unsigned seed = 0;
};

struct SolveResult {
    SolveStatus status = SolveStatus::infeasible;
    Schedule schedule;
    Objective objective;
    std::string blocked_vehicle;  // named on infeasibility
    unsigned long long nodes = 0;
    double wall_secs = 0.0;
};

/// Exact lexicographic branch-and-bound over route choices and enter times.
/// With workers >= 2 a second, bound-driven strategy runs concurrently and
/// shares the incumbent. Deterministic with one worker.
SolveResult solve(const SchedulingInstance& instance, const SolveOptions& opts = {});

struct Violation {
    std::string rule;  // "r4".."r14" (plus "r1"/"r2" for route-level breaches)
    std::string vehicle;
    std::string street;
    Step step = 0;
    std::string detail;
};

/// Independent validator for every hard constraint. Empty result means the
/// schedule is feasible for the instance.
std::vector<Violation> check(const Schedule& schedule, const SchedulingInstance& instance);

/// Objective of a feasible schedule; throws std::runtime_error when check()
/// reports violations.
Objective evaluate(const Schedule& schedule, const SchedulingInstance& instance);

/// Assembles a scheduling instance from parsed demand: class-1 vehicles get
/// candidate routes and windows (shifted to max(depart, clock)), class-0
/// vehicles enter the ledger as fixed constants. Implemented with the
/// preprocessor. Throws when a controlled vehicle has no usable route.
SchedulingInstance build_instance(const Network& contracted,
                                  const std::vector<VehicleState>& vehicles,
                                  const PreprocessConfig& cfg, Step clock = 0);

}  // namespace traffic
