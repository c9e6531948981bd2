#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "traffic/scheduler.hpp"

namespace traffic {

/// Raised when the controller cannot admit the demand: a vehicle exceeded
/// max_defer or the scheduler ran out of budget with no incumbent.
struct ScheduleFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ControllerConfig {
    Step epoch_steps = 1;
    double budget_secs = 5.0;
    int workers = 1;
    unsigned seed = 0;
    int max_defer = 16;
    PreprocessConfig prep;
};

/// A vehicle scheduled in an earlier epoch; a constant from then on.
struct CommittedPlan {
    std::string vehicle;
    std::string route;
    Step depart_request = 0;  // demand depart step, kept for the simulator
    std::vector<int> route_streets;
    std::vector<PlanEvent> events;  // absolute steps
};

struct EpochStats {
    Step clock = 0;
    int batch_size = 0;
    int committed = 0;
    int deferred = 0;
    SolveStatus status = SolveStatus::proven;
    Objective objective;
    double wall_secs = 0.0;
    unsigned long long nodes = 0;
};

struct EpochState {
    Step clock = 0;
    std::size_t next_arrival = 0;          // cursor into the demand list
    std::vector<std::size_t> pending;      // demand indices awaiting a schedule
    std::vector<CommittedPlan> committed;  // commit order; never modified again
    std::unordered_map<std::string, int> defer_count;
};

struct EpochOutcome {
    SchedulingInstance instance;  // what the scheduler solved (empty batch: default)
    Schedule batch;
    EpochStats stats;
    std::vector<std::string> deferred;
    bool attempted = false;  // false when no vehicle was pending
};

/// One controller iteration: pending arrivals become controlled vehicles
/// (windows shifted to max(depart, clock)), committed vehicles become
/// simulated constants; the batch schedule is merged into the committed set
/// and the clock advances. Vehicles the scheduler reports infeasible are
/// deferred to the next epoch; exceeding max_defer aborts the run.
EpochOutcome step_epoch(EpochState& state, const Network& contracted,
                        const std::vector<VehicleState>& demand,
                        const ControllerConfig& cfg);

struct RunResult {
    std::vector<CommittedPlan> plans;  // sorted by (depart_request, vehicle)
    std::vector<EpochStats> epochs;
};

/// Rolling-horizon loop over the whole demand (sorted by depart step).
/// Contracts the network first when roundabout arcs are still raw.
RunResult run(const Network& network, const std::vector<VehicleState>& demand,
              const ControllerConfig& cfg);

}  // namespace traffic
