#pragma once

#include <string>
#include <vector>

#include "traffic/network.hpp"

namespace traffic {

struct Window {
    Step min_enter = 0;
    Step max_enter = 0;
    bool operator==(const Window&) const = default;
};

/// Candidate route for one vehicle. Windows are enter-time bounds per street,
/// relative to the route starting at step 0.
struct Route {
    std::string id;
    std::string vehicle;
    std::vector<int> streets;
    std::vector<Window> windows;
    Cost cost = 0;
};

struct FixedEvent {
    int street = -1;
    Step enter = 0;
    Step exit = 0;
    bool operator==(const FixedEvent&) const = default;
};

/// A vehicle known to the controller. Class 1 (controlled) vehicles carry
/// candidate routes; class 0 (simulated) vehicles carry exactly one route
/// and a complete fixed schedule.
struct VehicleState {
    std::string id;
    int klass = 1;  // 1 controlled, 0 simulated
    Step depart = 0;
    std::string origin;
    std::string destination;
    std::vector<Route> routes;
    std::vector<FixedEvent> fixed;
};

enum class CostMode { length_m, light_steps };

double path_length(const Network& net, const std::vector<int>& streets);
Cost route_cost(const Network& net, const std::vector<int>& streets, CostMode mode);

/// Replaces every roundabout's raw member arcs (which must form one directed
/// cycle) with one street per usable entry/exit pair; the new street's length
/// is the sum of the arcs traversed, and all pair-streets of a roundabout
/// share its capacity. Pairs that would loop the full circle back to the
/// entry arm are dropped. Networks without roundabouts pass through intact.
Network contract_roundabouts(const Network& raw);

/// Up to `limit` loopless street paths from `from` to `to`, shortest total
/// length first (Yen's algorithm). Empty when no path exists.
std::vector<std::vector<int>> enumerate_acyclic_paths(const Network& net, int from,
                                                      int to, int limit);

/// Groups paths whose street sets overlap (Jaccard similarity >= threshold,
/// single linkage), keeps the `per_cluster` shortest of each group, and
/// returns the `k` shortest of those overall.
std::vector<std::vector<int>> select_diverse_routes(const Network& net,
                                                    const std::vector<std::vector<int>>& paths,
                                                    int k, double similarity_threshold,
                                                    int per_cluster = 2);

/// Enter-time windows for a route started at `start`, given the fixed traffic
/// in `ledger`. min_enter is the free-flow (light tier) prefix sum; max_enter
/// follows the max-exit recurrence: below capacity the exit bound uses a
/// speed inversely proportional to the occupancy seen at the street's
/// min-enter time, at or over capacity it uses the queue-discharge time.
/// Windows are relative to `start`.
std::vector<Window> compute_windows(const Network& net, const std::vector<int>& streets,
                                    const OccupancyLedger& ledger, Step start = 0);

struct PreprocessConfig {
    int k_routes = 6;
    double similarity_threshold = 0.5;
    int per_cluster = 2;
    int path_limit = 200;
    CostMode cost_mode = CostMode::length_m;
    Step horizon_cap = 1000000;
};

/// Candidate routes (with ids, windows and costs) for one controlled vehicle
/// starting at `start`. Empty when the destination is unreachable.
std::vector<Route> candidate_routes(const Network& net, const std::string& vehicle,
                                    int origin, int destination,
                                    const OccupancyLedger& ledger, Step start,
                                    const PreprocessConfig& cfg);

}  // namespace traffic
