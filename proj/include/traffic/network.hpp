#pragma once

#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace traffic {

/// Discrete scheduler time, measured in steps of Network::step_seconds.
using Step = int;
using Cost = long long;

// Fixed tier speeds: heavy 15 km/h, medium 30 km/h, light 45 km/h.
inline constexpr double kHeavyKmh = 15.0;
inline constexpr double kMediumKmh = 30.0;
inline constexpr double kLightKmh = 45.0;

enum class Tier { light, medium, heavy };

/// Steps needed to cover length_m at the given speed, rounded up, at least 1.
Step quantize_steps(double length_m, double speed_kmh, double step_seconds);

struct Street {
    std::string id;
    double length_m = 0.0;
    int capacity = 1;

    // Optional per-street overrides from the network file; defaults are
    // derived from capacity in Network::finalize().
    std::optional<std::pair<int, int>> threshold_override;  // (light_below, heavy_from)
    std::optional<Step> max_tt_override;

    // Derived. Occupancy n is light when n < light_below, medium when
    // light_below <= n < heavy_from, heavy when n >= heavy_from; the heavy
    // range has no upper bound.
    int light_below = 1;
    int heavy_from = 1;
    Step light_tt = 1;
    Step medium_tt = 1;
    Step heavy_tt = 1;
    Step max_tt = 1;  // steps to drain the street from full capacity
};

struct Roundabout {
    std::string id;
    int capacity = 1;
    std::vector<int> members;  // street indices sharing this capacity
};

/// Directed street graph. Immutable after finalize(); all querying modules
/// (preprocessor, scheduler, simulator) share one instance.
struct Network {
    double step_seconds = 5.0;
    // False while roundabout records still list raw member arcs, true once
    // contract_roundabouts() has replaced them with entry-exit streets.
    bool contracted = false;

    std::vector<Street> streets;
    std::vector<std::pair<int, int>> links;  // (from, to) street indices
    std::vector<Roundabout> roundabouts;

    // Derived by finalize().
    std::vector<std::vector<int>> out;  // successor street indices
    std::vector<std::vector<int>> in;   // predecessor street indices
    std::vector<int> roundabout_of;     // roundabout index or -1

    int add_street(Street s);
    int add_street(const std::string& id, double length_m, int capacity);
    void add_link(int from, int to);
    void add_link(const std::string& from, const std::string& to);
    void add_roundabout(const std::string& id, int capacity, std::vector<int> members);

    /// Validates invariants and computes derived fields. Throws
    /// std::runtime_error describing the offending record.
    void finalize();

    int street_index(const std::string& id) const;  // throws on unknown id
    std::optional<int> find_street(const std::string& id) const;
    bool has_link(int from, int to) const;
    const Street& street(int idx) const { return streets.at(idx); }

private:
    std::unordered_map<std::string, int> index_;
};

/// Tier selected by the street's occupancy thresholds. Total over n >= 0.
Tier tier_of(const Street& s, int occupancy);

/// Travel time in steps for the tier matching the given occupancy.
Step travel_time(const Street& s, int occupancy);

/// Per-street event lists of (+1, enter) / (-1, exit). Occupancy at step t
/// counts enters at or before t minus exits at or before t, so a vehicle
/// with enter=a, exit=b occupies the street for t in [a, b-1].
///
/// Copies share event storage until mutated, so search workers can take
/// cheap private snapshots.
class OccupancyLedger {
public:
    OccupancyLedger() = default;
    explicit OccupancyLedger(std::size_t street_count);

    void resize(std::size_t street_count);
    std::size_t street_count() const { return events_.size(); }

    /// Requires enter < exit; both nonnegative.
    void add_interval(int street, Step enter, Step exit);

    int occupancy(int street, Step t) const;

    /// Total events recorded on a street (enters + exits).
    std::size_t event_count(int street) const;

private:
    struct Events {
        std::vector<Step> enters;  // sorted
        std::vector<Step> exits;   // sorted
    };
    Events& mutable_events(int street);
    std::vector<std::shared_ptr<const Events>> events_;
};

/// Id-checked occupancy; throws on unknown street id.
int occupancy(const Network& net, const OccupancyLedger& ledger,
              const std::string& street_id, Step t);

/// Sum of member-street occupancies at t.
int roundabout_occupancy(const Network& net, const OccupancyLedger& ledger,
                         int roundabout, Step t);
int roundabout_occupancy(const Network& net, const OccupancyLedger& ledger,
                         const std::string& roundabout_id, Step t);

}  // namespace traffic
