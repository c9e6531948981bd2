#include "traffic/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace traffic {

Step quantize_steps(double length_m, double speed_kmh, double step_seconds) {
    // seconds = length_m * 3.6 / speed_kmh; small epsilon keeps exact
    // boundaries (e.g. 125 m at 45 km/h with 5 s steps) from rounding up.
    double seconds = length_m * 3.6 / speed_kmh;
    double steps = std::ceil(seconds / step_seconds - 1e-9);
    return std::max<Step>(1, static_cast<Step>(steps));
}

int Network::add_street(Street s) {
    if (s.id.empty())
        throw std::runtime_error("street id must be non-empty");
    if (index_.count(s.id))
        throw std::runtime_error("duplicate street id '" + s.id + "'");
    int idx = static_cast<int>(streets.size());
    index_.emplace(s.id, idx);
    streets.push_back(std::move(s));
    return idx;
}

int Network::add_street(const std::string& id, double length_m, int capacity) {
    Street s;
    s.id = id;
    s.length_m = length_m;
    s.capacity = capacity;
    return add_street(std::move(s));
}

void Network::add_link(int from, int to) {
    links.emplace_back(from, to);
}

void Network::add_link(const std::string& from, const std::string& to) {
    add_link(street_index(from), street_index(to));
}

void Network::add_roundabout(const std::string& id, int capacity, std::vector<int> members) {
    Roundabout r;
    r.id = id;
    r.capacity = capacity;
    r.members = std::move(members);
    roundabouts.push_back(std::move(r));
}

void Network::finalize() {
    const int n = static_cast<int>(streets.size());
    if (step_seconds <= 0.0)
        throw std::runtime_error("step_seconds must be positive");

    for (Street& s : streets) {
        if (s.length_m <= 0.0)
            throw std::runtime_error("street '" + s.id + "': length must be positive");
        if (s.capacity < 1)
            throw std::runtime_error("street '" + s.id + "': capacity must be at least 1");

        s.light_tt = quantize_steps(s.length_m, kLightKmh, step_seconds);
        s.medium_tt = quantize_steps(s.length_m, kMediumKmh, step_seconds);
        s.heavy_tt = quantize_steps(s.length_m, kHeavyKmh, step_seconds);

        if (s.threshold_override) {
            s.light_below = s.threshold_override->first;
            s.heavy_from = s.threshold_override->second;
        } else {
            s.light_below = (s.capacity + 2) / 3;       // ceil(capacity / 3)
            s.heavy_from = (2 * s.capacity + 2) / 3;    // ceil(2 * capacity / 3)
        }
        if (s.light_below < 1 || s.light_below > s.heavy_from || s.heavy_from > s.capacity)
            throw std::runtime_error("street '" + s.id +
                                     "': thresholds must satisfy 1 <= light_below <= heavy_from <= capacity");

        s.max_tt = s.max_tt_override ? *s.max_tt_override
                                     : static_cast<Step>(s.capacity) * s.heavy_tt;
        if (s.max_tt < s.heavy_tt)
            throw std::runtime_error("street '" + s.id +
                                     "': max travel time must be at least the heavy-tier time");
    }

    std::sort(links.begin(), links.end());
    links.erase(std::unique(links.begin(), links.end()), links.end());

    out.assign(n, {});
    in.assign(n, {});
    for (auto [from, to] : links) {
        if (from < 0 || from >= n || to < 0 || to >= n)
            throw std::runtime_error("link references unknown street");
        if (from == to)
            throw std::runtime_error("self-link on street '" + streets[from].id + "'");
        out[from].push_back(to);
        in[to].push_back(from);
    }

    roundabout_of.assign(n, -1);
    for (std::size_t r = 0; r < roundabouts.size(); ++r) {
        Roundabout& rb = roundabouts[r];
        if (rb.capacity < 1)
            throw std::runtime_error("roundabout '" + rb.id + "': capacity must be at least 1");
        for (int m : rb.members) {
            if (m < 0 || m >= n)
                throw std::runtime_error("roundabout '" + rb.id + "' references unknown street");
            if (roundabout_of[m] != -1)
                throw std::runtime_error("street '" + streets[m].id +
                                         "' belongs to more than one roundabout");
            roundabout_of[m] = static_cast<int>(r);
        }
    }
}

int Network::street_index(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end())
        throw std::runtime_error("unknown street id '" + id + "'");
    return it->second;
}

std::optional<int> Network::find_street(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

bool Network::has_link(int from, int to) const {
    const auto& succ = out.at(from);
    return std::find(succ.begin(), succ.end(), to) != succ.end();
}

Tier tier_of(const Street& s, int occupancy) {
    if (occupancy < s.light_below) return Tier::light;
    if (occupancy < s.heavy_from) return Tier::medium;
    return Tier::heavy;
}

Step travel_time(const Street& s, int occupancy) {
    switch (tier_of(s, occupancy)) {
        case Tier::light: return s.light_tt;
        case Tier::medium: return s.medium_tt;
        default: return s.heavy_tt;
    }
}

OccupancyLedger::OccupancyLedger(std::size_t street_count) {
    resize(street_count);
}

void OccupancyLedger::resize(std::size_t street_count) {
    events_.resize(street_count);
}

OccupancyLedger::Events& OccupancyLedger::mutable_events(int street) {
    auto& slot = events_.at(street);
    if (!slot) {
        slot = std::make_shared<Events>();
    } else if (slot.use_count() > 1) {
        slot = std::make_shared<Events>(*slot);  // copy-on-write
    }
    // use_count == 1: safe to mutate in place
    return const_cast<Events&>(*slot);
}

void OccupancyLedger::add_interval(int street, Step enter, Step exit) {
    if (enter < 0 || exit <= enter)
        throw std::runtime_error("occupancy interval requires 0 <= enter < exit");
    Events& ev = mutable_events(street);
    ev.enters.insert(std::upper_bound(ev.enters.begin(), ev.enters.end(), enter), enter);
    ev.exits.insert(std::upper_bound(ev.exits.begin(), ev.exits.end(), exit), exit);
}

int OccupancyLedger::occupancy(int street, Step t) const {
    const auto& slot = events_.at(street);
    if (!slot) return 0;
    auto entered = std::upper_bound(slot->enters.begin(), slot->enters.end(), t) -
                   slot->enters.begin();
    auto exited = std::upper_bound(slot->exits.begin(), slot->exits.end(), t) -
                  slot->exits.begin();
    return static_cast<int>(entered - exited);
}

std::size_t OccupancyLedger::event_count(int street) const {
    const auto& slot = events_.at(street);
    if (!slot) return 0;
    return slot->enters.size() + slot->exits.size();
}

int occupancy(const Network& net, const OccupancyLedger& ledger,
              const std::string& street_id, Step t) {
    return ledger.occupancy(net.street_index(street_id), t);
}

int roundabout_occupancy(const Network& net, const OccupancyLedger& ledger,
                         int roundabout, Step t) {
    const Roundabout& rb = net.roundabouts.at(roundabout);
    int sum = 0;
    for (int m : rb.members) sum += ledger.occupancy(m, t);
    return sum;
}

int roundabout_occupancy(const Network& net, const OccupancyLedger& ledger,
                         const std::string& roundabout_id, Step t) {
    for (std::size_t r = 0; r < net.roundabouts.size(); ++r)
        if (net.roundabouts[r].id == roundabout_id)
            return roundabout_occupancy(net, ledger, static_cast<int>(r), t);
    throw std::runtime_error("unknown roundabout id '" + roundabout_id + "'");
}

}  // namespace traffic
