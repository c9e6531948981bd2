#include "traffic/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <set>
#include <stdexcept>

namespace traffic {

double path_length(const Network& net, const std::vector<int>& streets) {
    double total = 0.0;
    for (int s : streets) total += net.street(s).length_m;
    return total;
}

Cost route_cost(const Network& net, const std::vector<int>& streets, CostMode mode) {
    if (mode == CostMode::length_m)
        return static_cast<Cost>(std::llround(path_length(net, streets)));
    Cost total = 0;
    for (int s : streets) total += net.street(s).light_tt;
    return total;
}

namespace {

struct SpurResult {
    bool found = false;
    std::vector<int> path;
};

// Dijkstra over street nodes; the distance of a path is the sum of the
// lengths of every street on it, the start street included. Ties resolve
// toward the smaller street index so results are deterministic.
SpurResult shortest_path(const Network& net, int from, int to,
                         const std::vector<char>& banned_node,
                         const std::set<std::pair<int, int>>& banned_edge) {
    const int n = static_cast<int>(net.streets.size());
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(n, kInf);
    std::vector<int> prev(n, -1);
    if (banned_node[from] || banned_node[to]) return {};

    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[from] = net.street(from).length_m;
    heap.emplace(dist[from], from);
    while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        if (d > dist[u]) continue;
        if (u == to) break;
        for (int v : net.out[u]) {
            if (banned_node[v] || banned_edge.count({u, v})) continue;
            double nd = d + net.street(v).length_m;
            if (nd < dist[v]) {
                dist[v] = nd;
                prev[v] = u;
                heap.emplace(nd, v);
            }
        }
    }
    if (dist[to] == kInf) return {};

    SpurResult res;
    res.found = true;
    for (int v = to; v != -1; v = prev[v]) res.path.push_back(v);
    std::reverse(res.path.begin(), res.path.end());
    return res;
}

bool lex_less(double la, const std::vector<int>& pa, double lb, const std::vector<int>& pb) {
    if (la != lb) return la < lb;
    return pa < pb;
}

}  // namespace

std::vector<std::vector<int>> enumerate_acyclic_paths(const Network& net, int from,
                                                      int to, int limit) {
    if (limit < 1) throw std::runtime_error("path limit must be at least 1");
    const int n = static_cast<int>(net.streets.size());
    if (from < 0 || from >= n || to < 0 || to >= n)
        throw std::runtime_error("path query references unknown street");

    std::vector<char> no_ban(n, 0);
    std::set<std::pair<int, int>> no_edge_ban;
    SpurResult first = shortest_path(net, from, to, no_ban, no_edge_ban);
    if (!first.found) return {};

    std::vector<std::vector<int>> accepted{first.path};
    // Candidate spur paths not yet accepted, deduplicated by node sequence.
    std::vector<std::pair<double, std::vector<int>>> candidates;
    std::set<std::vector<int>> seen{first.path};

    while (static_cast<int>(accepted.size()) < limit) {
        const std::vector<int>& last = accepted.back();
        for (std::size_t i = 0; i + 1 < last.size(); ++i) {
            // Root is last[0..i]; spur node last[i].
            std::vector<char> banned_node(n, 0);
            std::set<std::pair<int, int>> banned_edge;
            for (std::size_t j = 0; j < i; ++j) banned_node[last[j]] = 1;
            for (const auto& p : accepted) {
                if (p.size() > i + 1 &&
                    std::equal(p.begin(), p.begin() + i + 1, last.begin()))
                    banned_edge.insert({p[i], p[i + 1]});
            }
            SpurResult spur = shortest_path(net, last[i], to, banned_node, banned_edge);
            if (!spur.found) continue;
            std::vector<int> total(last.begin(), last.begin() + i);
            total.insert(total.end(), spur.path.begin(), spur.path.end());
            if (!seen.insert(total).second) continue;
            candidates.emplace_back(path_length(net, total), std::move(total));
        }
        if (candidates.empty()) break;
        std::size_t best = 0;
        for (std::size_t c = 1; c < candidates.size(); ++c)
            if (lex_less(candidates[c].first, candidates[c].second,
                         candidates[best].first, candidates[best].second))
                best = c;
        accepted.push_back(std::move(candidates[best].second));
        candidates.erase(candidates.begin() + best);
    }
    return accepted;
}

namespace {

double jaccard(const std::vector<int>& a, const std::vector<int>& b) {
    // inputs sorted
    std::size_t i = 0, j = 0, inter = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) { ++inter; ++i; ++j; }
        else if (a[i] < b[j]) ++i;
        else ++j;
    }
    std::size_t uni = a.size() + b.size() - inter;
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

int find_root(std::vector<int>& parent, int x) {
    while (parent[x] != x) {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    return x;
}

}  // namespace

std::vector<std::vector<int>> select_diverse_routes(const Network& net,
                                                    const std::vector<std::vector<int>>& paths,
                                                    int k, double similarity_threshold,
                                                    int per_cluster) {
    if (k < 1) throw std::runtime_error("route count k must be at least 1");
    if (per_cluster < 1) throw std::runtime_error("per-cluster count must be at least 1");
    const int n = static_cast<int>(paths.size());
    if (n == 0) return {};

    std::vector<std::vector<int>> sets(n);
    for (int i = 0; i < n; ++i) {
        sets[i] = paths[i];
        std::sort(sets[i].begin(), sets[i].end());
    }

    // Single-linkage clustering on street-set similarity.
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (jaccard(sets[i], sets[j]) >= similarity_threshold)
                parent[find_root(parent, i)] = find_root(parent, j);

    std::vector<std::vector<int>> clusters(n);
    for (int i = 0; i < n; ++i) clusters[find_root(parent, i)].push_back(i);

    auto shorter = [&](int a, int b) {
        return lex_less(path_length(net, paths[a]), paths[a],
                        path_length(net, paths[b]), paths[b]);
    };

    std::vector<int> kept;
    for (auto& cluster : clusters) {
        if (cluster.empty()) continue;
        std::sort(cluster.begin(), cluster.end(), shorter);
        for (int c = 0; c < per_cluster && c < static_cast<int>(cluster.size()); ++c)
            kept.push_back(cluster[c]);
    }
    std::sort(kept.begin(), kept.end(), shorter);
    if (static_cast<int>(kept.size()) > k) kept.resize(k);

    std::vector<std::vector<int>> result;
    result.reserve(kept.size());
    for (int idx : kept) result.push_back(paths[idx]);
    return result;
}

Network contract_roundabouts(const Network& raw) {
    if (raw.contracted) return raw;
    Network net;
    net.step_seconds = raw.step_seconds;
    net.contracted = true;
    if (raw.roundabouts.empty()) {
        for (const Street& s : raw.streets) net.add_street(s);
        for (auto [f, t] : raw.links) net.add_link(f, t);
        net.finalize();
        return net;
    }

    const int n = static_cast<int>(raw.streets.size());
    std::vector<int> remap(n, -1);
    for (int i = 0; i < n; ++i) {
        if (raw.roundabout_of[i] != -1) continue;
        remap[i] = net.add_street(raw.streets[i]);
    }
    for (auto [f, t] : raw.links)
        if (remap[f] != -1 && remap[t] != -1) net.add_link(remap[f], remap[t]);

    for (const Roundabout& rb : raw.roundabouts) {
        const int m = static_cast<int>(rb.members.size());
        if (m == 0)
            throw std::runtime_error("roundabout '" + rb.id + "' has no member arcs");

        std::vector<char> is_member(n, 0);
        for (int arc : rb.members) is_member[arc] = 1;

        // Member arcs must form one directed cycle.
        std::vector<int> succ(m, -1);
        std::vector<int> pos(n, -1);
        for (int i = 0; i < m; ++i) pos[rb.members[i]] = i;
        for (int i = 0; i < m; ++i) {
            int count = 0;
            for (int v : raw.out[rb.members[i]]) {
                if (!is_member[v]) continue;
                succ[i] = pos[v];
                ++count;
            }
            if (count != 1)
                throw std::runtime_error("roundabout '" + rb.id +
                                         "': member arcs do not form a single cycle");
        }
        std::vector<int> order;  // member positions in cycle order
        std::vector<char> visited(m, 0);
        for (int at = 0; static_cast<int>(order.size()) < m; at = succ[at]) {
            if (visited[at])
                throw std::runtime_error("roundabout '" + rb.id +
                                         "': member arcs do not form a single cycle");
            visited[at] = 1;
            order.push_back(at);
        }

        std::vector<int> cycle(m);  // street index at each cycle slot
        for (int i = 0; i < m; ++i) cycle[i] = rb.members[order[i]];

        std::vector<int> entries, exits;  // slots in cycle order
        for (int i = 0; i < m; ++i) {
            for (int p : raw.in[cycle[i]])
                if (!is_member[p]) { entries.push_back(i); break; }
            for (int s : raw.out[cycle[i]])
                if (!is_member[s]) { exits.push_back(i); break; }
        }

        Roundabout contracted_rb;
        contracted_rb.id = rb.id;
        contracted_rb.capacity = rb.capacity;
        for (int e : entries) {
            for (int x : exits) {
                int traversed = ((x - e + m) % m) + 1;
                if (traversed == m && m > 1) continue;  // full loop back to the entry arm
                double length = 0.0;
                for (int a = 0; a < traversed; ++a)
                    length += raw.street(cycle[(e + a) % m]).length_m;
                Street contracted;
                contracted.id = rb.id + ":" + raw.street(cycle[e]).id + ":" +
                                raw.street(cycle[x]).id;
                contracted.length_m = length;
                contracted.capacity = rb.capacity;
                int idx = net.add_street(std::move(contracted));
                contracted_rb.members.push_back(idx);
                for (int p : raw.in[cycle[e]]) {
                    if (is_member[p]) continue;
                    if (remap[p] == -1)
                        throw std::runtime_error("roundabout '" + rb.id +
                                                 "' is adjacent to another roundabout; "
                                                 "insert a connecting street");
                    net.add_link(remap[p], idx);
                }
                for (int s : raw.out[cycle[x]]) {
                    if (is_member[s]) continue;
                    if (remap[s] == -1)
                        throw std::runtime_error("roundabout '" + rb.id +
                                                 "' is adjacent to another roundabout; "
                                                 "insert a connecting street");
                    net.add_link(idx, remap[s]);
                }
            }
        }
        net.roundabouts.push_back(std::move(contracted_rb));
    }

    net.finalize();
    return net;
}

std::vector<Window> compute_windows(const Network& net, const std::vector<int>& streets,
                                    const OccupancyLedger& ledger, Step start) {
    std::vector<Window> wins(streets.size());
    Step min_e = 0;
    Step max_e = 0;
    for (std::size_t i = 0; i < streets.size(); ++i) {
        const Street& s = net.street(streets[i]);
        wins[i] = {min_e, max_e};
        int occ = ledger.occupancy(streets[i], start + min_e);
        Step bound;
        if (occ < s.capacity) {
            // Speed inversely proportional to the vehicles seen inside, but
            // never tighter than the tier the vehicle itself will face on
            // entry (its own presence counts toward the tier).
            int divisor = std::max(1, occ);
            bound = std::max(quantize_steps(s.length_m * divisor, kLightKmh, net.step_seconds),
                             travel_time(s, occ + 1));
        } else {
            // Queue discharge, one capacity quantum per vehicle ahead.
            Step quantum = (s.max_tt + s.capacity - 1) / s.capacity;
            long long drain = static_cast<long long>(occ) * quantum;
            bound = static_cast<Step>(std::min<long long>(s.max_tt, drain));
        }
        min_e += s.light_tt;
        max_e += bound;
    }
    return wins;
}

std::vector<Route> candidate_routes(const Network& net, const std::string& vehicle,
                                    int origin, int destination,
                                    const OccupancyLedger& ledger, Step start,
                                    const PreprocessConfig& cfg) {
    auto paths = enumerate_acyclic_paths(net, origin, destination, cfg.path_limit);
    auto chosen = select_diverse_routes(net, paths, cfg.k_routes,
                                        cfg.similarity_threshold, cfg.per_cluster);
    std::vector<Route> routes;
    routes.reserve(chosen.size());
    for (std::size_t i = 0; i < chosen.size(); ++i) {
        Route r;
        r.id = vehicle + ":" + std::to_string(i);
        r.vehicle = vehicle;
        r.streets = std::move(chosen[i]);
        r.windows = compute_windows(net, r.streets, ledger, start);
        r.cost = route_cost(net, r.streets, cfg.cost_mode);
        routes.push_back(std::move(r));
    }
    return routes;
}

}  // namespace traffic
