#include "traffic/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace traffic {

void Config::validate(double step_seconds) const {
    auto fail = [](const std::string& what) {
        throw std::runtime_error("config: " + what);
    };
    if (tick_seconds <= 0) fail("tick_seconds must be positive");
    if (step_seconds <= 0) fail("step_seconds must be positive");
    if (k_routes < 1) fail("k_routes must be at least 1");
    if (similarity_threshold <= 0 || similarity_threshold > 1)
        fail("similarity_threshold must be in (0, 1]");
    if (path_limit < 1) fail("path_limit must be at least 1");
    if (workers < 1) fail("workers must be at least 1");
    if (epoch_steps < 1) fail("epoch_steps must be at least 1");
    if (max_defer < 0) fail("max_defer must be nonnegative");
    double ratio = step_seconds / tick_seconds;
    if (std::abs(ratio - std::round(ratio)) > 1e-9)
        fail("step_seconds must be a multiple of tick_seconds");
}

namespace {

std::string fmt(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string fmt(long long v) { return std::to_string(v); }

[[noreturn]] void fail_at(const std::string& what, std::size_t line,
                          const std::string& msg) {
    throw std::runtime_error(what + " line " + std::to_string(line) + ": " + msg);
}

// Line-oriented tokenizer with '#' comment lines and positions for errors.
struct Reader {
    std::string what;
    std::vector<std::vector<std::string>> lines;  // token lists
    std::vector<std::size_t> numbers;             // original line numbers
    std::size_t at = 0;

    Reader(const std::string& what_, const std::string& text) : what(what_) {
        std::istringstream in(text);
        std::string line;
        std::size_t number = 0;
        while (std::getline(in, line)) {
            ++number;
            std::istringstream ls(line);
            std::vector<std::string> tokens;
            std::string tok;
            while (ls >> tok) tokens.push_back(tok);
            if (tokens.empty() || tokens[0][0] == '#') continue;
            lines.push_back(std::move(tokens));
            numbers.push_back(number);
        }
    }

    bool done() const { return at >= lines.size(); }
    const std::vector<std::string>& peek() const { return lines[at]; }
    std::size_t line_number() const {
        return at < numbers.size() ? numbers[at] : (numbers.empty() ? 0 : numbers.back());
    }
    const std::vector<std::string>& next() { return lines[at++]; }
    [[noreturn]] void fail(const std::string& msg) const { fail_at(what, line_number(), msg); }

    void expect_header(const std::string& keyword) {
        if (done() || peek().size() != 2 || peek()[0] != keyword || peek()[1] != "v1")
            fail("expected '" + keyword + " v1' header");
        next();
    }
};

int parse_int(const Reader& r, const std::string& tok) {
    int v{};
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
        r.fail("expected an integer, got '" + tok + "'");
    return v;
}

long long parse_llong(const Reader& r, const std::string& tok) {
    long long v{};
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
        r.fail("expected an integer, got '" + tok + "'");
    return v;
}

double parse_double(const Reader& r, const std::string& tok) {
    double v{};
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
        r.fail("expected a number, got '" + tok + "'");
    return v;
}

void check_user_id(const Reader& r, const std::string& id) {
    if (id.find(':') != std::string::npos)
        r.fail("id '" + id + "' may not contain ':' (reserved for derived names)");
}

int street_of(const Reader& r, const Network& net, const std::string& id) {
    auto idx = net.find_street(id);
    if (!idx) r.fail("unknown street '" + id + "'");
    return *idx;
}

// ---- network ----

void write_network_body(std::ostringstream& out, const Network& net) {
    out << "network v1\n";
    out << "step_seconds " << fmt(net.step_seconds) << "\n";
    out << "contracted " << (net.contracted ? 1 : 0) << "\n";
    for (const Street& s : net.streets) {
        out << "street " << s.id << " " << fmt(s.length_m) << " " << s.capacity;
        if (s.threshold_override)
            out << " thresholds " << s.threshold_override->first << " "
                << s.threshold_override->second;
        if (s.max_tt_override) out << " max_tt " << *s.max_tt_override;
        out << "\n";
    }
    for (auto [f, t] : net.links)
        out << "link " << net.street(f).id << " " << net.street(t).id << "\n";
    for (const Roundabout& rb : net.roundabouts) {
        out << "roundabout " << rb.id << " " << rb.capacity;
        for (int m : rb.members) out << " " << net.street(m).id;
        out << "\n";
    }
}

Network parse_network_body(Reader& r, bool embedded) {
    r.expect_header("network");
    Network net;
    bool contracted = false;
    while (!r.done()) {
        const auto& toks = r.peek();
        const std::string& kw = toks[0];
        if (embedded && kw == "end") break;
        if (kw == "step_seconds") {
            if (toks.size() != 2) r.fail("step_seconds takes one value");
            net.step_seconds = parse_double(r, toks[1]);
            if (net.step_seconds <= 0) r.fail("step_seconds must be positive");
        } else if (kw == "contracted") {
            if (toks.size() != 2) r.fail("contracted takes 0 or 1");
            contracted = parse_int(r, toks[1]) != 0;
        } else if (kw == "street") {
            if (toks.size() < 4) r.fail("street takes: id length capacity [options]");
            Street s;
            s.id = toks[1];
            if (!contracted) check_user_id(r, s.id);
            s.length_m = parse_double(r, toks[2]);
            s.capacity = parse_int(r, toks[3]);
            std::size_t i = 4;
            while (i < toks.size()) {
                if (toks[i] == "thresholds") {
                    if (i + 2 >= toks.size()) r.fail("thresholds takes two values");
                    s.threshold_override = {parse_int(r, toks[i + 1]),
                                            parse_int(r, toks[i + 2])};
                    i += 3;
                } else if (toks[i] == "max_tt") {
                    if (i + 1 >= toks.size()) r.fail("max_tt takes one value");
                    s.max_tt_override = parse_int(r, toks[i + 1]);
                    i += 2;
                } else {
                    r.fail("unknown street option '" + toks[i] + "'");
                }
            }
            try {
                net.add_street(std::move(s));
            } catch (const std::exception& e) {
                r.fail(e.what());
            }
        } else if (kw == "link") {
            if (toks.size() != 3) r.fail("link takes: from to");
            net.add_link(street_of(r, net, toks[1]), street_of(r, net, toks[2]));
        } else if (kw == "roundabout") {
            if (toks.size() < 4) r.fail("roundabout takes: id capacity member...");
            std::vector<int> members;
            for (std::size_t i = 3; i < toks.size(); ++i)
                members.push_back(street_of(r, net, toks[i]));
            net.add_roundabout(toks[1], parse_int(r, toks[2]), std::move(members));
        } else {
            r.fail("unknown record '" + kw + "'");
        }
        r.next();
    }
    net.contracted = contracted;
    try {
        net.finalize();
    } catch (const std::exception& e) {
        fail_at(r.what, r.numbers.empty() ? 0 : r.numbers.back(), e.what());
    }
    return net;
}

// ---- demand ----

void write_vehicle_block(std::ostringstream& out, const VehicleState& vs,
                         const Network& net, bool with_routes) {
    out << "vehicle " << vs.id << " " << vs.klass << " " << vs.depart << " " << vs.origin
        << " " << vs.destination << "\n";
    if (with_routes && vs.klass == 1) {
        for (const Route& rt : vs.routes) {
            out << "route " << rt.id << " " << vs.id << " " << fmt(rt.cost) << " "
                << rt.streets.size();
            for (std::size_t i = 0; i < rt.streets.size(); ++i)
                out << " " << net.street(rt.streets[i]).id << " " << rt.windows[i].min_enter
                    << " " << rt.windows[i].max_enter;
            out << "\n";
        }
    }
    for (const FixedEvent& ev : vs.fixed)
        out << "event " << vs.id << " " << net.street(ev.street).id << " " << ev.enter
            << " " << ev.exit << "\n";
}

// Shared by demand and instance parsing. `with_routes` permits candidate
// route records (instance files).
std::vector<VehicleState> parse_vehicle_blocks(Reader& r, const Network& net,
                                               bool with_routes) {
    std::vector<VehicleState> vehicles;
    auto by_id = [&](const std::string& id) -> VehicleState& {
        for (auto& v : vehicles)
            if (v.id == id) return v;
        r.fail("unknown vehicle '" + id + "'");
    };
    while (!r.done()) {
        const auto& toks = r.peek();
        const std::string& kw = toks[0];
        if (kw == "vehicle") {
            if (toks.size() != 6) r.fail("vehicle takes: id class depart origin destination");
            VehicleState vs;
            vs.id = toks[1];
            check_user_id(r, vs.id);
            vs.klass = parse_int(r, toks[2]);
            if (vs.klass != 0 && vs.klass != 1) r.fail("vehicle class must be 0 or 1");
            vs.depart = parse_int(r, toks[3]);
            if (vs.depart < 0) r.fail("depart step must be nonnegative");
            vs.origin = toks[4];
            vs.destination = toks[5];
            street_of(r, net, vs.origin);
            street_of(r, net, vs.destination);
            for (const auto& v : vehicles)
                if (v.id == vs.id) r.fail("duplicate vehicle id '" + vs.id + "'");
            vehicles.push_back(std::move(vs));
        } else if (kw == "event") {
            if (toks.size() != 5) r.fail("event takes: vehicle street enter exit");
            VehicleState& vs = by_id(toks[1]);
            if (vs.klass != 0) r.fail("fixed events belong to class-0 vehicles only");
            FixedEvent ev;
            ev.street = street_of(r, net, toks[2]);
            ev.enter = parse_int(r, toks[3]);
            ev.exit = parse_int(r, toks[4]);
            if (ev.enter < 0 || ev.exit <= ev.enter)
                r.fail("event requires 0 <= enter < exit");
            if (!vs.fixed.empty() && vs.fixed.back().exit != ev.enter)
                r.fail("fixed events must chain: enter must equal the previous exit");
            vs.fixed.push_back(ev);
        } else if (with_routes && kw == "route") {
            if (toks.size() < 5) r.fail("route takes: id vehicle cost n (street min max)...");
            Route rt;
            rt.id = toks[1];
            rt.vehicle = toks[2];
            rt.cost = parse_llong(r, toks[3]);
            int n = parse_int(r, toks[4]);
            if (n < 1) r.fail("route must have at least one street");
            if (toks.size() != 5 + 3 * static_cast<std::size_t>(n))
                r.fail("route expects " + std::to_string(3 * n) + " street tokens");
            for (int i = 0; i < n; ++i) {
                rt.streets.push_back(street_of(r, net, toks[5 + 3 * i]));
                Window w;
                w.min_enter = parse_int(r, toks[6 + 3 * i]);
                w.max_enter = parse_int(r, toks[7 + 3 * i]);
                rt.windows.push_back(w);
            }
            VehicleState& vs = by_id(rt.vehicle);
            if (vs.klass != 1) r.fail("candidate routes belong to class-1 vehicles only");
            vs.routes.push_back(std::move(rt));
        } else {
            r.fail("unknown record '" + kw + "'");
        }
        r.next();
    }
    // Simulated vehicles: derive the single fixed route from their events.
    for (auto& vs : vehicles) {
        if (vs.klass == 1) {
            if (!vs.fixed.empty()) r.fail("class-1 vehicle '" + vs.id + "' has fixed events");
            continue;
        }
        if (vs.fixed.empty())
            fail_at(r.what, 0, "class-0 vehicle '" + vs.id + "' needs a fixed schedule");
        Route rt;
        rt.id = vs.id + ":fixed";
        rt.vehicle = vs.id;
        for (const FixedEvent& ev : vs.fixed) rt.streets.push_back(ev.street);
        rt.windows.assign(rt.streets.size(), Window{0, 0});
        if (net.street(rt.streets.front()).id != vs.origin ||
            net.street(rt.streets.back()).id != vs.destination)
            fail_at(r.what, 0, "vehicle '" + vs.id +
                                   "': fixed events do not match origin/destination");
        vs.routes.push_back(std::move(rt));
    }
    return vehicles;
}

}  // namespace

std::string write_network(const Network& net) {
    std::ostringstream out;
    write_network_body(out, net);
    return out.str();
}

Network parse_network(const std::string& text) {
    Reader r("network file", text);
    Network net = parse_network_body(r, false);
    return net;
}

std::string write_demand(const std::vector<VehicleState>& vehicles, const Network& net) {
    std::ostringstream out;
    out << "demand v1\n";
    for (const auto& vs : vehicles) write_vehicle_block(out, vs, net, false);
    return out.str();
}

std::vector<VehicleState> parse_demand(const std::string& text, const Network& net) {
    Reader r("demand file", text);
    r.expect_header("demand");
    return parse_vehicle_blocks(r, net, false);
}

std::string write_instance(const SchedulingInstance& inst) {
    std::ostringstream out;
    out << "instance v1\n";
    out << "horizon " << inst.horizon << "\n";
    out << "begin network\n";
    write_network_body(out, inst.network);
    out << "end network\n";
    for (const auto& vs : inst.controlled) write_vehicle_block(out, vs, inst.network, true);
    for (const auto& vs : inst.simulated) write_vehicle_block(out, vs, inst.network, true);
    return out.str();
}

SchedulingInstance parse_instance(const std::string& text) {
    Reader r("instance file", text);
    r.expect_header("instance");
    SchedulingInstance inst;
    if (r.done() || r.peek()[0] != "horizon" || r.peek().size() != 2)
        r.fail("expected 'horizon <steps>'");
    inst.horizon = parse_int(r, r.peek()[1]);
    r.next();
    if (r.done() || r.peek() != std::vector<std::string>{"begin", "network"})
        r.fail("expected 'begin network'");
    r.next();
    inst.network = parse_network_body(r, true);
    if (r.done() || r.peek() != std::vector<std::string>{"end", "network"})
        r.fail("expected 'end network'");
    r.next();
    auto vehicles = parse_vehicle_blocks(r, inst.network, true);
    for (auto& vs : vehicles) {
        if (vs.klass == 1)
            inst.controlled.push_back(std::move(vs));
        else
            inst.simulated.push_back(std::move(vs));
    }
    try {
        inst.validate();
    } catch (const std::exception& e) {
        fail_at(r.what, 0, e.what());
    }
    return inst;
}

std::string write_schedule(const ScheduleDoc& doc, const Network& net) {
    std::ostringstream out;
    out << "schedule v1\n";
    out << "status " << doc.status << "\n";
    if (doc.has_objective)
        out << "objective " << fmt(doc.objective.primary) << " "
            << fmt(doc.objective.secondary) << "\n";
    for (const PlanRecord& p : doc.plans) {
        out << "plan " << p.vehicle << " " << p.route << " " << p.depart << " "
            << p.events.size() << "\n";
        for (const PlanEvent& ev : p.events)
            out << "ev " << p.vehicle << " " << net.street(ev.street).id << " " << ev.enter
                << " " << ev.exit << "\n";
    }
    return out.str();
}

ScheduleDoc parse_schedule(const std::string& text, const Network& net) {
    Reader r("schedule file", text);
    r.expect_header("schedule");
    ScheduleDoc doc;
    doc.status.clear();
    while (!r.done()) {
        const auto& toks = r.peek();
        const std::string& kw = toks[0];
        if (kw == "status") {
            if (toks.size() != 2) r.fail("status takes one value");
            doc.status = toks[1];
        } else if (kw == "objective") {
            if (toks.size() != 3) r.fail("objective takes: primary secondary");
            doc.has_objective = true;
            doc.objective.primary = parse_llong(r, toks[1]);
            doc.objective.secondary = parse_llong(r, toks[2]);
        } else if (kw == "plan") {
            if (toks.size() != 5) r.fail("plan takes: vehicle route depart nevents");
            PlanRecord p;
            p.vehicle = toks[1];
            p.route = toks[2];
            p.depart = parse_int(r, toks[3]);
            p.events.reserve(parse_int(r, toks[4]));
            doc.plans.push_back(std::move(p));
        } else if (kw == "ev") {
            if (toks.size() != 5) r.fail("ev takes: vehicle street enter exit");
            if (doc.plans.empty() || doc.plans.back().vehicle != toks[1])
                r.fail("ev line does not follow its plan line");
            PlanEvent ev;
            ev.street = street_of(r, net, toks[2]);
            ev.enter = parse_int(r, toks[3]);
            ev.exit = parse_int(r, toks[4]);
            doc.plans.back().events.push_back(ev);
        } else {
            r.fail("unknown record '" + kw + "'");
        }
        r.next();
    }
    if (doc.status.empty()) fail_at(r.what, 0, "missing status line");
    return doc;
}

std::string write_eventlog(const EventLog& log, const Network& net) {
    std::ostringstream out;
    out << "eventlog v1\n";
    out << "# waiting counts seconds at zero speed inside the network\n";
    out << "tick_seconds " << fmt(log.tick_seconds) << "\n";
    for (const auto& v : log.vehicles)
        out << "veh " << v.vehicle << " " << fmt(v.request_s) << " " << fmt(v.entered_s)
            << " " << fmt(v.finished_s) << " " << fmt(v.waiting_s) << " " << fmt(v.delay_s)
            << " " << fmt(v.route_length_m) << " " << (v.finished ? 1 : 0) << "\n";
    for (const auto& rej : log.rejected)
        out << "reject " << rej.vehicle << " " << rej.reason << "\n";
    for (const auto& ev : log.events) {
        out << "ev " << fmt(ev.t) << " " << ev.vehicle << " " << to_string(ev.kind) << " ";
        out << (ev.street >= 0 ? net.street(ev.street).id : "-") << "\n";
    }
    return out.str();
}

EventLog parse_eventlog(const std::string& text, const Network& net) {
    Reader r("event log", text);
    r.expect_header("eventlog");
    EventLog log;
    while (!r.done()) {
        const auto& toks = r.peek();
        const std::string& kw = toks[0];
        if (kw == "tick_seconds") {
            if (toks.size() != 2) r.fail("tick_seconds takes one value");
            log.tick_seconds = parse_double(r, toks[1]);
        } else if (kw == "veh") {
            if (toks.size() != 9)
                r.fail("veh takes: id request entered finished waiting delay length done");
            VehicleSummary v;
            v.vehicle = toks[1];
            v.request_s = parse_double(r, toks[2]);
            v.entered_s = parse_double(r, toks[3]);
            v.finished_s = parse_double(r, toks[4]);
            v.waiting_s = parse_double(r, toks[5]);
            v.delay_s = parse_double(r, toks[6]);
            v.route_length_m = parse_double(r, toks[7]);
            v.finished = parse_int(r, toks[8]) != 0;
            log.vehicles.push_back(std::move(v));
        } else if (kw == "reject") {
            if (toks.size() < 3) r.fail("reject takes: vehicle reason...");
            Rejection rej;
            rej.vehicle = toks[1];
            for (std::size_t i = 2; i < toks.size(); ++i) {
                if (i > 2) rej.reason += " ";
                rej.reason += toks[i];
            }
            log.rejected.push_back(std::move(rej));
        } else if (kw == "ev") {
            if (toks.size() != 5) r.fail("ev takes: t vehicle kind street");
            SimEvent ev;
            ev.t = parse_double(r, toks[1]);
            ev.vehicle = toks[2];
            const std::string& kind = toks[3];
            if (kind == "request") ev.kind = SimEventKind::request;
            else if (kind == "enter") ev.kind = SimEventKind::enter;
            else if (kind == "exit") ev.kind = SimEventKind::exit;
            else if (kind == "finish") ev.kind = SimEventKind::finish;
            else r.fail("unknown event kind '" + kind + "'");
            ev.street = toks[4] == "-" ? -1 : street_of(r, net, toks[4]);
            log.events.push_back(std::move(ev));
        } else {
            r.fail("unknown record '" + kw + "'");
        }
        r.next();
    }
    return log;
}

std::string write_metrics(const MetricsReport& rep) {
    std::ostringstream out;
    out << "metrics v1\n";
    out << "# waiting counts seconds at zero speed inside the network\n";
    out << "vehicles " << rep.vehicles << "\n";
    out << "total_duration " << fmt(rep.total_duration_s) << "\n";
    out << "avg_route_length " << fmt(rep.avg_route_length_m) << "\n";
    out << "avg_speed " << fmt(rep.avg_speed_mps) << "\n";
    out << "avg_duration " << fmt(rep.avg_duration_s) << "\n";
    out << "avg_waiting_time " << fmt(rep.avg_waiting_s) << "\n";
    out << "avg_depart_delay " << fmt(rep.avg_depart_delay_s) << "\n";
    return out.str();
}

MetricsReport parse_metrics(const std::string& text) {
    Reader r("metrics file", text);
    r.expect_header("metrics");
    MetricsReport rep;
    while (!r.done()) {
        const auto& toks = r.peek();
        if (toks.size() != 2) r.fail("metrics records take one value");
        const std::string& kw = toks[0];
        if (kw == "vehicles") rep.vehicles = parse_int(r, toks[1]);
        else if (kw == "total_duration") rep.total_duration_s = parse_double(r, toks[1]);
        else if (kw == "avg_route_length") rep.avg_route_length_m = parse_double(r, toks[1]);
        else if (kw == "avg_speed") rep.avg_speed_mps = parse_double(r, toks[1]);
        else if (kw == "avg_duration") rep.avg_duration_s = parse_double(r, toks[1]);
        else if (kw == "avg_waiting_time") rep.avg_waiting_s = parse_double(r, toks[1]);
        else if (kw == "avg_depart_delay") rep.avg_depart_delay_s = parse_double(r, toks[1]);
        else r.fail("unknown record '" + kw + "'");
        r.next();
    }
    return rep;
}

ScheduleDoc to_schedule_doc(const SolveResult& res, const SchedulingInstance& inst) {
    ScheduleDoc doc;
    doc.status = to_string(res.status);
    doc.has_objective =
        res.status == SolveStatus::proven || res.status == SolveStatus::anytime;
    doc.objective = res.objective;
    for (const auto& plan : res.schedule.plans) {
        PlanRecord p;
        p.vehicle = plan.vehicle;
        p.route = plan.route;
        p.depart = plan.events.empty() ? 0 : plan.events.front().enter;
        for (const auto& vs : inst.controlled)
            if (vs.id == plan.vehicle) p.depart = vs.depart;
        for (const auto& vs : inst.simulated)
            if (vs.id == plan.vehicle) p.depart = vs.depart;
        p.events = plan.events;
        doc.plans.push_back(std::move(p));
    }
    return doc;
}

ScheduleDoc to_schedule_doc(const RunResult& run) {
    ScheduleDoc doc;
    doc.status = "trace";
    for (const auto& cp : run.plans) {
        PlanRecord p;
        p.vehicle = cp.vehicle;
        p.route = cp.route;
        p.depart = cp.depart_request;
        p.events = cp.events;
        doc.plans.push_back(std::move(p));
    }
    return doc;
}

std::vector<SimPlan> to_sim_plans(const ScheduleDoc& doc, double step_seconds) {
    std::vector<SimPlan> plans;
    for (const PlanRecord& p : doc.plans) {
        SimPlan sp;
        sp.vehicle = p.vehicle;
        sp.request_s = p.depart * step_seconds;
        for (const PlanEvent& ev : p.events) sp.route.push_back(ev.street);
        plans.push_back(std::move(sp));
    }
    return plans;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << content;
}

}  // namespace traffic
