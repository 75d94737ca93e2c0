#include "hpc/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <set>

#include <json.hpp>

#include "hpc/parser.hpp"

namespace hpc {

const char* policy_name(const Policy& p) {
    switch (p.kind) {
        case Policy::Kind::FirstEnabled: return "first-enabled";
        case Policy::Kind::RandomSeeded: return "random-seeded";
        case Policy::Kind::Exhaustive: return "exhaustive";
    }
    return "?";
}

const char* event_kind_name(EventKind k) {
    switch (k) {
        case EventKind::Tau: return "Tau";
        case EventKind::Sync: return "Sync";
        case EventKind::Sense: return "Sense";
        case EventKind::Actuate: return "Actuate";
        case EventKind::Evolve: return "Evolve";
        case EventKind::Stop: return "Stop";
        case EventKind::ZenoAbort: return "ZenoAbort";
        case EventKind::Deadlock: return "Deadlock";
    }
    return "?";
}

const char* termination_name(Termination t) {
    switch (t) {
        case Termination::Horizon: return "horizon";
        case Termination::Inaction: return "inaction";
        case Termination::Deadlock: return "deadlock";
        case Termination::Zeno: return "zeno";
    }
    return "?";
}

double Trajectory::duration() const {
    double d = 0.0;
    for (auto& s : segments) d += s.flow.duration();
    return d;
}

std::vector<std::pair<double, double>> Trajectory::series(const std::string& display) const {
    std::vector<std::pair<double, double>> out;
    for (auto& s : segments) {
        for (size_t j = 0; j < s.flow.names.size(); ++j) {
            if (s.priv[j] || s.flow.names[j].display != display) continue;
            for (size_t i = 0; i < s.flow.grid.size(); ++i) out.emplace_back(s.start + s.flow.grid[i], s.flow.samples[i][j]);
            break;
        }
    }
    return out;
}

namespace {

bool is_discrete(EventKind k) {
    return k == EventKind::Tau || k == EventKind::Sync || k == EventKind::Sense || k == EventKind::Actuate ||
           k == EventKind::Stop;
}

EventKind kind_of(StepKind k) {
    switch (k) {
        case StepKind::Tau:
        case StepKind::Pass: return EventKind::Tau;
        case StepKind::Sync: return EventKind::Sync;
        case StepKind::Sense: return EventKind::Sense;
        case StepKind::Actuate: return EventKind::Actuate;
    }
    return EventKind::Tau;
}

// Chooses among enabled steps; records branching for the exhaustive driver.
struct Chooser {
    Policy policy;
    std::mt19937_64 rng;
    std::vector<size_t> forced;  // exhaustive prefix
    std::vector<size_t> widths;  // options seen at each choice point
    size_t point = 0;

    size_t pick(size_t n) {
        if (n <= 1) return 0;
        switch (policy.kind) {
            case Policy::Kind::FirstEnabled: return 0;
            case Policy::Kind::RandomSeeded: {
                double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
                return std::min(n - 1, static_cast<size_t>(u * static_cast<double>(n)));
            }
            case Policy::Kind::Exhaustive: {
                size_t k = point++;
                if (k >= static_cast<size_t>(policy.depth)) return 0;
                widths.push_back(n);
                return k < forced.size() ? forced[k] : 0;
            }
        }
        return 0;
    }
};

struct ZenoWindow {
    std::deque<double> times;
    int max_events;
    double window;
    bool push(double t) {
        times.push_back(t);
        while (!times.empty() && times.front() <= t - window) times.pop_front();
        return static_cast<int>(times.size()) > max_events;
    }
};

double accumulation_estimate(const std::vector<TraceEvent>& tr) {
    std::vector<double> stops;
    for (auto& e : tr)
        if (e.kind == EventKind::Stop) stops.push_back(e.time);
    std::vector<std::pair<double, double>> gaps;  // (gap, end time)
    for (size_t i = 1; i < stops.size(); ++i) {
        double g = stops[i] - stops[i - 1];
        if (g >= 1e-6) gaps.emplace_back(g, stops[i]);
    }
    if (gaps.size() < 3) return std::numeric_limits<double>::quiet_NaN();
    std::vector<double> ratios;
    for (size_t i = 1; i < gaps.size(); ++i) ratios.push_back(gaps[i].first / gaps[i - 1].first);
    std::sort(ratios.begin(), ratios.end());
    double r = ratios[ratios.size() / 2];
    if (!(r > 0.0 && r < 1.0)) return std::numeric_limits<double>::quiet_NaN();
    auto& last = gaps.back();
    return last.second + last.first * r / (1.0 - r);
}

SimResult run(const Proc& p, const SimConfig& cfg, Chooser& ch) {
    SimResult res;
    res.policy = policy_name(cfg.policy);
    Config c = make_config(p);
    ZenoWindow zw{{}, cfg.zeno_max_events, cfg.zeno_window};
    double t = 0.0;
    const Scenario* sc = &cfg.scenario;

    auto emit = [&](TraceEvent ev) -> bool {
        bool disc = is_discrete(ev.kind);
        double at = ev.time;
        res.trace.push_back(std::move(ev));
        if (disc && zw.push(at)) {
            TraceEvent z;
            z.time = at;
            z.kind = EventKind::ZenoAbort;
            double acc = accumulation_estimate(res.trace);
            z.values.push_back(std::isnan(acc) ? Value::undefined() : Value::of(acc));
            res.trace.push_back(std::move(z));
            res.termination = Termination::Zeno;
            return false;
        }
        return true;
    };
    auto emit_stops = [&](const std::vector<StopRecord>& stops) -> bool {
        for (auto& s : stops) {
            TraceEvent ev;
            ev.time = t;
            ev.kind = EventKind::Stop;
            ev.chan = s.boundary;
            for (double v : s.state) ev.values.push_back(Value::of(v));
            ev.provenance = s.tag;
            ev.grazing = s.grazing;
            if (!emit(std::move(ev))) return false;
        }
        return true;
    };
    auto deadlock = [&](const std::string& why) {
        TraceEvent ev;
        ev.time = t;
        ev.kind = EventKind::Deadlock;
        ev.chan = why;
        res.trace.push_back(std::move(ev));
        res.termination = Termination::Deadlock;
    };

    for (;;) {
        bool aborted = false;
        for (;;) {
            std::vector<std::string> diags;
            auto steps = urgent_steps(c, &diags);
            for (auto& d : diags)
                if (std::find(res.diagnostics.begin(), res.diagnostics.end(), d) == res.diagnostics.end())
                    res.diagnostics.push_back(d);
            if (steps.empty()) break;
            size_t k = ch.pick(steps.size());
            StepEvent se = apply_step(c, steps[k]);
            TraceEvent ev;
            ev.time = t;
            ev.kind = kind_of(se.kind);
            ev.chan = se.chan;
            for (auto& e : se.values) ev.values.push_back(eval_expr(e, {}));
            ev.provenance = se.provenance;
            if (!emit(std::move(ev))) {
                aborted = true;
                break;
            }
        }
        if (aborted) break;
        auto zs = zero_stops(c, sc, t);
        if (!zs.empty()) {
            if (!emit_stops(zs)) break;
            continue;
        }
        if (config_inert(c)) {
            res.termination = Termination::Inaction;
            break;
        }
        if (t >= cfg.horizon) {
            res.termination = Termination::Horizon;
            break;
        }
        double t_end = std::min(cfg.horizon, sc->next_break(t));
        EvolveResult r = evolve(c, t, t_end, cfg.integrator, sc, cfg.sample_stride, true);
        for (auto& d : r.diagnostics)
            if (std::find(res.diagnostics.begin(), res.diagnostics.end(), d) == res.diagnostics.end())
                res.diagnostics.push_back(d);
        if (r.deadlock) {
            if (r.wait_only) deadlock("waiting on " + ready_text(r.ready));
            else deadlock(r.diagnostics.empty() ? "no evolution possible" : r.diagnostics.front());
            break;
        }
        TraceEvent ev;
        ev.time = t;
        ev.kind = EventKind::Evolve;
        ev.duration = r.duration;
        ev.ready = r.ready;
        ev.chan = ready_text(r.ready);
        ev.values.push_back(Value::of(r.duration));
        res.trace.push_back(std::move(ev));
        res.trajectory.segments.push_back(TrajectorySegment{t, std::move(r.flow), std::move(r.priv)});
        t += r.duration;
        if (r.stops.empty() && std::abs(t - t_end) < 1e-9) t = t_end;
        if (!emit_stops(r.stops)) break;
    }
    res.final_time = t;
    res.final_process = config_proc(c);
    return res;
}

}  // namespace

SimResult simulate(const Proc& p, const SimConfig& cfg) {
    if (!(cfg.horizon > 0.0) || !(cfg.zeno_window > 0.0))
        throw std::invalid_argument("horizon and zeno window must be positive");
    if (cfg.policy.kind == Policy::Kind::Exhaustive) {
        auto all = simulate_all(p, cfg);
        return all.front();
    }
    Chooser ch{cfg.policy, std::mt19937_64(cfg.seed), {}, {}, 0};
    return run(p, cfg, ch);
}

std::vector<SimResult> simulate_all(const Proc& p, const SimConfig& cfg) {
    if (cfg.policy.depth < 1) throw std::invalid_argument("exhaustive depth must be at least 1");
    std::vector<SimResult> out;
    std::vector<size_t> prefix;
    for (;;) {
        Chooser ch{cfg.policy, std::mt19937_64(cfg.seed), prefix, {}, 0};
        ch.policy.kind = Policy::Kind::Exhaustive;
        out.push_back(run(p, cfg, ch));
        out.back().policy = policy_name(ch.policy);
        if (out.size() >= cfg.max_traces) break;
        // next prefix in DFS order
        std::vector<size_t> full = prefix;
        full.resize(ch.widths.size(), 0);
        int i = static_cast<int>(full.size()) - 1;
        while (i >= 0 && full[static_cast<size_t>(i)] + 1 >= ch.widths[static_cast<size_t>(i)]) --i;
        if (i < 0) break;
        full.resize(static_cast<size_t>(i) + 1);
        ++full.back();
        prefix = full;
    }
    return out;
}

// ---------------------------------------------------------------- closedness

namespace {

void closed_walk(const Proc& p, NameSet bound, const NameSet& guaranteed, std::set<std::string>& missing,
                 std::vector<Name>& seen) {
    switch (p->kind) {
        case ProcNode::Kind::Sum:
            for (auto& br : p->branches) {
                const Prefix& pre = br.prefix;
                NameSet inner = bound;
                if (pre.kind == PrefixKind::Continuous) {
                    NameSet refs;
                    for (auto& e : pre.field) expr_names(e, refs);
                    bool_names(pre.boundary, refs);
                    for (auto& v : pre.vars) refs.erase(v);
                    for (auto& r : refs)
                        if (!bound.count(r) && !guaranteed.count(r) &&
                            std::find(seen.begin(), seen.end(), r) == seen.end()) {
                            seen.push_back(r);
                            missing.insert(r.display);
                        }
                    for (auto& b : pre.binders) inner.insert(b);
                } else if (pre.kind == PrefixKind::Input) {
                    for (auto& b : pre.binders) inner.insert(b);
                }
                if (br.cont) closed_walk(br.cont, inner, guaranteed, missing, seen);
            }
            return;
        case ProcNode::Kind::Res:
        case ProcNode::Kind::Rep: closed_walk(p->left, bound, guaranteed, missing, seen); return;
        case ProcNode::Kind::Par:
            closed_walk(p->left, bound, guaranteed, missing, seen);
            closed_walk(p->right, bound, guaranteed, missing, seen);
            return;
        case ProcNode::Kind::Call: return;
    }
}

void collect_vars(const Proc& p, NameSet& out) {
    switch (p->kind) {
        case ProcNode::Kind::Sum:
            for (auto& br : p->branches) {
                if (br.prefix.kind == PrefixKind::Continuous)
                    for (auto& v : br.prefix.vars) out.insert(v);
                if (br.cont) collect_vars(br.cont, out);
            }
            return;
        case ProcNode::Kind::Res:
        case ProcNode::Kind::Rep: collect_vars(p->left, out); return;
        case ProcNode::Kind::Par:
            collect_vars(p->left, out);
            collect_vars(p->right, out);
            return;
        case ProcNode::Kind::Call: return;
    }
}

}  // namespace

ClosedReport is_closed_for_evolution(const Proc& p, const Scenario* sc) {
    NameSet g;
    collect_vars(p, g);
    std::set<std::string> missing;
    std::vector<Name> seen;
    closed_walk(p, {}, g, missing, seen);
    ClosedReport r;
    for (auto& m : missing)
        if (!sc || !sc->inputs.count(m)) r.unassumed.push_back(m);
    r.closed = r.unassumed.empty();
    return r;
}

ZenoReport detect_zeno(const std::vector<TraceEvent>& tr, const SimConfig& cfg) {
    ZenoReport rep;
    std::deque<double> win;
    for (auto& e : tr) {
        if (e.kind == EventKind::ZenoAbort) rep.flagged = true;
        if (!is_discrete(e.kind)) continue;
        win.push_back(e.time);
        while (!win.empty() && win.front() <= e.time - cfg.zeno_window) win.pop_front();
        rep.events = std::max(rep.events, win.size());
    }
    if (static_cast<int>(rep.events) > cfg.zeno_max_events) rep.flagged = true;
    rep.accumulation = rep.flagged ? accumulation_estimate(tr) : std::numeric_limits<double>::quiet_NaN();
    return rep;
}

// ---------------------------------------------------------------- export

std::string value_text(const Value& v) {
    switch (v.kind) {
        case Value::Kind::Real: return fmt17(v.real);
        case Value::Kind::Text: return v.text;
        case Value::Kind::Residual: return pretty_expr(v.residual);
        case Value::Kind::Undefined: return "undefined";
    }
    return "?";
}

void write_trace_jsonl(std::ostream& os, const std::vector<TraceEvent>& tr) {
    for (auto& e : tr) {
        nlohmann::json j;
        j["time"] = e.time;
        j["kind"] = event_kind_name(e.kind);
        j["chan"] = e.chan;
        auto vals = nlohmann::json::array();
        for (auto& v : e.values) {
            if (v.kind == Value::Kind::Real) vals.push_back(v.real);
            else if (v.kind == Value::Kind::Undefined) vals.push_back(nullptr);
            else vals.push_back(value_text(v));
        }
        j["values"] = vals;
        j["provenance"] = e.provenance;
        os << j.dump() << '\n';
    }
}

void write_trajectory_csv(std::ostream& os, const Trajectory& tj, bool all_vars) {
    // column per Name; public names by display, private ones as display#k in order of appearance
    std::vector<Name> cols;
    std::vector<std::string> headers;
    std::map<std::string, int> priv_count;
    std::map<std::string, int> pub_seen;
    for (auto& s : tj.segments)
        for (size_t j = 0; j < s.flow.names.size(); ++j) {
            const Name& n = s.flow.names[j];
            if (s.priv[j] && !all_vars) continue;
            if (std::find(cols.begin(), cols.end(), n) != cols.end()) continue;
            cols.push_back(n);
            if (s.priv[j]) headers.push_back(n.display + "#" + std::to_string(++priv_count[n.display]));
            else {
                int k = pub_seen[n.display]++;
                headers.push_back(k == 0 ? n.display : n.display + "#" + std::to_string(k));
            }
        }
    os << "time";
    for (auto& h : headers) os << ',' << h;
    os << '\n';
    for (auto& s : tj.segments) {
        std::vector<int> idx;
        for (auto& n : cols) idx.push_back(s.flow.index_of(n));
        for (size_t i = 0; i < s.flow.grid.size(); ++i) {
            os << fmt17(s.start + s.flow.grid[i]);
            for (int k : idx) {
                os << ',';
                if (k >= 0) os << fmt17(s.flow.samples[i][static_cast<size_t>(k)]);
            }
            os << '\n';
        }
    }
}

}  // namespace hpc
