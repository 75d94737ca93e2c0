#include "hpc/equivalence.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "hpc/parser.hpp"

namespace hpc {

// ---------------------------------------------------------------- LTS

namespace {

std::string values_text(const std::vector<Expr>& vs) {
    std::string s;
    for (size_t i = 0; i < vs.size(); ++i) s += (i ? "," : "") + pretty_expr(vs[i]);
    return s;
}

// all tuples of the given arity over the universe
void tuples(const std::vector<Expr>& u, size_t arity, std::vector<Expr>& cur, std::vector<std::vector<Expr>>& out) {
    if (cur.size() == arity) {
        out.push_back(cur);
        return;
    }
    for (auto& e : u) {
        cur.push_back(e);
        tuples(u, arity, cur, out);
        cur.pop_back();
    }
}

// Extruded names become global placeholders $k so that both sides of a comparison agree on them.
Name extrusion_name(const NameSet& avoid) {
    for (int k = 1;; ++k) {
        Name n = global_name("$" + std::to_string(k));
        if (!avoid.count(n)) return n;
    }
}

}  // namespace

Lts build_lts(const Proc& p, const LtsBounds& bounds) {
    if (has_continuous(p)) throw UnsupportedError("LTS construction needs a process without continuous prefixes");
    Lts l;
    std::map<std::string, int> index;
    std::vector<Proc> procs;
    std::deque<int> work;
    auto add = [&](const Proc& q) -> int {
        std::string k = canonical(q, false);
        auto it = index.find(k);
        if (it != index.end()) return it->second;
        int id = static_cast<int>(l.states.size());
        index.emplace(k, id);
        l.states.push_back(k);
        procs.push_back(q);
        work.push_back(id);
        return id;
    };
    l.initial = add(p);
    std::set<std::string> notes;
    while (!work.empty()) {
        int s = work.front();
        work.pop_front();
        if (static_cast<int>(l.states.size()) > bounds.max_states) {
            l.truncated = true;
            notes.insert("state bound " + std::to_string(bounds.max_states) + " reached");
            break;
        }
        TransitionSet ts = discrete_transitions(procs[static_cast<size_t>(s)], bounds.rep_depth);
        if (ts.truncated) {
            l.truncated = true;
            notes.insert("replication depth " + std::to_string(bounds.rep_depth) + " reached");
        }
        for (auto& d : ts.diagnostics) notes.insert(d);
        std::set<std::pair<std::string, int>> seen;
        auto edge = [&](const std::string& label, bool tau, const Proc& target) {
            int t = add(target);
            if (seen.insert({label, t}).second) l.edges.push_back(LtsEdge{s, label, t, tau});
        };
        for (auto& tr : ts.items) {
            const Agent& a = tr.agent;
            switch (a.kind) {
                case Agent::Kind::Proc: edge("tau", true, a.body); break;
                case Agent::Kind::Abs: {
                    std::vector<std::vector<Expr>> all;
                    std::vector<Expr> cur;
                    tuples(bounds.universe, a.names.size(), cur, all);
                    for (auto& vals : all) {
                        Substitution sub;
                        for (size_t i = 0; i < vals.size(); ++i) sub.emplace_back(a.names[i], vals[i]);
                        edge(tr.label.chan.display + "(" + values_text(vals) + ")", false, substitute(a.body, sub));
                    }
                    break;
                }
                case Agent::Kind::Conc: {
                    NameSet avoid = free_names(a.body);
                    for (auto& e : a.payload) expr_names(e, avoid);
                    Substitution sub;
                    for (auto& y : a.names) {
                        Name g = extrusion_name(avoid);
                        avoid.insert(g);
                        sub.emplace_back(y, mk_var(g));
                    }
                    std::vector<Expr> pay;
                    for (auto& e : a.payload) pay.push_back(subst_expr(e, sub));
                    edge(tr.label.chan.display + "!<" + values_text(pay) + ">", false, substitute(a.body, sub));
                    break;
                }
                default: break;
            }
        }
    }
    l.notes.assign(notes.begin(), notes.end());
    return l;
}

namespace {

BisimResult refine(const Lts& a, const Lts& b) {
    size_t na = a.states.size(), n = na + b.states.size();
    std::map<std::string, int> label_ids;
    std::vector<std::vector<std::pair<int, int>>> out(n);  // (label, target)
    auto load = [&](const Lts& l, size_t off) {
        for (auto& e : l.edges) {
            int lid = label_ids.emplace(e.label, static_cast<int>(label_ids.size())).first->second;
            out[off + static_cast<size_t>(e.from)].emplace_back(lid, static_cast<int>(off) + e.to);
        }
    };
    load(a, 0);
    load(b, na);
    std::vector<int> block(n, 0);
    size_t count = 1;
    for (;;) {
        std::map<std::pair<int, std::vector<std::pair<int, int>>>, int> sigs;
        std::vector<int> next(n);
        for (size_t s = 0; s < n; ++s) {
            std::vector<std::pair<int, int>> sig;
            for (auto& [lab, t] : out[s]) sig.emplace_back(lab, block[static_cast<size_t>(t)]);
            std::sort(sig.begin(), sig.end());
            sig.erase(std::unique(sig.begin(), sig.end()), sig.end());
            auto key = std::make_pair(block[s], std::move(sig));
            auto it = sigs.find(key);
            if (it == sigs.end()) it = sigs.emplace(std::move(key), static_cast<int>(sigs.size())).first;
            next[s] = it->second;
        }
        block.swap(next);
        if (sigs.size() == count) break;
        count = sigs.size();
    }
    BisimResult r;
    r.blocks = static_cast<int>(count);
    r.block_a.assign(block.begin(), block.begin() + static_cast<long>(na));
    r.block_b.assign(block.begin() + static_cast<long>(na), block.end());
    r.related = n > 0 && !a.states.empty() && !b.states.empty() &&
                r.block_a[static_cast<size_t>(a.initial)] == r.block_b[static_cast<size_t>(b.initial)];
    r.truncated = a.truncated || b.truncated;
    return r;
}

}  // namespace

BisimResult strong_bisim(const Lts& a, const Lts& b) { return refine(a, b); }

Lts saturate(const Lts& l) {
    size_t n = l.states.size();
    std::vector<std::vector<int>> tau(n);
    std::vector<std::vector<const LtsEdge*>> vis(n);
    for (auto& e : l.edges) {
        if (e.tau) tau[static_cast<size_t>(e.from)].push_back(e.to);
        else vis[static_cast<size_t>(e.from)].push_back(&e);
    }
    std::vector<std::vector<int>> closure(n);
    for (size_t s = 0; s < n; ++s) {
        std::vector<char> mark(n, 0);
        std::vector<int> stack{static_cast<int>(s)};
        mark[s] = 1;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            closure[s].push_back(u);
            for (int v : tau[static_cast<size_t>(u)])
                if (!mark[static_cast<size_t>(v)]) {
                    mark[static_cast<size_t>(v)] = 1;
                    stack.push_back(v);
                }
        }
        std::sort(closure[s].begin(), closure[s].end());
    }
    Lts r;
    r.states = l.states;
    r.initial = l.initial;
    r.truncated = l.truncated;
    r.notes = l.notes;
    for (size_t s = 0; s < n; ++s) {
        std::set<std::pair<std::string, int>> seen;
        for (int u : closure[s]) {
            if (seen.insert({"tau", u}).second) r.edges.push_back(LtsEdge{static_cast<int>(s), "tau", u, true});
            for (auto* e : vis[static_cast<size_t>(u)])
                for (int w : closure[static_cast<size_t>(e->to)])
                    if (seen.insert({e->label, w}).second)
                        r.edges.push_back(LtsEdge{static_cast<int>(s), e->label, w, false});
        }
    }
    return r;
}

BisimResult weak_bisim(const Lts& a, const Lts& b) { return refine(saturate(a), saturate(b)); }

// ---------------------------------------------------------------- approximate

std::vector<Observation> parse_observations(const std::string& spec) {
    std::vector<Observation> out;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        auto c = item.find(':');
        if (c == std::string::npos) out.push_back({item, item});
        else out.push_back({item.substr(0, c), item.substr(c + 1)});
    }
    return out;
}

namespace {

struct Series {
    std::vector<double> start, end;        // per segment
    std::vector<const Flow*> flows;
    std::vector<int> col;                  // -1 when the variable is absent
};

Series locate(const Trajectory& tj, const std::string& display) {
    Series s;
    for (auto& seg : tj.segments) {
        int c = -1;
        for (size_t j = 0; j < seg.flow.names.size(); ++j)
            if (!seg.priv[j] && seg.flow.names[j].display == display) {
                c = static_cast<int>(j);
                break;
            }
        s.start.push_back(seg.start);
        s.end.push_back(seg.start + seg.flow.duration());
        s.flows.push_back(&seg.flow);
        s.col.push_back(c);
    }
    return s;
}

bool present(const Series& s) {
    return std::any_of(s.col.begin(), s.col.end(), [](int c) { return c >= 0; });
}

// right-continuous value at t; nullopt outside the trajectory or where the variable is absent
std::optional<double> value_at(const Series& s, double t) {
    if (s.start.empty()) return std::nullopt;
    auto it = std::upper_bound(s.start.begin(), s.start.end(), t + 1e-12);
    if (it == s.start.begin()) return std::nullopt;
    size_t k = static_cast<size_t>(it - s.start.begin()) - 1;
    if (t > s.end[k] + 1e-12 || s.col[k] < 0) return std::nullopt;
    const Flow& f = *s.flows[k];
    size_t c = static_cast<size_t>(s.col[k]);
    double u = std::clamp(t - s.start[k], 0.0, f.duration());
    auto g = std::upper_bound(f.grid.begin(), f.grid.end(), u);
    if (g == f.grid.begin()) return f.samples.front()[c];
    if (g == f.grid.end()) return f.samples.back()[c];
    size_t i = static_cast<size_t>(g - f.grid.begin());
    double t0 = f.grid[i - 1], t1 = f.grid[i];
    double w = t1 > t0 ? (u - t0) / (t1 - t0) : 0.0;
    return f.samples[i - 1][c] * (1.0 - w) + f.samples[i][c] * w;
}

std::vector<double> segment_starts(const Trajectory& tj) {
    std::vector<double> v;
    for (auto& s : tj.segments) v.push_back(s.start);
    return v;
}

std::vector<double> sample_times(const Trajectory& tj) {
    std::vector<double> v;
    for (auto& s : tj.segments)
        for (double g : s.flow.grid) v.push_back(s.start + g);
    return v;
}

std::vector<std::string> public_displays(const Trajectory& tj) {
    std::set<std::string> out;
    for (auto& s : tj.segments)
        for (size_t j = 0; j < s.flow.names.size(); ++j)
            if (!s.priv[j]) out.insert(s.flow.names[j].display);
    return {out.begin(), out.end()};
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace

ApproxVerdict approx_bisim(const Proc& p, const Proc& q, double eps, double delta, const SimConfig& cfg,
                           const std::vector<Scenario>& scenarios, const std::vector<Observation>& observe,
                           const LtsBounds& bounds) {
    ApproxVerdict v;
    v.eps = eps;
    v.delta = delta;
    if (!has_continuous(p) && !has_continuous(q)) {
        v.delegated_weak = true;
        Lts a = build_lts(p, bounds), b = build_lts(q, bounds);
        BisimResult r = weak_bisim(a, b);
        v.refuted = !r.related;
        if (v.refuted) v.counterexample = "initial states are not weakly bisimilar";
        if (r.truncated) v.warnings.push_back("LTS construction truncated");
        return v;
    }
    std::vector<Scenario> scs = scenarios;
    if (scs.empty()) scs.push_back(cfg.scenario);
    for (auto& sc : scs) {
        SimConfig c = cfg;
        c.scenario = sc;
        SimResult rp = simulate(p, c), rq = simulate(q, c);
        ScenarioReport rep;
        rep.label = sc.label.empty() ? "default" : sc.label;
        if (rp.termination == Termination::Zeno || rq.termination == Termination::Zeno)
            v.warnings.push_back(rep.label + ": Zeno abort truncated a run");

        std::vector<Observation> obs = observe;
        if (obs.empty()) {
            auto a = public_displays(rp.trajectory), b = public_displays(rq.trajectory);
            for (auto& n : a)
                if (std::find(b.begin(), b.end(), n) != b.end()) obs.push_back({n, n});
        }
        std::vector<std::pair<Series, Series>> cols;
        for (auto& o : obs) {
            Series a = locate(rp.trajectory, o.left), b = locate(rq.trajectory, o.right);
            if (!present(a)) throw std::invalid_argument("observed variable '" + o.left + "' is not a public variable of the left process");
            if (!present(b)) throw std::invalid_argument("observed variable '" + o.right + "' is not a public variable of the right process");
            cols.emplace_back(std::move(a), std::move(b));
        }
        double worst_t = 0.0;
        auto dist = [&](double t, double& acc, double* where) {
            for (auto& [a, b] : cols) {
                auto x = value_at(a, t), y = value_at(b, t);
                if (!x || !y) continue;
                double d = std::abs(*x - *y);
                if (d > acc) {
                    acc = d;
                    if (where) *where = t;
                }
            }
        };
        auto pts_a = segment_starts(rp.trajectory);
        pts_a.push_back(rp.final_time);
        auto pts_b = pts_a;
        for (double t : segment_starts(rq.trajectory)) pts_b.push_back(t);
        pts_b.push_back(rq.final_time);
        for (double t : pts_a) dist(t, rep.distance_a, nullptr);
        for (double t : pts_b) dist(t, rep.distance_b, &worst_t);
        rep.max_distance = rep.distance_b;
        for (double t : sample_times(rp.trajectory)) dist(t, rep.max_distance, &worst_t);
        for (double t : sample_times(rq.trajectory)) dist(t, rep.max_distance, &worst_t);

        rep.end_p = rp.final_time;
        rep.end_q = rq.final_time;
        rep.skew = std::abs(rp.final_time - rq.final_time);
        if (rep.skew > delta + 1e-6)
            rep.violation = "end-time skew " + fmt(rep.skew) + " s exceeds delta (left ends at " + fmt(rp.final_time) +
                            " s, right at " + fmt(rq.final_time) + " s)";
        else if (rep.max_distance > eps)
            rep.violation = "distance " + fmt(rep.max_distance) + " at t=" + fmt(worst_t) + " s exceeds eps";
        else if ((rp.termination == Termination::Deadlock) != (rq.termination == Termination::Deadlock))
            rep.violation = "only one side deadlocks";

        // ready sets at p's segment starts
        for (auto& e : rp.trace) {
            if (e.kind != EventKind::Evolve) continue;
            const TraceEvent* m = nullptr;
            for (auto& f : rq.trace)
                if (f.kind == EventKind::Evolve && f.time <= e.time + 1e-9 && e.time < f.time + f.duration) m = &f;
            if (m && ready_text(m->ready) != ready_text(e.ready)) {
                v.warnings.push_back(rep.label + ": ready sets differ at t=" + fmt(e.time) + " (" + ready_text(e.ready) +
                                     " vs " + ready_text(m->ready) + ")");
                break;
            }
        }

        v.max_distance = std::max(v.max_distance, rep.max_distance);
        v.max_distance_a = std::max(v.max_distance_a, rep.distance_a);
        v.max_distance_b = std::max(v.max_distance_b, rep.distance_b);
        v.max_skew = std::max(v.max_skew, rep.skew);
        if (!rep.violation.empty() && !v.refuted) {
            v.refuted = true;
            v.counterexample = rep.label + ": " + rep.violation;
        }
        v.scenarios.push_back(std::move(rep));
    }
    return v;
}

// ---------------------------------------------------------------- discretization

namespace {

std::vector<Expr> apply_field(const std::vector<Name>& vars, const std::vector<Expr>& field,
                              const std::vector<Expr>& at) {
    Substitution s;
    for (size_t i = 0; i < vars.size(); ++i) s.emplace_back(vars[i], at[i]);
    std::vector<Expr> out;
    for (auto& f : field) out.push_back(subst_expr(f, s));
    return out;
}

// y + h * (k1 + 2 k2 + 2 k3 + k4) / 6
std::vector<Expr> rk4_next(const std::vector<Name>& vars, const std::vector<Expr>& field,
                           const std::vector<Expr>& y, const Expr& h) {
    size_t n = y.size();
    Expr half = h / mk_real(2);
    auto shifted = [&](const std::vector<Expr>& k, const Expr& w) {
        std::vector<Expr> o;
        for (size_t i = 0; i < n; ++i) o.push_back(y[i] + w * k[i]);
        return o;
    };
    auto k1 = apply_field(vars, field, y);
    auto k2 = apply_field(vars, field, shifted(k1, half));
    auto k3 = apply_field(vars, field, shifted(k2, half));
    auto k4 = apply_field(vars, field, shifted(k3, h));
    std::vector<Expr> out;
    for (size_t i = 0; i < n; ++i)
        out.push_back(y[i] + h / mk_real(6) * (k1[i] + mk_real(2) * k2[i] + mk_real(2) * k3[i] + k4[i]));
    return out;
}

// (nu c){0, y | c' = 1, v' = 0 & c < h}.X<next, rest>
Proc step_then(const std::vector<Name>& vars, const std::vector<Expr>& y, const Expr& h, const Name& x,
               std::vector<Expr> payload) {
    Name c = fresh_name("c");
    std::vector<Expr> init{mk_real(0)};
    std::vector<Name> vs{c};
    std::vector<Expr> field{mk_real(1)};
    for (size_t i = 0; i < vars.size(); ++i) {
        init.push_back(y[i]);
        vs.push_back(vars[i]);
        field.push_back(mk_real(0));
    }
    Proc after = mk_prefix(p_out(x, std::move(payload)), nil());
    return mk_res(c, mk_prefix(p_cont(init, vs, field, b_less(mk_var(c), h)), after));
}

}  // namespace

Proc discretize(const std::vector<Expr>& init, const std::vector<Name>& vars, const std::vector<Expr>& field,
                double d, double eps, double delta) {
    if (!(d > 0.0)) throw std::invalid_argument("duration must be positive");
    if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    if (init.size() != vars.size() || field.size() != vars.size())
        throw std::invalid_argument("init, vars and field must have the same length");
    NameSet own(vars.begin(), vars.end());
    for (auto& f : field) {
        NameSet ns;
        expr_names(f, ns);
        for (auto& n : ns)
            if (!own.count(n)) throw std::invalid_argument("field references '" + n.display + "' outside the ODE variables");
    }
    Name x = fresh_name("X");
    Name z = fresh_name("z");
    std::vector<Name> ys;
    std::vector<Expr> yv;
    for (auto& v : vars) {
        ys.push_back(fresh_name("y_" + v.display));
        yv.push_back(mk_var(ys.back()));
    }
    Expr dl = mk_real(delta), zv = mk_var(z);
    // z accumulates rounding from repeated subtraction; steps shorter than this are dropped
    Expr slack = mk_real(1e-9 * d), dl_lo = mk_real(delta - 1e-9 * d);

    auto full = rk4_next(vars, field, yv, dl);
    full.push_back(zv - dl);
    auto part = rk4_next(vars, field, yv, zv);
    part.push_back(mk_real(0));

    std::vector<Branch> brs;
    brs.push_back(Branch{p_guard(b_ge(zv, dl_lo)), step_then(vars, yv, dl, x, full)});
    brs.push_back(Branch{p_guard(b_and(b_less(slack, zv), b_less(zv, dl_lo))), step_then(vars, yv, zv, x, part)});
    brs.push_back(Branch{p_guard(b_le(zv, slack)), nil()});

    std::vector<Name> params = ys;
    params.push_back(z);
    Proc rep = mk_rep(mk_prefix(p_in(x, params), mk_sum(std::move(brs))));
    std::vector<Expr> args = init;
    args.push_back(mk_real(d));
    return mk_res(x, mk_par(mk_prefix(p_out(x, args), nil()), rep));
}

double estimate_lipschitz(const std::vector<Name>& vars, const std::vector<Expr>& field,
                          const std::vector<double>& lo, const std::vector<double>& hi, int samples,
                          std::uint64_t seed) {
    if (lo.size() != vars.size() || hi.size() != vars.size())
        throw std::invalid_argument("box dimension does not match the variables");
    std::mt19937_64 rng(seed);
    auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    double best = 0.0;
    for (int s = 0; s < samples; ++s) {
        State a, b;
        double dx = 0.0;
        for (size_t i = 0; i < vars.size(); ++i) {
            double xa = lo[i] + (hi[i] - lo[i]) * unit(), xb = lo[i] + (hi[i] - lo[i]) * unit();
            a[vars[i]] = xa;
            b[vars[i]] = xb;
            dx = std::max(dx, std::abs(xa - xb));
        }
        if (dx <= 0.0) continue;
        double df = 0.0;
        for (auto& f : field) {
            Value va = eval_expr(f, a), vb = eval_expr(f, b);
            if (!va.is_real() || !vb.is_real()) continue;
            df = std::max(df, std::abs(va.real - vb.real));
        }
        best = std::max(best, df / dx);
    }
    return best;
}

double suggest_delta(double lipschitz, double eps, double d) {
    if (lipschitz * d < 1e-12) return 0.1 * eps / d;
    return 0.1 * eps * lipschitz / std::expm1(lipschitz * d);
}

}  // namespace hpc
