#include "hpc/kernel.hpp"

#include <algorithm>

#include "hpc/engine.hpp"
#include "hpc/parser.hpp"

namespace hpc {

const char* kernel_error_name(KernelError::Kind k) {
    switch (k) {
        case KernelError::Kind::UrgencyViolation: return "UrgencyViolation";
        case KernelError::Kind::OpenSystem: return "OpenSystem";
        case KernelError::Kind::UndefinedDynamics: return "UndefinedDynamics";
        case KernelError::Kind::StepOverflow: return "StepOverflow";
        case KernelError::Kind::GuaranteeOverlap: return "GuaranteeOverlap";
        case KernelError::Kind::Arity: return "ArityMismatch";
    }
    return "KernelError";
}

std::string label_text(const DiscreteLabel& l) {
    switch (l.kind) {
        case DiscreteLabel::Kind::Tau: return "tau";
        case DiscreteLabel::Kind::In: return l.chan.display;
        case DiscreteLabel::Kind::Out: return l.chan.display + "!";
    }
    return "?";
}

// ---------------------------------------------------------------- agents

Agent agent_proc(Proc p) {
    Agent a;
    a.kind = Agent::Kind::Proc;
    a.body = std::move(p);
    return a;
}

Agent agent_abs(std::vector<Name> binders, Proc body) {
    Agent a;
    a.kind = Agent::Kind::Abs;
    a.names = std::move(binders);
    a.body = std::move(body);
    return a;
}

Agent agent_conc(std::vector<Name> restricted, std::vector<Expr> payload, Proc body) {
    NameSet pn;
    for (auto& e : payload) expr_names(e, pn);
    for (auto& y : restricted)
        if (!pn.count(y)) throw SyntaxError("concretion restricts '" + y.display + "' which is not in its payload");
    Agent a;
    a.kind = Agent::Kind::Conc;
    a.names = std::move(restricted);
    a.payload = std::move(payload);
    a.body = std::move(body);
    return a;
}

Agent agent_res(const Name& y, Agent inner) {
    Agent a;
    a.kind = Agent::Kind::Res;
    a.res = y;
    a.inner = std::make_shared<Agent>(std::move(inner));
    return a;
}

Agent agent_par_left(Agent inner, Proc q) {
    Agent a;
    a.kind = Agent::Kind::ParL;
    a.inner = std::make_shared<Agent>(std::move(inner));
    a.partner = std::move(q);
    return a;
}

Agent agent_par_right(Proc q, Agent inner) {
    Agent a;
    a.kind = Agent::Kind::ParR;
    a.inner = std::make_shared<Agent>(std::move(inner));
    a.partner = std::move(q);
    return a;
}

namespace {

// Renames the binders in `names` that clash with `avoid`, rewriting body (and payload).
void rename_clashing(std::vector<Name>& names, const NameSet& avoid, Proc& body, std::vector<Expr>* payload) {
    Substitution s;
    for (auto& y : names)
        if (avoid.count(y)) {
            Name f = freshen(y);
            s.emplace_back(y, mk_var(f));
            y = f;
        }
    if (s.empty()) return;
    body = substitute(body, s);
    if (payload)
        for (auto& e : *payload) e = subst_expr(e, s);
}

}  // namespace

Agent ion_normalize(const Agent& a) {
    switch (a.kind) {
        case Agent::Kind::Proc:
        case Agent::Kind::Abs:
        case Agent::Kind::Conc: return a;
        case Agent::Kind::Res: {
            Agent n = ion_normalize(*a.inner);
            const Name& y = a.res;
            switch (n.kind) {
                case Agent::Kind::Proc: return agent_proc(mk_res(y, n.body));
                case Agent::Kind::Abs: {
                    rename_clashing(n.names, NameSet{y}, n.body, nullptr);
                    return agent_abs(n.names, mk_res(y, n.body));
                }
                case Agent::Kind::Conc: {
                    NameSet pn;
                    for (auto& e : n.payload) expr_names(e, pn);
                    if (pn.count(y)) {
                        std::vector<Name> rs{y};
                        rs.insert(rs.end(), n.names.begin(), n.names.end());
                        return agent_conc(rs, n.payload, n.body);
                    }
                    return agent_conc(n.names, n.payload, mk_res(y, n.body));
                }
                default: break;
            }
            break;
        }
        case Agent::Kind::ParL:
        case Agent::Kind::ParR: {
            Agent n = ion_normalize(*a.inner);
            bool left = a.kind == Agent::Kind::ParL;
            auto join = [&](const Proc& p) { return left ? mk_par(p, a.partner) : mk_par(a.partner, p); };
            NameSet fq = free_names(a.partner);
            switch (n.kind) {
                case Agent::Kind::Proc: return agent_proc(join(n.body));
                case Agent::Kind::Abs:
                    rename_clashing(n.names, fq, n.body, nullptr);
                    return agent_abs(n.names, join(n.body));
                case Agent::Kind::Conc:
                    rename_clashing(n.names, fq, n.body, &n.payload);
                    return agent_conc(n.names, n.payload, join(n.body));
                default: break;
            }
            break;
        }
    }
    return a;
}

Proc apply(const Agent& f0, const Agent& c0) {
    Agent f = ion_normalize(f0), c = ion_normalize(c0);
    bool swapped = false;
    if (f.kind == Agent::Kind::Conc || (f.kind == Agent::Kind::Proc && c.kind == Agent::Kind::Abs)) {
        std::swap(f, c);
        swapped = true;
    }
    if (f.kind == Agent::Kind::Proc) f = agent_abs({}, f.body);
    if (c.kind == Agent::Kind::Proc) c = agent_conc({}, {}, c.body);
    if (f.kind != Agent::Kind::Abs || c.kind != Agent::Kind::Conc)
        throw KernelError(KernelError::Kind::Arity, "apply needs an abstraction and a concretion");
    if (f.names.size() != c.payload.size())
        throw KernelError(KernelError::Kind::Arity, "abstraction binds " + std::to_string(f.names.size()) +
                                                        " name(s) but the concretion carries " +
                                                        std::to_string(c.payload.size()));
    NameSet fp = free_names(f.body);
    for (auto& x : f.names) fp.erase(x);
    rename_clashing(c.names, fp, c.body, &c.payload);
    Substitution s;
    for (size_t i = 0; i < f.names.size(); ++i) {
        auto folded = fold_expr(c.payload[i], {});
        s.emplace_back(f.names[i], folded ? *folded : c.payload[i]);
    }
    Proc p = substitute(f.body, s);
    return mk_res(c.names, swapped ? mk_par(c.body, p) : mk_par(p, c.body));
}

// ---------------------------------------------------------------- discrete transitions

namespace {

bool complementary(const DiscreteLabel& a, const DiscreteLabel& b) {
    return a.kind != DiscreteLabel::Kind::Tau && b.kind != DiscreteLabel::Kind::Tau && a.kind != b.kind &&
           a.chan == b.chan;
}

bool arity_match(const Agent& a, const Agent& b) {
    const Agent& abs = a.kind == Agent::Kind::Abs ? a : b;
    const Agent& conc = a.kind == Agent::Kind::Abs ? b : a;
    return abs.names.size() == conc.payload.size();
}

void trans(const Proc& p, int depth, TransitionSet& out);

std::vector<Transition> trans_of(const Proc& p, int depth, TransitionSet& meta) {
    TransitionSet t;
    trans(p, depth, t);
    meta.truncated |= t.truncated;
    meta.diagnostics.insert(meta.diagnostics.end(), t.diagnostics.begin(), t.diagnostics.end());
    return std::move(t.items);
}

void trans(const Proc& p, int depth, TransitionSet& out) {
    using LK = DiscreteLabel::Kind;
    switch (p->kind) {
        case ProcNode::Kind::Sum:
            for (auto& br : p->branches) {
                const Prefix& pre = br.prefix;
                switch (pre.kind) {
                    case PrefixKind::Tau: out.items.push_back({{LK::Tau, {}}, agent_proc(br.cont)}); break;
                    case PrefixKind::Guard: {
                        Tri t = eval_bool(pre.cond, {});
                        if (t == Tri::True) out.items.push_back({{LK::Tau, {}}, agent_proc(br.cont)});
                        else if (t == Tri::Undefined)
                            out.diagnostics.push_back("guard [" + pretty_bool(pre.cond) + "] is undefined");
                        break;
                    }
                    case PrefixKind::Input:
                        out.items.push_back({{LK::In, pre.chan}, agent_abs(pre.binders, br.cont)});
                        break;
                    case PrefixKind::Output: {
                        std::vector<Expr> vals;
                        bool ok = true;
                        for (auto& e : pre.payload) {
                            auto f = fold_expr(e, {});
                            if (!f) ok = false;
                            else vals.push_back(*f);
                        }
                        if (!ok) {
                            out.diagnostics.push_back("output on " + pre.chan.display + " has an undefined payload");
                            break;
                        }
                        out.items.push_back({{LK::Out, pre.chan}, agent_conc({}, vals, br.cont)});
                        break;
                    }
                    case PrefixKind::Continuous: {
                        Proc self = mk_sum({br});
                        for (auto& r : pre.ready) {
                            size_t i = 0;
                            while (!(pre.vars[i] == r.name)) ++i;
                            if (r.out) {
                                auto f = fold_expr(pre.init[i], {});
                                out.items.push_back({{LK::Out, r.name}, agent_conc({}, {f ? *f : pre.init[i]}, self)});
                            } else {
                                Name x = fresh_name("x");
                                Branch nb = br;
                                nb.prefix.init[i] = mk_var(x);
                                out.items.push_back({{LK::In, r.name}, agent_abs({x}, mk_sum({nb}))});
                            }
                        }
                        break;
                    }
                }
            }
            return;
        case ProcNode::Kind::Res: {
            for (auto& t : trans_of(p->left, depth, out)) {
                if (t.label.kind != LK::Tau && t.label.chan == p->name) continue;
                out.items.push_back({t.label, ion_normalize(agent_res(p->name, t.agent))});
            }
            return;
        }
        case ProcNode::Kind::Par: {
            auto tl = trans_of(p->left, depth, out);
            auto tr = trans_of(p->right, depth, out);
            for (auto& t : tl) out.items.push_back({t.label, ion_normalize(agent_par_left(t.agent, p->right))});
            for (auto& t : tr) out.items.push_back({t.label, ion_normalize(agent_par_right(p->left, t.agent))});
            for (auto& a : tl)
                for (auto& b : tr)
                    if (complementary(a.label, b.label) && arity_match(a.agent, b.agent))
                        out.items.push_back({{LK::Tau, {}}, agent_proc(apply(a.agent, b.agent))});
            return;
        }
        case ProcNode::Kind::Rep: {
            if (depth <= 0) {
                TransitionSet probe;
                trans(p->left, 0, probe);
                if (!probe.items.empty()) out.truncated = true;
                return;
            }
            auto t1 = trans_of(freshen_binders(p->left), depth - 1, out);
            for (auto& t : t1) out.items.push_back({t.label, ion_normalize(agent_par_left(t.agent, p))});
            bool pairs = false;
            for (auto& a : t1)
                for (auto& b : t1)
                    if (complementary(a.label, b.label) && a.label.kind == LK::In) pairs = true;
            if (!pairs) return;
            if (depth < 2) {
                out.truncated = true;
                return;
            }
            auto t2 = trans_of(freshen_binders(p->left), depth - 2, out);
            for (auto& a : t1)
                for (auto& b : t2)
                    if (complementary(a.label, b.label) && arity_match(a.agent, b.agent))
                        out.items.push_back({{LK::Tau, {}}, agent_proc(mk_par(apply(a.agent, b.agent), p))});
            return;
        }
        case ProcNode::Kind::Call:
            throw KernelError(KernelError::Kind::Arity, "unresolved definition call '" + p->callee + "'");
    }
}

}  // namespace

TransitionSet discrete_transitions(const Proc& p, int depth) {
    TransitionSet out;
    trans(p, depth, out);
    return out;
}

// ---------------------------------------------------------------- continuous

std::pair<ContinuousLabel, Proc> continuous_step(const Proc& p, double horizon, const IntegratorConfig& cfg) {
    Config c = make_config(p);
    if (!urgent_steps(c).empty())
        throw KernelError(KernelError::Kind::UrgencyViolation, "a discrete step is enabled; time cannot pass");
    ContinuousLabel label;
    auto zs = zero_stops(c, nullptr, 0.0);
    if (!zs.empty()) {
        label.stopped = true;
        label.ready = config_ready(c);
        return {label, config_proc(c)};
    }
    EvolveResult r = evolve(c, 0.0, horizon, cfg, nullptr, 1, true);
    if (r.deadlock) {
        if (!r.wait_only)
            throw KernelError(KernelError::Kind::UndefinedDynamics, "no component can evolve or wait");
        label.flow.guarantee = constant_flow({}, {}, horizon);
        label.flow.assumption = label.flow.guarantee;
        label.ready = r.ready;
        return {label, config_proc(c)};
    }
    NameSet priv;
    for (size_t i = 0; i < r.flow.names.size(); ++i)
        if (r.priv[i]) priv.insert(r.flow.names[i]);
    label.flow.guarantee = flow_restrict(r.flow, priv);
    label.flow.assumption = flow_restrict(r.flow, NameSet(r.flow.names.begin(), r.flow.names.end()));
    label.ready = r.ready;
    label.stopped = !r.stops.empty();
    return {label, config_proc(c)};
}

ReadySet ready_set(const Proc& p) { return config_ready(make_config(p)); }

}  // namespace hpc
