#include "hpc/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hpc/parser.hpp"

namespace hpc {

// ---------------------------------------------------------------- compiled code

namespace {
constexpr int kStackMax = 256;

int stack_depth(const Compiled& c) {
    int d = 0, best = 0;
    for (auto& op : c.code) {
        switch (op.ins) {
            case Compiled::Ins::Const:
            case Compiled::Ins::Slot: ++d; break;
            case Compiled::Ins::Sqrt:
            case Compiled::Ins::Neg: break;
            default: --d; break;
        }
        best = std::max(best, d);
    }
    return best;
}

void emit(Compiled& c, const Expr& e, const SlotFn& slot) {
    switch (e->kind) {
        case ExprNode::Kind::Real: c.code.push_back({Compiled::Ins::Const, 0, e->real}); return;
        case ExprNode::Kind::Text:
            throw KernelError(KernelError::Kind::UndefinedDynamics, "text literal \"" + e->text + "\" in continuous dynamics");
        case ExprNode::Kind::Var: {
            int s = slot(e->var);
            if (s < 0)
                throw KernelError(KernelError::Kind::OpenSystem, "variable '" + e->var.display + "' has no guarantor");
            c.code.push_back({Compiled::Ins::Slot, s, 0.0});
            return;
        }
        case ExprNode::Kind::Apply: {
            for (auto& a : e->args) emit(c, a, slot);
            Compiled::Ins ins = Compiled::Ins::Add;
            switch (e->op) {
                case Op::Add: ins = Compiled::Ins::Add; break;
                case Op::Sub: ins = Compiled::Ins::Sub; break;
                case Op::Mul: ins = Compiled::Ins::Mul; break;
                case Op::Div: ins = Compiled::Ins::Div; break;
                case Op::Sqrt: ins = Compiled::Ins::Sqrt; break;
                case Op::Min: ins = Compiled::Ins::Min; break;
                case Op::Max: ins = Compiled::Ins::Max; break;
                case Op::Neg: ins = Compiled::Ins::Neg; break;
            }
            c.code.push_back({ins, 0, 0.0});
            return;
        }
    }
}
}  // namespace

bool Compiled::eval(const double* x, double& out) const {
    double st[kStackMax];
    int sp = 0;
    for (const auto& op : code) {
        switch (op.ins) {
            case Ins::Const: st[sp++] = op.c; break;
            case Ins::Slot: st[sp++] = x[op.slot]; break;
            case Ins::Add: --sp; st[sp - 1] += st[sp]; break;
            case Ins::Sub: --sp; st[sp - 1] -= st[sp]; break;
            case Ins::Mul: --sp; st[sp - 1] *= st[sp]; break;
            case Ins::Div:
                --sp;
                if (st[sp] == 0.0) return false;
                st[sp - 1] /= st[sp];
                break;
            case Ins::Sqrt:
                if (st[sp - 1] < 0.0) return false;
                st[sp - 1] = std::sqrt(st[sp - 1]);
                break;
            case Ins::Min: --sp; st[sp - 1] = std::min(st[sp - 1], st[sp]); break;
            case Ins::Max: --sp; st[sp - 1] = std::max(st[sp - 1], st[sp]); break;
            case Ins::Neg: st[sp - 1] = -st[sp - 1]; break;
        }
    }
    out = st[0];
    return true;
}

Compiled compile_expr(const Expr& e, const SlotFn& slot) {
    Compiled c;
    emit(c, e, slot);
    if (stack_depth(c) > kStackMax)
        throw KernelError(KernelError::Kind::UndefinedDynamics, "expression too deep to compile");
    return c;
}

CompiledBool compile_bool(const Bool& b, const SlotFn& slot) {
    CompiledBool out;
    switch (b->kind) {
        case BoolNode::Kind::False: out.kind = CompiledBool::Kind::False; break;
        case BoolNode::Kind::Less:
            out.kind = CompiledBool::Kind::Less;
            out.lhs = compile_expr(b->lhs, slot);
            out.rhs = compile_expr(b->rhs, slot);
            break;
        case BoolNode::Kind::And:
            out.kind = CompiledBool::Kind::And;
            out.kids.push_back(compile_bool(b->a, slot));
            out.kids.push_back(compile_bool(b->b, slot));
            break;
        case BoolNode::Kind::Not:
            out.kind = CompiledBool::Kind::Not;
            out.kids.push_back(compile_bool(b->a, slot));
            break;
    }
    return out;
}

Tri CompiledBool::eval(const double* x) const {
    switch (kind) {
        case Kind::False: return Tri::False;
        case Kind::Less: {
            double l, r;
            if (!lhs.eval(x, l) || !rhs.eval(x, r)) return Tri::Undefined;
            return l < r ? Tri::True : Tri::False;
        }
        case Kind::And: {
            Tri a = kids[0].eval(x), b = kids[1].eval(x);
            if (a == Tri::Undefined || b == Tri::Undefined) return Tri::Undefined;
            return (a == Tri::True && b == Tri::True) ? Tri::True : Tri::False;
        }
        case Kind::Not: {
            Tri a = kids[0].eval(x);
            if (a == Tri::Undefined) return a;
            return a == Tri::True ? Tri::False : Tri::True;
        }
    }
    return Tri::Undefined;
}

double CompiledBool::robustness(const double* x, double& scale) const {
    switch (kind) {
        case Kind::False: return -std::numeric_limits<double>::infinity();
        case Kind::Less: {
            double l, r;
            if (!lhs.eval(x, l) || !rhs.eval(x, r)) return std::numeric_limits<double>::quiet_NaN();
            scale = std::max({scale, std::fabs(l), std::fabs(r)});
            return r - l;
        }
        case Kind::And: return std::min(kids[0].robustness(x, scale), kids[1].robustness(x, scale));
        case Kind::Not: return -kids[0].robustness(x, scale);
    }
    return 0.0;
}

// ---------------------------------------------------------------- scenarios

double Scenario::value(const std::string& name, double t) const {
    auto it = inputs.find(name);
    if (it == inputs.end() || it->second.empty()) return 0.0;
    double v = it->second.front().second;
    for (auto& [start, val] : it->second) {
        if (start <= t + 1e-12) v = val;
        else break;
    }
    return v;
}

double Scenario::next_break(double t) const {
    double best = std::numeric_limits<double>::infinity();
    for (auto& [name, pieces] : inputs)
        for (auto& [start, val] : pieces)
            if (start > t + 1e-12) {
                best = std::min(best, start);
                break;
            }
    return best;
}

// ---------------------------------------------------------------- configuration

void flatten_into(Config& c, const Proc& p, const std::string& tag, std::vector<Comp>* out) {
    std::vector<Comp>& dst = out ? *out : c.comps;
    switch (p->kind) {
        case ProcNode::Kind::Sum:
            if (!p->branches.empty()) dst.push_back(Comp{p, tag, nullptr});
            return;
        case ProcNode::Kind::Rep: dst.push_back(Comp{p, tag, nullptr}); return;
        case ProcNode::Kind::Res:
            c.restricted.push_back(p->name);
            flatten_into(c, p->left, tag, out);
            return;
        case ProcNode::Kind::Par:
            flatten_into(c, p->left, tag, out);
            flatten_into(c, p->right, tag, out);
            return;
        case ProcNode::Kind::Call:
            throw KernelError(KernelError::Kind::Arity, "unresolved definition call '" + p->callee + "'");
    }
}

Config make_config(const Proc& p) {
    Config c;
    std::vector<Proc> stack{p};
    std::vector<Proc> leaves;
    std::function<void(const Proc&)> walk = [&](const Proc& q) {
        switch (q->kind) {
            case ProcNode::Kind::Res:
                c.restricted.push_back(q->name);
                walk(q->left);
                break;
            case ProcNode::Kind::Par:
                walk(q->left);
                walk(q->right);
                break;
            case ProcNode::Kind::Call:
                throw KernelError(KernelError::Kind::Arity, "unresolved definition call '" + q->callee + "'");
            default: leaves.push_back(q);
        }
    };
    walk(p);
    int k = 0;
    for (auto& l : leaves) {
        std::string tag = "c" + std::to_string(k++);
        if (l->kind == ProcNode::Kind::Sum && l->branches.empty()) continue;
        c.comps.push_back(Comp{l, tag, nullptr});
    }
    return c;
}

Proc config_proc(const Config& c) {
    std::vector<Proc> ps;
    for (auto& comp : c.comps) ps.push_back(comp.proc);
    return mk_res(c.restricted, mk_par(ps));
}

bool config_inert(const Config& c) {
    for (auto& comp : c.comps)
        if (comp.proc->kind == ProcNode::Kind::Sum) return false;
    return true;
}

bool is_restricted(const Config& c, const Name& n) {
    return std::find(c.restricted.begin(), c.restricted.end(), n) != c.restricted.end();
}

// ---------------------------------------------------------------- discrete steps

namespace {

const std::vector<Proc>& rep_template(const Comp& comp) {
    if (!comp.tmpl) {
        Config scratch;
        std::vector<Comp> leaves;
        flatten_into(scratch, comp.proc->left, comp.tag, &leaves);
        auto v = std::make_shared<std::vector<Proc>>();
        for (auto& l : leaves) v->push_back(l.proc);
        comp.tmpl = v;
    }
    return *comp.tmpl;
}

struct PolarOffer {
    Offer where;
    Name chan;
    bool out;
    size_t arity;
};

void sum_offers(const Proc& sum, Offer base, std::vector<Step>& local, std::vector<PolarOffer>& polar,
                std::vector<std::string>* diags, bool allow_continuous) {
    for (size_t j = 0; j < sum->branches.size(); ++j) {
        const Prefix& pre = sum->branches[j].prefix;
        Offer o = base;
        o.branch = static_cast<int>(j);
        switch (pre.kind) {
            case PrefixKind::Tau: local.push_back(Step{StepKind::Tau, o, {}}); break;
            case PrefixKind::Guard: {
                Tri t = eval_bool(pre.cond, {});
                if (t == Tri::True) local.push_back(Step{StepKind::Pass, o, {}});
                else if (t == Tri::Undefined && diags)
                    diags->push_back("guard [" + pretty_bool(pre.cond) + "] is undefined; branch neither fires nor waits");
                break;
            }
            case PrefixKind::Input: polar.push_back(PolarOffer{o, pre.chan, false, pre.binders.size()}); break;
            case PrefixKind::Output: polar.push_back(PolarOffer{o, pre.chan, true, pre.payload.size()}); break;
            case PrefixKind::Continuous:
                if (!allow_continuous) break;
                for (auto& r : pre.ready) {
                    Offer ov = o;
                    for (size_t k = 0; k < pre.vars.size(); ++k)
                        if (pre.vars[k] == r.name) ov.var = static_cast<int>(k);
                    polar.push_back(PolarOffer{ov, r.name, r.out, 1});
                }
                break;
        }
    }
}

}  // namespace

std::vector<Step> urgent_steps(const Config& c, std::vector<std::string>* diagnostics) {
    // offers grouped per component, in source order
    std::vector<std::vector<Step>> local(c.comps.size());
    std::vector<std::vector<PolarOffer>> polar(c.comps.size());
    for (size_t i = 0; i < c.comps.size(); ++i) {
        const Comp& comp = c.comps[i];
        Offer base;
        base.comp = static_cast<int>(i);
        if (comp.proc->kind == ProcNode::Kind::Sum) {
            sum_offers(comp.proc, base, local[i], polar[i], diagnostics, true);
        } else {
            const auto& t = rep_template(comp);
            for (size_t m = 0; m < t.size(); ++m) {
                if (t[m]->kind != ProcNode::Kind::Sum) continue;
                Offer b = base;
                b.tmpl = static_cast<int>(m);
                sum_offers(t[m], b, local[i], polar[i], diagnostics, false);
            }
        }
    }
    std::vector<Step> steps;
    for (size_t i = 0; i < c.comps.size(); ++i) {
        // interleave local steps and syncs by branch position
        size_t li = 0;
        auto flush_local_upto = [&](const Offer& o) {
            while (li < local[i].size() &&
                   std::make_pair(local[i][li].a.tmpl, local[i][li].a.branch) < std::make_pair(o.tmpl, o.branch))
                steps.push_back(local[i][li++]);
        };
        for (auto& po : polar[i]) {
            flush_local_upto(po.where);
            for (size_t k = i + 1; k < c.comps.size(); ++k) {
                for (auto& qo : polar[k]) {
                    if (qo.out == po.out || !(qo.chan == po.chan) || qo.arity != po.arity) continue;
                    // rep-to-rep synchronisation would fork two copies at once; not supported here
                    if (po.where.tmpl >= 0 && qo.where.tmpl >= 0) continue;
                    Step s;
                    const PolarOffer& in = po.out ? qo : po;
                    const PolarOffer& out = po.out ? po : qo;
                    s.a = in.where;
                    s.b = out.where;
                    if (out.where.var >= 0) s.kind = StepKind::Sense;
                    else if (in.where.var >= 0) s.kind = StepKind::Actuate;
                    else s.kind = StepKind::Sync;
                    steps.push_back(s);
                }
            }
        }
        while (li < local[i].size()) steps.push_back(local[i][li++]);
    }
    return steps;
}

namespace {

struct Resolved {
    Proc sum;                   // the offering sum (fresh copy when spawned)
    std::vector<Comp> before;   // spawned siblings inserted before the rep
    std::string tag;
};

Resolved resolve(Config& c, const Offer& o, const std::string& caller_tag) {
    Comp& comp = c.comps[static_cast<size_t>(o.comp)];
    Resolved r;
    if (o.tmpl < 0) {
        r.sum = comp.proc;
        r.tag = comp.tag;
        return r;
    }
    if (caller_tag == comp.tag) {
        r.tag = comp.tag;
    } else if (caller_tag.rfind(comp.tag + "#", 0) == 0) {
        r.tag = caller_tag;  // a copy re-entering its own replication stays the same component
    } else {
        int k = ++c.spawns[comp.tag];
        r.tag = comp.tag + "#" + std::to_string(k);
    }
    Proc copy = freshen_binders(comp.proc->left);
    std::vector<Comp> leaves;
    flatten_into(c, copy, r.tag, &leaves);
    for (size_t m = 0; m < leaves.size(); ++m) {
        if (static_cast<int>(m) == o.tmpl) r.sum = leaves[m].proc;
        else r.before.push_back(leaves[m]);
    }
    return r;
}

std::vector<Expr> fold_all(const std::vector<Expr>& es) {
    std::vector<Expr> out;
    for (auto& e : es) {
        auto f = fold_expr(e, {});
        if (!f) throw KernelError(KernelError::Kind::UndefinedDynamics, "payload " + pretty_expr(e) + " is undefined");
        out.push_back(*f);
    }
    return out;
}

}  // namespace

StepEvent apply_step(Config& c, const Step& s) {
    // replacement comps for each touched component index
    std::map<int, std::vector<Comp>> replace;
    std::map<int, std::vector<Comp>> insert_before;
    StepEvent ev;
    ev.kind = s.kind;

    auto cont_comps = [&](const Proc& cont, const std::string& tag) {
        std::vector<Comp> out;
        flatten_into(c, cont, tag, &out);
        return out;
    };
    auto place = [&](const Offer& o, const Resolved& r, std::vector<Comp> repl) {
        if (o.tmpl < 0) {
            replace[o.comp] = std::move(repl);
        } else {
            auto& ins = insert_before[o.comp];
            ins.insert(ins.end(), r.before.begin(), r.before.end());
            ins.insert(ins.end(), repl.begin(), repl.end());
        }
    };

    if (s.kind == StepKind::Tau || s.kind == StepKind::Pass) {
        Resolved r = resolve(c, s.a, "");
        const Branch& br = r.sum->branches[static_cast<size_t>(s.a.branch)];
        place(s.a, r, cont_comps(br.cont, r.tag));
        ev.kind = StepKind::Tau;
        ev.provenance = r.tag;
    } else {
        const std::string a_tag = c.comps[static_cast<size_t>(s.a.comp)].tag;
        const std::string b_tag = c.comps[static_cast<size_t>(s.b.comp)].tag;
        Resolved ra = resolve(c, s.a, b_tag);
        Resolved rb = resolve(c, s.b, a_tag);
        const Branch& bra = ra.sum->branches[static_cast<size_t>(s.a.branch)];
        const Branch& brb = rb.sum->branches[static_cast<size_t>(s.b.branch)];

        // output side
        std::vector<Expr> values;
        if (s.b.var >= 0) {
            values = fold_all({brb.prefix.init[static_cast<size_t>(s.b.var)]});
            place(s.b, rb, {Comp{mk_sum({brb}), rb.tag, nullptr}});  // sensing keeps the ODE, drops M
            ev.chan = brb.prefix.vars[static_cast<size_t>(s.b.var)].display;
        } else {
            values = fold_all(brb.prefix.payload);
            place(s.b, rb, cont_comps(brb.cont, rb.tag));
            ev.chan = brb.prefix.chan.display;
        }
        // input side
        if (s.a.var >= 0) {
            Branch nb = bra;
            nb.prefix.init[static_cast<size_t>(s.a.var)] = values.at(0);
            place(s.a, ra, {Comp{mk_sum({nb}), ra.tag, nullptr}});
            ev.chan = bra.prefix.vars[static_cast<size_t>(s.a.var)].display;
        } else {
            Substitution sub;
            for (size_t k = 0; k < bra.prefix.binders.size(); ++k) sub.emplace_back(bra.prefix.binders[k], values[k]);
            place(s.a, ra, cont_comps(substitute(bra.cont, sub), ra.tag));
        }
        ev.values = values;
        if (s.kind == StepKind::Sense) ev.provenance = ra.tag;
        else if (s.kind == StepKind::Actuate) ev.provenance = rb.tag;
        else ev.provenance = rb.tag + "->" + ra.tag;
    }

    std::vector<Comp> next;
    for (size_t i = 0; i < c.comps.size(); ++i) {
        int ii = static_cast<int>(i);
        auto ib = insert_before.find(ii);
        if (ib != insert_before.end()) next.insert(next.end(), ib->second.begin(), ib->second.end());
        auto rp = replace.find(ii);
        if (rp != replace.end()) next.insert(next.end(), rp->second.begin(), rp->second.end());
        else next.push_back(c.comps[i]);
    }
    c.comps = std::move(next);
    return ev;
}

// ---------------------------------------------------------------- evolution

namespace {

struct ActiveOde {
    int comp;
    int branch;
    std::vector<int> slots;
    CompiledBool boundary;
};

struct System {
    std::vector<Name> names;  // slot order: ODE variables then inputs
    size_t n_vars = 0;
    std::vector<std::string> input_names;
    std::vector<ActiveOde> odes;
    std::vector<Compiled> fields;  // per ODE variable slot
    std::vector<double> x0;
    ReadySet ready;
    bool blocked = false;          // some component can neither evolve nor wait
    std::vector<std::string> diagnostics;

    int slot(const Name& n) const {
        for (size_t i = 0; i < names.size(); ++i)
            if (names[i] == n) return static_cast<int>(i);
        return -1;
    }
};

const Prefix* continuous_branch(const Proc& sum, int& index) {
    for (size_t j = 0; j < sum->branches.size(); ++j)
        if (sum->branches[j].prefix.kind == PrefixKind::Continuous) {
            index = static_cast<int>(j);
            return &sum->branches[j].prefix;
        }
    return nullptr;
}

System prepare(const Config& c, const Scenario* sc, double t_now, bool check_urgency) {
    System sys;
    std::vector<ReadySet> per_comp;
    for (size_t i = 0; i < c.comps.size(); ++i) {
        const Comp& comp = c.comps[i];
        ReadySet r;
        if (comp.proc->kind == ProcNode::Kind::Rep) {
            for (auto& t : rep_template(comp)) {
                if (t->kind != ProcNode::Kind::Sum) continue;
                for (auto& b : t->branches) {
                    if (b.prefix.kind == PrefixKind::Input) r.push_back({b.prefix.chan, false});
                    if (b.prefix.kind == PrefixKind::Output) r.push_back({b.prefix.chan, true});
                }
            }
            per_comp.push_back(ready_normalize(r));
            continue;
        }
        int j = -1;
        const Prefix* cp = continuous_branch(comp.proc, j);
        if (cp) {
            ActiveOde ode;
            ode.comp = static_cast<int>(i);
            ode.branch = j;
            for (auto& v : cp->vars) {
                for (auto& n : sys.names)
                    if (n == v)
                        throw KernelError(KernelError::Kind::GuaranteeOverlap,
                                          "variable '" + v.display + "' is guaranteed by two parallel ODEs");
                sys.names.push_back(v);
            }
            sys.odes.push_back(std::move(ode));
            r = cp->ready;
        } else {
            for (auto& b : comp.proc->branches) {
                switch (b.prefix.kind) {
                    case PrefixKind::Tau:
                        if (check_urgency)
                            throw KernelError(KernelError::Kind::UrgencyViolation, "an enabled tau must fire before time passes");
                        sys.blocked = true;
                        break;
                    case PrefixKind::Guard: {
                        Tri t = eval_bool(b.prefix.cond, {});
                        if (t == Tri::True) {
                            if (check_urgency)
                                throw KernelError(KernelError::Kind::UrgencyViolation,
                                                  "an enabled guard must fire before time passes");
                            sys.blocked = true;
                        } else if (t == Tri::Undefined) {
                            sys.blocked = true;
                            sys.diagnostics.push_back("guard [" + pretty_bool(b.prefix.cond) +
                                                      "] is undefined; the sum cannot wait");
                        }
                        break;
                    }
                    case PrefixKind::Input: r.push_back({b.prefix.chan, false}); break;
                    case PrefixKind::Output: r.push_back({b.prefix.chan, true}); break;
                    case PrefixKind::Continuous: break;
                }
            }
        }
        per_comp.push_back(ready_normalize(r));
    }
    if (check_urgency) {
        for (size_t i = 0; i < per_comp.size(); ++i) {
            ReadySet d = ready_dual(per_comp[i]);
            for (size_t k = i + 1; k < per_comp.size(); ++k) {
                ReadySet x = ready_intersect(d, per_comp[k]);
                if (!x.empty())
                    throw KernelError(KernelError::Kind::UrgencyViolation,
                                      "ready sets match on " + ready_text(x) + "; the pair must communicate first");
            }
        }
    }
    ReadySet all;
    for (auto& r : per_comp) all = ready_union(all, r);
    for (auto& it : all)
        if (!is_restricted(c, it.name)) sys.ready.push_back(it);

    sys.n_vars = sys.names.size();
    // exogenous inputs referenced by fields / boundaries
    std::vector<std::string> missing;
    for (auto& ode : sys.odes) {
        const Prefix& p = c.comps[static_cast<size_t>(ode.comp)].proc->branches[static_cast<size_t>(ode.branch)].prefix;
        NameSet refs;
        for (auto& f : p.field) expr_names(f, refs);
        bool_names(p.boundary, refs);
        for (auto& n : refs) {
            if (sys.slot(n) >= 0) continue;
            if (sc && !is_restricted(c, n) && sc->inputs.count(n.display) && is_global(n)) {
                sys.names.push_back(n);
                sys.input_names.push_back(n.display);
            } else if (std::find(missing.begin(), missing.end(), n.display) == missing.end()) {
                missing.push_back(n.display);
            }
        }
    }
    if (!missing.empty()) {
        std::string m;
        for (auto& s : missing) m += (m.empty() ? "" : ", ") + s;
        throw KernelError(KernelError::Kind::OpenSystem, "open system: no guarantee for " + m);
    }
    SlotFn sf = [&](const Name& n) { return sys.slot(n); };
    sys.fields.resize(sys.n_vars);
    sys.x0.assign(sys.names.size(), 0.0);
    size_t base = 0;
    for (auto& ode : sys.odes) {
        const Prefix& p = c.comps[static_cast<size_t>(ode.comp)].proc->branches[static_cast<size_t>(ode.branch)].prefix;
        for (size_t k = 0; k < p.vars.size(); ++k) {
            ode.slots.push_back(static_cast<int>(base + k));
            sys.fields[base + k] = compile_expr(p.field[k], sf);
            Value v = eval_expr(p.init[k], {});
            if (!v.is_real())
                throw KernelError(KernelError::Kind::UndefinedDynamics,
                                  "initial value " + pretty_expr(p.init[k]) + " of '" + p.vars[k].display + "' is not a real");
            sys.x0[base + k] = v.real;
        }
        ode.boundary = compile_bool(p.boundary, sf);
        base += p.vars.size();
    }
    for (size_t i = 0; i < sys.input_names.size(); ++i) sys.x0[sys.n_vars + i] = sc->value(sys.input_names[i], t_now);
    return sys;
}

void deriv(const System& sys, const std::vector<double>& x, std::vector<double>& dx) {
    dx.assign(x.size(), 0.0);
    for (size_t i = 0; i < sys.n_vars; ++i)
        if (!sys.fields[i].eval(x.data(), dx[i]))
            throw KernelError(KernelError::Kind::UndefinedDynamics,
                              "vector field of '" + sys.names[i].display + "' is undefined");
}

struct Rk4 {
    const System& sys;
    std::vector<double> k1, k2, k3, k4, tmp;
    explicit Rk4(const System& s) : sys(s) {}
    void step(const std::vector<double>& x, double h, std::vector<double>& out) {
        size_t n = x.size();
        deriv(sys, x, k1);
        tmp.resize(n);
        for (size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
        deriv(sys, tmp, k2);
        for (size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
        deriv(sys, tmp, k3);
        for (size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
        deriv(sys, tmp, k4);
        out.resize(n);
        for (size_t i = 0; i < n; ++i) out[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
};

std::string boundary_text(const Config& c, const ActiveOde& ode) {
    return pretty_bool(c.comps[static_cast<size_t>(ode.comp)].proc->branches[static_cast<size_t>(ode.branch)].prefix.boundary);
}

// Rewrites every active ODE component: stopped ones enter their continuation, the rest keep running from x.
void commit(Config& c, const System& sys, const std::vector<double>& x, const std::vector<bool>& stopped,
            std::vector<StopRecord>* stops, const std::vector<bool>* grazing) {
    std::map<int, std::vector<Comp>> replace;
    for (size_t o = 0; o < sys.odes.size(); ++o) {
        const ActiveOde& ode = sys.odes[o];
        const Comp& comp = c.comps[static_cast<size_t>(ode.comp)];
        const Branch& br = comp.proc->branches[static_cast<size_t>(ode.branch)];
        std::vector<double> vals;
        for (int s : ode.slots) vals.push_back(x[static_cast<size_t>(s)]);
        if (stopped[o]) {
            if (stops) stops->push_back(StopRecord{comp.tag, boundary_text(c, ode), vals, grazing && (*grazing)[o]});
            Proc cont = br.cont;
            if (!br.prefix.binders.empty()) {
                Substitution sub;
                for (size_t k = 0; k < vals.size(); ++k) sub.emplace_back(br.prefix.binders[k], mk_real(vals[k]));
                cont = substitute(cont, sub);
            }
            std::vector<Comp> out;
            flatten_into(c, cont, comp.tag, &out);
            replace[ode.comp] = std::move(out);
        } else {
            Branch nb = br;
            for (size_t k = 0; k < vals.size(); ++k) nb.prefix.init[k] = mk_real(vals[k]);
            replace[ode.comp] = {Comp{mk_sum({nb}), comp.tag, nullptr}};
        }
    }
    std::vector<Comp> next;
    for (size_t i = 0; i < c.comps.size(); ++i) {
        auto it = replace.find(static_cast<int>(i));
        if (it == replace.end()) next.push_back(c.comps[i]);
        else next.insert(next.end(), it->second.begin(), it->second.end());
    }
    c.comps = std::move(next);
}

}  // namespace

ReadySet config_ready(const Config& c) {
    ReadySet all;
    for (auto& comp : c.comps) {
        if (comp.proc->kind == ProcNode::Kind::Rep) {
            for (auto& t : rep_template(comp)) {
                if (t->kind != ProcNode::Kind::Sum) continue;
                for (auto& b : t->branches) {
                    if (b.prefix.kind == PrefixKind::Input) all.push_back({b.prefix.chan, false});
                    if (b.prefix.kind == PrefixKind::Output) all.push_back({b.prefix.chan, true});
                }
            }
            continue;
        }
        int j = -1;
        if (const Prefix* cp = continuous_branch(comp.proc, j)) {
            all.insert(all.end(), cp->ready.begin(), cp->ready.end());
            continue;
        }
        for (auto& b : comp.proc->branches) {
            if (b.prefix.kind == PrefixKind::Input) all.push_back({b.prefix.chan, false});
            if (b.prefix.kind == PrefixKind::Output) all.push_back({b.prefix.chan, true});
        }
    }
    ReadySet out;
    for (auto& it : ready_normalize(all))
        if (!is_restricted(c, it.name)) out.push_back(it);
    return out;
}

std::vector<StopRecord> zero_stops(Config& c, const Scenario* sc, double t_now) {
    System sys = prepare(c, sc, t_now, false);
    std::vector<bool> stopped(sys.odes.size(), false);
    bool any = false;
    for (size_t o = 0; o < sys.odes.size(); ++o) {
        Tri t = sys.odes[o].boundary.eval(sys.x0.data());
        if (t == Tri::Undefined)
            throw KernelError(KernelError::Kind::UndefinedDynamics,
                              "boundary " + boundary_text(c, sys.odes[o]) + " is undefined at the initial state");
        if (t == Tri::False) stopped[o] = any = true;
    }
    std::vector<StopRecord> out;
    if (any) commit(c, sys, sys.x0, stopped, &out, nullptr);
    return out;
}

EvolveResult evolve(Config& c, double t_now, double t_end, const IntegratorConfig& cfg, const Scenario* sc,
                    int stride, bool check_urgency) {
    EvolveResult res;
    if (!(cfg.step > 0) || !(cfg.event_tol > 0))
        throw KernelError(KernelError::Kind::StepOverflow, "integrator step and event tolerance must be positive");
    if (sc) t_end = std::min(t_end, sc->next_break(t_now));
    System sys = prepare(c, sc, t_now, check_urgency);
    res.diagnostics = sys.diagnostics;
    res.ready = sys.ready;
    if (sys.odes.empty() || sys.blocked) {
        res.deadlock = true;
        res.wait_only = sys.odes.empty() && !sys.blocked;
        return res;
    }
    const size_t n_obs = sys.n_vars;
    res.flow.names.assign(sys.names.begin(), sys.names.begin() + static_cast<long>(n_obs));
    for (auto& n : res.flow.names) res.priv.push_back(is_restricted(c, n));

    auto record = [&](double t, const std::vector<double>& x) {
        res.flow.grid.push_back(t - t_now);
        res.flow.samples.emplace_back(x.begin(), x.begin() + static_cast<long>(n_obs));
    };

    const size_t n_odes = sys.odes.size();
    std::vector<bool> stopped(n_odes, false), grazing(n_odes, false);
    for (size_t o = 0; o < n_odes; ++o) {
        Tri t = sys.odes[o].boundary.eval(sys.x0.data());
        if (t == Tri::Undefined)
            throw KernelError(KernelError::Kind::UndefinedDynamics,
                              "boundary " + boundary_text(c, sys.odes[o]) + " is undefined at the initial state");
        if (t == Tri::False) stopped[o] = true;
    }
    if (std::find(stopped.begin(), stopped.end(), true) != stopped.end()) {
        commit(c, sys, sys.x0, stopped, &res.stops, nullptr);
        return res;  // zero-duration stop
    }

    Rk4 rk(sys);
    const double h = cfg.step;
    const double span = t_end - t_now;
    long long n_steps = static_cast<long long>(std::ceil(span / h - 1e-9));
    if (n_steps < 1) n_steps = 1;
    if (n_steps > cfg.max_substeps)
        throw KernelError(KernelError::Kind::StepOverflow, "evolution needs more than the maximum number of substeps");

    std::vector<double> x = sys.x0, xn, xprev;
    std::vector<double> rho_prev(n_odes), rho_cur(n_odes), scale_cur(n_odes);
    for (size_t o = 0; o < n_odes; ++o) {
        double sc0 = 0;
        rho_cur[o] = sys.odes[o].boundary.robustness(x.data(), sc0);
        scale_cur[o] = sc0;
        rho_prev[o] = std::numeric_limits<double>::quiet_NaN();
    }
    record(t_now, x);
    double t = t_now;
    bool stop = false;
    double t_stop = t_end;
    std::vector<double> x_stop;

    for (long long k = 0; k < n_steps && !stop; ++k) {
        double t_next = (k + 1 == n_steps) ? t_end : t_now + static_cast<double>(k + 1) * h;
        double hk = t_next - t;
        rk.step(x, hk, xn);
        // boundary check at the new grid point
        bool crossed = false;
        for (size_t o = 0; o < n_odes; ++o) {
            Tri tv = sys.odes[o].boundary.eval(xn.data());
            if (tv == Tri::Undefined)
                throw KernelError(KernelError::Kind::UndefinedDynamics,
                                  "boundary " + boundary_text(c, sys.odes[o]) + " became undefined");
            if (tv == Tri::False) crossed = true;
        }
        if (crossed) {
            double lo = 0.0, hi = hk;
            std::vector<double> xm;
            while (hi - lo > cfg.event_tol) {
                double mid = 0.5 * (lo + hi);
                rk.step(x, mid, xm);
                bool any_false = false;
                for (auto& ode : sys.odes)
                    if (ode.boundary.eval(xm.data()) != Tri::True) any_false = true;
                if (any_false) hi = mid;
                else lo = mid;
            }
            rk.step(x, hi, x_stop);
            for (size_t o = 0; o < n_odes; ++o)
                if (sys.odes[o].boundary.eval(x_stop.data()) != Tri::True) stopped[o] = true;
            t_stop = t + hi;
            stop = true;
            break;
        }
        // grazing: interior local minimum of robustness touching zero at the previous grid point
        std::vector<double> rho_next(n_odes);
        for (size_t o = 0; o < n_odes; ++o) {
            double sc1 = 0;
            rho_next[o] = sys.odes[o].boundary.robustness(xn.data(), sc1);
        }
        if (k >= 1) {
            bool graze = false;
            for (size_t o = 0; o < n_odes; ++o) {
                double r = rho_cur[o];
                if (r >= 0 && r < rho_prev[o] && r < rho_next[o] && r <= 1e-6 * std::max(1.0, scale_cur[o])) {
                    stopped[o] = grazing[o] = graze = true;
                }
            }
            if (graze) {
                t_stop = t;
                x_stop = x;
                stop = true;
                break;
            }
        }
        for (size_t o = 0; o < n_odes; ++o) {
            rho_prev[o] = rho_cur[o];
            rho_cur[o] = rho_next[o];
            double sc1 = 0;
            sys.odes[o].boundary.robustness(xn.data(), sc1);
            scale_cur[o] = sc1;
        }
        x.swap(xn);
        t = t_next;
        if (k + 1 == n_steps || (k + 1) % stride == 0) record(t, x);
    }

    if (stop) {
        if (res.flow.grid.back() < t_stop - t_now) record(t_stop, x_stop);
        res.duration = t_stop - t_now;
        commit(c, sys, x_stop, stopped, &res.stops, &grazing);
    } else {
        res.duration = t - t_now;
        commit(c, sys, x, stopped, nullptr, nullptr);
    }
    res.flow.right_limit = res.flow.samples.back();
    if (res.flow.grid.size() == 1) {
        // degenerate: duration below resolution; keep a two-point flow
        res.flow.grid.push_back(res.duration);
        res.flow.samples.push_back(res.flow.samples.back());
    }
    return res;
}

}  // namespace hpc
