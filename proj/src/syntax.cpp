#include "hpc/syntax.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <mutex>
#include <unordered_map>

namespace hpc {

namespace {
std::atomic<std::uint64_t> g_counter{1};
std::mutex g_intern_mu;
std::unordered_map<std::string, std::uint64_t>& intern_table() {
    static std::unordered_map<std::string, std::uint64_t> t;
    return t;
}
std::unordered_map<std::uint64_t, bool>& global_ids() {
    static std::unordered_map<std::uint64_t, bool> t;
    return t;
}
}  // namespace

Name fresh_name(const std::string& display) {
    return Name{g_counter.fetch_add(1), display};
}

Name global_name(const std::string& text) {
    std::lock_guard<std::mutex> lk(g_intern_mu);
    auto& t = intern_table();
    auto it = t.find(text);
    if (it != t.end()) return Name{it->second, text};
    std::uint64_t id = g_counter.fetch_add(1);
    t.emplace(text, id);
    global_ids()[id] = true;
    return Name{id, text};
}

bool is_global(const Name& n) {
    std::lock_guard<std::mutex> lk(g_intern_mu);
    return global_ids().count(n.id) != 0;
}

Name freshen(const Name& n) { return fresh_name(n.display); }

// ---------------------------------------------------------------- expressions

int op_arity(Op op) {
    switch (op) {
        case Op::Sqrt:
        case Op::Neg: return 1;
        default: return 2;
    }
}

const char* op_symbol(Op op) {
    switch (op) {
        case Op::Add: return "+";
        case Op::Sub: return "-";
        case Op::Mul: return "*";
        case Op::Div: return "/";
        case Op::Sqrt: return "sqrt";
        case Op::Min: return "min";
        case Op::Max: return "max";
        case Op::Neg: return "neg";
    }
    return "?";
}

Expr mk_real(double v) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Real;
    n->real = v;
    return n;
}

Expr mk_text(std::string s) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Text;
    n->text = std::move(s);
    return n;
}

Expr mk_var(const Name& nm) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Var;
    n->var = nm;
    return n;
}

Expr mk_op(Op op, std::vector<Expr> args) {
    if (static_cast<int>(args.size()) != op_arity(op))
        throw SyntaxError(std::string("operator ") + op_symbol(op) + " arity mismatch");
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Apply;
    n->op = op;
    n->args = std::move(args);
    return n;
}

Expr operator+(const Expr& a, const Expr& b) { return mk_op(Op::Add, {a, b}); }
Expr operator-(const Expr& a, const Expr& b) { return mk_op(Op::Sub, {a, b}); }
Expr operator*(const Expr& a, const Expr& b) { return mk_op(Op::Mul, {a, b}); }
Expr operator/(const Expr& a, const Expr& b) { return mk_op(Op::Div, {a, b}); }

bool expr_equal(const Expr& a, const Expr& b) {
    if (a == b) return true;
    if (!a || !b || a->kind != b->kind) return false;
    switch (a->kind) {
        case ExprNode::Kind::Real: return a->real == b->real;
        case ExprNode::Kind::Text: return a->text == b->text;
        case ExprNode::Kind::Var: return a->var == b->var;
        case ExprNode::Kind::Apply:
            if (a->op != b->op || a->args.size() != b->args.size()) return false;
            for (size_t i = 0; i < a->args.size(); ++i)
                if (!expr_equal(a->args[i], b->args[i])) return false;
            return true;
    }
    return false;
}

void expr_names(const Expr& e, NameSet& out) {
    if (!e) return;
    if (e->kind == ExprNode::Kind::Var) out.insert(e->var);
    for (auto& a : e->args) expr_names(a, out);
}

static Bool mk_bool(BoolNode::Kind k) {
    auto n = std::make_shared<BoolNode>();
    n->kind = k;
    return n;
}

Bool b_false() { return mk_bool(BoolNode::Kind::False); }
Bool b_true() { return b_not(b_false()); }

Bool b_less(Expr l, Expr r) {
    auto n = std::make_shared<BoolNode>();
    n->kind = BoolNode::Kind::Less;
    n->lhs = std::move(l);
    n->rhs = std::move(r);
    return n;
}

Bool b_and(Bool a, Bool b) {
    auto n = std::make_shared<BoolNode>();
    n->kind = BoolNode::Kind::And;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

Bool b_not(Bool a) {
    auto n = std::make_shared<BoolNode>();
    n->kind = BoolNode::Kind::Not;
    n->a = std::move(a);
    return n;
}

Bool b_or(Bool a, Bool b) { return b_not(b_and(b_not(std::move(a)), b_not(std::move(b)))); }
Bool b_le(Expr l, Expr r) { return b_not(b_less(std::move(r), std::move(l))); }
Bool b_ge(Expr l, Expr r) { return b_not(b_less(std::move(l), std::move(r))); }
Bool b_gt(Expr l, Expr r) { return b_less(std::move(r), std::move(l)); }
Bool b_eq(Expr l, Expr r) { return b_and(b_le(l, r), b_ge(l, r)); }
Bool b_ne(Expr l, Expr r) { return b_not(b_eq(std::move(l), std::move(r))); }

bool bool_equal(const Bool& a, const Bool& b) {
    if (a == b) return true;
    if (!a || !b || a->kind != b->kind) return false;
    switch (a->kind) {
        case BoolNode::Kind::False: return true;
        case BoolNode::Kind::Less: return expr_equal(a->lhs, b->lhs) && expr_equal(a->rhs, b->rhs);
        case BoolNode::Kind::And: return bool_equal(a->a, b->a) && bool_equal(a->b, b->b);
        case BoolNode::Kind::Not: return bool_equal(a->a, b->a);
    }
    return false;
}

void bool_names(const Bool& b, NameSet& out) {
    if (!b) return;
    expr_names(b->lhs, out);
    expr_names(b->rhs, out);
    bool_names(b->a, out);
    bool_names(b->b, out);
}

// ---------------------------------------------------------------- processes

Prefix p_tau() { return Prefix{}; }

Prefix p_in(const Name& chan, std::vector<Name> binders) {
    Prefix p;
    p.kind = PrefixKind::Input;
    p.chan = chan;
    p.binders = std::move(binders);
    return p;
}

Prefix p_out(const Name& chan, std::vector<Expr> payload) {
    Prefix p;
    p.kind = PrefixKind::Output;
    p.chan = chan;
    p.payload = std::move(payload);
    return p;
}

Prefix p_guard(Bool cond) {
    Prefix p;
    p.kind = PrefixKind::Guard;
    p.cond = std::move(cond);
    return p;
}

Prefix p_cont(std::vector<Expr> init, std::vector<Name> vars, std::vector<Expr> field, Bool boundary,
              std::vector<ReadyItem> ready, std::vector<Name> binders) {
    if (init.size() != vars.size() || field.size() != vars.size())
        throw SyntaxError("continuous prefix: |init|, |vars| and |field| differ");
    for (size_t i = 0; i < vars.size(); ++i)
        for (size_t j = i + 1; j < vars.size(); ++j)
            if (vars[i] == vars[j]) throw SyntaxError("continuous prefix: duplicate variable " + vars[i].display);
    for (auto& r : ready) {
        if (std::find(vars.begin(), vars.end(), r.name) == vars.end())
            throw SyntaxError("ready-set entry " + r.name.display + " is not a variable of the ODE");
    }
    if (!binders.empty() && binders.size() != vars.size())
        throw SyntaxError("continuous prefix: continuation binders must match the variables");
    Prefix p;
    p.kind = PrefixKind::Continuous;
    p.init = std::move(init);
    p.vars = std::move(vars);
    p.field = std::move(field);
    p.boundary = boundary ? std::move(boundary) : b_true();
    std::sort(ready.begin(), ready.end());
    ready.erase(std::unique(ready.begin(), ready.end()), ready.end());
    p.ready = std::move(ready);
    p.binders = std::move(binders);
    return p;
}

Proc nil() {
    static Proc z = std::make_shared<ProcNode>();
    return z;
}

Proc mk_sum(std::vector<Branch> branches) {
    if (branches.empty()) return nil();
    auto n = std::make_shared<ProcNode>();
    n->kind = ProcNode::Kind::Sum;
    for (auto& b : branches)
        if (!b.cont) b.cont = nil();
    n->branches = std::move(branches);
    return n;
}

Proc mk_prefix(Prefix pre, Proc cont) {
    return mk_sum({Branch{std::move(pre), cont ? std::move(cont) : nil()}});
}

Proc mk_res(const Name& nm, Proc body) {
    auto n = std::make_shared<ProcNode>();
    n->kind = ProcNode::Kind::Res;
    n->name = nm;
    n->left = std::move(body);
    return n;
}

Proc mk_res(const std::vector<Name>& ns, Proc body) {
    for (auto it = ns.rbegin(); it != ns.rend(); ++it) body = mk_res(*it, body);
    return body;
}

Proc mk_par(Proc a, Proc b) {
    auto n = std::make_shared<ProcNode>();
    n->kind = ProcNode::Kind::Par;
    n->left = std::move(a);
    n->right = std::move(b);
    return n;
}

Proc mk_par(const std::vector<Proc>& ps) {
    if (ps.empty()) return nil();
    Proc acc = ps.back();
    for (size_t i = ps.size() - 1; i-- > 0;) acc = mk_par(ps[i], acc);
    return acc;
}

Proc mk_rep(Proc body) {
    auto n = std::make_shared<ProcNode>();
    n->kind = ProcNode::Kind::Rep;
    n->left = std::move(body);
    return n;
}

Proc mk_call(std::string callee, std::vector<Expr> args) {
    auto n = std::make_shared<ProcNode>();
    n->kind = ProcNode::Kind::Call;
    n->callee = std::move(callee);
    n->args = std::move(args);
    return n;
}

bool is_nil(const Proc& p) { return p->kind == ProcNode::Kind::Sum && p->branches.empty(); }

// ------------------------------------------------------------- free names

NameSet prefix_free_names(const Prefix& pre) {
    NameSet out;
    switch (pre.kind) {
        case PrefixKind::Tau: break;
        case PrefixKind::Input: out.insert(pre.chan); break;
        case PrefixKind::Output:
            out.insert(pre.chan);
            for (auto& e : pre.payload) expr_names(e, out);
            break;
        case PrefixKind::Guard: bool_names(pre.cond, out); break;
        case PrefixKind::Continuous:
            for (auto& e : pre.init) expr_names(e, out);
            for (auto& e : pre.field) expr_names(e, out);
            for (auto& v : pre.vars) out.insert(v);
            for (auto& r : pre.ready) out.insert(r.name);
            bool_names(pre.boundary, out);
            break;
    }
    return out;
}

static void collect_free(const Proc& p, NameSet& out) {
    switch (p->kind) {
        case ProcNode::Kind::Sum:
            for (auto& b : p->branches) {
                NameSet pf = prefix_free_names(b.prefix);
                out.insert(pf.begin(), pf.end());
                NameSet cf;
                collect_free(b.cont, cf);
                for (auto& y : b.prefix.binders) cf.erase(y);
                out.insert(cf.begin(), cf.end());
            }
            break;
        case ProcNode::Kind::Res: {
            NameSet inner;
            collect_free(p->left, inner);
            inner.erase(p->name);
            out.insert(inner.begin(), inner.end());
            break;
        }
        case ProcNode::Kind::Par:
            collect_free(p->left, out);
            collect_free(p->right, out);
            break;
        case ProcNode::Kind::Rep: collect_free(p->left, out); break;
        case ProcNode::Kind::Call:
            for (auto& e : p->args) expr_names(e, out);
            break;
    }
}

NameSet free_names(const Proc& p) {
    NameSet out;
    collect_free(p, out);
    return out;
}

static void collect_bound(const Proc& p, NameSet& out) {
    switch (p->kind) {
        case ProcNode::Kind::Sum:
            for (auto& b : p->branches) {
                for (auto& y : b.prefix.binders) out.insert(y);
                collect_bound(b.cont, out);
            }
            break;
        case ProcNode::Kind::Res:
            out.insert(p->name);
            collect_bound(p->left, out);
            break;
        case ProcNode::Kind::Par:
            collect_bound(p->left, out);
            collect_bound(p->right, out);
            break;
        case ProcNode::Kind::Rep: collect_bound(p->left, out); break;
        case ProcNode::Kind::Call: break;
    }
}

NameSet bound_names(const Proc& p) {
    NameSet out;
    collect_bound(p, out);
    return out;
}

// ------------------------------------------------------------- substitution

static const Expr* lookup(const Substitution& s, const Name& n) {
    for (auto it = s.rbegin(); it != s.rend(); ++it)
        if (it->first == n) return &it->second;
    return nullptr;
}

Expr subst_expr(const Expr& e, const Substitution& s) {
    if (s.empty() || !e) return e;
    switch (e->kind) {
        case ExprNode::Kind::Real:
        case ExprNode::Kind::Text: return e;
        case ExprNode::Kind::Var: {
            const Expr* r = lookup(s, e->var);
            return r ? *r : e;
        }
        case ExprNode::Kind::Apply: {
            std::vector<Expr> args;
            bool changed = false;
            for (auto& a : e->args) {
                args.push_back(subst_expr(a, s));
                changed |= args.back() != a;
            }
            return changed ? mk_op(e->op, std::move(args)) : e;
        }
    }
    return e;
}

Bool subst_bool(const Bool& b, const Substitution& s) {
    if (s.empty() || !b) return b;
    switch (b->kind) {
        case BoolNode::Kind::False: return b;
        case BoolNode::Kind::Less: return b_less(subst_expr(b->lhs, s), subst_expr(b->rhs, s));
        case BoolNode::Kind::And: return b_and(subst_bool(b->a, s), subst_bool(b->b, s));
        case BoolNode::Kind::Not: return b_not(subst_bool(b->a, s));
    }
    return b;
}

namespace {

Name subst_channel(const Name& n, const Substitution& s) {
    const Expr* r = lookup(s, n);
    if (!r) return n;
    if ((*r)->kind != ExprNode::Kind::Var)
        throw SyntaxError("substitution places a non-name in channel position of " + n.display);
    return (*r)->var;
}

struct Subster {
    NameSet repl_names;

    // Enter binders: drops shadowed targets, renames binders that would capture.
    Substitution enter(const Substitution& s, std::vector<Name>& binders) const {
        Substitution inner;
        for (auto& pr : s) {
            bool shadowed = false;
            for (auto& y : binders)
                if (y == pr.first) shadowed = true;
            if (!shadowed) inner.push_back(pr);
        }
        for (auto& y : binders) {
            if (repl_names.count(y)) {
                Name fresh = freshen(y);
                inner.emplace_back(y, mk_var(fresh));
                y = fresh;
            }
        }
        return inner;
    }

    Prefix prefix_head(const Prefix& pre, const Substitution& s) const {
        Prefix out = pre;
        switch (pre.kind) {
            case PrefixKind::Tau: break;
            case PrefixKind::Input: out.chan = subst_channel(pre.chan, s); break;
            case PrefixKind::Output:
                out.chan = subst_channel(pre.chan, s);
                for (auto& e : out.payload) e = subst_expr(e, s);
                break;
            case PrefixKind::Guard: out.cond = subst_bool(pre.cond, s); break;
            case PrefixKind::Continuous:
                for (auto& e : out.init) e = subst_expr(e, s);
                for (auto& e : out.field) e = subst_expr(e, s);
                for (auto& v : out.vars) v = subst_channel(v, s);
                for (auto& r : out.ready) r.name = subst_channel(r.name, s);
                std::sort(out.ready.begin(), out.ready.end());
                out.boundary = subst_bool(pre.boundary, s);
                break;
        }
        return out;
    }

    Proc run(const Proc& p, const Substitution& s) const {
        if (s.empty()) return p;
        switch (p->kind) {
            case ProcNode::Kind::Sum: {
                if (p->branches.empty()) return p;
                std::vector<Branch> bs;
                for (auto& b : p->branches) {
                    Prefix pre = prefix_head(b.prefix, s);
                    Substitution inner = enter(s, pre.binders);
                    bs.push_back(Branch{std::move(pre), run(b.cont, inner)});
                }
                return mk_sum(std::move(bs));
            }
            case ProcNode::Kind::Res: {
                std::vector<Name> bind{p->name};
                Substitution inner = enter(s, bind);
                return mk_res(bind[0], run(p->left, inner));
            }
            case ProcNode::Kind::Par: return mk_par(run(p->left, s), run(p->right, s));
            case ProcNode::Kind::Rep: return mk_rep(run(p->left, s));
            case ProcNode::Kind::Call: {
                std::vector<Expr> args;
                for (auto& a : p->args) args.push_back(subst_expr(a, s));
                return mk_call(p->callee, std::move(args));
            }
        }
        return p;
    }
};

}  // namespace

Proc substitute(const Proc& p, const Substitution& s) {
    for (size_t i = 0; i < s.size(); ++i)
        for (size_t j = i + 1; j < s.size(); ++j)
            if (s[i].first == s[j].first) throw SyntaxError("substitution targets must be pairwise distinct");
    Subster st;
    for (auto& pr : s) expr_names(pr.second, st.repl_names);
    return st.run(p, s);
}

namespace {
Proc freshen_rec(const Proc& p, Substitution& s);

Proc freshen_rec(const Proc& p, Substitution& s) {
    switch (p->kind) {
        case ProcNode::Kind::Sum: {
            if (p->branches.empty()) return p;
            std::vector<Branch> bs;
            Subster st;
            for (auto& b : p->branches) {
                Prefix pre = st.prefix_head(b.prefix, s);
                size_t mark = s.size();
                for (auto& y : pre.binders) {
                    Name f = freshen(y);
                    s.emplace_back(y, mk_var(f));
                    y = f;
                }
                Proc c = freshen_rec(b.cont, s);
                s.resize(mark);
                bs.push_back(Branch{std::move(pre), c});
            }
            return mk_sum(std::move(bs));
        }
        case ProcNode::Kind::Res: {
            Name f = freshen(p->name);
            s.emplace_back(p->name, mk_var(f));
            Proc body = freshen_rec(p->left, s);
            s.pop_back();
            return mk_res(f, body);
        }
        case ProcNode::Kind::Par: return mk_par(freshen_rec(p->left, s), freshen_rec(p->right, s));
        case ProcNode::Kind::Rep: return mk_rep(freshen_rec(p->left, s));
        case ProcNode::Kind::Call: {
            std::vector<Expr> args;
            for (auto& a : p->args) args.push_back(subst_expr(a, s));
            return mk_call(p->callee, std::move(args));
        }
    }
    return p;
}
}  // namespace

Proc freshen_binders(const Proc& p) {
    Substitution s;
    return freshen_rec(p, s);
}

// ------------------------------------------------------------- canonical forms

namespace {

std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Canon {
    bool ordered;
    std::vector<std::pair<std::uint64_t, std::string>> env;

    std::string name(const Name& n) const {
        for (auto it = env.rbegin(); it != env.rend(); ++it)
            if (it->first == n.id) return it->second;
        if (is_global(n)) return n.display;
        return n.display + "#" + std::to_string(n.id);
    }

    std::string expr(const Expr& e) const {
        switch (e->kind) {
            case ExprNode::Kind::Real: return fmt_real(e->real);
            case ExprNode::Kind::Text: return "\"" + e->text + "\"";
            case ExprNode::Kind::Var: return name(e->var);
            case ExprNode::Kind::Apply: {
                std::string s = std::string(op_symbol(e->op)) + "(";
                for (size_t i = 0; i < e->args.size(); ++i) s += (i ? "," : "") + expr(e->args[i]);
                return s + ")";
            }
        }
        return "?";
    }

    std::string boolean(const Bool& b) const {
        switch (b->kind) {
            case BoolNode::Kind::False: return "F";
            case BoolNode::Kind::Less: return "(" + expr(b->lhs) + "<" + expr(b->rhs) + ")";
            case BoolNode::Kind::And: return "(" + boolean(b->a) + "&" + boolean(b->b) + ")";
            case BoolNode::Kind::Not: return "~" + boolean(b->a);
        }
        return "?";
    }

    std::string bind(const std::vector<Name>& bs) {
        std::string s;
        for (auto& y : bs) {
            std::string tok = "%" + std::to_string(env.size());
            env.emplace_back(y.id, tok);
            s += (s.empty() ? "" : ",") + tok;
        }
        return s;
    }

    std::string prefix_head(const Prefix& pre) const {
        switch (pre.kind) {
            case PrefixKind::Tau: return "tau";
            case PrefixKind::Input: return name(pre.chan) + "?";
            case PrefixKind::Output: {
                std::string s = name(pre.chan) + "!<";
                for (size_t i = 0; i < pre.payload.size(); ++i) s += (i ? "," : "") + expr(pre.payload[i]);
                return s + ">";
            }
            case PrefixKind::Guard: return "[" + boolean(pre.cond) + "]";
            case PrefixKind::Continuous: {
                std::string s = "{";
                for (size_t i = 0; i < pre.init.size(); ++i) s += (i ? "," : "") + expr(pre.init[i]);
                s += "|";
                for (size_t i = 0; i < pre.vars.size(); ++i)
                    s += (i ? "," : "") + name(pre.vars[i]) + "'=" + expr(pre.field[i]);
                s += "&" + boolean(pre.boundary) + ";";
                std::vector<std::string> rs;
                for (auto& r : pre.ready) rs.push_back(name(r.name) + (r.out ? "!" : "?"));
                std::sort(rs.begin(), rs.end());
                for (auto& r : rs) s += r + " ";
                return s + "}";
            }
        }
        return "?";
    }

    std::string branch(const Branch& b) {
        std::string head = prefix_head(b.prefix);
        size_t mark = env.size();
        std::string binders = bind(b.prefix.binders);
        std::string s = head + "(" + binders + ")." + proc(b.cont);
        env.resize(mark);
        return s;
    }

    void flatten_par(const Proc& p, std::vector<Proc>& out) {
        if (p->kind == ProcNode::Kind::Par) {
            flatten_par(p->left, out);
            flatten_par(p->right, out);
        } else {
            out.push_back(p);
        }
    }

    std::string proc(const Proc& p) {
        switch (p->kind) {
            case ProcNode::Kind::Sum: {
                if (p->branches.empty()) return "0";
                std::vector<std::string> bs;
                for (auto& b : p->branches) bs.push_back(branch(b));
                if (!ordered) std::sort(bs.begin(), bs.end());
                std::string s = "(";
                for (size_t i = 0; i < bs.size(); ++i) s += (i ? "+" : "") + bs[i];
                return s + ")";
            }
            case ProcNode::Kind::Res: {
                size_t mark = env.size();
                std::string tok = bind({p->name});
                std::string s = "new " + tok + "." + proc(p->left);
                env.resize(mark);
                return s;
            }
            case ProcNode::Kind::Par: {
                if (ordered) return "(" + proc(p->left) + "|" + proc(p->right) + ")";
                std::vector<Proc> parts;
                flatten_par(p, parts);
                std::vector<std::string> ss;
                for (auto& q : parts) ss.push_back(proc(q));
                std::sort(ss.begin(), ss.end());
                std::string s = "(";
                for (size_t i = 0; i < ss.size(); ++i) s += (i ? "|" : "") + ss[i];
                return s + ")";
            }
            case ProcNode::Kind::Rep: return "!(" + proc(p->left) + ")";
            case ProcNode::Kind::Call: {
                std::string s = p->callee + "(";
                for (size_t i = 0; i < p->args.size(); ++i) s += (i ? "," : "") + expr(p->args[i]);
                return s + ")";
            }
        }
        return "?";
    }
};

}  // namespace

std::string canonical(const Proc& p, bool ordered) {
    Canon c{ordered, {}};
    return c.proc(p);
}

bool alpha_equivalent(const Proc& p, const Proc& q) { return canonical(p, true) == canonical(q, true); }

bool struct_congruent(const Proc& p, const Proc& q) { return canonical(p, false) == canonical(q, false); }

Proc normalize(const Proc& p) {
    switch (p->kind) {
        case ProcNode::Kind::Sum: {
            if (p->branches.empty()) return p;
            std::vector<std::pair<std::string, Branch>> keyed;
            for (auto& b : p->branches) {
                Branch nb{b.prefix, normalize(b.cont)};
                keyed.emplace_back(canonical(mk_sum({nb}), false), nb);
            }
            std::stable_sort(keyed.begin(), keyed.end(),
                             [](auto& a, auto& b) { return a.first < b.first; });
            std::vector<Branch> bs;
            for (auto& k : keyed) bs.push_back(k.second);
            return mk_sum(std::move(bs));
        }
        case ProcNode::Kind::Res: return mk_res(p->name, normalize(p->left));
        case ProcNode::Kind::Par: {
            std::vector<Proc> parts;
            Canon c{false, {}};
            c.flatten_par(p, parts);
            std::vector<std::pair<std::string, Proc>> keyed;
            for (auto& q : parts) {
                Proc nq = normalize(q);
                keyed.emplace_back(canonical(nq, false), nq);
            }
            std::stable_sort(keyed.begin(), keyed.end(),
                             [](auto& a, auto& b) { return a.first < b.first; });
            std::vector<Proc> ps;
            for (auto& k : keyed) ps.push_back(k.second);
            return mk_par(ps);
        }
        case ProcNode::Kind::Rep: return mk_rep(normalize(p->left));
        case ProcNode::Kind::Call: return p;
    }
    return p;
}

bool has_continuous(const Proc& p) {
    switch (p->kind) {
        case ProcNode::Kind::Sum:
            for (auto& b : p->branches)
                if (b.prefix.kind == PrefixKind::Continuous || has_continuous(b.cont)) return true;
            return false;
        case ProcNode::Kind::Res:
        case ProcNode::Kind::Rep: return has_continuous(p->left);
        case ProcNode::Kind::Par: return has_continuous(p->left) || has_continuous(p->right);
        case ProcNode::Kind::Call: return false;
    }
    return false;
}

bool has_calls(const Proc& p) {
    switch (p->kind) {
        case ProcNode::Kind::Sum:
            for (auto& b : p->branches)
                if (has_calls(b.cont)) return true;
            return false;
        case ProcNode::Kind::Res:
        case ProcNode::Kind::Rep: return has_calls(p->left);
        case ProcNode::Kind::Par: return has_calls(p->left) || has_calls(p->right);
        case ProcNode::Kind::Call: return true;
    }
    return false;
}

}  // namespace hpc
