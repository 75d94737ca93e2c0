#include "hpc/valuation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>

namespace hpc {

namespace {

Value real_op(Op op, const std::vector<double>& a) {
    switch (op) {
        case Op::Add: return Value::of(a[0] + a[1]);
        case Op::Sub: return Value::of(a[0] - a[1]);
        case Op::Mul: return Value::of(a[0] * a[1]);
        case Op::Div:
            if (a[1] == 0.0) return Value::undefined();
            return Value::of(a[0] / a[1]);
        case Op::Sqrt:
            if (a[0] < 0.0) return Value::undefined();
            return Value::of(std::sqrt(a[0]));
        case Op::Min: return Value::of(std::min(a[0], a[1]));
        case Op::Max: return Value::of(std::max(a[0], a[1]));
        case Op::Neg: return Value::of(-a[0]);
    }
    return Value::undefined();
}

Expr as_expr(const Value& v) {
    switch (v.kind) {
        case Value::Kind::Real: return mk_real(v.real);
        case Value::Kind::Text: return mk_text(v.text);
        case Value::Kind::Residual: return v.residual;
        case Value::Kind::Undefined: return nullptr;
    }
    return nullptr;
}

}  // namespace

Value eval_expr(const Expr& e, const State& s) {
    switch (e->kind) {
        case ExprNode::Kind::Real: return Value::of(e->real);
        case ExprNode::Kind::Text: {
            Value v;
            v.kind = Value::Kind::Text;
            v.text = e->text;
            return v;
        }
        case ExprNode::Kind::Var: {
            auto it = s.find(e->var);
            if (it != s.end()) return Value::of(it->second);
            Value v;
            v.kind = Value::Kind::Residual;
            v.residual = e;
            return v;
        }
        case ExprNode::Kind::Apply: {
            std::vector<Value> args;
            bool all_real = true, residual = false;
            for (auto& a : e->args) {
                args.push_back(eval_expr(a, s));
                if (args.back().kind == Value::Kind::Undefined) return Value::undefined();
                if (args.back().kind == Value::Kind::Text) return Value::undefined();
                if (args.back().kind == Value::Kind::Residual) residual = true;
                all_real &= args.back().is_real();
            }
            if (all_real) {
                std::vector<double> xs;
                for (auto& v : args) xs.push_back(v.real);
                return real_op(e->op, xs);
            }
            if (residual) {
                std::vector<Expr> es;
                for (auto& v : args) es.push_back(as_expr(v));
                Value v;
                v.kind = Value::Kind::Residual;
                v.residual = mk_op(e->op, std::move(es));
                return v;
            }
            return Value::undefined();
        }
    }
    return Value::undefined();
}

std::optional<Expr> fold_expr(const Expr& e, const State& s) {
    Value v = eval_expr(e, s);
    if (v.kind == Value::Kind::Undefined) return std::nullopt;
    return as_expr(v);
}

Tri eval_bool(const Bool& b, const State& s) {
    switch (b->kind) {
        case BoolNode::Kind::False: return Tri::False;
        case BoolNode::Kind::Less: {
            Value l = eval_expr(b->lhs, s), r = eval_expr(b->rhs, s);
            if (l.is_real() && r.is_real()) return l.real < r.real ? Tri::True : Tri::False;
            if (l.kind == Value::Kind::Text && r.kind == Value::Kind::Text)
                return l.text < r.text ? Tri::True : Tri::False;
            // identical residuals: x < x is false whatever x is
            if (l.kind == Value::Kind::Residual && r.kind == Value::Kind::Residual &&
                expr_equal(l.residual, r.residual))
                return Tri::False;
            return Tri::Undefined;
        }
        case BoolNode::Kind::And: {
            Tri x = eval_bool(b->a, s), y = eval_bool(b->b, s);
            if (x == Tri::Undefined || y == Tri::Undefined) return Tri::Undefined;
            return (x == Tri::True && y == Tri::True) ? Tri::True : Tri::False;
        }
        case BoolNode::Kind::Not: {
            Tri x = eval_bool(b->a, s);
            if (x == Tri::Undefined) return x;
            return x == Tri::True ? Tri::False : Tri::True;
        }
    }
    return Tri::Undefined;
}

const char* tri_name(Tri t) {
    switch (t) {
        case Tri::False: return "false";
        case Tri::True: return "true";
        case Tri::Undefined: return "undefined";
    }
    return "?";
}

// ---------------------------------------------------------------- flows

int Flow::index_of(const Name& n) const {
    for (size_t i = 0; i < names.size(); ++i)
        if (names[i] == n) return static_cast<int>(i);
    return -1;
}

State Flow::left() const {
    State s;
    for (size_t j = 0; j < names.size(); ++j) s[names[j]] = samples.front()[j];
    return s;
}

State Flow::right() const {
    State s;
    for (size_t j = 0; j < names.size(); ++j) s[names[j]] = right_limit[j];
    return s;
}

std::vector<double> Flow::at(double t) const {
    if (grid.empty()) return {};
    if (t <= grid.front()) return samples.front();
    if (t >= grid.back()) return right_limit;
    auto it = std::upper_bound(grid.begin(), grid.end(), t);
    size_t hi = static_cast<size_t>(it - grid.begin());
    size_t lo = hi - 1;
    double w = (t - grid[lo]) / (grid[hi] - grid[lo]);
    std::vector<double> out(names.size());
    for (size_t j = 0; j < names.size(); ++j) out[j] = samples[lo][j] + w * (samples[hi][j] - samples[lo][j]);
    return out;
}

State Flow::state_at(double t) const {
    auto v = at(t);
    State s;
    for (size_t j = 0; j < names.size(); ++j) s[names[j]] = v[j];
    return s;
}

Flow sample_flow(const std::vector<Name>& names, double duration, double step,
                 const std::function<std::vector<double>(double)>& fn) {
    if (!(duration > 0)) throw GlueError("flow duration must be positive");
    Flow f;
    f.names = names;
    std::size_t n = step > 0 ? static_cast<std::size_t>(std::ceil(duration / step - 1e-9)) : 1;
    if (n == 0) n = 1;
    for (std::size_t i = 0; i <= n; ++i) {
        double t = i == n ? duration : static_cast<double>(i) * step;
        if (n == 1) t = i == 0 ? 0.0 : duration;
        f.grid.push_back(t);
        f.samples.push_back(fn(t));
    }
    f.right_limit = f.samples.back();
    return f;
}

Flow constant_flow(const std::vector<Name>& names, const std::vector<double>& values, double duration,
                   double step) {
    return sample_flow(names, duration, step, [&](double) { return values; });
}

namespace {
std::vector<double> reorder(const Flow& from, const std::vector<Name>& names, const std::vector<double>& row) {
    std::vector<double> out(names.size());
    for (size_t j = 0; j < names.size(); ++j) out[j] = row[static_cast<size_t>(from.index_of(names[j]))];
    return out;
}

bool same_names(const std::vector<Name>& a, const std::vector<Name>& b) {
    NameSet x(a.begin(), a.end()), y(b.begin(), b.end());
    return x == y;
}
}  // namespace

Flow flow_concat(const Flow& r1, const Flow& r2) {
    if (!same_names(r1.names, r2.names)) throw GlueError("flow_concat: name sets differ");
    std::vector<double> left2 = reorder(r2, r1.names, r2.samples.front());
    double worst = 0.0;
    std::string who;
    for (size_t j = 0; j < r1.names.size(); ++j) {
        double d = std::fabs(r1.right_limit[j] - left2[j]);
        if (d > worst) {
            worst = d;
            who = r1.names[j].display;
        }
    }
    if (worst > kGlueTol) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3g", worst);
        throw GlueError("flow_concat: right limit and left state differ on " + who + " by " + buf);
    }
    Flow out = r1;
    double d1 = r1.duration();
    out.corners.push_back(r1.grid.size() - 1);
    for (size_t i = 1; i < r2.grid.size(); ++i) {
        out.grid.push_back(d1 + r2.grid[i]);
        out.samples.push_back(reorder(r2, r1.names, r2.samples[i]));
    }
    for (auto c : r2.corners)
        if (c > 0) out.corners.push_back(c + r1.grid.size() - 1);
    out.right_limit = reorder(r2, r1.names, r2.right_limit);
    return out;
}

Flow flow_restrict(const Flow& f, const NameSet& drop) {
    Flow out;
    std::vector<size_t> keep;
    for (size_t j = 0; j < f.names.size(); ++j)
        if (!drop.count(f.names[j])) {
            keep.push_back(j);
            out.names.push_back(f.names[j]);
        }
    out.grid = f.grid;
    out.corners = f.corners;
    for (auto& row : f.samples) {
        std::vector<double> r;
        for (auto j : keep) r.push_back(row[j]);
        out.samples.push_back(std::move(r));
    }
    for (auto j : keep) out.right_limit.push_back(f.right_limit[j]);
    return out;
}

Flow flow_union(const Flow& a, const Flow& b) {
    if (std::fabs(a.duration() - b.duration()) > kGlueTol) throw GlueError("flow union: durations differ");
    std::vector<double> grid = a.grid;
    grid.insert(grid.end(), b.grid.begin(), b.grid.end());
    std::sort(grid.begin(), grid.end());
    std::vector<double> merged;
    for (double t : grid)
        if (merged.empty() || t - merged.back() > kGlueTol) merged.push_back(t);
    merged.back() = a.duration();
    Flow out;
    out.names = a.names;
    for (auto& n : b.names)
        if (a.index_of(n) < 0) out.names.push_back(n);
    out.grid = merged;
    for (double t : merged) {
        auto va = a.at(t), vb = b.at(t);
        std::vector<double> row = va;
        for (size_t j = 0; j < b.names.size(); ++j) {
            int ia = a.index_of(b.names[j]);
            if (ia >= 0) {
                if (std::fabs(va[static_cast<size_t>(ia)] - vb[j]) > kGlueTol)
                    throw GlueError("flow union: disagreement on " + b.names[j].display);
            } else {
                row.push_back(vb[j]);
            }
        }
        out.samples.push_back(std::move(row));
    }
    out.right_limit = a.right_limit;
    for (size_t j = 0; j < b.names.size(); ++j) {
        int ia = a.index_of(b.names[j]);
        if (ia >= 0) {
            if (std::fabs(a.right_limit[static_cast<size_t>(ia)] - b.right_limit[j]) > kGlueTol)
                throw GlueError("flow union: right limits disagree on " + b.names[j].display);
        } else {
            out.right_limit.push_back(b.right_limit[j]);
        }
    }
    return out;
}

Contract contract_compose(const Contract& c1, const Contract& c2) {
    double d = c1.guarantee.duration();
    for (const Flow* f : {&c1.assumption, &c2.assumption, &c2.guarantee})
        if (std::fabs(f->duration() - d) > kGlueTol) throw GlueError("contract_compose: durations differ");
    NameSet g1(c1.guarantee.names.begin(), c1.guarantee.names.end());
    NameSet g2(c2.guarantee.names.begin(), c2.guarantee.names.end());
    for (auto& n : g1)
        if (g2.count(n)) throw GlueError("contract_compose: guarantees overlap on " + n.display);
    // agreement between one side's assumption and the other's guarantee
    flow_union(c1.assumption, c2.guarantee);
    flow_union(c2.assumption, c1.guarantee);
    Contract out;
    out.assumption = flow_union(flow_restrict(c1.assumption, g2), flow_restrict(c2.assumption, g1));
    out.guarantee = flow_union(c1.guarantee, c2.guarantee);
    return out;
}

ReadySet ready_normalize(ReadySet r) {
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    return r;
}

ReadySet ready_dual(const ReadySet& r) {
    ReadySet out;
    for (auto it : r) {
        it.out = !it.out;
        out.push_back(it);
    }
    return ready_normalize(std::move(out));
}

ReadySet ready_union(const ReadySet& a, const ReadySet& b) {
    ReadySet out = a;
    out.insert(out.end(), b.begin(), b.end());
    return ready_normalize(std::move(out));
}

ReadySet ready_intersect(const ReadySet& a, const ReadySet& b) {
    ReadySet out;
    for (auto& x : a)
        if (std::find(b.begin(), b.end(), x) != b.end()) out.push_back(x);
    return out;
}

std::string ready_text(const ReadySet& r) {
    std::vector<std::string> items;
    for (auto& x : r) items.push_back(x.name.display + (x.out ? "!" : "?"));
    std::sort(items.begin(), items.end());
    std::string s = "{";
    for (size_t i = 0; i < items.size(); ++i) s += (i ? "," : "") + items[i];
    return s + "}";
}

bool check_ode_along(const std::vector<Name>& vars, const std::vector<Expr>& field, const Contract& c,
                     double tol) {
    if (vars.size() != field.size()) return false;
    const Flow& g = c.guarantee;
    Flow all = c.assumption.names.empty() ? g : flow_union(c.assumption, g);
    std::vector<int> idx;
    for (auto& v : vars) {
        int i = all.index_of(v);
        if (i < 0) return false;
        idx.push_back(i);
    }
    std::vector<bool> corner(all.grid.size(), false);
    for (auto k : g.corners)
        if (k < corner.size()) corner[k] = true;
    for (size_t i = 1; i + 1 < all.grid.size(); ++i) {
        if (corner[i] || corner[i - 1] || corner[i + 1]) continue;
        State s;
        for (size_t j = 0; j < all.names.size(); ++j) s[all.names[j]] = all.samples[i][j];
        double dt = all.grid[i + 1] - all.grid[i - 1];
        for (size_t k = 0; k < vars.size(); ++k) {
            size_t j = static_cast<size_t>(idx[k]);
            double fd = (all.samples[i + 1][j] - all.samples[i - 1][j]) / dt;
            Value f = eval_expr(field[k], s);
            if (!f.is_real()) return false;
            if (std::fabs(fd - f.real) > tol * std::max(1.0, std::fabs(f.real))) return false;
        }
    }
    return true;
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_csv(std::ostream& os, const Flow& f, const std::vector<std::string>& headers) {
    os << "time";
    for (auto& h : headers) os << ',' << h;
    os << '\n';
    for (size_t i = 0; i < f.grid.size(); ++i) {
        os << fmt17(f.grid[i]);
        for (double x : f.samples[i]) os << ',' << fmt17(x);
        os << '\n';
    }
}

}  // namespace hpc
