#include "hpc/parser.hpp"

namespace hpc {

namespace {

using nlohmann::json;

json names(const std::vector<Name>& ns) {
    json a = json::array();
    for (auto& n : ns) a.push_back(n.display);
    return a;
}

json bool_json(const Bool& b);

json exprs(const std::vector<Expr>& es) {
    json a = json::array();
    for (auto& e : es) a.push_back(expr_json(e));
    return a;
}

json bool_json(const Bool& b) {
    if (!b) return nullptr;
    switch (b->kind) {
        case BoolNode::Kind::False: return {{"kind", "false"}};
        case BoolNode::Kind::Less: return {{"kind", "less"}, {"lhs", expr_json(b->lhs)}, {"rhs", expr_json(b->rhs)}};
        case BoolNode::Kind::And: return {{"kind", "and"}, {"a", bool_json(b->a)}, {"b", bool_json(b->b)}};
        case BoolNode::Kind::Not: return {{"kind", "not"}, {"a", bool_json(b->a)}};
    }
    return nullptr;
}

json prefix_json(const Prefix& p) {
    switch (p.kind) {
        case PrefixKind::Tau: return {{"kind", "tau"}};
        case PrefixKind::Input: return {{"kind", "input"}, {"chan", p.chan.display}, {"binders", names(p.binders)}};
        case PrefixKind::Output: return {{"kind", "output"}, {"chan", p.chan.display}, {"payload", exprs(p.payload)}};
        case PrefixKind::Guard: return {{"kind", "guard"}, {"cond", bool_json(p.cond)}, {"text", pretty_bool(p.cond)}};
        case PrefixKind::Continuous: {
            json ready = json::array();
            for (auto& r : p.ready) ready.push_back(r.name.display + (r.out ? "!" : "?"));
            json field = json::array();
            for (size_t i = 0; i < p.vars.size() && i < p.field.size(); ++i)
                field.push_back({{"var", p.vars[i].display}, {"rhs", expr_json(p.field[i])}});
            return {{"kind", "continuous"}, {"init", exprs(p.init)}, {"field", field},
                    {"boundary", bool_json(p.boundary)}, {"boundary_text", pretty_bool(p.boundary)},
                    {"ready", ready}, {"binders", names(p.binders)}};
        }
    }
    return nullptr;
}

}  // namespace

json expr_json(const Expr& e) {
    if (!e) return nullptr;
    switch (e->kind) {
        case ExprNode::Kind::Real: return e->real;
        case ExprNode::Kind::Text: return {{"text", e->text}};
        case ExprNode::Kind::Var: return {{"var", e->var.display}};
        case ExprNode::Kind::Apply: return {{"op", op_symbol(e->op)}, {"args", exprs(e->args)}};
    }
    return nullptr;
}

json ast_json(const Proc& p) {
    switch (p->kind) {
        case ProcNode::Kind::Sum: {
            if (p->branches.empty()) return {{"kind", "nil"}};
            json bs = json::array();
            for (auto& b : p->branches) bs.push_back({{"prefix", prefix_json(b.prefix)}, {"cont", ast_json(b.cont)}});
            return {{"kind", "sum"}, {"branches", bs}};
        }
        case ProcNode::Kind::Res: return {{"kind", "new"}, {"name", p->name.display}, {"body", ast_json(p->left)}};
        case ProcNode::Kind::Par: return {{"kind", "par"}, {"left", ast_json(p->left)}, {"right", ast_json(p->right)}};
        case ProcNode::Kind::Rep: return {{"kind", "repl"}, {"body", ast_json(p->left)}};
        case ProcNode::Kind::Call: return {{"kind", "call"}, {"callee", p->callee}, {"args", exprs(p->args)}};
    }
    return nullptr;
}

json ast_json(const ModelFile& m) {
    json j;
    j["constants"] = m.constants;
    json defs = json::array();
    for (auto& d : m.definitions) defs.push_back({{"name", d.name}, {"params", names(d.params)}, {"body", ast_json(d.body)}});
    j["definitions"] = defs;
    j["run"] = ast_json(m.entry);
    j["pretty"] = pretty(m.entry);
    return j;
}

}  // namespace hpc
