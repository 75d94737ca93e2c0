#include "hpc/parser.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>

#include "hpc/valuation.hpp"

namespace hpc {

ParseError::ParseError(int l, int c, const std::string& msg)
    : std::runtime_error("line " + std::to_string(l) + ", col " + std::to_string(c) + ": " + msg), line(l), col(c) {}

namespace {

enum class Tok { Ident, Number, String, Sym, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    double num = 0.0;
    int line = 1, col = 1;
};

std::vector<Token> lex(const std::string& src) {
    std::vector<Token> out;
    int line = 1, col = 1;
    size_t i = 0;
    auto adv = [&](size_t n) {
        for (size_t k = 0; k < n && i < src.size(); ++k, ++i) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    };
    static const char* syms[] = {"||", "&&", "!=", "<=", ">=", "==", "|", "&", "!", "<", ">", "=", "+", "-",
                                 "*", "/", "(", ")", "[", "]", "{", "}", ",", ".", ";", "?"};
    while (i < src.size()) {
        unsigned char ch = static_cast<unsigned char>(src[i]);
        if (std::isspace(ch)) {
            adv(1);
            continue;
        }
        if (ch == '#') {
            while (i < src.size() && src[i] != '\n') adv(1);
            continue;
        }
        Token t;
        t.line = line;
        t.col = col;
        if (std::isalpha(ch) || ch == '_') {
            size_t j = i;
            while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_' || src[j] == '\''))
                ++j;
            t.kind = Tok::Ident;
            t.text = src.substr(i, j - i);
            adv(j - i);
        } else if (std::isdigit(ch)) {
            size_t j = i;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            if (j + 1 < src.size() && src[j] == '.' && std::isdigit(static_cast<unsigned char>(src[j + 1]))) {
                ++j;
                while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            }
            if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
                size_t k = j + 1;
                if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
                if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
                    while (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) ++k;
                    j = k;
                }
            }
            t.kind = Tok::Number;
            t.text = src.substr(i, j - i);
            t.num = std::strtod(t.text.c_str(), nullptr);
            adv(j - i);
        } else if (ch == '"') {
            size_t j = i + 1;
            while (j < src.size() && src[j] != '"' && src[j] != '\n') ++j;
            if (j >= src.size() || src[j] != '"') throw ParseError(line, col, "unterminated string literal");
            t.kind = Tok::String;
            t.text = src.substr(i + 1, j - i - 1);
            adv(j - i + 1);
        } else {
            bool found = false;
            for (const char* s : syms) {
                size_t n = std::char_traits<char>::length(s);
                if (src.compare(i, n, s) == 0) {
                    t.kind = Tok::Sym;
                    t.text = s;
                    adv(n);
                    found = true;
                    break;
                }
            }
            if (!found) throw ParseError(line, col, std::string("unexpected character '") + src[i] + "'");
        }
        out.push_back(t);
    }
    Token end;
    end.line = line;
    end.col = col;
    out.push_back(end);
    return out;
}

const std::set<std::string> kKeywords = {"new", "repl", "mu", "tau", "def", "const", "run", "ready",
                                         "true", "false", "and", "or", "not"};

struct Parser {
    std::vector<Token> toks;
    size_t pos = 0;
    ModelFile model;
    std::vector<std::pair<std::string, Name>> scope;
    std::set<std::string> in_progress;

    const Token& peek(size_t k = 0) const { return toks[std::min(pos + k, toks.size() - 1)]; }
    bool is_sym(const char* s, size_t k = 0) const { return peek(k).kind == Tok::Sym && peek(k).text == s; }
    bool is_kw(const char* s, size_t k = 0) const { return peek(k).kind == Tok::Ident && peek(k).text == s; }

    [[noreturn]] void fail(const Token& t, const std::string& msg) const { throw ParseError(t.line, t.col, msg); }

    std::string describe(const Token& t) const {
        switch (t.kind) {
            case Tok::End: return "end of input";
            case Tok::String: return "string \"" + t.text + "\"";
            default: return "'" + t.text + "'";
        }
    }

    void expect(const char* s) {
        if (!is_sym(s)) fail(peek(), std::string("expected '") + s + "' but found " + describe(peek()));
        ++pos;
    }

    std::string ident() {
        const Token& t = peek();
        if (t.kind != Tok::Ident) fail(t, "expected identifier but found " + describe(t));
        if (kKeywords.count(t.text)) fail(t, "keyword '" + t.text + "' cannot be used as a name");
        ++pos;
        return t.text;
    }

    const Definition* find_def(const std::string& n) const {
        for (auto& d : model.definitions)
            if (d.name == n) return &d;
        return nullptr;
    }

    Name lookup_name(const std::string& text) const {
        for (auto it = scope.rbegin(); it != scope.rend(); ++it)
            if (it->first == text) return it->second;
        return global_name(text);
    }

    // name used in channel / variable position
    Name channel(const Token& at, const std::string& text) const {
        for (auto it = scope.rbegin(); it != scope.rend(); ++it)
            if (it->first == text) return it->second;
        if (model.constants.count(text)) fail(at, "constant '" + text + "' used as a channel");
        return global_name(text);
    }

    std::vector<Name> bind_list(std::vector<std::string> texts) {
        std::vector<Name> out;
        for (auto& t : texts) {
            Name n = fresh_name(t);
            scope.emplace_back(t, n);
            out.push_back(n);
        }
        return out;
    }

    std::vector<std::string> ident_list_until(const char* close) {
        std::vector<std::string> out;
        if (is_sym(close)) return out;
        out.push_back(ident());
        while (is_sym(",")) {
            ++pos;
            out.push_back(ident());
        }
        return out;
    }

    // ------------------------------------------------------------ expressions

    Expr expr() {
        Expr l = term();
        while (is_sym("+") || is_sym("-")) {
            bool plus = is_sym("+");
            ++pos;
            Expr r = term();
            l = plus ? l + r : l - r;
        }
        return l;
    }

    Expr term() {
        Expr l = factor();
        while (is_sym("*") || is_sym("/")) {
            bool mul = is_sym("*");
            ++pos;
            Expr r = factor();
            l = mul ? l * r : l / r;
        }
        return l;
    }

    Expr factor() {
        if (is_sym("-")) {
            ++pos;
            if (peek().kind == Tok::Number) {
                double v = peek().num;
                ++pos;
                return mk_real(-v);
            }
            return mk_op(Op::Neg, {factor()});
        }
        return primary();
    }

    Expr primary() {
        const Token& t = peek();
        if (t.kind == Tok::Number) {
            ++pos;
            return mk_real(t.num);
        }
        if (t.kind == Tok::String) {
            ++pos;
            return mk_text(t.text);
        }
        if (is_sym("(")) {
            ++pos;
            Expr e = expr();
            expect(")");
            return e;
        }
        if (t.kind == Tok::Ident) {
            static const std::map<std::string, Op> fns = {
                {"sqrt", Op::Sqrt}, {"min", Op::Min}, {"max", Op::Max}, {"neg", Op::Neg}};
            auto f = fns.find(t.text);
            if (f != fns.end() && is_sym("(", 1)) {
                pos += 2;
                std::vector<Expr> args = expr_list(")");
                expect(")");
                if (static_cast<int>(args.size()) != op_arity(f->second))
                    fail(t, "function '" + t.text + "' expects " + std::to_string(op_arity(f->second)) + " argument(s)");
                return mk_op(f->second, std::move(args));
            }
            std::string n = ident();
            for (auto it = scope.rbegin(); it != scope.rend(); ++it)
                if (it->first == n) return mk_var(it->second);
            auto c = model.constants.find(n);
            if (c != model.constants.end()) return mk_real(c->second);
            return mk_var(global_name(n));
        }
        fail(t, "expected expression but found " + describe(t));
    }

    std::vector<Expr> expr_list(const char* close) {
        std::vector<Expr> out;
        if (is_sym(close)) return out;
        out.push_back(expr());
        while (is_sym(",")) {
            ++pos;
            out.push_back(expr());
        }
        return out;
    }

    // ------------------------------------------------------------ booleans

    Bool boolean() {
        Bool l = conj();
        while (is_kw("or") || is_sym("||")) {
            ++pos;
            l = b_or(l, conj());
        }
        return l;
    }

    Bool conj() {
        Bool l = negation();
        while (is_kw("and") || is_sym("&&")) {
            ++pos;
            l = b_and(l, negation());
        }
        return l;
    }

    Bool negation() {
        if (is_kw("not") || is_sym("!")) {
            ++pos;
            return b_not(negation());
        }
        return batom();
    }

    Bool batom() {
        if (is_kw("true")) {
            ++pos;
            return b_true();
        }
        if (is_kw("false")) {
            ++pos;
            return b_false();
        }
        if (is_sym("(")) {
            size_t save = pos;
            try {
                ++pos;
                Bool b = boolean();
                expect(")");
                return b;
            } catch (const ParseError&) {
                pos = save;
            }
        }
        Expr l = expr();
        const Token& op = peek();
        if (op.kind != Tok::Sym) fail(op, "expected comparison operator but found " + describe(op));
        std::string o = op.text;
        ++pos;
        if (o == "<") return b_less(l, expr());
        if (o == "<=") return b_le(l, expr());
        if (o == ">") return b_gt(l, expr());
        if (o == ">=") return b_ge(l, expr());
        if (o == "==" || o == "=") return b_eq(l, expr());
        if (o == "!=") return b_ne(l, expr());
        fail(op, "expected comparison operator but found " + describe(op));
    }

    // ------------------------------------------------------------ processes

    Proc par() {
        std::vector<Proc> parts{sum()};
        while (is_sym("||")) {
            ++pos;
            parts.push_back(sum());
        }
        return parts.size() == 1 ? parts[0] : mk_par(parts);
    }

    Proc sum() {
        const Token& start = peek();
        Proc first = unary();
        if (!is_sym("+")) return first;
        std::vector<Branch> bs;
        auto merge = [&](const Proc& p, const Token& at) {
            if (p->kind != ProcNode::Kind::Sum) fail(at, "operands of '+' must be guarded sums");
            bs.insert(bs.end(), p->branches.begin(), p->branches.end());
        };
        merge(first, start);
        while (is_sym("+")) {
            ++pos;
            const Token& at = peek();
            merge(unary(), at);
        }
        return mk_sum(std::move(bs));
    }

    Proc unary() {
        const Token& t = peek();
        if (t.kind == Tok::Number && t.text == "0") {
            ++pos;
            return nil();
        }
        if (is_sym("(")) {
            ++pos;
            Proc p = par();
            expect(")");
            return p;
        }
        if (is_kw("new")) {
            ++pos;
            std::vector<std::string> ns{ident()};
            while (is_sym(",")) {
                ++pos;
                ns.push_back(ident());
            }
            expect(".");
            size_t mark = scope.size();
            std::vector<Name> names = bind_list(ns);
            Proc body = unary();
            scope.resize(mark);
            return mk_res(names, body);
        }
        if (is_kw("repl")) {
            ++pos;
            return mk_rep(unary());
        }
        if (is_kw("mu")) return mu();
        if (t.kind == Tok::Ident && !kKeywords.count(t.text) && find_def(t.text)) return call();
        if (t.kind == Tok::Ident && in_progress.count(t.text)) fail(t, "recursive definition '" + t.text + "' (use mu or repl)");
        return branch();
    }

    Proc mu() {
        const Token& at = peek();
        ++pos;
        std::string x = ident();
        std::vector<std::string> params;
        if (is_sym("(")) {
            ++pos;
            params = ident_list_until(")");
            expect(")");
        }
        expect(".");
        std::vector<Expr> init;
        for (auto& y : params) {
            bool found = false;
            for (auto it = scope.rbegin(); it != scope.rend() && !found; ++it)
                if (it->first == y) {
                    init.push_back(mk_var(it->second));
                    found = true;
                }
            if (!found) {
                auto c = model.constants.find(y);
                if (c == model.constants.end())
                    fail(at, "mu parameter '" + y + "' has no initial value in scope");
                init.push_back(mk_real(c->second));
            }
        }
        size_t mark = scope.size();
        Name xn = bind_list({x})[0];
        size_t inner = scope.size();
        std::vector<Name> ys = bind_list(params);
        Proc body = unary();
        scope.resize(inner);
        scope.resize(mark);
        Proc loop = mk_rep(mk_prefix(p_in(xn, ys), body));
        return mk_res(xn, mk_par(mk_prefix(p_out(xn, init)), loop));
    }

    Proc call() {
        const Token& at = peek();
        std::string name = ident();
        const Definition* d = find_def(name);
        std::vector<Expr> args;
        if (is_sym("(")) {
            ++pos;
            args = expr_list(")");
            expect(")");
        }
        if (args.size() != d->params.size())
            fail(at, "definition '" + name + "' expects " + std::to_string(d->params.size()) + " argument(s), got " +
                         std::to_string(args.size()));
        Substitution s;
        for (size_t i = 0; i < args.size(); ++i) s.emplace_back(d->params[i], args[i]);
        // free names of the body are captured by same-named binders at the call site
        for (const Name& n : free_names(d->body)) {
            if (!is_global(n)) continue;
            for (auto it = scope.rbegin(); it != scope.rend(); ++it)
                if (it->first == n.display) {
                    if (it->second != n) s.emplace_back(n, mk_var(it->second));
                    break;
                }
        }
        try {
            return substitute(freshen_binders(d->body), s);
        } catch (const SyntaxError& e) {
            fail(at, std::string("in call to '") + name + "': " + e.what());
        }
    }

    Proc branch() {
        size_t mark = scope.size();
        Prefix pre = prefix();
        Proc cont = nil();
        if (is_sym(".")) {
            ++pos;
            cont = unary();
        }
        scope.resize(mark);
        return mk_prefix(std::move(pre), cont);
    }

    // Binders of the prefix are pushed onto the scope; branch() pops them.
    Prefix prefix() {
        const Token& t = peek();
        if (is_kw("tau")) {
            ++pos;
            return p_tau();
        }
        if (is_sym("[")) {
            ++pos;
            Bool b = boolean();
            expect("]");
            return p_guard(b);
        }
        if (is_sym("{")) return continuous();
        if (t.kind == Tok::Ident) {
            std::string c = ident();
            if (is_sym("(")) {
                Name ch = channel(t, c);
                ++pos;
                auto ns = ident_list_until(")");
                expect(")");
                return p_in(ch, bind_list(ns));
            }
            if (is_sym("!") && is_sym("<", 1)) {
                Name ch = channel(t, c);
                pos += 2;
                auto es = expr_list(">");
                expect(">");
                return p_out(ch, es);
            }
            fail(t, "unknown definition '" + c + "'");
        }
        fail(t, "expected a process but found " + describe(t));
    }

    Prefix continuous() {
        const Token& open = peek();
        expect("{");
        std::vector<Expr> init = expr_list("|");
        expect("|");
        std::vector<Name> vars;
        std::vector<Expr> field;
        std::vector<const Token*> var_tok;
        for (;;) {
            const Token& vt = peek();
            std::string v = ident();
            if (v.empty() || v.back() != '\'') fail(vt, "expected ODE of the form v' = e");
            v.pop_back();
            if (v.empty()) fail(vt, "expected variable name before '");
            expect("=");
            Name vn = channel(vt, v);
            for (auto& o : vars)
                if (o == vn) fail(vt, "variable '" + v + "' has two equations");
            vars.push_back(vn);
            field.push_back(expr());
            if (!is_sym(",")) break;
            ++pos;
        }
        if (init.size() != vars.size())
            fail(open, "continuous prefix has " + std::to_string(init.size()) + " initial value(s) but " +
                           std::to_string(vars.size()) + " variable(s)");
        Bool boundary = b_true();
        if (is_sym("&")) {
            ++pos;
            boundary = boolean();
        }
        std::vector<ReadyItem> ready;
        if (is_sym(";")) {
            ++pos;
            if (is_kw("ready")) ++pos;
            while (!is_sym("}")) {
                const Token& rt = peek();
                std::string r = ident();
                bool out;
                if (is_sym("!")) out = true;
                else if (is_sym("?")) out = false;
                else fail(peek(), "ready item must end in '!' (sense) or '?' (actuate)");
                ++pos;
                Name rn = channel(rt, r);
                bool member = false;
                for (auto& v : vars) member |= v == rn;
                if (!member) fail(rt, "ready-set entry '" + r + "' is not a variable of this ODE");
                ready.push_back(ReadyItem{rn, out});
                if (is_sym(",")) ++pos;
            }
        }
        expect("}");
        std::vector<Name> binders;
        if (is_sym("(")) {
            const Token& bt = peek();
            ++pos;
            auto ns = ident_list_until(")");
            expect(")");
            if (ns.size() != vars.size())
                fail(bt, "continuation binds " + std::to_string(ns.size()) + " name(s) but the ODE has " +
                             std::to_string(vars.size()) + " variable(s)");
            binders = bind_list(ns);
        }
        try {
            return p_cont(init, vars, field, boundary, ready, binders);
        } catch (const SyntaxError& e) {
            fail(open, e.what());
        }
    }

    // ------------------------------------------------------------ file

    void file() {
        bool sections = is_kw("const") || is_kw("def") || is_kw("run");
        if (!sections) {
            model.entry = par();
            if (peek().kind != Tok::End) fail(peek(), "unexpected " + describe(peek()) + " after process");
            return;
        }
        while (peek().kind != Tok::End) {
            const Token& t = peek();
            if (is_kw("const")) {
                ++pos;
                const Token& nt = peek();
                std::string n = ident();
                expect("=");
                Expr e = expr();
                Value v = eval_expr(e, {});
                if (!v.is_real()) fail(nt, "constant '" + n + "' does not evaluate to a real");
                if (model.constants.count(n) || find_def(n)) fail(nt, "'" + n + "' is already defined");
                model.constants[n] = v.real;
                expect(";");
            } else if (is_kw("def")) {
                ++pos;
                const Token& nt = peek();
                std::string n = ident();
                if (model.constants.count(n) || find_def(n)) fail(nt, "'" + n + "' is already defined");
                std::vector<std::string> params;
                if (is_sym("(")) {
                    ++pos;
                    params = ident_list_until(")");
                    expect(")");
                }
                expect("=");
                scope.clear();
                in_progress.insert(n);
                Definition d;
                d.name = n;
                d.params = bind_list(params);
                d.body = par();
                in_progress.erase(n);
                scope.clear();
                expect(";");
                model.definitions.push_back(std::move(d));
            } else if (is_kw("run")) {
                if (model.entry) fail(t, "duplicate run section");
                ++pos;
                model.entry = par();
                if (is_sym(";") || peek().kind != Tok::End) expect(";");
            } else {
                fail(t, "expected 'const', 'def' or 'run' but found " + describe(t));
            }
        }
        if (!model.entry) fail(peek(), "missing 'run' section");
    }
};

}  // namespace

ModelFile parse_model(const std::string& text) {
    Parser p;
    p.toks = lex(text);
    p.file();
    return std::move(p.model);
}

Proc parse_process(const std::string& text) { return parse_model(text).entry; }

// ---------------------------------------------------------------- pretty

namespace {

// shortest text that reads back to the same double
std::string num(double v) {
    char buf[40];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

struct Printer {
    std::vector<std::pair<std::uint64_t, std::string>> env;
    std::set<std::string> taken;  // displays of free names and active binders

    std::string name(const Name& n) const {
        for (auto it = env.rbegin(); it != env.rend(); ++it)
            if (it->first == n.id) return it->second;
        return n.display;
    }

    std::string bind(const Name& n) {
        std::string d = n.display;
        if (taken.count(d) || kKeywords.count(d)) {
            int k = 1;
            while (taken.count(d + "_" + std::to_string(k))) ++k;
            d += "_" + std::to_string(k);
        }
        taken.insert(d);
        env.emplace_back(n.id, d);
        return d;
    }

    void unbind(size_t mark) {
        while (env.size() > mark) {
            taken.erase(env.back().second);
            env.pop_back();
        }
    }

    std::string expr(const Expr& e) const {
        switch (e->kind) {
            case ExprNode::Kind::Real: return e->real < 0 ? "(" + num(e->real) + ")" : num(e->real);
            case ExprNode::Kind::Text: return "\"" + e->text + "\"";
            case ExprNode::Kind::Var: return name(e->var);
            case ExprNode::Kind::Apply:
                switch (e->op) {
                    case Op::Add:
                    case Op::Sub:
                    case Op::Mul:
                    case Op::Div:
                        return "(" + expr(e->args[0]) + " " + op_symbol(e->op) + " " + expr(e->args[1]) + ")";
                    default: {
                        std::string s = std::string(op_symbol(e->op)) + "(";
                        for (size_t i = 0; i < e->args.size(); ++i) s += (i ? ", " : "") + expr(e->args[i]);
                        return s + ")";
                    }
                }
        }
        return "?";
    }

    static bool is_const(const Expr& e) { return e->kind == ExprNode::Kind::Real || e->kind == ExprNode::Kind::Text; }

    std::string boolean(const Bool& b) const {
        switch (b->kind) {
            case BoolNode::Kind::False: return "false";
            case BoolNode::Kind::Less:
                if (is_const(b->lhs) && !is_const(b->rhs))
                    return expr(b->rhs) + " > " + expr(b->lhs);
                return expr(b->lhs) + " < " + expr(b->rhs);
            case BoolNode::Kind::And: return "(" + boolean(b->a) + " and " + boolean(b->b) + ")";
            case BoolNode::Kind::Not: {
                const Bool& a = b->a;
                if (a->kind == BoolNode::Kind::False) return "true";
                if (a->kind == BoolNode::Kind::Less) {
                    if (is_const(a->rhs) || !is_const(a->lhs))
                        return expr(a->lhs) + " >= " + expr(a->rhs);
                    return expr(a->rhs) + " <= " + expr(a->lhs);
                }
                if (a->kind == BoolNode::Kind::And && a->a->kind == BoolNode::Kind::Not &&
                    a->b->kind == BoolNode::Kind::Not)
                    return "(" + boolean(a->a->a) + " or " + boolean(a->b->a) + ")";
                return "not " + boolean(a);
            }
        }
        return "?";
    }

    std::string exprs(const std::vector<Expr>& es) const {
        std::string s;
        for (size_t i = 0; i < es.size(); ++i) s += (i ? ", " : "") + expr(es[i]);
        return s;
    }

    std::string branch(const Branch& br) {
        const Prefix& p = br.prefix;
        std::string head;
        size_t mark = env.size();
        switch (p.kind) {
            case PrefixKind::Tau: head = "tau"; break;
            case PrefixKind::Guard: head = "[" + boolean(p.cond) + "]"; break;
            case PrefixKind::Output: head = name(p.chan) + "!<" + exprs(p.payload) + ">"; break;
            case PrefixKind::Input: {
                head = name(p.chan) + "(";
                for (size_t i = 0; i < p.binders.size(); ++i) head += (i ? ", " : "") + bind(p.binders[i]);
                head += ")";
                break;
            }
            case PrefixKind::Continuous: {
                head = "{" + exprs(p.init) + " | ";
                for (size_t i = 0; i < p.vars.size(); ++i)
                    head += (i ? ", " : "") + name(p.vars[i]) + "' = " + expr(p.field[i]);
                if (!(p.boundary->kind == BoolNode::Kind::Not && p.boundary->a->kind == BoolNode::Kind::False))
                    head += " & " + boolean(p.boundary);
                if (!p.ready.empty()) {
                    head += " ; ready";
                    for (size_t i = 0; i < p.ready.size(); ++i)
                        head += std::string(i ? ", " : " ") + name(p.ready[i].name) + (p.ready[i].out ? "!" : "?");
                }
                head += "}";
                if (!p.binders.empty()) {
                    head += "(";
                    for (size_t i = 0; i < p.binders.size(); ++i) head += (i ? ", " : "") + bind(p.binders[i]);
                    head += ")";
                }
                break;
            }
        }
        if (!is_nil(br.cont)) head += " . " + unary(br.cont);
        unbind(mark);
        return head;
    }

    std::string unary(const Proc& p) {
        switch (p->kind) {
            case ProcNode::Kind::Sum:
                if (p->branches.empty()) return "0";
                if (p->branches.size() == 1) return branch(p->branches[0]);
                return "(" + proc(p) + ")";
            case ProcNode::Kind::Res: {
                size_t mark = env.size();
                std::string s = "new " + bind(p->name);  // bind before printing the body
                s += " . " + unary(p->left);
                unbind(mark);
                return s;
            }
            case ProcNode::Kind::Rep: return "repl " + unary(p->left);
            case ProcNode::Kind::Par:
            case ProcNode::Kind::Call: return "(" + proc(p) + ")";
        }
        return "?";
    }

    std::string proc(const Proc& p) {
        switch (p->kind) {
            case ProcNode::Kind::Sum: {
                if (p->branches.empty()) return "0";
                std::string s;
                for (size_t i = 0; i < p->branches.size(); ++i) s += (i ? " + " : "") + branch(p->branches[i]);
                return s;
            }
            case ProcNode::Kind::Par: return unary(p->left) + " || " + unary(p->right);
            case ProcNode::Kind::Call: {
                std::string s = p->callee + "(" + exprs(p->args) + ")";
                return s;
            }
            default: return unary(p);
        }
    }
};

}  // namespace

std::string pretty(const Proc& p) {
    Printer pr;
    for (auto& n : free_names(p)) pr.taken.insert(n.display);
    return pr.proc(p);
}

std::string pretty_expr(const Expr& e) { return Printer{}.expr(e); }
std::string pretty_bool(const Bool& b) { return Printer{}.boolean(b); }

}  // namespace hpc
