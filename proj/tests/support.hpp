#pragma once

// Shared test helpers: random discrete terms, a naive bisimulation oracle
// and a de Bruijn printer used as an independent alpha-equivalence oracle.

#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hpc/equivalence.hpp"
#include "hpc/parser.hpp"
#include "hpc/syntax.hpp"

namespace testsupport {

using namespace hpc;

inline std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// Small discrete terms over channels a, b plus restricted names; values from {0, 1}
// and received variables (never in channel position).
class TermGen {
public:
    explicit TermGen(std::uint64_t seed) : rng_(seed) {}

    Proc term(int prefixes = 4) {
        chans_ = {global_name("a"), global_name("b")};
        vals_.clear();
        return proc(prefixes);
    }

    // sum-shaped term (for M + 0 and [B].P + M contexts)
    Proc sum(int prefixes = 4) {
        chans_ = {global_name("a"), global_name("b")};
        vals_.clear();
        int k = prefixes >= 2 && coin() ? 2 : 1;
        std::vector<Branch> bs;
        int left = prefixes;
        for (int i = 0; i < k; ++i) {
            int use = i + 1 == k ? left : 1 + pick(left - (k - i - 1));
            bs.push_back(branch(std::max(1, use)));
            left -= use;
        }
        return mk_sum(bs);
    }

    int pick(int n) { return n <= 1 ? 0 : static_cast<int>(rng_() % static_cast<std::uint64_t>(n)); }
    bool coin() { return rng_() & 1u; }

private:
    std::mt19937_64 rng_;
    std::vector<Name> chans_;
    std::vector<Name> vals_;

    Expr value() {
        int n = 2 + static_cast<int>(vals_.size());
        int k = pick(n);
        if (k < 2) return mk_real(k);
        return mk_var(vals_[static_cast<size_t>(k - 2)]);
    }

    Branch branch(int budget) {
        Name ch = chans_[static_cast<size_t>(pick(static_cast<int>(chans_.size())))];
        switch (pick(4)) {
            case 0: return {p_tau(), proc(budget - 1)};
            case 1: {
                Name y = fresh_name("y");
                vals_.push_back(y);
                Proc cont = proc(budget - 1);
                vals_.pop_back();
                return {p_in(ch, {y}), cont};
            }
            case 2: return {p_out(ch, {value()}), proc(budget - 1)};
            default: return {p_guard(b_less(value(), mk_real(1))), proc(budget - 1)};
        }
    }

    Proc proc(int budget) {
        if (budget <= 0) return nil();
        switch (pick(6)) {
            case 0: return nil();
            case 1:
            case 2: return mk_sum({branch(budget)});
            case 3: {
                if (budget < 2) return mk_sum({branch(budget)});
                int l = 1 + pick(budget - 1);
                return mk_sum({branch(l), branch(budget - l)});
            }
            case 4: {
                int l = pick(budget + 1);
                return mk_par(proc(l), proc(budget - l));
            }
            default: {
                Name x = fresh_name("x");
                chans_.push_back(x);
                Proc body = proc(budget);
                chans_.pop_back();
                return mk_res(x, body);
            }
        }
    }
};

// Greatest fixed point by repeated pruning of the full relation. Independent
// of the partition-refinement implementation under test.
inline bool naive_bisimilar(const Lts& a, const Lts& b) {
    const int na = static_cast<int>(a.states.size()), nb = static_cast<int>(b.states.size());
    std::vector<std::vector<std::pair<std::string, int>>> sa(na), sb(nb);
    for (auto& e : a.edges) sa[e.from].push_back({e.label, e.to});
    for (auto& e : b.edges) sb[e.from].push_back({e.label, e.to});
    std::vector<std::vector<char>> r(na, std::vector<char>(nb, 1));
    auto simulates = [&](const auto& moves, const auto& answers, auto related) {
        for (auto& [l, to] : moves) {
            bool ok = false;
            for (auto& [l2, to2] : answers)
                if (l == l2 && related(to, to2)) {
                    ok = true;
                    break;
                }
            if (!ok) return false;
        }
        return true;
    };
    for (bool changed = true; changed;) {
        changed = false;
        for (int i = 0; i < na; ++i)
            for (int j = 0; j < nb; ++j) {
                if (!r[i][j]) continue;
                bool fwd = simulates(sa[i], sb[j], [&](int x, int y) { return r[x][y] != 0; });
                bool bwd = simulates(sb[j], sa[i], [&](int y, int x) { return r[x][y] != 0; });
                if (!fwd || !bwd) {
                    r[i][j] = 0;
                    changed = true;
                }
            }
    }
    return r[a.initial][b.initial] != 0;
}

// de Bruijn rendering: bound names become depth indices, free names keep their id.
class DeBruijn {
public:
    std::string operator()(const Proc& p) {
        env_.clear();
        std::ostringstream os;
        proc(os, p);
        return os.str();
    }

private:
    std::vector<Name> env_;

    std::string name(const Name& n) const {
        for (size_t i = env_.size(); i-- > 0;)
            if (env_[i] == n) return "#" + std::to_string(env_.size() - 1 - i);
        return "g" + std::to_string(n.id);
    }
    void expr(std::ostream& os, const Expr& e) {
        switch (e->kind) {
            case ExprNode::Kind::Real: os << e->real; break;
            case ExprNode::Kind::Text: os << '"' << e->text << '"'; break;
            case ExprNode::Kind::Var: os << name(e->var); break;
            case ExprNode::Kind::Apply:
                os << op_symbol(e->op) << '(';
                for (auto& a : e->args) expr(os, a), os << ',';
                os << ')';
        }
    }
    void boolean(std::ostream& os, const Bool& b) {
        if (!b) {
            os << "T";
            return;
        }
        switch (b->kind) {
            case BoolNode::Kind::False: os << "F"; break;
            case BoolNode::Kind::Less: expr(os, b->lhs), os << '<', expr(os, b->rhs); break;
            case BoolNode::Kind::And: os << '(', boolean(os, b->a), os << '&', boolean(os, b->b), os << ')'; break;
            case BoolNode::Kind::Not: os << '!', boolean(os, b->a); break;
        }
    }
    void proc(std::ostream& os, const Proc& p) {
        if (!p) {
            os << "0";
            return;
        }
        switch (p->kind) {
            case ProcNode::Kind::Sum:
                os << "S[";
                for (auto& br : p->branches) {
                    const Prefix& pr = br.prefix;
                    size_t pushed = 0;
                    switch (pr.kind) {
                        case PrefixKind::Tau: os << "tau"; break;
                        case PrefixKind::Input:
                            os << "in " << name(pr.chan) << '/' << pr.binders.size();
                            for (auto& b : pr.binders) env_.push_back(b), ++pushed;
                            break;
                        case PrefixKind::Output:
                            os << "out " << name(pr.chan) << '<';
                            for (auto& e : pr.payload) expr(os, e), os << ',';
                            os << '>';
                            break;
                        case PrefixKind::Guard: os << "if "; boolean(os, pr.cond); break;
                        case PrefixKind::Continuous:
                            os << "ode{";
                            for (auto& e : pr.init) expr(os, e), os << ',';
                            os << '|';
                            for (auto& v : pr.vars) os << name(v) << ',';
                            for (auto& e : pr.field) expr(os, e), os << ',';
                            boolean(os, pr.boundary);
                            os << '}' << pr.binders.size();
                            for (auto& b : pr.binders) env_.push_back(b), ++pushed;
                            break;
                    }
                    os << '.';
                    proc(os, br.cont);
                    env_.resize(env_.size() - pushed);
                    os << ';';
                }
                os << ']';
                break;
            case ProcNode::Kind::Res:
                env_.push_back(p->name);
                os << "nu.";
                proc(os, p->left);
                env_.pop_back();
                break;
            case ProcNode::Kind::Par: os << "P(", proc(os, p->left), os << '|', proc(os, p->right), os << ')'; break;
            case ProcNode::Kind::Rep: os << "R(", proc(os, p->left), os << ')'; break;
            case ProcNode::Kind::Call:
                os << "C " << p->callee << '(';
                for (auto& a : p->args) expr(os, a), os << ',';
                os << ')';
        }
    }
};

struct SuiteStats {
    int terms = 0;
    int checks = 0;
    int failures = 0;
    int oracle_disagreements = 0;
    std::vector<std::string> failed;
};

inline bool bisim_checked(const Proc& p, const Proc& q, SuiteStats& st, const std::string& law) {
    Lts a = build_lts(p), b = build_lts(q);
    bool r = strong_bisim(a, b).related;
    if (r != naive_bisimilar(a, b)) ++st.oracle_disagreements;
    ++st.checks;
    if (!r) {
        ++st.failures;
        st.failed.push_back(law + ": " + pretty(p) + "  vs  " + pretty(q));
    }
    return r;
}

// P || 0 ~ P, M + 0 ~ M, (nu x)0 ~ 0, (nu x)(P || Q) ~ P || (nu x)Q for x not free in P,
// (nu x)(nu y)P ~ (nu y)(nu x)P
inline SuiteStats strong_law_suite(int terms, std::uint64_t seed) {
    SuiteStats st;
    TermGen g(seed);
    Name a = global_name("a"), b = global_name("b");
    for (int i = 0; i < terms; ++i) {
        Proc p = g.term(4);
        ++st.terms;
        bisim_checked(mk_par(p, nil()), p, st, "P||0");

        Proc m = g.sum(4);
        Proc m0 = parse_process("(" + pretty(m) + ") + 0");
        bisim_checked(m0, m, st, "M+0");

        Name x = fresh_name("x"), y = fresh_name("y");
        bisim_checked(mk_res(x, nil()), nil(), st, "(nu x)0");

        Proc q = substitute(g.term(3), {{a, mk_var(x)}});
        bisim_checked(mk_res(x, mk_par(p, q)), mk_par(p, mk_res(x, q)), st, "scope");

        Proc r = substitute(p, {{a, mk_var(x)}, {b, mk_var(y)}});
        bisim_checked(mk_res(x, mk_res(y, r)), mk_res(y, mk_res(x, r)), st, "swap");
    }
    return st;
}

// Contexts [B].- + M, (nu a)-, - || R applied to pairs P ~ Q.
inline SuiteStats congruence_suite(int pairs, std::uint64_t seed) {
    SuiteStats st;
    TermGen g(seed);
    Name a = global_name("a");
    int made = 0;
    while (made < pairs) {
        Proc p = g.term(3), q;
        switch (made % 3) {
            case 0: q = mk_par(p, nil()); break;
            case 1: {
                Proc o = g.term(2);
                q = mk_par(o, p);
                p = mk_par(p, o);
                break;
            }
            default: {
                Name x = fresh_name("x");
                q = mk_res(x, p);
                break;
            }
        }
        Lts lp = build_lts(p), lq = build_lts(q);
        if (!strong_bisim(lp, lq).related) continue;
        ++made;
        ++st.terms;
        Proc m = g.sum(2), r = g.term(2);
        for (Bool cond : {b_less(mk_real(0), mk_real(1)), b_less(mk_real(1), mk_real(0))}) {
            Proc cp = mk_sum({Branch{p_guard(cond), p}});
            Proc cq = mk_sum({Branch{p_guard(cond), q}});
            std::vector<Branch> bp = cp->branches, bq = cq->branches;
            for (auto& br : m->branches) bp.push_back(br), bq.push_back(br);
            bisim_checked(mk_sum(bp), mk_sum(bq), st, "guard-sum");
        }
        Name x = fresh_name("x");  // (nu a)- up to alpha
        bisim_checked(mk_res(x, substitute(p, {{a, mk_var(x)}})), mk_res(x, substitute(q, {{a, mk_var(x)}})), st,
                      "restriction");
        bisim_checked(mk_par(p, r), mk_par(q, r), st, "parallel");
    }
    return st;
}

// (time, value) samples of every variable with this display, private ones included;
// each segment contributes its grid plus its right limit
inline std::vector<std::pair<double, double>> any_series(const Trajectory& tr, const std::string& display) {
    std::vector<std::pair<double, double>> out;
    for (auto& seg : tr.segments)
        for (std::size_t j = 0; j < seg.flow.names.size(); ++j) {
            if (seg.flow.names[j].display != display) continue;
            for (std::size_t i = 0; i < seg.flow.grid.size(); ++i)
                out.push_back({seg.start + seg.flow.grid[i], seg.flow.samples[i][j]});
            if (!seg.flow.right_limit.empty()) out.push_back({seg.start + seg.flow.duration(), seg.flow.right_limit[j]});
        }
    return out;
}

}  // namespace testsupport
