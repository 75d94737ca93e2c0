#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hpc {

// Names compare by id only. Global names are interned by text so that
// separately parsed files agree on their free names.
struct Name {
    std::uint64_t id = 0;
    std::string display;

    bool operator==(const Name& o) const { return id == o.id; }
    bool operator!=(const Name& o) const { return id != o.id; }
    bool operator<(const Name& o) const { return id < o.id; }
    bool valid() const { return id != 0; }
};

Name fresh_name(const std::string& display);
Name global_name(const std::string& text);
bool is_global(const Name& n);
Name freshen(const Name& n);

using NameSet = std::set<Name>;

// ---------------------------------------------------------------- expressions

enum class Op { Add, Sub, Mul, Div, Sqrt, Min, Max, Neg };
int op_arity(Op op);
const char* op_symbol(Op op);

struct ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

struct ExprNode {
    enum class Kind { Real, Text, Var, Apply } kind = Kind::Real;
    double real = 0.0;
    std::string text;
    Name var;
    Op op = Op::Add;
    std::vector<Expr> args;
};

Expr mk_real(double v);
Expr mk_text(std::string s);
Expr mk_var(const Name& n);
Expr mk_op(Op op, std::vector<Expr> args);
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);

bool expr_equal(const Expr& a, const Expr& b);
void expr_names(const Expr& e, NameSet& out);

struct BoolNode;
using Bool = std::shared_ptr<const BoolNode>;

struct BoolNode {
    enum class Kind { False, Less, And, Not } kind = Kind::False;
    Expr lhs, rhs;
    Bool a, b;
};

Bool b_false();
Bool b_true();
Bool b_less(Expr l, Expr r);
Bool b_and(Bool a, Bool b);
Bool b_not(Bool a);
Bool b_or(Bool a, Bool b);
Bool b_le(Expr l, Expr r);
Bool b_ge(Expr l, Expr r);
Bool b_gt(Expr l, Expr r);
Bool b_eq(Expr l, Expr r);
Bool b_ne(Expr l, Expr r);

bool bool_equal(const Bool& a, const Bool& b);
void bool_names(const Bool& b, NameSet& out);

// ---------------------------------------------------------------- processes

struct ReadyItem {
    Name name;
    bool out = false;  // true: sense (v!), false: actuate (v?)
    bool operator<(const ReadyItem& o) const {
        return name.id != o.name.id ? name.id < o.name.id : out < o.out;
    }
    bool operator==(const ReadyItem& o) const { return name == o.name && out == o.out; }
};

enum class PrefixKind { Tau, Input, Output, Guard, Continuous };

struct Prefix {
    PrefixKind kind = PrefixKind::Tau;
    Name chan;                     // Input / Output
    std::vector<Name> binders;     // Input binders, or continuous continuation binders
    std::vector<Expr> payload;     // Output
    Bool cond;                     // Guard
    std::vector<Expr> init;        // Continuous
    std::vector<Name> vars;
    std::vector<Expr> field;
    Bool boundary;                 // Continuous; b_true() when omitted
    std::vector<ReadyItem> ready;
};

Prefix p_tau();
Prefix p_in(const Name& chan, std::vector<Name> binders);
Prefix p_out(const Name& chan, std::vector<Expr> payload);
Prefix p_guard(Bool cond);
Prefix p_cont(std::vector<Expr> init, std::vector<Name> vars, std::vector<Expr> field,
              Bool boundary = nullptr, std::vector<ReadyItem> ready = {},
              std::vector<Name> binders = {});

struct ProcNode;
using Proc = std::shared_ptr<const ProcNode>;

struct Branch {
    Prefix prefix;
    Proc cont;
};

struct ProcNode {
    enum class Kind { Sum, Res, Par, Rep, Call } kind = Kind::Sum;
    std::vector<Branch> branches;  // Sum
    Name name;                     // Res
    Proc left, right;              // Par (left, right), Res/Rep body in left
    std::string callee;            // Call
    std::vector<Expr> args;
};

Proc nil();
Proc mk_sum(std::vector<Branch> branches);
Proc mk_prefix(Prefix pre, Proc cont = nullptr);
Proc mk_res(const Name& n, Proc body);
Proc mk_res(const std::vector<Name>& ns, Proc body);
Proc mk_par(Proc a, Proc b);
Proc mk_par(const std::vector<Proc>& ps);
Proc mk_rep(Proc body);
Proc mk_call(std::string callee, std::vector<Expr> args);
bool is_nil(const Proc& p);

// ------------------------------------------------------------- operations

struct SyntaxError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Substitution = std::vector<std::pair<Name, Expr>>;

NameSet free_names(const Proc& p);
NameSet prefix_free_names(const Prefix& pre);
NameSet bound_names(const Proc& p);

Expr subst_expr(const Expr& e, const Substitution& s);
Bool subst_bool(const Bool& b, const Substitution& s);
// Capture-avoiding. Throws SyntaxError when a non-name lands in channel position.
Proc substitute(const Proc& p, const Substitution& s);
// Renames every binder to a fresh name (alpha-equivalent copy).
Proc freshen_binders(const Proc& p);

bool alpha_equivalent(const Proc& p, const Proc& q);
bool struct_congruent(const Proc& p, const Proc& q);
// Canonical text: ordered=true keeps sum/par order (alpha form),
// false flattens and sorts (congruence normal form).
std::string canonical(const Proc& p, bool ordered);
// Normal form representative: flattened ∥ and sorted branches.
Proc normalize(const Proc& p);

bool has_continuous(const Proc& p);
bool has_calls(const Proc& p);

}  // namespace hpc
