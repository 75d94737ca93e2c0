#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hpc/syntax.hpp"

namespace hpc {

using State = std::map<Name, double>;

struct Value {
    enum class Kind { Real, Text, Residual, Undefined } kind = Kind::Undefined;
    double real = 0.0;
    std::string text;
    Expr residual;

    static Value of(double v) { return Value{Kind::Real, v, {}, nullptr}; }
    static Value undefined() { return Value{}; }
    bool is_real() const { return kind == Kind::Real; }
};

Value eval_expr(const Expr& e, const State& s);
// Evaluates and rebuilds as an expression (constants folded, residuals kept).
// nullopt when undefined.
std::optional<Expr> fold_expr(const Expr& e, const State& s);

enum class Tri { False, True, Undefined };
Tri eval_bool(const Bool& b, const State& s);
const char* tri_name(Tri t);

// ---------------------------------------------------------------- flows

constexpr double kGlueTol = 1e-9;

struct GlueError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Flow {
    std::vector<Name> names;
    std::vector<double> grid;                  // t0 = 0 < ... < tk = duration
    std::vector<std::vector<double>> samples;  // samples[i][j]: names[j] at grid[i]
    std::vector<double> right_limit;
    std::vector<std::size_t> corners;          // inserted event points (grid indices)

    double duration() const { return grid.empty() ? 0.0 : grid.back(); }
    int index_of(const Name& n) const;
    State left() const;
    State right() const;
    std::vector<double> at(double t) const;  // piecewise-linear
    State state_at(double t) const;
};

// Constant flow; with no names it is the empty flow of length d.
Flow constant_flow(const std::vector<Name>& names, const std::vector<double>& values, double duration,
                   double step = 0.0);
Flow sample_flow(const std::vector<Name>& names, double duration, double step,
                 const std::function<std::vector<double>(double)>& fn);

Flow flow_concat(const Flow& r1, const Flow& r2);
Flow flow_restrict(const Flow& f, const NameSet& drop);
// Union over a merged grid; shared names must agree within kGlueTol.
Flow flow_union(const Flow& a, const Flow& b);

struct Contract {
    Flow assumption;
    Flow guarantee;
    bool closed() const { return assumption.names.empty(); }
};

Contract contract_compose(const Contract& c1, const Contract& c2);

using ReadySet = std::vector<ReadyItem>;  // sorted, unique
ReadySet ready_normalize(ReadySet r);
ReadySet ready_dual(const ReadySet& r);
ReadySet ready_union(const ReadySet& a, const ReadySet& b);
ReadySet ready_intersect(const ReadySet& a, const ReadySet& b);
std::string ready_text(const ReadySet& r);

bool check_ode_along(const std::vector<Name>& vars, const std::vector<Expr>& field, const Contract& c,
                     double tol = 1e-4);

// header `time,<names...>`, 17 significant digits
void write_csv(std::ostream& os, const Flow& f, const std::vector<std::string>& headers);
std::string fmt17(double v);

}  // namespace hpc
