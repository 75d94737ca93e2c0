#pragma once

// Flat runtime representation used by the simulator and continuous_step.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "hpc/kernel.hpp"

namespace hpc {

// ---------------------------------------------------------------- compiled code

struct Compiled {
    enum class Ins : std::uint8_t { Const, Slot, Add, Sub, Mul, Div, Sqrt, Min, Max, Neg };
    struct Op {
        Ins ins;
        int slot = 0;
        double c = 0.0;
    };
    std::vector<Op> code;
    // Returns false on division by zero or sqrt of a negative.
    bool eval(const double* x, double& out) const;
};

struct CompiledBool {
    enum class Kind : std::uint8_t { False, Less, And, Not } kind = Kind::False;
    Compiled lhs, rhs;
    std::vector<CompiledBool> kids;
    Tri eval(const double* x) const;
    // signed distance-like margin; positive means true
    double robustness(const double* x, double& scale) const;
};

// slot lookup for a name; -1 when absent
using SlotFn = std::function<int(const Name&)>;
Compiled compile_expr(const Expr& e, const SlotFn& slot);
CompiledBool compile_bool(const Bool& b, const SlotFn& slot);

// ---------------------------------------------------------------- scenarios

// Piecewise-constant exogenous inputs (e.g. the disturbance u), keyed by global name text.
struct Scenario {
    std::string label;
    std::map<std::string, std::vector<std::pair<double, double>>> inputs;  // (start time, value), sorted
    double value(const std::string& name, double t) const;
    // first breakpoint strictly after t, or +inf
    double next_break(double t) const;
};

// ---------------------------------------------------------------- configuration

struct Comp {
    Proc proc;  // Sum or Rep
    std::string tag;
    mutable std::shared_ptr<const std::vector<Proc>> tmpl;  // Rep: flattened body sums
};

struct Config {
    std::vector<Name> restricted;
    std::vector<Comp> comps;
    std::map<std::string, int> spawns;
};

Config make_config(const Proc& p);
void flatten_into(Config& c, const Proc& p, const std::string& tag, std::vector<Comp>* out = nullptr);
Proc config_proc(const Config& c);
bool config_inert(const Config& c);  // no Sum components left
bool is_restricted(const Config& c, const Name& n);

// ---------------------------------------------------------------- discrete steps

enum class StepKind { Tau, Pass, Sync, Sense, Actuate };

struct Offer {
    int comp = -1;
    int tmpl = -1;  // index into Rep template, -1 for a plain Sum
    int branch = -1;
    int var = -1;   // continuous variable index (sense / actuate)
};

struct Step {
    StepKind kind = StepKind::Tau;
    Offer a;  // Tau/Pass: the branch. Sync-like: the input side.
    Offer b;  // Sync-like: the output side.
};

struct StepEvent {
    StepKind kind;
    std::string chan;
    std::vector<Expr> values;
    std::string provenance;
};

std::vector<Step> urgent_steps(const Config& c, std::vector<std::string>* diagnostics = nullptr);
StepEvent apply_step(Config& c, const Step& s);

// ---------------------------------------------------------------- evolution

struct StopRecord {
    std::string tag;
    std::string boundary;
    std::vector<double> state;
    bool grazing = false;
};

struct EvolveResult {
    double duration = 0.0;
    ReadySet ready;                // public part
    std::vector<StopRecord> stops;
    Flow flow;                     // all evolving variables (restricted included)
    std::vector<bool> priv;        // per flow name
    bool deadlock = false;         // nothing evolves
    bool wait_only = false;        // no ODE, every sum can wait (empty flow)
    std::vector<std::string> diagnostics;
};

ReadySet config_ready(const Config& c);  // public ready set, restricted names removed

// Boundaries already false at t = 0; continuations entered in place.
std::vector<StopRecord> zero_stops(Config& c, const Scenario* sc, double t_now);

// Raises KernelError on urgency violation, open system, undefined dynamics, overflow.
EvolveResult evolve(Config& c, double t_now, double t_end, const IntegratorConfig& cfg, const Scenario* sc,
                    int stride = 1, bool check_urgency = true);

}  // namespace hpc
