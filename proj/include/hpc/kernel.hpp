#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hpc/syntax.hpp"
#include "hpc/valuation.hpp"

namespace hpc {

struct IntegratorConfig {
    double step = 1e-3;
    double event_tol = 1e-9;
    long long max_substeps = 200'000'000;
};

struct KernelError : std::runtime_error {
    enum class Kind { UrgencyViolation, OpenSystem, UndefinedDynamics, StepOverflow, GuaranteeOverlap, Arity };
    Kind kind;
    KernelError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};
const char* kernel_error_name(KernelError::Kind k);

// ---------------------------------------------------------------- agents

struct Agent;
using AgentPtr = std::shared_ptr<const Agent>;

// Proc / Abs / Conc are normal forms; Res / ParL / ParR are the ion-law redexes.
struct Agent {
    enum class Kind { Proc, Abs, Conc, Res, ParL, ParR } kind = Kind::Proc;
    std::vector<Name> names;   // Abs binders, Conc restricted names
    std::vector<Expr> payload; // Conc
    Proc body;
    Name res;                  // Res
    AgentPtr inner;            // Res / ParL / ParR
    Proc partner;              // ParL: inner || partner, ParR: partner || inner
};

Agent agent_proc(Proc p);
Agent agent_abs(std::vector<Name> binders, Proc body);
Agent agent_conc(std::vector<Name> restricted, std::vector<Expr> payload, Proc body);
Agent agent_res(const Name& y, Agent a);
Agent agent_par_left(Agent a, Proc q);
Agent agent_par_right(Proc q, Agent a);

Agent ion_normalize(const Agent& a);
// (x).P @ (nu y)<e>.Q = (nu y)(P{e/x} || Q); either argument order.
Proc apply(const Agent& f, const Agent& c);

struct DiscreteLabel {
    enum class Kind { Tau, In, Out } kind = Kind::Tau;
    Name chan;
    bool operator==(const DiscreteLabel& o) const { return kind == o.kind && (kind == Kind::Tau || chan == o.chan); }
};
std::string label_text(const DiscreteLabel& l);

struct Transition {
    DiscreteLabel label;
    Agent agent;  // normalised
};

struct TransitionSet {
    std::vector<Transition> items;
    bool truncated = false;
    std::vector<std::string> diagnostics;
};

TransitionSet discrete_transitions(const Proc& p, int depth = 64);

// ---------------------------------------------------------------- continuous

struct ContinuousLabel {
    Contract flow;
    ReadySet ready;
    bool stopped = false;
};

// Zero-duration stops are taken first, then the system evolves up to horizon
// or the first boundary stop.
std::pair<ContinuousLabel, Proc> continuous_step(const Proc& p, double horizon, const IntegratorConfig& cfg = {});

ReadySet ready_set(const Proc& p);

}  // namespace hpc
