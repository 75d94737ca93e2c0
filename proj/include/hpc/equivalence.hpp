#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hpc/simulator.hpp"

namespace hpc {

struct UnsupportedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- LTS

struct LtsEdge {
    int from = 0;
    std::string label;  // "tau", "x(1)", "x!<1>"
    int to = 0;
    bool tau = false;
};

struct Lts {
    std::vector<std::string> states;  // canonical terms up to structural congruence
    std::vector<LtsEdge> edges;
    int initial = 0;
    bool truncated = false;           // state bound or replication depth hit
    std::vector<std::string> notes;
};

struct LtsBounds {
    std::vector<Expr> universe{mk_real(0), mk_real(1)};
    int max_states = 20000;
    int rep_depth = 2;
};

// Throws UnsupportedError when p has continuous prefixes.
Lts build_lts(const Proc& p, const LtsBounds& bounds = {});

struct BisimResult {
    bool related = false;
    int blocks = 0;
    std::vector<int> block_a;  // block id per state of a
    std::vector<int> block_b;
    bool truncated = false;
};

BisimResult strong_bisim(const Lts& a, const Lts& b);
BisimResult weak_bisim(const Lts& a, const Lts& b);
// tau-saturated copy: tau edges are =>, visible edges are => a =>
Lts saturate(const Lts& l);

// ---------------------------------------------------------------- approximate

struct Observation {
    std::string left;   // variable display in p
    std::string right;  // variable display in q
};
std::vector<Observation> parse_observations(const std::string& spec);  // "x,p:q"

struct ScenarioReport {
    std::string label;
    double max_distance = 0.0;    // dense comparison over both sample grids
    double distance_a = 0.0;      // at p's segment starts
    double distance_b = 0.0;      // at the union of both sides' segment starts
    double skew = 0.0;            // end-time difference
    double end_p = 0.0, end_q = 0.0;
    std::string violation;        // empty when consistent
};

struct ApproxVerdict {
    bool refuted = false;
    double eps = 0.0, delta = 0.0;
    double max_distance = 0.0;
    double max_distance_a = 0.0;
    double max_distance_b = 0.0;
    double max_skew = 0.0;
    bool delegated_weak = false;  // both sides discrete: decided by weak_bisim
    std::string counterexample;   // scenario label and reason
    std::vector<ScenarioReport> scenarios;
    std::vector<std::string> warnings;
};

ApproxVerdict approx_bisim(const Proc& p, const Proc& q, double eps, double delta, const SimConfig& cfg,
                           const std::vector<Scenario>& scenarios, const std::vector<Observation>& observe,
                           const LtsBounds& bounds = {});

// ---------------------------------------------------------------- discretization

// mu X(y, z). [z >= delta].step(y, delta).X<y + rk4(y, delta), z - delta>
//           + [0 < z < delta].step(y, z).X<y + rk4(y, z), 0> + [z <= 0].0   @ <init, d>
// Guards carry a 1e-9*d slack. The state after the last step is the payload of the final X sync.
Proc discretize(const std::vector<Expr>& init, const std::vector<Name>& vars, const std::vector<Expr>& field,
                double d, double eps, double delta);

// max-norm difference quotient over random pairs in the box
double estimate_lipschitz(const std::vector<Name>& vars, const std::vector<Expr>& field,
                          const std::vector<double>& lo, const std::vector<double>& hi, int samples = 10000,
                          std::uint64_t seed = 1);

// 0.1 * eps * L / (exp(L d) - 1)
double suggest_delta(double lipschitz, double eps, double d);

}  // namespace hpc
