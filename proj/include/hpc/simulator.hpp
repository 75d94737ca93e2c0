#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hpc/engine.hpp"

namespace hpc {

struct Policy {
    enum class Kind { FirstEnabled, RandomSeeded, Exhaustive } kind = Kind::FirstEnabled;
    int depth = 8;  // Exhaustive: branching points explored
};
const char* policy_name(const Policy& p);

struct SimConfig {
    double horizon = 10.0;
    IntegratorConfig integrator;
    Policy policy;
    std::uint64_t seed = 0;
    int zeno_max_events = 1000;
    double zeno_window = 1.0;
    int rep_depth = 64;      // only used by tree-level exploration; the simulator unfolds on demand
    int sample_stride = 1;   // trajectory keeps every k-th integrator step
    Scenario scenario;
    std::size_t max_traces = 4096;  // Exhaustive cap
};

enum class EventKind { Tau, Sync, Sense, Actuate, Evolve, Stop, ZenoAbort, Deadlock };
const char* event_kind_name(EventKind k);

struct TraceEvent {
    double time = 0.0;
    EventKind kind = EventKind::Tau;
    std::string chan;           // channel, boundary text, ready set (Evolve) or reason (Deadlock)
    std::vector<Value> values;  // payload, state at stop, [duration] for Evolve
    std::string provenance;     // component tag(s)
    double duration = 0.0;      // Evolve
    ReadySet ready;             // Evolve
    bool grazing = false;       // Stop
};

struct TrajectorySegment {
    double start = 0.0;
    Flow flow;
    std::vector<bool> priv;
};

struct Trajectory {
    std::vector<TrajectorySegment> segments;
    double duration() const;
    // (time, value) samples of the public variable with this display text
    std::vector<std::pair<double, double>> series(const std::string& display) const;
};

enum class Termination { Horizon, Inaction, Deadlock, Zeno };
const char* termination_name(Termination t);

struct SimResult {
    std::vector<TraceEvent> trace;
    Trajectory trajectory;
    Termination termination = Termination::Horizon;
    double final_time = 0.0;
    std::string policy;
    Proc final_process;
    std::vector<std::string> diagnostics;
};

struct ZenoReport {
    bool flagged = false;
    std::size_t events = 0;       // discrete events in the densest window
    double accumulation = 0.0;    // NaN when no geometric tail is visible
};

SimResult simulate(const Proc& p, const SimConfig& cfg);
// Exhaustive policy: one result per maximal trace, bounded by cfg.max_traces.
std::vector<SimResult> simulate_all(const Proc& p, const SimConfig& cfg);

struct ClosedReport {
    bool closed = true;
    std::vector<std::string> unassumed;  // display texts
};
ClosedReport is_closed_for_evolution(const Proc& p, const Scenario* sc = nullptr);

ZenoReport detect_zeno(const std::vector<TraceEvent>& tr, const SimConfig& cfg);

void write_trace_jsonl(std::ostream& os, const std::vector<TraceEvent>& tr);
void write_trajectory_csv(std::ostream& os, const Trajectory& tj, bool all_vars = false);
std::string value_text(const Value& v);

}  // namespace hpc
