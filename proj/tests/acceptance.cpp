// Acceptance run: one PASS/FAIL line per criterion, then a rerun for determinism.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "hpc/certificate.hpp"
#include "hpc/equivalence.hpp"
#include "hpc/simulator.hpp"
#include "hpc/zoo.hpp"
#include "support.hpp"

using namespace hpc;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
    std::string digest;  // everything the criterion computed, for the rerun comparison
};

std::string hex(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", x);
    return buf;
}

std::string fixed(double x, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

bool near(double x, double want, double tol) { return std::abs(x - want) <= tol; }

std::string trace_text(const SimResult& r) {
    std::ostringstream os;
    write_trace_jsonl(os, r.trace);
    return os.str();
}

SimResult run_entry(const std::string& id, const Scenario* sc = nullptr) {
    LoadedModel m = load_model(id);
    SimConfig cfg;
    cfg.horizon = m.entry->horizon;
    if (sc) cfg.scenario = *sc;
    else if (m.entry->disturbed) cfg.scenario.inputs["u"] = {{0.0, 0.0}};
    return simulate(m.processes.at(0).entry, cfg);
}

// 1
Outcome exponential_stop() {
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    SimConfig cfg;
    cfg.horizon = 10;
    cfg.integrator.step = 1e-3;
    SimResult r = simulate(parse_process("{1 | v' = v & v < 5}(y) . out!<y>"), cfg);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    double stop = NAN, cont = NAN;
    for (auto& e : r.trace)
        if (e.kind == EventKind::Stop) {
            stop = e.time;
            if (!e.values.empty()) cont = e.values[0].real;
        }
    if (r.final_process && r.final_process->kind == ProcNode::Kind::Sum && !r.final_process->branches.empty()) {
        const Prefix& out = r.final_process->branches[0].prefix;
        if (out.kind == PrefixKind::Output && !out.payload.empty() && out.payload[0]->kind == ExprNode::Kind::Real)
            cont = out.payload[0]->real;
    }
    o.pass = near(stop, std::log(5.0), 1e-3) && near(cont, 5.0, 1e-3) && secs < 1.0;
    o.detail = "stop t=" + fixed(stop) + " s, continuation v=" + fixed(cont) + ", " + fixed(secs, 3) + " s";
    o.digest = hex(stop) + hex(cont) + trace_text(r);
    return o;
}

// 2
Outcome bouncing_ball() {
    Outcome o;
    SimResult r = run_entry("ball");
    double first_stop = NAN, bounce_v = NAN;
    for (auto& e : r.trace) {
        if (e.kind == EventKind::Stop && std::isnan(first_stop)) first_stop = e.time;
        if (e.kind == EventKind::Actuate && e.chan == "v" && std::isnan(bounce_v)) bounce_v = e.values.at(0).real;
    }
    ZenoReport z = detect_zeno(r.trace, SimConfig{});
    o.pass = near(first_stop, 1.0102, 2e-3) && near(bounce_v, 7.920, 2e-2) && z.flagged && near(z.accumulation, 9.09, 0.05);
    o.detail = "first stop t=" + fixed(first_stop) + " s, bounce v=" + fixed(bounce_v, 4) + " m/s, Zeno " +
               (z.flagged ? "at " + fixed(z.accumulation, 4) + " s" : std::string("not flagged"));
    o.digest = hex(first_stop) + hex(bounce_v) + hex(z.accumulation) + trace_text(r);
    return o;
}

// 3
Outcome urgency() {
    Outcome o;
    SimConfig cfg;
    cfg.horizon = 3;
    SimResult r = simulate(parse_process("x(y) . a!<y> || x!<1> . b!<> || new c . {0 | c' = 1 & c < 2}"), cfg);
    bool synced = false, evolved_while_matched = false;
    for (auto& e : r.trace) {
        if (e.kind == EventKind::Sync && e.chan == "x") synced = true;
        if (e.kind == EventKind::Evolve && !synced) evolved_while_matched = true;
    }
    bool first_is_sync = !r.trace.empty() && r.trace[0].kind == EventKind::Sync && r.trace[0].time == 0.0;
    o.pass = synced && first_is_sync && !evolved_while_matched;
    o.detail = std::string("sync on x at t=0: ") + (first_is_sync ? "yes" : "no") +
               ", evolve while matched: " + (evolved_while_matched ? "yes" : "no");
    o.digest = trace_text(r);
    return o;
}

std::string suite_digest(const testsupport::SuiteStats& s) {
    std::string d = std::to_string(s.checks) + "/" + std::to_string(s.failures) + "/" + std::to_string(s.oracle_disagreements);
    for (auto& f : s.failed) d += f;
    return d;
}

// 4
Outcome law_suite() {
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    auto s = testsupport::strong_law_suite(200, 7);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.pass = s.terms >= 200 && s.failures == 0 && s.oracle_disagreements == 0 && secs < 60.0;
    o.detail = std::to_string(s.terms) + " terms, " + std::to_string(s.checks) + " checks, " + std::to_string(s.failures) +
               " failures, " + fixed(secs, 2) + " s";
    if (!s.failed.empty()) o.detail += "; first: " + s.failed[0];
    o.digest = suite_digest(s);
    return o;
}

// 5
Outcome congruence() {
    Outcome o;
    auto s = testsupport::congruence_suite(50, 11);
    o.pass = s.terms >= 50 && s.failures == 0 && s.oracle_disagreements == 0;
    o.detail = std::to_string(s.terms) + " pairs, " + std::to_string(s.checks) + " contexts, " + std::to_string(s.failures) +
               " failures";
    if (!s.failed.empty()) o.detail += "; first: " + s.failed[0];
    o.digest = suite_digest(s);
    return o;
}

// 6
Outcome chopping() {
    Outcome o;
    auto wait = [](double d) {
        return "new c . {0 | c' = 1 & c < " + fixed(d, 1) + "}";
    };
    Proc w3 = parse_process(wait(3) + " . done!<>");
    Proc chopped = parse_process(wait(1) + " . tau . " + wait(1) + " . tau . tau . " + wait(1) + " . done!<>");
    Proc w2 = parse_process(wait(2) + " . done!<>");
    SimConfig cfg;
    cfg.horizon = 10;
    ApproxVerdict same = approx_bisim(w3, chopped, 0.0, 0.0, cfg, {}, {});
    ApproxVerdict diff = approx_bisim(w3, w2, 0.0, 0.0, cfg, {}, {});
    o.pass = !same.refuted && diff.refuted;
    o.detail = std::string("wait(3) vs chopped: ") + (same.refuted ? "refuted (" + same.counterexample + ")" : "consistent") +
               "; wait(3) vs wait(2): " + (diff.refuted ? "refuted (" + diff.counterexample + ")" : "consistent");
    o.digest = hex(same.max_skew) + hex(diff.max_skew) + same.counterexample + diff.counterexample;
    return o;
}

double discrete_endpoint(double delta) {
    Name v = global_name("v");
    Proc disc = discretize({mk_real(1)}, {v}, {mk_var(v)}, 1.0, 1e-3, delta);
    SimConfig cfg;
    cfg.horizon = 2.01;
    cfg.zeno_max_events = std::max(cfg.zeno_max_events, 4 * static_cast<int>(std::ceil(1.0 / delta)) + 100);
    SimResult r = simulate(disc, cfg);
    double end = NAN;
    for (auto& e : r.trace)
        if (e.kind == EventKind::Sync && e.values.size() == 2) end = e.values[0].real;
    return end;
}

// 7
Outcome discretization() {
    Outcome o;
    double e1 = std::abs(discrete_endpoint(0.1) - std::exp(1.0));
    double e2 = std::abs(discrete_endpoint(0.05) - std::exp(1.0));
    double e3 = std::abs(discrete_endpoint(0.025) - std::exp(1.0));
    o.pass = e1 <= 1e-3 && e1 / e2 >= 12.0 && e2 / e3 >= 12.0;
    char buf[160];
    std::snprintf(buf, sizeof buf, "|v-e| = %.3e at 0.1, %.3e at 0.05, %.3e at 0.025 (ratios %.1f, %.1f)", e1, e2, e3,
                  e1 / e2, e2 / e3);
    o.detail = buf;
    o.digest = hex(e1) + hex(e2) + hex(e3);
    return o;
}

// 8
Outcome spec_kinematics() {
    Outcome o;
    LoadedModel m = load_model("spec-system");
    SimConfig cfg;
    cfg.horizon = m.entry->horizon;
    SimResult r = simulate(m.processes.at(0).entry, cfg);
    auto p = testsupport::any_series(r.trajectory, "p"), v = testsupport::any_series(r.trajectory, "v");
    double t_top = NAN, p_top = NAN;
    for (auto& [t, x] : v)
        if (x >= 40.0 - 1e-9) {
            t_top = t;
            break;
        }
    for (auto& [t, x] : p)
        if (t <= t_top + 1e-9) p_top = x;
    double t_end = p.empty() ? NAN : p.back().first, p_end = p.empty() ? NAN : p.back().second;
    o.pass = near(t_top, 40, 0.5) && near(p_top, 800, 2) && near(p_end, 10000, 2) && near(t_end, 290, 0.5);
    o.detail = "v=40 at t=" + fixed(t_top, 3) + " s, p=" + fixed(p_top, 3) + " m; stop p=" + fixed(p_end, 3) + " m at t=" +
               fixed(t_end, 3) + " s";
    o.digest = trace_text(r);
    return o;
}

ApproxVerdict co_simulate(const std::string& id) {
    LoadedModel m = load_model(id);
    SimConfig cfg;
    cfg.horizon = m.entry->horizon;
    return approx_bisim(m.processes.at(0).entry, m.processes.at(1).entry, m.entry->eps, m.entry->delta, cfg,
                        disturbance_scenarios(cfg.horizon), parse_observations(m.entry->observe));
}

std::string verdict_digest(const ApproxVerdict& v) {
    std::string d = v.counterexample;
    for (auto& s : v.scenarios) d += s.label + hex(s.max_distance) + hex(s.skew) + s.violation;
    return d;
}

// 9
Outcome prop_spec_system() {
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    ApproxVerdict v = co_simulate("spec-system");
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    double worst_const = 0.0, worst_all = 0.0;
    std::string worst_label;
    bool all_within = v.scenarios.size() == 23;
    for (auto& s : v.scenarios) {
        all_within = all_within && s.max_distance <= 400.0;
        worst_all = std::max(worst_all, s.max_distance);
        if (s.label.rfind("u=", 0) == 0 && s.max_distance > worst_const) {
            worst_const = s.max_distance;
            worst_label = s.label;
        }
    }
    o.pass = all_within && worst_const >= 120.0 && worst_const <= 280.0 && secs < 30.0;
    o.detail = std::to_string(v.scenarios.size()) + " scenarios, max |x1-x2| = " + fixed(worst_all, 2) +
               " m, worst constant (" + worst_label + ") " + fixed(worst_const, 2) + " m, " + fixed(secs, 2) + " s";
    o.digest = verdict_digest(v);
    return o;
}

// 10
Outcome prop_failed_handover() {
    Outcome o;
    ApproxVerdict v = co_simulate("spec-system-failed");
    double final_p = -INFINITY;
    std::string digest;
    for (auto& sc : disturbance_scenarios(find_model("spec-system-failed").horizon)) {
        LoadedModel m = load_model("spec-system-failed");
        SimConfig cfg;
        cfg.horizon = m.entry->horizon;
        cfg.scenario = sc;
        SimResult r = simulate(m.processes.at(1).entry, cfg);
        auto p = testsupport::any_series(r.trajectory, "p");
        if (!p.empty()) final_p = std::max(final_p, p.back().second);
        digest += hex(p.empty() ? NAN : p.back().second);
    }
    o.pass = v.scenarios.size() == 23 && v.max_distance <= 300.0 && final_p <= 5002.0;
    o.detail = "max distance " + fixed(v.max_distance, 2) + " m over " + std::to_string(v.scenarios.size()) +
               " scenarios, largest final System' position " + fixed(final_p, 2) + " m";
    o.digest = verdict_digest(v) + digest;
    return o;
}

// 11
Outcome certificate() {
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    LoadedModel m = load_model("composed-automaton-H");
    HybridAutomaton h = automaton_from_json(m.automaton);
    BarrierCertificate c = certificate_from_json(m.certificate, h);
    std::vector<double> zero(h.coords.size(), 0.0);
    double phi0 = c.phi.at(0).eval(zero);
    CheckConfig cfg;
    cfg.samples = 100000;
    CertReport r = check_certificate(h, c, cfg);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool witnessed = true;
    int violated = 0;
    std::string margins;
    for (auto& cond : r.conditions) {
        if (cond.violations > 0) {
            ++violated;
            witnessed = witnessed && cond.witness.size() == h.coords.size();
        }
        if (!margins.empty()) margins += ", ";
        margins += cond.condition + "@" + cond.where + " " + fixed(cond.min_margin, 3);
    }
    bool box_ok = h.lo.size() == 9 && h.lo[0] == 0 && h.hi[0] == 10100 && h.lo[1] == -1 && h.hi[1] == 41 &&
                  h.lo[2] == -1.2 && h.hi[2] == 1.2 && h.lo[3] == 0 && h.hi[3] == 1.1 && h.lo[8] == -0.1 && h.hi[8] == 0.1;
    o.pass = phi0 == -0.409 && c.lambda.at(0) == 0.25 && box_ok && witnessed && secs < 60.0;
    o.detail = "phi(0) = " + fixed(phi0, 5) + "; " + std::to_string(violated) + " of " + std::to_string(r.conditions.size()) +
               " condition checks violated, all with witnesses; " + fixed(secs, 2) + " s; margins: " + margins;
    o.digest = report_json(r).dump();
    return o;
}

int sector_of(const std::string& tag) {
    auto k = tag.rfind('#');
    return k == std::string::npos ? 0 : std::stoi(tag.substr(k + 1));
}

// 12
Outcome mobility() {
    Outcome o;
    SimResult r = run_entry("handover-network");
    int sector = 1, handovers = 0, misplaced = 0, sensed = 0;
    for (auto& e : r.trace) {
        if (e.kind == EventKind::Sync && (e.chan == "ch1" || e.chan == "ch2")) {
            ++handovers;
            ++sector;
            if (sector_of(e.provenance.substr(e.provenance.find("->") + 2)) != sector) ++misplaced;
        }
        if ((e.kind == EventKind::Sense || e.kind == EventKind::Actuate) && (e.chan == "p" || e.chan == "v" || e.chan == "a")) {
            ++sensed;
            if (sector_of(e.provenance) != sector) ++misplaced;
        }
    }
    auto p = testsupport::any_series(r.trajectory, "p");
    double last_p = p.empty() ? NAN : p.back().second;
    o.pass = handovers == 2 && misplaced == 0 && sensed > 0 && near(last_p, 15000, 5);
    o.detail = std::to_string(handovers) + " handovers, " + std::to_string(sensed) + " sense/actuate events, " +
               std::to_string(misplaced) + " out of sector; final p=" + fixed(last_p, 2) + " m";
    o.digest = trace_text(r);
    return o;
}

struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
};

}  // namespace

int main() {
    std::vector<Criterion> all = {
        {1, "exponential evolution stops at ln 5", exponential_stop},
        {2, "bouncing ball", bouncing_ball},
        {3, "urgency of matched communication", urgency},
        {4, "strong bisimilarity laws", law_suite},
        {5, "congruence spot checks", congruence},
        {6, "weak chopping of waits", chopping},
        {7, "discretization endpoint and order", discretization},
        {8, "SPEC kinematics", spec_kinematics},
        {9, "SPEC vs System under disturbance", prop_spec_system},
        {10, "SPEC' vs System' with refused handover", prop_failed_handover},
        {11, "barrier certificate on H", certificate},
        {12, "mobility across the handover network", mobility},
    };
    int failed = 0;
    std::vector<std::string> digests;
    for (auto& c : all) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        digests.push_back(o.digest);
        failed += !o.pass;
        std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
        std::fflush(stdout);
    }

    int drift = 0;
    std::string which;
    for (std::size_t i = 0; i < all.size(); ++i) {
        std::string again;
        try {
            again = all[i].run().digest;
        } catch (const std::exception& e) {
            again = std::string("exception: ") + e.what();
        }
        if (again != digests[i] || digests[i].empty()) {
            ++drift;
            which += " " + std::to_string(all[i].id);
        }
    }
    bool det = drift == 0;
    failed += !det;
    std::printf("%s 13 determinism: %s\n", det ? "PASS" : "FAIL",
                det ? "all criteria reran bitwise-identically" : ("differing reruns:" + which).c_str());
    return failed == 0 ? 0 : 1;
}
