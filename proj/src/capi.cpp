#include "hpc/hpc_c.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "hpc/certificate.hpp"
#include "hpc/equivalence.hpp"
#include "hpc/kernel.hpp"
#include "hpc/parser.hpp"
#include "hpc/simulator.hpp"
#include "hpc/zoo.hpp"

struct hpc_model {
    hpc::ModelFile file;
};

namespace {

using nlohmann::json;
using namespace hpc;

thread_local std::string g_error;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

char* dup(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p) throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

void put(char** out, const std::string& s) {
    if (out) *out = dup(s);
}

template <class F>
int guarded(F&& f) {
    g_error.clear();
    try {
        return f();
    } catch (const ParseError& e) {
        g_error = std::string("parse error: ") + e.what();
        return HPC_EPARSE;
    } catch (const NotFoundError& e) {
        g_error = e.what();
        return HPC_ENOTFOUND;
    } catch (const KernelError& e) {
        g_error = std::string(kernel_error_name(e.kind)) + ": " + e.what();
        return HPC_EMODEL;
    } catch (const UnsupportedError& e) {
        g_error = std::string("unsupported: ") + e.what();
        return HPC_EMODEL;
    } catch (const CertError& e) {
        g_error = std::string("certificate: ") + e.what();
        return HPC_EMODEL;
    } catch (const SyntaxError& e) {
        g_error = std::string("syntax: ") + e.what();
        return HPC_EMODEL;
    } catch (const UsageError& e) {
        g_error = e.what();
        return HPC_EUSAGE;
    } catch (const json::exception& e) {
        g_error = std::string("bad JSON: ") + e.what();
        return HPC_EUSAGE;
    } catch (const std::invalid_argument& e) {
        g_error = e.what();
        return HPC_EUSAGE;
    } catch (const std::domain_error& e) {
        g_error = e.what();
        return HPC_EUSAGE;
    } catch (const std::exception& e) {
        g_error = std::string("internal: ") + e.what();
        return HPC_EINTERNAL;
    } catch (...) {
        g_error = "internal: unknown exception";
        return HPC_EINTERNAL;
    }
}

json parse_config(const char* text, std::initializer_list<const char*> allowed) {
    if (!text || !*text) return json::object();
    json j = json::parse(text);
    if (!j.is_object()) throw UsageError("config must be a JSON object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto& [k, v] : j.items())
        if (!ok.count(k)) throw UsageError("unknown config key '" + k + "'");
    return j;
}

void need_model(const hpc_model* m) {
    if (!m) throw UsageError("null model handle");
}

Scenario scenario_from_json(const json& j) {
    Scenario s;
    s.label = j.value("label", std::string("scenario"));
    if (j.contains("inputs"))
        for (auto& [name, pieces] : j.at("inputs").items()) {
            auto& v = s.inputs[name];
            if (pieces.is_number()) {
                v.emplace_back(0.0, pieces.get<double>());
                continue;
            }
            for (auto& pc : pieces) {
                double t = pc.at(0).get<double>(), x = pc.at(1).get<double>();
                if (!v.empty() && !(t > v.back().first))
                    throw UsageError("scenario '" + s.label + "': input '" + name + "' breakpoints must increase");
                v.emplace_back(t, x);
            }
        }
    return s;
}

json scenario_json(const Scenario& s) {
    json in = json::object();
    for (auto& [name, pieces] : s.inputs) {
        json a = json::array();
        for (auto& [t, x] : pieces) a.push_back({t, x});
        in[name] = a;
    }
    return {{"label", s.label}, {"inputs", in}};
}

const std::initializer_list<const char*> kSimKeys = {"horizon", "step", "event_tol", "seed", "policy", "depth",
                                                     "zeno_max_events", "zeno_window", "sample_stride",
                                                     "max_traces", "all_vars", "scenario"};

SimConfig sim_config(const json& j) {
    SimConfig c;
    c.horizon = j.value("horizon", c.horizon);
    c.integrator.step = j.value("step", c.integrator.step);
    c.integrator.event_tol = j.value("event_tol", c.integrator.event_tol);
    c.seed = j.value("seed", c.seed);
    std::string pol = j.value("policy", std::string("first"));
    if (pol == "first") c.policy.kind = Policy::Kind::FirstEnabled;
    else if (pol == "random") c.policy.kind = Policy::Kind::RandomSeeded;
    else if (pol == "exhaustive") c.policy.kind = Policy::Kind::Exhaustive;
    else throw UsageError("policy must be first, random or exhaustive");
    c.policy.depth = j.value("depth", c.policy.depth);
    c.zeno_max_events = j.value("zeno_max_events", c.zeno_max_events);
    c.zeno_window = j.value("zeno_window", c.zeno_window);
    c.sample_stride = j.value("sample_stride", c.sample_stride);
    c.max_traces = j.value("max_traces", c.max_traces);
    if (!(c.horizon > 0.0)) throw UsageError("horizon must be positive");
    if (!(c.integrator.step > 0.0)) throw UsageError("step must be positive");
    if (c.sample_stride < 1) throw UsageError("sample_stride must be at least 1");
    if (j.contains("scenario")) c.scenario = scenario_from_json(j.at("scenario"));
    return c;
}

json result_summary(const SimResult& r, const SimConfig& cfg) {
    json j;
    j["termination"] = termination_name(r.termination);
    j["final_time"] = r.final_time;
    j["policy"] = r.policy;
    j["events"] = r.trace.size();
    j["diagnostics"] = r.diagnostics;
    ZenoReport z = detect_zeno(r.trace, cfg);
    j["zeno"] = {{"flagged", z.flagged}, {"events_in_window", z.events},
                 {"accumulation", std::isfinite(z.accumulation) ? json(z.accumulation) : json(nullptr)}};
    return j;
}

LtsBounds lts_bounds(const json& j) {
    LtsBounds b;
    if (j.contains("universe")) {
        b.universe.clear();
        for (auto& v : j.at("universe")) b.universe.push_back(v.is_number() ? mk_real(v.get<double>()) : mk_text(v.get<std::string>()));
    }
    b.max_states = j.value("max_states", b.max_states);
    b.rep_depth = j.value("depth", b.rep_depth);
    if (b.max_states < 1 || b.rep_depth < 0) throw UsageError("max_states must be positive and depth non-negative");
    return b;
}

json lts_json(const Lts& l) {
    json edges = json::array();
    for (auto& e : l.edges) edges.push_back({{"from", e.from}, {"label", e.label}, {"to", e.to}});
    return {{"states", l.states}, {"edges", edges}, {"initial", l.initial}, {"truncated", l.truncated}, {"notes", l.notes}};
}

const Prefix& leading_continuous(const Proc& p) {
    if (p->kind == ProcNode::Kind::Sum && p->branches.size() == 1 &&
        p->branches[0].prefix.kind == PrefixKind::Continuous)
        return p->branches[0].prefix;
    throw UsageError("discretize needs a process that is a single continuous prefix");
}

}  // namespace

extern "C" {

const char* hpc_version(void) { return "1.0.0"; }

const char* hpc_last_error(void) { return g_error.c_str(); }

void hpc_free_string(char* s) { std::free(s); }

int hpc_model_parse(const char* text, hpc_model** out) {
    return guarded([&] {
        if (!text || !out) throw UsageError("null argument");
        auto m = std::make_unique<hpc_model>();
        m->file = parse_model(text);
        *out = m.release();
        return HPC_OK;
    });
}

int hpc_model_load_file(const char* path, hpc_model** out) {
    int rc = guarded([&] {
        if (!path || !out) throw UsageError("null argument");
        std::ifstream f(path, std::ios::binary);
        if (!f) {
            g_error = std::string("cannot read '") + path + "'";
            return HPC_EIO;
        }
        std::stringstream ss;
        ss << f.rdbuf();
        auto m = std::make_unique<hpc_model>();
        m->file = parse_model(ss.str());
        *out = m.release();
        return HPC_OK;
    });
    if (rc == HPC_EPARSE && path) g_error = std::string(path) + ": " + g_error;
    return rc;
}

int hpc_model_load_zoo(const char* id, int index, hpc_model** out) {
    return guarded([&] {
        if (!id || !out) throw UsageError("null argument");
        const ModelEntry& e = find_model(id);
        if (e.kind == ModelEntry::Kind::Automaton) throw UsageError(std::string("'") + id + "' is an automaton, not a process");
        if (index < 0 || static_cast<size_t>(index) >= e.files.size())
            throw UsageError("zoo entry '" + e.id + "' has " + std::to_string(e.files.size()) + " file(s)");
        auto m = std::make_unique<hpc_model>();
        m->file = parse_model(model_text(e.files[static_cast<size_t>(index)]));
        *out = m.release();
        return HPC_OK;
    });
}

void hpc_model_free(hpc_model* m) { delete m; }

int hpc_model_ast_json(const hpc_model* m, char** out) {
    return guarded([&] {
        need_model(m);
        put(out, ast_json(m->file).dump(2));
        return HPC_OK;
    });
}

int hpc_model_pretty(const hpc_model* m, char** out) {
    return guarded([&] {
        need_model(m);
        put(out, pretty(m->file.entry));
        return HPC_OK;
    });
}

int hpc_simulate(const hpc_model* m, const char* config, char** trace_jsonl, char** trajectory_csv, char** summary) {
    return guarded([&] {
        need_model(m);
        json cj = parse_config(config, kSimKeys);
        SimConfig cfg = sim_config(cj);
        bool all_vars = cj.value("all_vars", false);
        if (cfg.policy.kind == Policy::Kind::Exhaustive) {
            auto all = simulate_all(m->file.entry, cfg);
            json traces = json::array();
            std::ostringstream first_trace, first_csv;
            for (size_t i = 0; i < all.size(); ++i) {
                std::ostringstream tr;
                write_trace_jsonl(tr, all[i].trace);
                json s = result_summary(all[i], cfg);
                s["trace"] = tr.str();
                traces.push_back(s);
            }
            if (!all.empty()) {
                write_trace_jsonl(first_trace, all[0].trace);
                write_trajectory_csv(first_csv, all[0].trajectory, all_vars);
            }
            put(trace_jsonl, first_trace.str());
            put(trajectory_csv, first_csv.str());
            put(summary, json{{"policy", "exhaustive"}, {"count", all.size()}, {"traces", traces}}.dump(2));
            return HPC_OK;
        }
        SimResult r = simulate(m->file.entry, cfg);
        if (trace_jsonl) {
            std::ostringstream os;
            write_trace_jsonl(os, r.trace);
            put(trace_jsonl, os.str());
        }
        if (trajectory_csv) {
            std::ostringstream os;
            write_trajectory_csv(os, r.trajectory, all_vars);
            put(trajectory_csv, os.str());
        }
        json s = result_summary(r, cfg);
        s["seed"] = cfg.seed;
        put(summary, s.dump(2));
        return HPC_OK;
    });
}

int hpc_lts(const hpc_model* m, const char* config, char** out_json) {
    return guarded([&] {
        need_model(m);
        json cj = parse_config(config, {"universe", "max_states", "depth"});
        Lts l = build_lts(m->file.entry, lts_bounds(cj));
        put(out_json, lts_json(l).dump(2));
        return HPC_OK;
    });
}

int hpc_bisim(const hpc_model* a, const hpc_model* b, const char* mode, const char* config, char** out_json) {
    return guarded([&] {
        need_model(a);
        need_model(b);
        std::string md = mode ? mode : "strong";
        if (md != "strong" && md != "weak") throw UsageError("mode must be strong or weak");
        json cj = parse_config(config, {"universe", "max_states", "depth"});
        LtsBounds bounds = lts_bounds(cj);
        Lts la = build_lts(a->file.entry, bounds), lb = build_lts(b->file.entry, bounds);
        BisimResult r = md == "strong" ? strong_bisim(la, lb) : weak_bisim(la, lb);
        json j{{"mode", md},           {"related", r.related},        {"blocks", r.blocks},
               {"states_a", la.states.size()}, {"states_b", lb.states.size()}, {"truncated", r.truncated}};
        put(out_json, j.dump(2));
        return r.related ? HPC_OK : HPC_REFUTED;
    });
}

int hpc_approx(const hpc_model* a, const hpc_model* b, double eps, double delta, const char* config, char** out_json) {
    return guarded([&] {
        need_model(a);
        need_model(b);
        std::initializer_list<const char*> keys = {"horizon", "step", "event_tol", "seed", "policy", "depth",
                                                   "zeno_max_events", "zeno_window", "sample_stride", "max_traces",
                                                   "scenario", "scenarios", "observe", "universe", "max_states"};
        json cj = parse_config(config, keys);
        if (!(eps >= 0.0) || !(delta >= 0.0)) throw UsageError("eps and delta must be non-negative");
        SimConfig cfg = sim_config(cj);
        std::vector<Scenario> scs;
        if (cj.contains("scenarios"))
            for (auto& s : cj.at("scenarios")) scs.push_back(scenario_from_json(s));
        std::vector<Observation> obs;
        if (cj.contains("observe")) obs = parse_observations(cj.at("observe").get<std::string>());
        LtsBounds bounds = lts_bounds(json{{"universe", cj.value("universe", json::array({0, 1}))},
                                           {"max_states", cj.value("max_states", 20000)}});
        std::vector<std::string> held;
        if (scs.empty() && !cj.contains("scenario")) {
            std::set<std::string> open;
            for (const hpc_model* m : {a, b})
                for (auto& n : is_closed_for_evolution(m->file.entry).unassumed) open.insert(n);
            for (auto& n : open) {
                cfg.scenario.inputs[n] = {{0.0, 0.0}};
                held.push_back("no scenario given; holding unassumed '" + n + "' at 0");
            }
            if (!open.empty()) cfg.scenario.label = "held-at-0";
        }
        ApproxVerdict v = approx_bisim(a->file.entry, b->file.entry, eps, delta, cfg, scs, obs, bounds);
        v.warnings.insert(v.warnings.begin(), held.begin(), held.end());
        json reps = json::array();
        for (auto& s : v.scenarios)
            reps.push_back({{"label", s.label},          {"max_distance", s.max_distance}, {"distance_a", s.distance_a},
                            {"distance_b", s.distance_b}, {"skew", s.skew},                 {"end_p", s.end_p},
                            {"end_q", s.end_q},           {"violation", s.violation}});
        json j{{"refuted", v.refuted},
               {"eps", v.eps},
               {"delta", v.delta},
               {"max_distance", v.max_distance},
               {"max_distance_a", v.max_distance_a},
               {"max_distance_b", v.max_distance_b},
               {"max_skew", v.max_skew},
               {"delegated_weak", v.delegated_weak},
               {"counterexample", v.counterexample},
               {"scenarios", reps},
               {"warnings", v.warnings}};
        put(out_json, j.dump(2));
        return v.refuted ? HPC_REFUTED : HPC_OK;
    });
}

int hpc_discretize(const hpc_model* m, double eps, double duration, const char* config, char** out_json) {
    return guarded([&] {
        need_model(m);
        json cj = parse_config(config, {"delta", "simulate", "step", "samples", "seed"});
        if (!(eps > 0.0) || !(duration > 0.0)) throw UsageError("eps and duration must be positive");
        const Prefix& pre = leading_continuous(m->file.entry);
        std::vector<Expr> init;
        for (auto& e : pre.init) {
            auto f = fold_expr(e, {});
            if (!f || (*f)->kind != ExprNode::Kind::Real) throw UsageError("initial values must be closed reals");
            init.push_back(*f);
        }
        double step = cj.value("step", 1e-3);

        // reference run of the ODE without its boundary, also used to size the Lipschitz box
        SimConfig ref_cfg;
        ref_cfg.horizon = duration;
        ref_cfg.integrator.step = step;
        Proc ode = mk_prefix(p_cont(init, pre.vars, pre.field));
        SimResult ref = simulate(ode, ref_cfg);
        std::size_t n = pre.vars.size();
        std::vector<double> lo(n, std::numeric_limits<double>::infinity()), hi(n, -lo[0]), ref_end(n, NAN);
        for (auto& seg : ref.trajectory.segments)
            for (std::size_t i = 0; i < n; ++i) {
                int k = seg.flow.index_of(pre.vars[i]);
                if (k < 0) continue;
                for (auto& row : seg.flow.samples) {
                    lo[i] = std::min(lo[i], row[static_cast<size_t>(k)]);
                    hi[i] = std::max(hi[i], row[static_cast<size_t>(k)]);
                }
                ref_end[i] = seg.flow.right_limit[static_cast<size_t>(k)];
            }
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(lo[i])) throw UsageError("reference run produced no samples");
            double pad = 0.1 * (hi[i] - lo[i]) + 1e-3;
            lo[i] -= pad;
            hi[i] += pad;
        }
        double lip = estimate_lipschitz(pre.vars, pre.field, lo, hi, cj.value("samples", 10000), cj.value("seed", 1));
        double delta = cj.contains("delta") ? cj.at("delta").get<double>() : suggest_delta(lip, eps, duration);
        Proc disc = discretize(init, pre.vars, pre.field, duration, eps, delta);
        json j{{"delta", delta}, {"lipschitz", lip}, {"term", pretty(disc)}};
        json box = json::object();
        for (std::size_t i = 0; i < n; ++i) box[pre.vars[i].display] = {lo[i], hi[i]};
        j["box"] = box;
        if (cj.value("simulate", true)) {
            SimConfig dc;
            dc.horizon = duration * 1.01 + 1.0;  // the recursion halts on its own
            dc.integrator.step = step;
            dc.zeno_max_events = std::max(dc.zeno_max_events, 4 * static_cast<int>(std::ceil(duration / delta)) + 100);
            SimResult dr = simulate(disc, dc);
            std::vector<double> end;
            for (auto& e : dr.trace)
                if (e.kind == EventKind::Sync && e.values.size() == n + 1) {
                    end.clear();
                    for (std::size_t i = 0; i < n; ++i) end.push_back(e.values[i].is_real() ? e.values[i].real : NAN);
                }
            double err = 0.0;
            json ends = json::object(), refs = json::object();
            for (std::size_t i = 0; i < n && i < end.size(); ++i) {
                err = std::max(err, std::abs(end[i] - ref_end[i]));
                ends[pre.vars[i].display] = end[i];
                refs[pre.vars[i].display] = ref_end[i];
            }
            j["endpoint"] = ends;
            j["reference"] = refs;
            j["endpoint_error"] = err;
            j["within_eps"] = err <= eps;
            j["termination"] = termination_name(dr.termination);
        }
        put(out_json, j.dump(2));
        return HPC_OK;
    });
}

int hpc_certcheck(const char* automaton_json, const char* certificate_json, const char* config, char** out_json) {
    return guarded([&] {
        if (!automaton_json || !certificate_json) throw UsageError("null argument");
        json cj = parse_config(config, {"samples", "tol", "max_attempts_factor"});
        CheckConfig cc;
        cc.samples = cj.value("samples", cc.samples);
        cc.tol = cj.value("tol", cc.tol);
        cc.max_attempts_factor = cj.value("max_attempts_factor", cc.max_attempts_factor);
        if (cc.samples < 1 || cc.max_attempts_factor < 1 || !(cc.tol >= 0.0))
            throw UsageError("samples and max_attempts_factor must be positive, tol non-negative");
        HybridAutomaton h = automaton_from_json(json::parse(automaton_json));
        BarrierCertificate c = certificate_from_json(json::parse(certificate_json), h);
        CertReport r = check_certificate(h, c, cc);
        json j = report_json(r);
        j["omega"] = invariant_region(h, c);
        put(out_json, j.dump(2));
        return r.violated ? HPC_REFUTED : HPC_OK;
    });
}

int hpc_zoo_list(char** out_json) {
    return guarded([&] {
        json a = json::array();
        for (auto& e : list_models())
            a.push_back({{"id", e.id}, {"files", e.files}, {"description", e.description}, {"citation", e.citation}});
        put(out_json, a.dump(2));
        return HPC_OK;
    });
}

int hpc_zoo_show(const char* id, char** out_json) {
    return guarded([&] {
        if (!id) throw UsageError("null argument");
        const ModelEntry& e = find_model(id);
        static const char* kinds[] = {"process", "pair", "automaton"};
        json files = json::object();
        for (auto& f : e.files) files[f] = model_text(f);
        json j{{"id", e.id},
               {"kind", kinds[static_cast<int>(e.kind)]},
               {"description", e.description},
               {"citation", e.citation},
               {"horizon", e.horizon},
               {"disturbed", e.disturbed},
               {"files", files}};
        if (e.kind == ModelEntry::Kind::Pair) {
            j["observe"] = e.observe;
            j["eps"] = e.eps;
            j["delta"] = e.delta;
        }
        put(out_json, j.dump(2));
        return HPC_OK;
    });
}

int hpc_zoo_scenarios(double horizon, int random, unsigned long long seed, char** out_json) {
    return guarded([&] {
        if (!(horizon > 0.0) || random < 0) throw UsageError("horizon must be positive and random non-negative");
        json a = json::array();
        for (auto& s : disturbance_scenarios(horizon, random, seed)) a.push_back(scenario_json(s));
        put(out_json, a.dump());
        return HPC_OK;
    });
}

int hpc_control_f(double p0, double v0, double pe, double d, double* out) {
    return guarded([&] {
        if (!out) throw UsageError("null argument");
        *out = control_law_f(p0, v0, pe, d);
        return HPC_OK;
    });
}

int hpc_v_lim(double p0, double pe, double* out) {
    return guarded([&] {
        if (!out) throw UsageError("null argument");
        *out = v_lim(p0, pe);
        return HPC_OK;
    });
}

}  // extern "C"
