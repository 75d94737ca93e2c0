#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hpc/hpc_c.h"

namespace {

using nlohmann::json;

enum Exit { kOk = 0, kRefuted = 1, kUsage = 2, kModel = 3 };

int exit_for(int status) {
    switch (status) {
        case HPC_OK: return kOk;
        case HPC_REFUTED: return kRefuted;
        case HPC_EUSAGE:
        case HPC_ENOTFOUND:
        case HPC_EIO: return kUsage;
        default: return kModel;
    }
}

struct Failure {
    int code;
};

// c-string owned by the library
struct Str {
    char* p = nullptr;
    ~Str() { hpc_free_string(p); }
    std::string str() const { return p ? p : ""; }
};

using ModelPtr = std::unique_ptr<hpc_model, void (*)(hpc_model*)>;

int check(int status) {
    if (status != HPC_OK && status != HPC_REFUTED) {
        std::cerr << "error: " << hpc_last_error() << '\n';
        throw Failure{exit_for(status)};
    }
    return status;
}

ModelPtr load(const std::string& path) {
    hpc_model* m = nullptr;
    check(hpc_model_load_file(path.c_str(), &m));
    return ModelPtr(m, hpc_model_free);
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        std::cerr << "error: cannot read '" << path << "'\n";
        throw Failure{kUsage};
    }
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    if (path.empty()) return;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << text;
    if (!f) {
        std::cerr << "error: cannot write '" << path << "'\n";
        throw Failure{kUsage};
    }
}

std::uint64_t default_seed() {
    const char* s = std::getenv("HPC_SEED");
    if (!s || !*s) return 0;
    char* end = nullptr;
    unsigned long long v = std::strtoull(s, &end, 10);
    if (*end) {
        std::cerr << "error: HPC_SEED must be an unsigned integer\n";
        throw Failure{kUsage};
    }
    return v;
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void print_trace(const std::string& jsonl, std::ostream& os) {
    std::istringstream in(jsonl);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json e = json::parse(line);
        os << "t=" << num(e["time"].get<double>()) << "  " << e["kind"].get<std::string>();
        if (!e["chan"].get<std::string>().empty()) os << ' ' << e["chan"].get<std::string>();
        if (!e["values"].empty()) {
            os << " <";
            bool first = true;
            for (auto& v : e["values"]) {
                os << (first ? "" : ", ") << (v.is_number() ? num(v.get<double>()) : v.is_null() ? "undef" : v.get<std::string>());
                first = false;
            }
            os << '>';
        }
        if (!e["provenance"].get<std::string>().empty()) os << "  [" << e["provenance"].get<std::string>() << ']';
        os << '\n';
    }
}

void print_sim_summary(const json& s) {
    std::cout << "termination: " << s["termination"].get<std::string>() << " at t=" << num(s["final_time"])
              << " (" << s["events"] << " events, policy " << s["policy"].get<std::string>() << ")\n";
    if (s["zeno"]["flagged"].get<bool>()) {
        std::cout << "zeno: " << s["zeno"]["events_in_window"] << " events in one window";
        if (!s["zeno"]["accumulation"].is_null()) std::cout << ", accumulation ~ " << num(s["zeno"]["accumulation"]);
        std::cout << '\n';
    }
    for (auto& d : s["diagnostics"]) std::cerr << "note: " << d.get<std::string>() << '\n';
}

std::vector<json> split(const json& a, std::size_t parts) {
    std::vector<json> out(std::max<std::size_t>(1, std::min(parts, a.size())), json::array());
    for (std::size_t i = 0; i < a.size(); ++i) out[i * out.size() / a.size()].push_back(a[i]);
    return out;
}

// Runs scenario batches on `jobs` threads; the merged report equals the single-call one.
int run_approx(const hpc_model* a, const hpc_model* b, double eps, double delta, json cfg, int jobs, json& report) {
    if (jobs <= 1 || !cfg.contains("scenarios") || cfg["scenarios"].size() < 2) {
        Str out;
        int st = check(hpc_approx(a, b, eps, delta, cfg.dump().c_str(), &out.p));
        report = json::parse(out.str());
        return st;
    }
    auto batches = split(cfg["scenarios"], static_cast<std::size_t>(jobs));
    std::vector<int> status(batches.size());
    std::vector<std::string> outs(batches.size()), errs(batches.size());
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < batches.size(); ++i)
        pool.emplace_back([&, i] {
            json c = cfg;
            c["scenarios"] = batches[i];
            Str out;
            status[i] = hpc_approx(a, b, eps, delta, c.dump().c_str(), &out.p);
            outs[i] = out.str();
            if (status[i] != HPC_OK && status[i] != HPC_REFUTED) errs[i] = hpc_last_error();
        });
    for (auto& t : pool) t.join();
    for (std::size_t i = 0; i < batches.size(); ++i)
        if (!errs[i].empty() || (status[i] != HPC_OK && status[i] != HPC_REFUTED)) {
            std::cerr << "error: " << errs[i] << '\n';
            throw Failure{exit_for(status[i])};
        }
    report = json::parse(outs[0]);
    for (std::size_t i = 1; i < batches.size(); ++i) {
        json r = json::parse(outs[i]);
        for (const char* k : {"max_distance", "max_distance_a", "max_distance_b", "max_skew"})
            report[k] = std::max(report[k].get<double>(), r[k].get<double>());
        if (!report["refuted"].get<bool>() && r["refuted"].get<bool>()) report["counterexample"] = r["counterexample"];
        report["refuted"] = report["refuted"].get<bool>() || r["refuted"].get<bool>();
        for (auto& s : r["scenarios"]) report["scenarios"].push_back(s);
        for (auto& w : r["warnings"]) report["warnings"].push_back(w);
    }
    return report["refuted"].get<bool>() ? HPC_REFUTED : HPC_OK;
}

int print_approx(const json& r, int st) {
    for (auto& w : r["warnings"]) std::cerr << "warning: " << w.get<std::string>() << '\n';
    if (r["delegated_weak"].get<bool>()) std::cout << "both sides discrete: decided by weak bisimulation\n";
    else {
        for (auto& s : r["scenarios"]) {
            std::cout << "  " << s["label"].get<std::string>() << ": max distance " << num(s["max_distance"]) << " m, skew "
                      << num(s["skew"]) << " s";
            if (!s["violation"].get<std::string>().empty()) std::cout << "  VIOLATION " << s["violation"].get<std::string>();
            std::cout << '\n';
        }
        std::cout << "max distance " << num(r["max_distance"]) << " (eps " << num(r["eps"]) << "), max skew "
                  << num(r["max_skew"]) << " (delta " << num(r["delta"]) << ")\n";
    }
    std::cout << (st == HPC_REFUTED ? "refuted: " + r["counterexample"].get<std::string>() : std::string("consistent"))
              << '\n';
    return exit_for(st);
}

json load_scenarios(const std::string& arg, double horizon) {
    if (arg.empty()) return nullptr;
    if (arg == "zoo") {
        Str out;
        check(hpc_zoo_scenarios(horizon, 20, 2024, &out.p));
        return json::parse(out.str());
    }
    json j;
    try {
        j = json::parse(read_file(arg));
    } catch (const json::exception& e) {
        std::cerr << "error: " << arg << ": " << e.what() << '\n';
        throw Failure{kUsage};
    }
    if (j.is_object() && j.contains("scenarios")) j = j["scenarios"];
    if (!j.is_array()) {
        std::cerr << "error: " << arg << ": expected an array of scenarios\n";
        throw Failure{kUsage};
    }
    return j;
}

int print_cert(const json& r, int st) {
    for (auto& c : r["conditions"]) {
        std::cout << "  " << c["condition"].get<std::string>() << " " << c["where"].get<std::string>() << ": min margin "
                  << num(c["min_margin"]) << " over " << c["samples"] << " samples";
        if (c["violations"].get<long>() > 0) {
            std::cout << "  VIOLATED (" << c["violations"] << ") witness " << c["witness"].dump();
        }
        if (c.contains("note")) std::cout << "  [" << c["note"].get<std::string>() << ']';
        std::cout << '\n';
    }
    std::cout << (st == HPC_REFUTED ? "certificate violated" : "certificate conditions hold on all samples") << '\n';
    return exit_for(st);
}

struct SimOpts {
    double horizon = 10.0, step = 1e-3;
    std::uint64_t seed = 0;
    std::string policy = "first";
    int depth = 8;
    std::string out_trace, out_traj, out_summary, scenario;
    bool all_vars = false, quiet = false;
};

void add_sim_flags(CLI::App* c, SimOpts& o) {
    c->add_option("--horizon", o.horizon, "simulated time bound in seconds")->check(CLI::PositiveNumber);
    c->add_option("--step", o.step, "integrator step in seconds")->check(CLI::PositiveNumber);
    c->add_option("--seed", o.seed, "seed for the random policy (default $HPC_SEED or 0)");
    c->add_option("--policy", o.policy, "first | random | exhaustive")
        ->check(CLI::IsMember({"first", "random", "exhaustive"}));
    c->add_option("--depth", o.depth, "branching points explored by the exhaustive policy");
    c->add_option("--out-trace", o.out_trace, "write the event trace as JSON lines");
    c->add_option("--out-traj", o.out_traj, "write the trajectory as CSV (time in s, SI values)");
    c->add_option("--out-summary", o.out_summary, "write the run summary as JSON");
    c->add_option("--scenario", o.scenario, "JSON file with one input scenario, e.g. the disturbance u");
    c->add_flag("--all-vars", o.all_vars, "include private variables in the trajectory");
    c->add_flag("--quiet", o.quiet, "print only the summary");
}

int do_simulate(const hpc_model* m, const SimOpts& o) {
    json cfg{{"horizon", o.horizon}, {"step", o.step}, {"seed", o.seed}, {"policy", o.policy},
             {"depth", o.depth},     {"all_vars", o.all_vars}};
    if (!o.scenario.empty()) {
        json s = load_scenarios(o.scenario, o.horizon);
        if (s.size() != 1) {
            std::cerr << "error: --scenario expects exactly one scenario\n";
            throw Failure{kUsage};
        }
        cfg["scenario"] = s[0];
    }
    Str trace, traj, summary;
    check(hpc_simulate(m, cfg.dump().c_str(), &trace.p, &traj.p, &summary.p));
    json s = json::parse(summary.str());
    write_file(o.out_trace, trace.str());
    write_file(o.out_traj, traj.str());
    write_file(o.out_summary, summary.str() + "\n");
    if (o.policy == "exhaustive") {
        std::cout << s["count"] << " maximal traces\n";
        int k = 0;
        for (auto& t : s["traces"]) {
            std::cout << "trace " << ++k << ":\n";
            if (!o.quiet) print_trace(t["trace"].get<std::string>(), std::cout);
            print_sim_summary(t);
        }
        return kOk;
    }
    if (!o.quiet) print_trace(trace.str(), std::cout);
    print_sim_summary(s);
    return kOk;
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

json universe_json(const std::string& s) {
    json u = json::array();
    for (auto& item : split_csv(s)) {
        char* end = nullptr;
        double v = std::strtod(item.c_str(), &end);
        if (end && *end == '\0') u.push_back(v);
        else u.push_back(item);
    }
    return u;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Workbench for the hybrid pi-calculus: parse, simulate, compare and certify models.\n"
                 "Units are SI throughout: time in seconds, positions in meters, speeds in m/s."};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(hpc_version()));

    // parse
    std::string parse_file;
    bool parse_pretty = false;
    std::string parse_out;
    auto* parse = app.add_subcommand("parse", "parse a model file and dump its AST as JSON");
    parse->add_option("FILE", parse_file, "model file")->required();
    parse->add_flag("--pretty", parse_pretty, "print the normalised term instead of the AST");
    parse->add_option("--out", parse_out, "write the AST JSON here instead of standard output");

    // simulate
    std::string sim_file;
    SimOpts sim;
    auto* simulate = app.add_subcommand("simulate", "run the closed simulator");
    simulate->add_option("FILE", sim_file, "model file")->required();
    add_sim_flags(simulate, sim);

    // lts
    std::string lts_file, lts_universe = "0,1", lts_out;
    int lts_depth = 2, lts_max = 20000;
    auto* lts = app.add_subcommand("lts", "build the bounded labelled transition system of a discrete process");
    lts->add_option("FILE", lts_file, "model file")->required();
    lts->add_option("--universe", lts_universe, "comma-separated values received on inputs");
    lts->add_option("--depth", lts_depth, "replication unfolding depth");
    lts->add_option("--max-states", lts_max, "state bound");
    lts->add_option("--out", lts_out, "write the LTS as JSON");

    // bisim
    std::string bis_a, bis_b, bis_mode = "strong", bis_universe = "0,1", bis_out;
    int bis_depth = 2;
    auto* bisim = app.add_subcommand("bisim", "decide strong or weak bisimilarity of two discrete processes");
    bisim->add_option("A", bis_a, "model file")->required();
    bisim->add_option("B", bis_b, "model file")->required();
    bisim->add_option("--mode", bis_mode, "strong | weak")->check(CLI::IsMember({"strong", "weak"}));
    bisim->add_option("--universe", bis_universe, "comma-separated values received on inputs");
    bisim->add_option("--depth", bis_depth, "replication unfolding depth");
    bisim->add_option("--out", bis_out, "write the verdict as JSON");

    // approx
    std::string ap_a, ap_b, ap_observe, ap_scen, ap_out;
    double ap_eps = 0.0, ap_delta = 0.0, ap_horizon = 0.0, ap_step = 1e-3;
    int jobs = 1;
    auto* approx = app.add_subcommand("approx", "check (eps, delta)-approximate bisimilarity by co-simulation");
    approx->add_option("A", ap_a, "model file")->required();
    approx->add_option("B", ap_b, "model file")->required();
    approx->add_option("--eps", ap_eps, "state tolerance in meters (or the observed unit)")->required()->check(CLI::NonNegativeNumber);
    approx->add_option("--delta", ap_delta, "duration tolerance in seconds")->check(CLI::NonNegativeNumber);
    approx->add_option("--observe", ap_observe, "observed variables, e.g. x or p:q (default: shared public ones)");
    approx->add_option("--scenarios", ap_scen, "JSON file with an array of input scenarios, or 'zoo' for the disturbance set");
    approx->add_option("--horizon", ap_horizon, "co-simulation bound in seconds (default 320)")->check(CLI::PositiveNumber);
    approx->add_option("--step", ap_step, "integrator step in seconds")->check(CLI::PositiveNumber);
    approx->add_option("--out", ap_out, "write the full report as JSON");
    approx->add_option("--jobs", jobs, "threads for scenario batches")->check(CLI::PositiveNumber);

    // discretize
    std::string dz_file, dz_out;
    double dz_eps = 1e-3, dz_duration = 1.0, dz_delta = 0.0;
    auto* discretize = app.add_subcommand("discretize", "replace a continuous prefix by its RK4 recursion");
    discretize->add_option("FILE", dz_file, "model file whose term is one continuous prefix")->required();
    discretize->add_option("--eps", dz_eps, "endpoint tolerance")->check(CLI::PositiveNumber);
    discretize->add_option("--duration", dz_duration, "evolution time in seconds")->required()->check(CLI::PositiveNumber);
    discretize->add_option("--delta", dz_delta, "step in seconds (default: suggested from the Lipschitz estimate)")
        ->check(CLI::PositiveNumber);
    discretize->add_option("--out", dz_out, "write the report and term as JSON");

    // certcheck
    std::string cc_aut, cc_cert, cc_out;
    long cc_samples = 100000;
    auto* certcheck = app.add_subcommand("certcheck", "sample-check a barrier certificate on a hybrid automaton");
    certcheck->add_option("AUTOMATON", cc_aut, "automaton JSON")->required();
    certcheck->add_option("CERT", cc_cert, "certificate JSON")->required();
    certcheck->add_option("--samples", cc_samples, "points per condition")->check(CLI::PositiveNumber);
    certcheck->add_option("--out", cc_out, "write the report as JSON");

    // models
    auto* models = app.add_subcommand("models", "the bundled model zoo");
    models->require_subcommand(1);
    models->add_subcommand("list", "list zoo entries");
    std::string show_id;
    auto* show = models->add_subcommand("show", "print an entry's files");
    show->add_option("ID", show_id, "entry id")->required();
    std::string run_id;
    SimOpts run;
    double run_u = 0.0;
    auto* mrun = models->add_subcommand("run", "simulate a process entry, co-simulate a pair, or check a certificate");
    mrun->add_option("ID", run_id, "entry id")->required();
    add_sim_flags(mrun, run);
    mrun->add_option("--u", run_u, "constant disturbance in m/s^2 for disturbed single models");
    mrun->add_option("--samples", cc_samples, "certificate entries: points per condition")->check(CLI::PositiveNumber);
    mrun->add_option("--jobs", jobs, "pairs: threads for scenario batches")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    try {
        std::uint64_t env_seed = default_seed();
        for (auto* c : {simulate, mrun})
            if (c->count("--seed") == 0) (c == simulate ? sim : run).seed = env_seed;

        if (*parse) {
            ModelPtr m = load(parse_file);
            Str out;
            if (parse_pretty) {
                check(hpc_model_pretty(m.get(), &out.p));
                std::cout << out.str() << '\n';
            } else {
                check(hpc_model_ast_json(m.get(), &out.p));
                if (parse_out.empty()) std::cout << out.str() << '\n';
                else write_file(parse_out, out.str() + "\n");
            }
            return kOk;
        }
        if (*simulate) {
            ModelPtr m = load(sim_file);
            return do_simulate(m.get(), sim);
        }
        if (*lts) {
            ModelPtr m = load(lts_file);
            json cfg{{"universe", universe_json(lts_universe)}, {"depth", lts_depth}, {"max_states", lts_max}};
            Str out;
            check(hpc_lts(m.get(), cfg.dump().c_str(), &out.p));
            json l = json::parse(out.str());
            write_file(lts_out, out.str() + "\n");
            std::cout << l["states"].size() << " states, " << l["edges"].size() << " edges"
                      << (l["truncated"].get<bool>() ? " (truncated)" : "") << '\n';
            if (lts_out.empty())
                for (auto& e : l["edges"])
                    std::cout << "  " << e["from"] << " --" << e["label"].get<std::string>() << "--> " << e["to"] << '\n';
            for (auto& n : l["notes"]) std::cerr << "note: " << n.get<std::string>() << '\n';
            return kOk;
        }
        if (*bisim) {
            ModelPtr a = load(bis_a), b = load(bis_b);
            json cfg{{"universe", universe_json(bis_universe)}, {"depth", bis_depth}};
            Str out;
            int st = check(hpc_bisim(a.get(), b.get(), bis_mode.c_str(), cfg.dump().c_str(), &out.p));
            json r = json::parse(out.str());
            write_file(bis_out, out.str() + "\n");
            if (r["truncated"].get<bool>()) std::cerr << "warning: LTS truncated; verdict is for the bounded systems\n";
            std::cout << (st == HPC_OK ? bis_mode + " bisimilar" : "not " + bis_mode + " bisimilar") << " ("
                      << r["states_a"] << " + " << r["states_b"] << " states, " << r["blocks"] << " blocks)\n";
            return exit_for(st);
        }
        if (*approx) {
            ModelPtr a = load(ap_a), b = load(ap_b);
            double horizon = ap_horizon > 0.0 ? ap_horizon : 320.0;
            json cfg{{"horizon", horizon}, {"step", ap_step}};
            if (!ap_observe.empty()) cfg["observe"] = ap_observe;
            json scs = load_scenarios(ap_scen, horizon);
            if (!scs.is_null()) cfg["scenarios"] = scs;
            json r;
            int st = run_approx(a.get(), b.get(), ap_eps, ap_delta, cfg, jobs, r);
            write_file(ap_out, r.dump(2) + "\n");
            return print_approx(r, st);
        }
        if (*discretize) {
            ModelPtr m = load(dz_file);
            json cfg = json::object();
            if (dz_delta > 0.0) cfg["delta"] = dz_delta;
            Str out;
            check(hpc_discretize(m.get(), dz_eps, dz_duration, cfg.dump().c_str(), &out.p));
            json r = json::parse(out.str());
            write_file(dz_out, out.str() + "\n");
            std::cout << "lipschitz estimate " << num(r["lipschitz"]) << ", delta " << num(r["delta"]) << " s\n";
            if (r.contains("endpoint_error"))
                std::cout << "endpoint " << r["endpoint"].dump() << " vs reference " << r["reference"].dump() << ", error "
                          << num(r["endpoint_error"]) << (r["within_eps"].get<bool>() ? " <= " : " > ") << "eps\n";
            if (dz_out.empty()) std::cout << r["term"].get<std::string>() << '\n';
            return kOk;
        }
        if (*certcheck) {
            json cfg{{"samples", cc_samples}};
            Str out;
            int st = check(hpc_certcheck(read_file(cc_aut).c_str(), read_file(cc_cert).c_str(), cfg.dump().c_str(), &out.p));
            write_file(cc_out, out.str() + "\n");
            return print_cert(json::parse(out.str()), st);
        }
        if (*models) {
            if (models->got_subcommand("list")) {
                Str out;
                check(hpc_zoo_list(&out.p));
                for (auto& e : json::parse(out.str()))
                    std::cout << e["id"].get<std::string>() << "  " << e["description"].get<std::string>() << '\n';
                return kOk;
            }
            if (*show) {
                Str out;
                check(hpc_zoo_show(show_id.c_str(), &out.p));
                json e = json::parse(out.str());
                std::cout << "# " << e["id"].get<std::string>() << " (" << e["kind"].get<std::string>()
                          << "): " << e["description"].get<std::string>() << "\n# see: " << e["citation"].get<std::string>()
                          << '\n';
                for (auto& [name, text] : e["files"].items())
                    std::cout << "\n## " << name << '\n' << text.get<std::string>();
                return kOk;
            }
            Str info;
            check(hpc_zoo_show(run_id.c_str(), &info.p));
            json e = json::parse(info.str());
            std::string kind = e["kind"].get<std::string>();
            if (mrun->count("--horizon") == 0) run.horizon = e["horizon"].get<double>();
            if (kind == "automaton") {
                std::string aut = e["files"]["composed-automaton-H.json"].get<std::string>();
                std::string cert = e["files"]["certificate-phi.json"].get<std::string>();
                json cfg{{"samples", cc_samples}};
                Str out;
                int st = check(hpc_certcheck(aut.c_str(), cert.c_str(), cfg.dump().c_str(), &out.p));
                write_file(run.out_summary, out.str() + "\n");
                return print_cert(json::parse(out.str()), st);
            }
            if (kind == "pair") {
                hpc_model *a = nullptr, *b = nullptr;
                check(hpc_model_load_zoo(run_id.c_str(), 0, &a));
                ModelPtr pa(a, hpc_model_free);
                check(hpc_model_load_zoo(run_id.c_str(), 1, &b));
                ModelPtr pb(b, hpc_model_free);
                json cfg{{"horizon", run.horizon}, {"step", run.step}, {"observe", e["observe"]},
                         {"scenarios", load_scenarios("zoo", run.horizon)}};
                json r;
                int st = run_approx(pa.get(), pb.get(), e["eps"].get<double>(), e["delta"].get<double>(), cfg, jobs, r);
                write_file(run.out_summary, r.dump(2) + "\n");
                return print_approx(r, st);
            }
            hpc_model* m = nullptr;
            check(hpc_model_load_zoo(run_id.c_str(), 0, &m));
            ModelPtr pm(m, hpc_model_free);
            if (e["disturbed"].get<bool>() && run.scenario.empty()) {
                json sc{{"label", "u=" + num(run_u)}, {"inputs", {{"u", json::array({json::array({0.0, run_u})})}}}};
                json cfg{{"horizon", run.horizon}, {"step", run.step}, {"seed", run.seed}, {"policy", run.policy},
                         {"depth", run.depth}, {"all_vars", run.all_vars}, {"scenario", sc}};
                Str trace, traj, summary;
                check(hpc_simulate(pm.get(), cfg.dump().c_str(), &trace.p, &traj.p, &summary.p));
                write_file(run.out_trace, trace.str());
                write_file(run.out_traj, traj.str());
                write_file(run.out_summary, summary.str() + "\n");
                if (!run.quiet) print_trace(trace.str(), std::cout);
                print_sim_summary(json::parse(summary.str()));
                return kOk;
            }
            return do_simulate(pm.get(), run);
        }
    } catch (const Failure& f) {
        return f.code;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return kUsage;
    }
    return kUsage;
}
