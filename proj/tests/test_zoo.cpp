#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "hpc/simulator.hpp"
#include "hpc/zoo.hpp"
#include "support.hpp"

using namespace hpc;

TEST_CASE("catalogue") {
    std::set<std::string> ids;
    for (auto& e : list_models()) ids.insert(e.id);
    for (auto* id : {"bigben", "wait", "ball", "vehicle", "handover-network", "spec-system", "spec-system-failed",
                     "composed-automaton-H"})
        CHECK(ids.count(id) == 1);
    CHECK(find_model("ball").citation.find("bouncing ball") != std::string::npos);
    CHECK_THROWS_AS(find_model("nope"), NotFoundError);
    CHECK_THROWS_AS(find_model(""), NotFoundError);
    CHECK_THROWS_AS(model_text("nope.hpc"), NotFoundError);
}

TEST_CASE("every entry loads") {
    for (auto& e : list_models()) {
        CAPTURE(e.id);
        LoadedModel m = load_model(e.id);
        if (e.kind == ModelEntry::Kind::Automaton) {
            CHECK(m.automaton.is_object());
            CHECK(m.certificate.is_object());
        } else {
            CHECK(m.processes.size() == e.files.size());
            for (auto& f : m.processes) CHECK_FALSE(has_calls(f.entry));
        }
    }
    LoadedModel v = load_model("vehicle");
    REQUIRE(v.processes.size() == 1);
    // Vehicle || Base1 || Base2 under the shared restrictions
    Proc p = v.processes[0].entry;
    while (p->kind == ProcNode::Kind::Res) p = p->left;
    int parts = 0;
    std::vector<Proc> stack{p};
    while (!stack.empty()) {
        Proc q = stack.back();
        stack.pop_back();
        if (q->kind == ProcNode::Kind::Par) stack.push_back(q->left), stack.push_back(q->right);
        else ++parts;
    }
    CHECK(parts == 3);
}

TEST_CASE("SPEC and System stage boundaries") {
    LoadedModel m = load_model("spec-system");
    std::string spec = pretty(m.processes.at(0).entry);
    for (auto* b : {"p < 800", "p < 9200", "p < 10000"}) CHECK(spec.find(b) != std::string::npos);
    // System runs two 5 km sectors with the handover point 1 km before each end
    const ModelFile& sys = m.processes.at(1);
    CHECK(sys.constants.at("len") == 5000.0);
    CHECK(sys.constants.at("ph") == 4000.0);
    CHECK(sys.constants.at("d") == 1.0);
}

TEST_CASE("protection curve and control law") {
    CHECK(v_lim(0, 10000) == 40.0);
    CHECK(v_lim(9800, 10000) == doctest::Approx(20.0));
    CHECK(v_lim(9999.5, 10000) == doctest::Approx(1.0));
    CHECK(control_law_f(9995, 3, 10000, 1) == -1.0);
    CHECK(control_law_f(0, 0, 10000, 1) == 1.0);
    CHECK(control_law_f(5000, 40, 10000, 1) == 0.0);
    CHECK_THROWS_AS(v_lim(10, 10), std::domain_error);
    CHECK_THROWS_AS(control_law_f(10001, 0, 10000, 1), std::domain_error);
}

TEST_CASE("property: the control law picks one of three accelerations") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> P(0, 9999.9), V(-5, 45), D(0.1, 2);
    for (int i = 0; i < 5000; ++i) {
        double a = control_law_f(P(rng), V(rng), 10000, D(rng));
        CHECK((a == kAMax || a == 0.0 || a == kAMin));
    }
}

TEST_CASE("property: control law is safe from every feasible grid start") {
    // one sector, period 1 s, exact kinematics for piecewise-constant acceleration
    const double pe = 5000;
    int starts = 0, infeasible = 0;
    std::vector<double> ps;
    for (double p = 0; p < pe - 1; p += 250) ps.push_back(p);
    ps.push_back(pe - 1);
    for (double p0 : ps)
        for (double v0 = 0; v0 <= 40; v0 += 2) {
            ++starts;
            double p = p0, v = v0, pmax = p;
            for (int k = 0; k < 600 && p < pe; ++k) {
                double a = control_law_f(p, v, pe, 1.0);
                if (v > 0 && a < 0 && v / -a < 1.0) pmax = std::max(pmax, p + v * v / (-2 * a));
                p += v + 0.5 * a;
                v += a;
                pmax = std::max(pmax, p);
            }
            // no controller can stop in time when full braking from t = 0 overruns
            bool feasible = p0 + v0 * v0 / (-2 * kAMin) <= pe + 1;
            if (!feasible) {
                ++infeasible;
                continue;
            }
            CAPTURE(p0);
            CAPTURE(v0);
            CHECK(pmax <= pe + 1);
        }
    CHECK(starts == 21 * 21);
    CHECK(infeasible < starts / 10);
}

TEST_CASE("disturbance scenario set") {
    auto a = disturbance_scenarios(320), b = disturbance_scenarios(320);
    REQUIRE(a.size() == 23);
    std::set<std::string> labels;
    for (std::size_t i = 0; i < a.size(); ++i) {
        labels.insert(a[i].label);
        CHECK(a[i].inputs == b[i].inputs);
        for (auto& [t, u] : a[i].inputs.at("u")) {
            CHECK(u >= -0.1);
            CHECK(u <= 0.1);
            CHECK(t == std::floor(t));
        }
    }
    CHECK(labels.size() == 23);
    CHECK(a[0].value("u", 100) == -0.1);
    CHECK(a[1].value("u", 100) == 0.0);
    CHECK(a[2].value("u", 100) == 0.1);
    CHECK(a[3].inputs.at("u").size() == 320);
    CHECK(a[3].inputs != a[4].inputs);
}

TEST_CASE("SPEC trajectory checkpoints") {
    LoadedModel m = load_model("spec-system");
    SimConfig cfg;
    cfg.horizon = m.entry->horizon;
    SimResult r = simulate(m.processes.at(0).entry, cfg);
    auto p = testsupport::any_series(r.trajectory, "p"), v = testsupport::any_series(r.trajectory, "v");
    REQUIRE(!v.empty());
    auto top = std::find_if(v.begin(), v.end(), [](auto& s) { return s.second >= 40.0 - 1e-9; });
    REQUIRE(top != v.end());
    CHECK(top->first == doctest::Approx(40.0).epsilon(0.5 / 40));
    double p_top = NAN;
    for (auto& [t, x] : p)
        if (t <= top->first + 1e-9) p_top = x;
    CHECK(p_top == doctest::Approx(800.0).epsilon(2.0 / 800));
    CHECK(p.back().second == doctest::Approx(10000.0).epsilon(2.0 / 10000));
    CHECK(p.back().first == doctest::Approx(290.0).epsilon(0.5 / 290));
}

TEST_CASE("pinned runs regenerate the fixtures") {
    for (auto* id : {"bigben", "wait", "ball"}) {
        CAPTURE(id);
        LoadedModel m = load_model(id);
        SimConfig cfg;
        cfg.horizon = m.entry->horizon;
        std::ostringstream os;
        write_trace_jsonl(os, simulate(m.processes.at(0).entry, cfg).trace);
        CHECK(os.str() == testsupport::slurp(std::string(HPC_SOURCE_DIR "/fixtures/") + id + ".trace.jsonl"));
    }
}
