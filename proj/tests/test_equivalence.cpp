#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "hpc/equivalence.hpp"
#include "hpc/kernel.hpp"
#include "support.hpp"

using namespace hpc;

namespace {

bool strongly(const std::string& a, const std::string& b) {
    return strong_bisim(build_lts(parse_process(a)), build_lts(parse_process(b))).related;
}
bool weakly(const std::string& a, const std::string& b) {
    return weak_bisim(build_lts(parse_process(a)), build_lts(parse_process(b))).related;
}

// last payload of the recursion channel, i.e. the state after the final step
std::vector<double> discrete_endpoint(const Proc& disc, std::size_t n, double d, double delta) {
    SimConfig cfg;
    cfg.horizon = d * 1.01 + 1.0;
    cfg.zeno_max_events = std::max(cfg.zeno_max_events, 4 * static_cast<int>(std::ceil(d / delta)) + 100);
    SimResult r = simulate(disc, cfg);
    std::vector<double> end;
    for (auto& e : r.trace)
        if (e.kind == EventKind::Sync && e.values.size() == n + 1) {
            end.clear();
            for (std::size_t i = 0; i < n; ++i) end.push_back(e.values[i].real);
        }
    return end;
}

}  // namespace

TEST_CASE("LTS of an input prefix") {
    Lts l = build_lts(parse_process("x(y) . 0"));
    CHECK(l.edges.size() == 2);
    CHECK(l.states.size() == 2);
    CHECK_FALSE(l.truncated);
    CHECK_THROWS_AS(build_lts(parse_process("{0 | c' = 1}")), UnsupportedError);
}

TEST_CASE("strong and weak on small examples") {
    CHECK_FALSE(strongly("tau . 0", "0"));
    CHECK(weakly("tau . 0", "0"));
    CHECK(strongly("a!<1> || 0", "a!<1>"));
    CHECK(strongly("a!<1> . b!<0>", "a!<1> . b!<0> + a!<1> . b!<0>"));
    CHECK_FALSE(strongly("a!<1> . (b!<0> + c!<0>)", "a!<1> . b!<0> + a!<1> . c!<0>"));
    CHECK(weakly("a!<1> . tau . b!<0>", "a!<1> . b!<0>"));
    CHECK_FALSE(weakly("tau . a!<1> + b!<0>", "a!<1> + b!<0>"));
    CHECK(strongly("new x . (x!<1> || x(y) . a!<y>)", "tau . a!<1>"));
    CHECK(strongly("a(y) . [y < 1] . b!<>", "a(y) . [y < 1] . b!<>"));
}

TEST_CASE("partition refinement agrees with the naive fixpoint") {
    testsupport::TermGen g(23);
    int agree = 0, related = 0;
    for (int i = 0; i < 300; ++i) {
        Proc p = g.term(3), q = i % 2 ? g.term(3) : mk_par(g.term(2), nil());
        Lts a = build_lts(p), b = build_lts(q);
        bool fast = strong_bisim(a, b).related;
        CHECK(fast == testsupport::naive_bisimilar(a, b));
        agree += fast == testsupport::naive_bisimilar(a, b);
        related += fast;
        Lts sa = saturate(a), sb = saturate(b);
        CHECK(weak_bisim(a, b).related == testsupport::naive_bisimilar(sa, sb));
    }
    CHECK(agree == 300);
    CHECK(related > 0);
}

TEST_CASE("strong bisimilarity laws") {
    auto st = testsupport::strong_law_suite(200, 7);
    CHECK(st.terms == 200);
    CHECK(st.checks == 1000);
    for (auto& f : st.failed) FAIL_CHECK(f);
    CHECK(st.failures == 0);
    CHECK(st.oracle_disagreements == 0);
}

TEST_CASE("strong bisimilarity is a congruence") {
    auto st = testsupport::congruence_suite(60, 11);
    CHECK(st.terms == 60);
    for (auto& f : st.failed) FAIL_CHECK(f);
    CHECK(st.failures == 0);
    CHECK(st.oracle_disagreements == 0);
}

TEST_CASE("property: equivalence relations, weak coarser than strong") {
    testsupport::TermGen g(31);
    for (int i = 0; i < 100; ++i) {
        Proc p = g.term(3), q = g.term(3), r = mk_par(p, nil());
        Lts a = build_lts(p), b = build_lts(q), c = build_lts(r);
        CHECK(strong_bisim(a, a).related);
        CHECK(weak_bisim(a, a).related);
        CHECK(strong_bisim(a, b).related == strong_bisim(b, a).related);
        CHECK(weak_bisim(a, b).related == weak_bisim(b, a).related);
        if (strong_bisim(a, c).related && strong_bisim(c, b).related) CHECK(strong_bisim(a, b).related);
        if (strong_bisim(a, b).related) CHECK(weak_bisim(a, b).related);
    }
}

TEST_CASE("approximate bisimulation at zero tolerance on discrete terms") {
    testsupport::TermGen g(41);
    SimConfig cfg;
    for (int i = 0; i < 60; ++i) {
        Proc p = g.term(3), q = i % 3 ? g.term(3) : mk_sum({Branch{p_tau(), p}});
        ApproxVerdict v = approx_bisim(p, q, 0.0, 0.0, cfg, {}, {});
        CHECK(v.delegated_weak);
        CHECK(v.refuted == !weak_bisim(build_lts(p), build_lts(q)).related);
    }
}

TEST_CASE("approximate bisimulation on flows") {
    SimConfig cfg;
    cfg.horizon = 10;
    Proc p = parse_process("{0 | x' = 1 & x < 3} . done!<>");
    Proc q = parse_process("{0 | x' = 1.01 & x < 3} . done!<>");
    ApproxVerdict ok = approx_bisim(p, q, 0.1, 0.1, cfg, {}, parse_observations("x"));
    CHECK_FALSE(ok.refuted);
    CHECK(ok.max_skew == doctest::Approx(3.0 - 3.0 / 1.01).epsilon(1e-3));

    // the same clock chopped into two waits tracks itself exactly
    Proc chopped = parse_process("new c . {0 | c' = 1 & c < 1} . new k . {0 | k' = 1 & k < 2} . done!<>");
    Proc whole = parse_process("new c . {0 | c' = 1 & c < 3} . done!<>");
    CHECK_FALSE(approx_bisim(chopped, whole, 1e-6, 1e-6, cfg, {}, {}).refuted);

    Proc w3 = parse_process("new c . {0 | c' = 1 & c < 3} . done!<>");
    Proc w2 = parse_process("new c . {0 | c' = 1 & c < 2} . done!<>");
    ApproxVerdict late = approx_bisim(w3, w2, 0.1, 0.1, cfg, {}, {});
    CHECK(late.refuted);
    CHECK(late.counterexample.find("default: ") == 0);
}

TEST_CASE("refutations replay") {
    SimConfig cfg;
    cfg.horizon = 10;
    Proc p = parse_process("{0 | x' = 1 & x < 3} . done!<>");
    Proc q = parse_process("{0 | x' = 1.01 & x < 3} . done!<>");
    Scenario s;
    s.label = "only";
    ApproxVerdict v = approx_bisim(p, q, 0.01, 0.1, cfg, {s}, parse_observations("x"));
    REQUIRE(v.refuted);
    REQUIRE(v.counterexample.rfind("only: distance", 0) == 0);
    // "only: distance X at t=Y s exceeds eps"
    std::istringstream in(v.counterexample.substr(v.counterexample.find("at t=") + 5));
    double t = NAN;
    in >> t;
    REQUIRE(std::isfinite(t));
    auto a = simulate(p, cfg).trajectory.series("x"), b = simulate(q, cfg).trajectory.series("x");
    auto at = [](const std::vector<std::pair<double, double>>& s, double t) {
        for (size_t i = 0; i + 1 < s.size(); ++i)
            if (s[i].first <= t && t <= s[i + 1].first) {
                double w = (t - s[i].first) / std::max(1e-300, s[i + 1].first - s[i].first);
                return s[i].second + w * (s[i + 1].second - s[i].second);
            }
        return s.back().second;
    };
    CHECK(std::abs(at(a, t) - at(b, t)) > 0.01);
}

TEST_CASE("approximate bisimulation errors") {
    SimConfig cfg;
    Proc p = parse_process("{0 | x' = 1 & x < 1}");
    CHECK_THROWS_AS(approx_bisim(p, p, 0.1, 0.1, cfg, {}, parse_observations("nope")), std::invalid_argument);
    Proc open = parse_process("{0 | x' = u}");
    CHECK_THROWS_AS(approx_bisim(open, open, 0.1, 0.1, cfg, {}, {}), KernelError);
}

TEST_CASE("discretization") {
    Name v = global_name("v");
    // once z reaches 0 the recursion is inaction
    SimConfig cfg;
    cfg.horizon = 5.0;
    SimResult quiet = simulate(discretize({mk_real(1)}, {v}, {mk_var(v)}, 1.0, 0.1, 0.25), cfg);
    CHECK(quiet.termination != Termination::Zeno);
    CHECK(quiet.final_time == doctest::Approx(1.0).epsilon(1e-6));
    REQUIRE(quiet.final_process);
    CHECK(discrete_transitions(quiet.final_process).items.empty());

    CHECK_THROWS_AS(discretize({mk_real(1)}, {v}, {mk_var(v)}, 0.0, 0.1, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(discretize({mk_real(1)}, {v}, {mk_var(v)}, 1.0, 0.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(discretize({mk_real(1)}, {v}, {mk_var(v)}, 1.0, 0.1, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(discretize({mk_real(1)}, {v}, {}, 1.0, 0.1, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(discretize({mk_real(1)}, {v}, {mk_var(global_name("w"))}, 1.0, 0.1, 0.1), std::invalid_argument);

    std::vector<double> errs;
    for (double delta : {0.2, 0.1, 0.05}) {
        Proc disc = discretize({mk_real(1)}, {v}, {mk_var(v)}, 1.0, 0.1, delta);
        auto end = discrete_endpoint(disc, 1, 1.0, delta);
        REQUIRE(end.size() == 1);
        errs.push_back(std::abs(end[0] - std::exp(1.0)));
    }
    CHECK(errs[0] / errs[1] >= 12.0);
    CHECK(errs[1] / errs[2] >= 12.0);

    // a step size that does not divide the duration still ends at d
    Proc odd = discretize({mk_real(1)}, {v}, {mk_var(v)}, 1.0, 0.1, 0.3);
    auto end = discrete_endpoint(odd, 1, 1.0, 0.3);
    REQUIRE(end.size() == 1);
    CHECK(end[0] == doctest::Approx(std::exp(1.0)).epsilon(1e-3));
}

TEST_CASE("Lipschitz estimate and suggested step") {
    Name x = global_name("x"), y = global_name("y");
    double l = estimate_lipschitz({x, y}, {mk_var(y), mk_real(0) - mk_var(x)}, {-1, -1}, {1, 1});
    CHECK(l <= 1.0 + 1e-9);
    CHECK(l >= 0.9);
    double d = suggest_delta(1.0, 0.1, 2.0);
    CHECK(d == doctest::Approx(0.1 * 0.1 / (std::exp(2.0) - 1)));
}
