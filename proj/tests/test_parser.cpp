#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "hpc/zoo.hpp"
#include "support.hpp"

using namespace hpc;

namespace {

int error_line(const std::string& text) {
    try {
        parse_model(text);
    } catch (const ParseError& e) {
        return e.line;
    }
    return -1;
}

std::string error_text(const std::string& text) {
    try {
        parse_model(text);
    } catch (const ParseError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("continuous prefix") {
    Proc p = parse_process("{0 | c' = 1 ; ready c!}");
    REQUIRE(p->kind == ProcNode::Kind::Sum);
    REQUIRE(p->branches.size() == 1);
    const Prefix& pre = p->branches[0].prefix;
    CHECK(pre.kind == PrefixKind::Continuous);
    REQUIRE(pre.init.size() == 1);
    CHECK(pre.init[0]->real == 0.0);
    REQUIRE(pre.vars.size() == 1);
    CHECK(pre.vars[0] == global_name("c"));
    CHECK(pre.field[0]->real == 1.0);
    CHECK(eval_bool(pre.boundary, {}) == Tri::True);
    REQUIRE(pre.ready.size() == 1);
    CHECK(pre.ready[0].out);
    CHECK(pre.ready[0].name == global_name("c"));
}

TEST_CASE("wait(d) macro shape and the empty sum") {
    ModelFile m = parse_model(testsupport::slurp(HPC_SOURCE_DIR "/models/wait.hpc"));
    CHECK(alpha_equivalent(m.entry, parse_process("new c . {0 | c' = 1 & c < 3}")));
    CHECK(m.constants.at("d") == 3.0);
    Proc z = parse_process("0");
    CHECK(z->kind == ProcNode::Kind::Sum);
    CHECK(z->branches.empty());
    CHECK(pretty(nil()) == "0");
}

TEST_CASE("definitions are inlined") {
    ModelFile m = parse_model("def P(x) = x!<1>.0; def Q = P(a) || P(b); run Q;");
    CHECK(alpha_equivalent(m.entry, parse_process("a!<1>.0 || b!<1>.0")));
    CHECK_FALSE(has_calls(m.entry));
    CHECK(m.definitions.size() == 2);
}

TEST_CASE("parse errors") {
    CHECK(error_line("run x(y).0 ||;") == 1);
    CHECK(error_line("def P = tau.0;\nrun P ||\n  ) ;") == 3);
    CHECK(error_text("run Nope;").find("Nope") != std::string::npos);
    CHECK(error_text("def P(x) = x!<>.0; run P(a, b);").find("expects 1 argument") != std::string::npos);
    CHECK_THROWS_AS(parse_model("run {0, 1 | v' = 1};"), ParseError);
    CHECK_THROWS_AS(parse_model("run {0 | v' = 1 ; ready w!};"), ParseError);
    CHECK_THROWS_AS(parse_model("run {0 | v' = 1 ; ready v};"), ParseError);
    CHECK_THROWS_AS(parse_model("run x!<1"), ParseError);
    CHECK_THROWS_AS(parse_model(""), ParseError);
}

TEST_CASE("round trip over the zoo") {
    for (auto& f : model_files()) {
        if (f.size() < 4 || f.substr(f.size() - 4) != ".hpc") continue;
        CAPTURE(f);
        ModelFile m = parse_model(model_text(f));
        std::string text = pretty(m.entry);
        Proc back = parse_model(text).entry;
        CHECK(alpha_equivalent(back, m.entry));
        CHECK(pretty(back) == text);
    }
}

TEST_CASE("round trip over random terms") {
    testsupport::TermGen g(5);
    for (int i = 0; i < 300; ++i) {
        Proc p = g.term();
        CHECK(alpha_equivalent(parse_process(pretty(p)), p));
    }
}

TEST_CASE("ball pretty fixture") {
    std::string got = pretty(parse_model(model_text("ball.hpc")).entry) + "\n";
    CHECK(got == testsupport::slurp(HPC_SOURCE_DIR "/fixtures/ball.pretty"));
}

TEST_CASE("fuzzed inputs only ever raise ParseError") {
    std::vector<std::string> seeds;
    for (auto& f : model_files())
        if (f.size() > 4 && f.substr(f.size() - 4) == ".hpc") seeds.push_back(model_text(f));
    const std::string alphabet = "(){}[]<>.,;|&!?+-*/='\"#abcxyz019 \n\tnewrepmutauconstdefrunready";
    std::mt19937_64 rng(77);
    int parsed = 0, rejected = 0;
    for (int i = 0; i < 3000; ++i) {
        std::string s = seeds[rng() % seeds.size()];
        int edits = 1 + static_cast<int>(rng() % 4);
        for (int k = 0; k < edits && !s.empty(); ++k) {
            size_t at = rng() % s.size();
            switch (rng() % 3) {
                case 0: s.erase(at, 1 + rng() % 3); break;
                case 1: s.insert(at, 1, alphabet[rng() % alphabet.size()]); break;
                default: s[at] = alphabet[rng() % alphabet.size()];
            }
        }
        try {
            parse_model(s);
            ++parsed;
        } catch (const ParseError&) {
            ++rejected;
        }
    }
    CHECK(parsed + rejected == 3000);
    CHECK(rejected > 0);
}
