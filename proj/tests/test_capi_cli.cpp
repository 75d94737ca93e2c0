#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "hpc/hpc_c.h"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Model {
    hpc_model* m = nullptr;
    ~Model() { hpc_model_free(m); }
};

struct Out {
    char* s = nullptr;
    ~Out() { hpc_free_string(s); }
    json parse() const { return json::parse(s); }
};

fs::path scratch() {
    static fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / ("hpc_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string write_file(const std::string& name, const std::string& text) {
    fs::path p = scratch() / name;
    std::ofstream(p) << text;
    return p.string();
}

int cli(const std::string& args) {
    std::string cmd = std::string("\"" HPC_CLI "\" ") + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("C API status codes") {
    CHECK(std::string(hpc_version()).size() > 0);
    hpc_free_string(nullptr);

    Model ok;
    CHECK(hpc_model_parse("run a!<1> . 0;", &ok.m) == HPC_OK);
    Model bad;
    CHECK(hpc_model_parse("run a!<1", &bad.m) == HPC_EPARSE);
    CHECK(std::string(hpc_last_error()).find("1") != std::string::npos);
    Model missing;
    CHECK(hpc_model_load_file("/nonexistent/model.hpc", &missing.m) == HPC_EIO);
    Model unknown;
    CHECK(hpc_model_load_zoo("nope", 0, &unknown.m) == HPC_ENOTFOUND);
    Out o;
    CHECK(hpc_model_pretty(nullptr, &o.s) == HPC_EUSAGE);
    CHECK(hpc_model_parse(nullptr, &bad.m) == HPC_EUSAGE);
}

TEST_CASE("C API simulation") {
    Model m;
    REQUIRE(hpc_model_parse("run {1 | v' = v & v < 5}(y) . out!<y>;", &m.m) == HPC_OK);
    Out sum;
    REQUIRE(hpc_simulate(m.m, R"({"horizon": 5, "step": 0.001})", nullptr, nullptr, &sum.s) == HPC_OK);
    json j = sum.parse();
    CHECK(j.at("final_time").get<double>() == doctest::Approx(1.6094379).epsilon(1e-6));

    Out x;
    CHECK(hpc_simulate(m.m, R"({"horizont": 5})", nullptr, nullptr, &x.s) == HPC_EUSAGE);
    CHECK(std::string(hpc_last_error()).find("horizont") != std::string::npos);
    CHECK(hpc_simulate(m.m, "{not json", nullptr, nullptr, &x.s) == HPC_EUSAGE);
    CHECK(hpc_simulate(m.m, R"({"policy": "best"})", nullptr, nullptr, &x.s) == HPC_EUSAGE);

    Model open;
    REQUIRE(hpc_model_parse("run {0 | v' = w};", &open.m) == HPC_OK);
    CHECK(hpc_simulate(open.m, nullptr, nullptr, nullptr, &x.s) == HPC_EMODEL);
    Out held;
    CHECK(hpc_simulate(open.m, R"({"horizon": 1, "scenario": {"inputs": {"w": [[0, 2]]}}})", nullptr, nullptr,
                       &held.s) == HPC_OK);
}

TEST_CASE("C API equivalence") {
    Model a, b, c, ode;
    REQUIRE(hpc_model_parse("run a!<1> || 0;", &a.m) == HPC_OK);
    REQUIRE(hpc_model_parse("run a!<1>;", &b.m) == HPC_OK);
    REQUIRE(hpc_model_parse("run tau . a!<1>;", &c.m) == HPC_OK);
    REQUIRE(hpc_model_parse("run {1 | v' = v};", &ode.m) == HPC_OK);
    Out r1, r2, r3, r4, r5;
    CHECK(hpc_bisim(a.m, b.m, "strong", nullptr, &r1.s) == HPC_OK);
    CHECK(hpc_bisim(b.m, c.m, "strong", nullptr, &r2.s) == HPC_REFUTED);
    CHECK(hpc_bisim(b.m, c.m, "weak", nullptr, &r3.s) == HPC_OK);
    CHECK(hpc_bisim(b.m, c.m, "fuzzy", nullptr, &r4.s) == HPC_EUSAGE);
    CHECK(hpc_bisim(ode.m, b.m, "strong", nullptr, &r4.s) == HPC_EMODEL);
    CHECK(hpc_lts(b.m, R"({"universe": [0, 1, 2]})", &r5.s) == HPC_OK);
    CHECK(r5.parse().contains("edges"));

    Out d1, d2;
    CHECK(hpc_discretize(ode.m, 1e-3, 1.0, R"({"delta": 0.1})", &d1.s) == HPC_OK);
    CHECK(std::abs(d1.parse().at("endpoint").at("v").get<double>() - std::exp(1.0)) <= 1e-3);
    CHECK(hpc_discretize(ode.m, 0.0, 1.0, nullptr, &d2.s) == HPC_EUSAGE);
    CHECK(hpc_discretize(b.m, 1e-3, 1.0, nullptr, &d2.s) == HPC_EUSAGE);
}

TEST_CASE("C API certificates and zoo") {
    std::string aut = R"({"coordinates": ["x"], "box": {"x": [-10, 10]},
        "locations": [{"name": "L", "flow": {"x": "-x"}, "init": [{"box": {"x": [-1, 1]}}],
                       "unsafe": [{"constraints": ["x >= 6"]}]}],
        "edges": [{"name": "kick", "from": "L", "to": "L", "guard": {"constraints": ["x >= 0.5"]}, "reset": {"x": "0.5 * x"}}]})";
    Out ok, flipped, neg;
    CHECK(hpc_certcheck(aut.c_str(), R"({"phi": "x^2 - 30"})", R"({"samples": 1000})", &ok.s) == HPC_OK);
    CHECK(hpc_certcheck(aut.c_str(), R"({"phi": "30 - x^2"})", R"({"samples": 1000})", &flipped.s) == HPC_REFUTED);
    CHECK(hpc_certcheck(aut.c_str(), R"({"phi": "x", "gamma": -1})", nullptr, &neg.s) == HPC_EMODEL);

    Out list, show, scen, none;
    REQUIRE(hpc_zoo_list(&list.s) == HPC_OK);
    CHECK(list.parse().size() >= 8);
    CHECK(hpc_zoo_show("ball", &show.s) == HPC_OK);
    CHECK(hpc_zoo_show("nope", &none.s) == HPC_ENOTFOUND);
    REQUIRE(hpc_zoo_scenarios(320, 20, 2024, &scen.s) == HPC_OK);
    CHECK(scen.parse().size() == 23);

    double f = 0, v = 0;
    CHECK(hpc_control_f(9995, 3, 10000, 1, &f) == HPC_OK);
    CHECK(f == -1.0);
    CHECK(hpc_v_lim(9800, 10000, &v) == HPC_OK);
    CHECK(v == doctest::Approx(20.0));
    CHECK(hpc_v_lim(10000, 10000, &v) == HPC_EUSAGE);
}

TEST_CASE("CLI exit codes") {
    std::string good = write_file("good.hpc", "run a!<1> || 0;\n");
    std::string same = write_file("same.hpc", "run a!<1>;\n");
    std::string other = write_file("other.hpc", "run tau . a!<1>;\n");
    std::string broken = write_file("broken.hpc", "run a!<1\n");

    CHECK(cli("--help") == 0);
    CHECK(cli("parse " + good) == 0);
    CHECK(cli("parse --pretty " + good) == 0);
    CHECK(cli("parse " + broken) == 3);
    CHECK(cli("parse /nonexistent/x.hpc") == 2);
    CHECK(cli("parse") == 2);
    CHECK(cli("frobnicate") == 2);
    CHECK(cli("bisim " + good + " " + same) == 0);
    CHECK(cli("bisim " + same + " " + other) == 1);
    CHECK(cli("bisim --mode weak " + same + " " + other) == 0);
    CHECK(cli("approx " + same + " " + other) == 2);  // --eps is required
    CHECK(cli("models list") == 0);
    CHECK(cli("models show nope") == 2);
    CHECK(cli("models run wait") == 0);

    fs::path trace = scratch() / "wait.jsonl";
    REQUIRE(cli("simulate --quiet --horizon 5 --out-trace " + trace.string() + " " HPC_SOURCE_DIR "/models/wait.hpc") == 0);
    std::ifstream in(trace);
    std::string first;
    std::getline(in, first);
    CHECK(json::parse(first).contains("kind"));
    fs::remove_all(scratch());
}
