#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hpc/parser.hpp"
#include "hpc/engine.hpp"

namespace hpc {

struct NotFoundError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ModelEntry {
    std::string id;
    enum class Kind { Process, Pair, Automaton } kind = Kind::Process;
    std::vector<std::string> files;  // under models/
    std::string description;
    std::string citation;
    double horizon = 10.0;           // pinned simulation horizon for fixtures and `models run`
    std::string observe;             // pairs: observed variables
    double eps = 0.0, delta = 0.0;   // pairs: expected closeness
    bool disturbed = false;          // needs a disturbance scenario for u
};

const std::vector<ModelEntry>& list_models();
// Throws NotFoundError.
const ModelEntry& find_model(const std::string& id);

// Embedded file text by file name ("ball.hpc"). Throws NotFoundError.
const std::string& model_text(const std::string& file);
std::vector<std::string> model_files();

struct LoadedModel {
    const ModelEntry* entry = nullptr;
    std::vector<ModelFile> processes;  // one per .hpc file
    nlohmann::json automaton, certificate;
};
// Throws NotFoundError, or ParseError if an embedded file is broken.
LoadedModel load_model(const std::string& id);

// Train control law with v_max = 40 m/s, a_min = -1, a_max = 1 m/s^2.
constexpr double kVMax = 40.0, kAMin = -1.0, kAMax = 1.0;
// Both throw std::domain_error when pe <= p0.
double v_lim(double p0, double pe);
double control_law_f(double p0, double v0, double pe, double d);

// u held at -0.1, 0, 0.1, then `random` piecewise-constant profiles with 1 s pieces in [-0.1, 0.1].
std::vector<Scenario> disturbance_scenarios(double horizon, int random = 20, std::uint64_t seed = 2024);

}  // namespace hpc
