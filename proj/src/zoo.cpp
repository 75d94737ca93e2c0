#include "hpc/zoo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>

namespace hpc {

namespace zoo_data {
const std::map<std::string, std::string>& files();  // generated
}

const std::vector<ModelEntry>& list_models() {
    using K = ModelEntry::Kind;
    static const std::vector<ModelEntry> entries = [] {
        std::vector<ModelEntry> v;
        auto add = [&](std::string id, K kind, std::vector<std::string> files, std::string desc, std::string cite,
                       double horizon) -> ModelEntry& {
            ModelEntry e;
            e.id = std::move(id);
            e.kind = kind;
            e.files = std::move(files);
            e.description = std::move(desc);
            e.citation = std::move(cite);
            e.horizon = horizon;
            v.push_back(std::move(e));
            return v.back();
        };
        add("bigben", K::Process, {"bigben.hpc"}, "clock c read by an observer every 2 s", "clock and observer example", 10.0);
        add("wait", K::Process, {"wait.hpc"}, "wait(3): a private clock that expires after 3 s", "wait(d) macro", 5.0);
        add("ball", K::Process, {"ball.hpc"}, "bouncing ball dropped from 5 m, restitution 0.8", "bouncing ball example", 12.0);
        add("vehicle", K::Process, {"vehicle.hpc"}, "vehicle shuttling between two base stations",
            "mobile vehicle and base stations example", 60.0);
        add("handover-network", K::Process, {"handover-network.hpc"},
            "three sectors and a terminus handing one train along 15 km", "railway network with handover", 430.0);
        add("train-q", K::Process, {"train-q.hpc"}, "replicated train with actuated destination, one sector and a terminus",
            "replicated trains", 200.0);
        add("train", K::Process, {"train.hpc"}, "disturbed train driven by one controller to 10000 m",
            "train model with disturbance", 300.0)
            .disturbed = true;
        {
            auto& e = add("spec-system", K::Pair, {"spec.hpc", "system.hpc"},
                          "ideal journey SPEC vs disturbed two-sector System with successful handover",
                          "successful handover scenario", 320.0);
            e.observe = "x";
            e.eps = 400.0;
            e.disturbed = true;
        }
        {
            auto& e = add("spec-system-failed", K::Pair, {"spec-failed.hpc", "system-failed.hpc"},
                          "ideal stop at 5000 m vs disturbed System whose right sector refuses the train",
                          "failed handover scenario", 320.0);
            e.observe = "x";
            e.eps = 300.0;
            e.disturbed = true;
        }
        add("composed-automaton-H", K::Automaton, {"composed-automaton-H.json", "certificate-phi.json"},
            "SPEC and System as one hybrid automaton with the published linear barrier certificate",
            "barrier certificate for the handover bound", 0.0);
        return v;
    }();
    return entries;
}

const ModelEntry& find_model(const std::string& id) {
    for (auto& e : list_models())
        if (e.id == id) return e;
    throw NotFoundError("no model '" + id + "' in the zoo");
}

const std::string& model_text(const std::string& file) {
    auto& m = zoo_data::files();
    auto it = m.find(file);
    if (it == m.end()) throw NotFoundError("no embedded model file '" + file + "'");
    return it->second;
}

std::vector<std::string> model_files() {
    std::vector<std::string> out;
    for (auto& [k, v] : zoo_data::files()) out.push_back(k);
    return out;
}

LoadedModel load_model(const std::string& id) {
    LoadedModel lm;
    lm.entry = &find_model(id);
    if (lm.entry->kind == ModelEntry::Kind::Automaton) {
        lm.automaton = nlohmann::json::parse(model_text(lm.entry->files.at(0)));
        lm.certificate = nlohmann::json::parse(model_text(lm.entry->files.at(1)));
        return lm;
    }
    for (auto& f : lm.entry->files) lm.processes.push_back(parse_model(model_text(f)));
    return lm;
}

double v_lim(double p0, double pe) {
    double rest = pe - p0;
    if (!(rest > 0.0)) throw std::domain_error("v_lim needs pe > p0");
    if (rest >= kVMax * kVMax / (-2.0 * kAMin)) return kVMax;
    return std::sqrt(-2.0 * kAMin * rest);
}

double control_law_f(double p0, double v0, double pe, double d) {
    if (!(pe > p0)) throw std::domain_error("control law needs pe > p0");
    double v1 = v0 + kAMax * d;
    double p1 = p0 + v0 * d + 0.5 * kAMax * d * d;
    // a predicted position at or past pe is unsafe
    auto safe = [&](double v, double p) { return p < pe && v <= v_lim(p, pe); };
    if (safe(v1, p1)) return kAMax;
    if (safe(v0, p0 + v0 * d)) return 0.0;
    return kAMin;
}

std::vector<Scenario> disturbance_scenarios(double horizon, int random, std::uint64_t seed) {
    std::vector<Scenario> out;
    for (double u : {-0.1, 0.0, 0.1}) {
        Scenario s;
        char buf[32];
        std::snprintf(buf, sizeof buf, "u=%g", u);
        s.label = buf;
        s.inputs["u"] = {{0.0, u}};
        out.push_back(std::move(s));
    }
    for (int k = 0; k < random; ++k) {
        std::mt19937_64 rng(seed + static_cast<std::uint64_t>(k));
        Scenario s;
        s.label = "piecewise#" + std::to_string(k + 1);
        auto& pieces = s.inputs["u"];
        for (double t = 0.0; t < horizon; t += 1.0) {
            double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            pieces.emplace_back(t, -0.1 + 0.2 * unit);
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace hpc
