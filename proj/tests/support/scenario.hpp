#pragma once

// Shared fixtures: repository paths, the bundled pour activity and the
// closed-loop operator script used to derive the scenario trace.

#include "phast/activity.hpp"
#include "phast/replay.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fixture {

inline std::filesystem::path source_path(const std::string& relative) {
    return std::filesystem::path(PHAST_SOURCE_DIR) / relative;
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline phast::ActivityDocument load_document(const std::string& relative) {
    const auto result = phast::parse_activity(read_text(source_path(relative)));
    if (!result) {
        std::string msg = relative + " does not parse:";
        for (const auto& d : result.diagnostics) {
            msg += "\n  " + phast::format(d);
        }
        throw std::runtime_error(msg);
    }
    return *result.document;
}

inline phast::ActivityDocument pour_document() { return load_document("activities/pour.activity"); }

inline double bottle_cup_distance(const phast::WorldState& w) {
    return phast::distance(w.objects.at("bottle").pose.position, w.objects.at("cup").pose.position);
}

inline double bottle_tilt(const phast::WorldState& w) {
    const auto& b = w.objects.at("bottle");
    return phast::tilt_degrees(b.pose.orientation, b.longitudinal_axis);
}

/// The operator script: push toward the cup until the bottle is closer than
/// 0.2 m, then hold the rotation input until the bottle has tilted to 5 deg.
/// Returns the input for every tick, including the one that reaches 5 deg.
inline std::vector<phast::UserInput> pour_inputs(const phast::ActivityDocument& doc,
                                                 std::optional<double> rate = {},
                                                 std::size_t max_ticks = 10000) {
    phast::Engine engine = phast::build_engine(doc, rate);
    std::vector<phast::UserInput> inputs;
    bool rotating = false;
    while (inputs.size() < max_ticks) {
        if (!rotating && bottle_cup_distance(engine.world()) < 0.2) {
            rotating = true;
        }
        const phast::UserInput u = rotating ? phast::UserInput{0, 1, 0} : phast::UserInput{-1, 0, 0};
        inputs.push_back(u);
        engine.step(u);
        if (rotating && bottle_tilt(engine.world()) <= 5.0) {
            return inputs;
        }
    }
    throw std::runtime_error("pour script did not finish");
}

/// One record per tick at t = k * dt.
inline phast::InputTrace trace_from_inputs(const std::vector<phast::UserInput>& inputs, double dt) {
    phast::InputTrace trace;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        trace.records.push_back({static_cast<double>(k) * dt, inputs[k]});
    }
    return trace;
}

}  // namespace fixture
