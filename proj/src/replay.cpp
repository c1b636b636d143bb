#include "phast/replay.hpp"

#include "phast/wire.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace phast {

namespace {

// Slack for comparing tick times against trace timestamps.
constexpr double kTimeEpsilon = 1e-9;

std::optional<std::string> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        return std::nullopt;
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) {
        return std::nullopt;
    }
    return buffer.str();
}

}  // namespace

UserInput InputTrace::sample(double time_s) const {
    const auto it = std::upper_bound(
        records.begin(), records.end(), time_s + kTimeEpsilon,
        [](double t, const TraceRecord& r) { return t < r.t; });
    if (it == records.begin()) {
        return {};
    }
    return std::prev(it)->u;
}

std::optional<double> InputTrace::end_time() const {
    if (records.empty()) {
        return std::nullopt;
    }
    return records.back().t;
}

InputTrace parse_trace(std::string_view text) {
    using Json = nlohmann::json;
    InputTrace trace;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.find_first_not_of(" \t") == std::string_view::npos) {
            if (end == text.size()) {
                break;
            }
            continue;
        }

        Json j;
        try {
            j = Json::parse(line.begin(), line.end());
        } catch (const Json::exception& e) {
            throw TraceError(line_no, e.what());
        }
        if (!j.is_object() || j.size() != 2 || !j.contains("t") || !j.contains("u")) {
            throw TraceError(line_no, "expected {\"t\": seconds, \"u\": [x, y, z]}");
        }
        const Json& t = j["t"];
        const Json& u = j["u"];
        if (!t.is_number() || !u.is_array() || u.size() != 3 ||
            !std::all_of(u.begin(), u.end(), [](const Json& c) { return c.is_number(); })) {
            throw TraceError(line_no, "expected {\"t\": seconds, \"u\": [x, y, z]}");
        }
        TraceRecord record{t.get<double>(), {u[0].get<double>(), u[1].get<double>(), u[2].get<double>()}};
        if (!std::isfinite(record.t) || record.t < 0.0 || !is_finite(record.u)) {
            throw TraceError(line_no, "values must be finite and t >= 0");
        }
        if (!trace.records.empty() && record.t < trace.records.back().t) {
            throw TraceError(line_no, "timestamps must be non-decreasing");
        }
        trace.records.push_back(record);
        if (end == text.size()) {
            break;
        }
    }
    return trace;
}

std::string serialize_trace(const InputTrace& trace) {
    std::string out;
    for (const TraceRecord& r : trace.records) {
        nlohmann::ordered_json j;
        j["t"] = r.t;
        j["u"] = {r.u.x, r.u.y, r.u.z};
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<TickSnapshot> run_replay(Engine& engine, const InputTrace& trace) {
    std::vector<TickSnapshot> out;
    const auto end = trace.end_time();
    if (!end) {
        return out;
    }
    const double dt = engine.world().dt;
    for (;;) {
        const double time = static_cast<double>(engine.world().tick_index) * dt;
        if (time > *end + kTimeEpsilon) {
            break;
        }
        out.push_back(engine.step(trace.sample(time)));
    }
    return out;
}

int replay_files(const std::filesystem::path& activity_path,
                 const std::filesystem::path& trace_path, const std::filesystem::path& out_path,
                 std::optional<double> tick_rate_hz, std::ostream& err) {
    const auto activity_text = read_file(activity_path);
    if (!activity_text) {
        err << "error: cannot read activity file " << activity_path << '\n';
        return kReplayIoError;
    }
    const ParseResult parsed = parse_activity(*activity_text);
    if (!parsed) {
        for (const Diagnostic& d : parsed.diagnostics) {
            err << activity_path.string() << ':' << format(d) << '\n';
        }
        return kReplayInvalid;
    }

    const auto trace_text = read_file(trace_path);
    if (!trace_text) {
        err << "error: cannot read trace file " << trace_path << '\n';
        return kReplayIoError;
    }
    InputTrace trace;
    try {
        trace = parse_trace(*trace_text);
    } catch (const TraceError& e) {
        err << trace_path.string() << ": " << e.what() << '\n';
        return kReplayInvalid;
    }

    std::optional<Engine> engine;
    try {
        engine.emplace(build_engine(*parsed.document, tick_rate_hz));
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kReplayInvalid;
    }

    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) {
        err << "error: cannot write " << out_path << '\n';
        return kReplayIoError;
    }
    for (const TickSnapshot& snap : run_replay(*engine, trace)) {
        out << wire::encode_snapshot(snap) << '\n';
    }
    out.flush();
    if (!out) {
        err << "error: write to " << out_path << " failed\n";
        return kReplayIoError;
    }
    return kReplayOk;
}

}  // namespace phast
