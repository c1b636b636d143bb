#pragma once

// Offline, deterministic runs: an input trace is sampled with zero-order hold
// at the activity's tick rate and every tick's snapshot is written out.

#include "phast/activity.hpp"
#include "phast/world.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace phast {

struct TraceRecord {
    double t = 0.0;
    UserInput u;

    friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct InputTrace {
    std::vector<TraceRecord> records;

    /// Last record at or before `time_s`; zero before the first record.
    UserInput sample(double time_s) const;
    /// Timestamp of the last record, or nullopt for an empty trace.
    std::optional<double> end_time() const;
};

class TraceError : public std::runtime_error {
public:
    TraceError(int line, const std::string& what)
        : std::runtime_error("trace line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

/// One `{"t": seconds, "u": [x, y, z]}` object per line; blank lines skipped.
InputTrace parse_trace(std::string_view text);
std::string serialize_trace(const InputTrace& trace);

/// Snapshots for ticks 0..K at `1/rate` spacing with K * dt <= end_time.
std::vector<TickSnapshot> run_replay(Engine& engine, const InputTrace& trace);

/// Exit codes of the replay command.
enum ReplayExit : int { kReplayOk = 0, kReplayInvalid = 1, kReplayIoError = 2 };

/// File-level replay. Messages go to `err`. The output file is only created
/// once both inputs have been read and validated.
int replay_files(const std::filesystem::path& activity_path,
                 const std::filesystem::path& trace_path, const std::filesystem::path& out_path,
                 std::optional<double> tick_rate_hz, std::ostream& err);

}  // namespace phast
