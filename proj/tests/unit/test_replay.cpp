#include "phast/replay.hpp"
#include "phast/wire.hpp"

#include "support/scenario.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

using namespace phast;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() /
                ("phast_replay_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                 ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

void write(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        out.push_back(line);
    }
    return out;
}

int trace_error_line(const std::string& text) {
    try {
        parse_trace(text);
    } catch (const TraceError& e) {
        return e.line();
    }
    return 0;
}

const fs::path kActivity = fixture::source_path("activities/pour.activity");
const fs::path kTrace = fixture::source_path("activities/pour_trace.jsonl");

}  // namespace

TEST(Trace, Parses) {
    const InputTrace t = parse_trace("{\"t\": 0, \"u\": [1, 0, 0]}\n\n{\"u\": [0, 1, 0], \"t\": 0.5}\r\n");
    ASSERT_EQ(t.records.size(), 2u);
    EXPECT_EQ(t.records[1], (TraceRecord{0.5, {0, 1, 0}}));
    EXPECT_EQ(t.end_time(), 0.5);
    EXPECT_EQ(parse_trace(serialize_trace(t)).records, t.records);
    EXPECT_FALSE(parse_trace("").end_time().has_value());
}

TEST(Trace, RejectsBadLines) {
    EXPECT_EQ(trace_error_line("{\"t\": 0, \"u\": [0, 0, 0]}\nnope\n"), 2);
    EXPECT_EQ(trace_error_line("[0, 1]\n"), 1);
    EXPECT_EQ(trace_error_line("{\"t\": 0}\n"), 1);
    EXPECT_EQ(trace_error_line("{\"t\": 0, \"u\": [0, 0]}\n"), 1);
    EXPECT_EQ(trace_error_line("{\"t\": 0, \"u\": [0, 0, \"x\"]}\n"), 1);
    EXPECT_EQ(trace_error_line("{\"t\": -1, \"u\": [0, 0, 0]}\n"), 1);
    EXPECT_EQ(trace_error_line("{\"t\": 0, \"u\": [0, 0, 0], \"v\": 1}\n"), 1);
    EXPECT_EQ(trace_error_line("{\"t\": 1, \"u\": [0, 0, 0]}\n{\"t\": 0.5, \"u\": [0, 0, 0]}\n"), 2);
    EXPECT_EQ(trace_error_line("{\"t\": 0, \"u\": [1e999, 0, 0]}\n"), 1);
}

TEST(Trace, ZeroOrderHold) {
    const InputTrace t = parse_trace("{\"t\": 0.1, \"u\": [1, 0, 0]}\n{\"t\": 0.3, \"u\": [0, 2, 0]}\n");
    EXPECT_EQ(t.sample(0.0), (Vec3{0, 0, 0}));
    EXPECT_EQ(t.sample(0.1), (Vec3{1, 0, 0}));
    EXPECT_EQ(t.sample(0.2999), (Vec3{1, 0, 0}));
    EXPECT_EQ(t.sample(0.3), (Vec3{0, 2, 0}));
    EXPECT_EQ(t.sample(100), (Vec3{0, 2, 0}));
    // Accumulated tick times land on record times.
    EXPECT_EQ(t.sample(3 * 0.1), (Vec3{0, 2, 0}));
}

TEST(RunReplay, TickCountAndClock) {
    Engine engine = build_engine(fixture::pour_document());
    const auto snaps = run_replay(engine, parse_trace("{\"t\": 0, \"u\": [0, 0, 0]}\n{\"t\": 0.1, \"u\": [0, 0, 0]}\n"));
    ASSERT_EQ(snaps.size(), 6u);
    for (std::size_t k = 0; k < snaps.size(); ++k) {
        EXPECT_EQ(snaps[k].tick_index, static_cast<std::int64_t>(k));
        EXPECT_EQ(snaps[k].time_s, static_cast<double>(k) * 0.02);
    }
    Engine empty = build_engine(fixture::pour_document());
    EXPECT_TRUE(run_replay(empty, InputTrace{}).empty());
}

TEST(RunReplay, BundledTraceEndsPoured) {
    Engine engine = build_engine(fixture::pour_document());
    const InputTrace trace = parse_trace(fixture::read_text(kTrace));
    const auto snaps = run_replay(engine, trace);
    ASSERT_FALSE(snaps.empty());
    EXPECT_FALSE(snaps.front().active_phase.has_value());
    EXPECT_EQ(snaps.back().active_phase, "r_n");
    EXPECT_LE(fixture::bottle_tilt(engine.world()), 5.0);
    EXPECT_LT(fixture::bottle_cup_distance(engine.world()), 0.5);

    // The bundled trace is the scripted operator, held between changes.
    const auto inputs = fixture::pour_inputs(fixture::pour_document());
    ASSERT_EQ(snaps.size(), inputs.size());
    for (std::size_t k = 0; k < snaps.size(); ++k) {
        EXPECT_EQ(snaps[k].applied_input, inputs[k]) << k;
    }
}

TEST(RunReplay, TickRateOverride) {
    Engine engine = build_engine(fixture::pour_document(), 10.0);
    const auto snaps = run_replay(engine, parse_trace("{\"t\": 1, \"u\": [0, 0, 0]}\n"));
    EXPECT_EQ(snaps.size(), 11u);
    EXPECT_DOUBLE_EQ(snaps.back().time_s, 1.0);
}

TEST(ReplayFiles, ByteIdenticalRuns) {
    TempDir dir;
    std::ostringstream err;
    ASSERT_EQ(replay_files(kActivity, kTrace, dir / "a.jsonl", std::nullopt, err), kReplayOk) << err.str();
    ASSERT_EQ(replay_files(kActivity, kTrace, dir / "b.jsonl", std::nullopt, err), kReplayOk) << err.str();
    const std::string a = fixture::read_text(dir / "a.jsonl");
    EXPECT_EQ(a, fixture::read_text(dir / "b.jsonl"));
    const auto out = lines(a);
    ASSERT_FALSE(out.empty());
    EXPECT_EQ(wire::decode_snapshot(out.back()).active_phase, "r_n");
    EXPECT_EQ(a.back(), '\n');
}

TEST(ReplayFiles, EmptyTraceWritesEmptyFile) {
    TempDir dir;
    write(dir / "empty.jsonl", "");
    std::ostringstream err;
    EXPECT_EQ(replay_files(kActivity, dir / "empty.jsonl", dir / "out.jsonl", std::nullopt, err), kReplayOk);
    EXPECT_TRUE(fs::exists(dir / "out.jsonl"));
    EXPECT_EQ(fs::file_size(dir / "out.jsonl"), 0u);
}

TEST(ReplayFiles, InvalidActivityCreatesNoOutput) {
    TempDir dir;
    std::ostringstream err;
    const fs::path bad = fixture::source_path("tests/data/corrupt/dangling_anchor.activity");
    EXPECT_EQ(replay_files(bad, kTrace, dir / "out.jsonl", std::nullopt, err), kReplayInvalid);
    EXPECT_FALSE(fs::exists(dir / "out.jsonl"));
    EXPECT_NE(err.str().find("error[unknown-anchor]"), std::string::npos) << err.str();
    EXPECT_NE(err.str().find("dangling_anchor.activity:"), std::string::npos);
}

TEST(ReplayFiles, InvalidTraceCreatesNoOutput) {
    TempDir dir;
    write(dir / "bad.jsonl", "{\"t\": 0, \"u\": [0, 0, 0]}\n{\"t\": 0}\n");
    std::ostringstream err;
    EXPECT_EQ(replay_files(kActivity, dir / "bad.jsonl", dir / "out.jsonl", std::nullopt, err), kReplayInvalid);
    EXPECT_FALSE(fs::exists(dir / "out.jsonl"));
    EXPECT_NE(err.str().find("line 2"), std::string::npos) << err.str();
}

TEST(ReplayFiles, IoErrors) {
    TempDir dir;
    std::ostringstream err;
    EXPECT_EQ(replay_files(dir / "missing.activity", kTrace, dir / "o.jsonl", std::nullopt, err), kReplayIoError);
    EXPECT_EQ(replay_files(kActivity, dir / "missing.jsonl", dir / "o.jsonl", std::nullopt, err), kReplayIoError);
    EXPECT_EQ(replay_files(kActivity, kTrace, dir / "no" / "such" / "o.jsonl", std::nullopt, err), kReplayIoError);
}

TEST(Cli, ReplayExitCodes) {
    TempDir dir;
    const std::string cli = PHAST_CLI_PATH;
    const auto run = [&](const std::string& args) {
        const int status = std::system((cli + " " + args + " 2>/dev/null").c_str());
        return WEXITSTATUS(status);
    };
    const fs::path out = dir / "cli.jsonl";
    EXPECT_EQ(run("replay --activity " + kActivity.string() + " --trace " + kTrace.string() + " --out " +
                  out.string()),
              0);
    std::ostringstream err;
    ASSERT_EQ(replay_files(kActivity, kTrace, dir / "lib.jsonl", std::nullopt, err), kReplayOk);
    EXPECT_EQ(fixture::read_text(out), fixture::read_text(dir / "lib.jsonl"));

    const fs::path bad = fixture::source_path("tests/data/corrupt/wrong_root.activity");
    EXPECT_EQ(run("replay --activity " + bad.string() + " --trace " + kTrace.string() + " --out " +
                  (dir / "x.jsonl").string()),
              1);
    EXPECT_EQ(run("replay --activity " + (dir / "nope").string() + " --trace " + kTrace.string() +
                  " --out " + (dir / "x.jsonl").string()),
              2);
    EXPECT_EQ(run("replay --trace " + kTrace.string()), 1);
    EXPECT_EQ(run("--help >/dev/null"), 0);
}
