#include "phast/replay.hpp"
#include "phast/service.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <optional>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"Shared-control engine: offline replay and live teleoperation session"};
    app.require_subcommand(1);

    std::string activity;
    std::string trace;
    std::string out;
    std::optional<double> rate;
    unsigned short port = 8765;

    auto* replay = app.add_subcommand("replay", "Run a trace through an activity offline");
    replay->add_option("--activity", activity, "Activity file")->required();
    replay->add_option("--trace", trace, "Input trace (JSON lines)")->required();
    replay->add_option("--out", out, "Snapshot output (JSON lines)")->required();
    replay->add_option("--tick-rate", rate, "Override the activity tick rate (Hz)")
        ->check(CLI::PositiveNumber);

    auto* serve = app.add_subcommand("serve", "Run a live WebSocket session");
    serve->add_option("--activity", activity, "Activity file")->required();
    serve->add_option("--port", port, "TCP port")->required();
    serve->add_option("--tick-rate", rate, "Override the activity tick rate (Hz)")
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : phast::kReplayInvalid;
    }

    if (*replay) {
        return phast::replay_files(activity, trace, out, rate, std::cerr);
    }
    return phast::service::serve_file(activity, port, rate, std::cerr);
}
