#pragma once

// Line-oriented JSON encodings shared by replay output and the live session
// protocol. Every encoded value is a single line without a trailing newline.

#include "phast/engine.hpp"
#include "phast/world.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace phast::wire {

class DecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string encode_snapshot(const TickSnapshot& snap);
TickSnapshot decode_snapshot(std::string_view line);

// client -> server
struct InputMessage {
    UserInput u;
};
struct LoadMessage {
    std::string activity;
};
struct ResetMessage {};
struct SetModeMessage {
    FallthroughMode mode = FallthroughMode::PassThrough;
};

using ClientMessage = std::variant<InputMessage, LoadMessage, ResetMessage, SetModeMessage>;

/// Error codes carried by server error replies.
inline constexpr const char* kErrorMalformed = "malformed-message";
inline constexpr const char* kErrorUnknownType = "unknown-type";
inline constexpr const char* kErrorLoadFailed = "load-failed";

struct ClientDecodeError {
    std::string code;
    std::string detail;
};

/// Parses one client frame; failures come back as the error reply to send.
std::variant<ClientMessage, ClientDecodeError> decode_client(std::string_view text);
std::string encode_client(const ClientMessage& message);

// server -> client
std::string encode_state(const TickSnapshot& snap);
std::string encode_error(std::string_view code, std::string_view detail);
std::string encode_loaded(std::string_view activity, const std::vector<std::string>& labels);

struct StateMessage {
    TickSnapshot snapshot;
};
struct ErrorMessage {
    std::string code;
    std::string detail;
};
struct LoadedMessage {
    std::string activity;
    std::vector<std::string> labels;
};

using ServerMessage = std::variant<StateMessage, ErrorMessage, LoadedMessage>;

ServerMessage decode_server(std::string_view text);

}  // namespace phast::wire
