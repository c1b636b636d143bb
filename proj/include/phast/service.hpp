#pragma once

// Live session: one engine ticked at a fixed rate, fed by a latest-input
// mailbox and observed by any number of WebSocket clients.

#include "phast/activity.hpp"
#include "phast/engine.hpp"

#include <atomic>
#include <chrono>
#include <cstddef>
#include <deque>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

namespace phast::service {

using Clock = std::chrono::steady_clock;

inline constexpr std::chrono::milliseconds kDefaultStaleness{250};
inline constexpr std::size_t kDefaultQueueLimit = 64;

/// Last-writer-wins input slot. Samples older than the staleness window read
/// as zero.
class InputMailbox {
public:
    explicit InputMailbox(Clock::duration staleness = kDefaultStaleness) : staleness_(staleness) {}

    void post(const UserInput& u, Clock::time_point at);
    UserInput sample(Clock::time_point now) const;

private:
    mutable std::mutex mutex_;
    Clock::duration staleness_;
    std::optional<std::pair<UserInput, Clock::time_point>> latest_;
};

/// Outbound message queue for one client. Pushing past the limit drops the
/// oldest queued messages; an entry that is mid-write is never dropped.
class BoundedQueue {
public:
    explicit BoundedQueue(std::size_t limit = kDefaultQueueLimit) : limit_(limit) {}

    void push(std::string message);
    bool empty() const { return items_.empty(); }
    /// Queued entries plus the one being written, if any.
    std::size_t size() const { return items_.size() + (writing_ ? 1 : 0); }
    std::size_t dropped() const { return dropped_; }

    /// Takes the front entry for writing; the reference stays valid until
    /// finish_write(). Requires !empty() and !writing().
    const std::string& begin_write();
    /// Removes the entry handed out by begin_write().
    void finish_write();
    bool writing() const { return writing_; }

private:
    std::size_t limit_;
    std::deque<std::string> items_;
    std::string in_flight_;
    std::size_t dropped_ = 0;
    bool writing_ = false;
};

/// Fan-out target for messages produced by the engine loop.
class Broadcaster {
public:
    virtual ~Broadcaster() = default;
    virtual void broadcast(const std::string& message) = 0;
};

using Reply = std::function<void(std::string)>;

struct SessionConfig {
    /// Rate every loaded activity is stepped at, fixed for the session.
    /// Unset means the rate of the activity the session starts with.
    std::optional<double> tick_rate_hz;
    Clock::duration staleness = kDefaultStaleness;
};

/// Engine plus the two channels the network side may touch. handle_frame is
/// safe from any thread; tick must be called from one thread only.
class SessionLoop {
public:
    SessionLoop(const ActivityDocument& doc, Broadcaster& out, SessionConfig config = {});

    /// Decodes one client frame. Inputs go to the mailbox; load, reset and
    /// set_mode are queued for the next tick. Errors are sent through `reply`.
    void handle_frame(std::string_view text, const Reply& reply, Clock::time_point now);

    /// Applies queued commands, then steps the engine once and broadcasts
    /// the resulting state.
    TickSnapshot tick(Clock::time_point now);

    /// The `loaded` message describing the current activity.
    std::string loaded_message() const;

    double tick_rate_hz() const { return rate_hz_; }
    const Engine& engine() const { return engine_; }

private:
    struct LoadCommand {
        std::string text;
        Reply reply;
    };
    struct ResetCommand {};
    struct ModeCommand {
        FallthroughMode mode;
    };
    using Command = std::variant<LoadCommand, ResetCommand, ModeCommand>;

    void apply(Command& command);

    Broadcaster& out_;
    double rate_hz_;
    InputMailbox mailbox_;
    Engine engine_;

    std::mutex commands_mutex_;
    std::vector<Command> commands_;

    mutable std::mutex loaded_mutex_;
    std::string loaded_;
};

struct ServerOptions {
    std::string address = "127.0.0.1";
    /// 0 picks an ephemeral port; see Server::port().
    unsigned short port = 0;
    std::size_t queue_limit = kDefaultQueueLimit;
    SessionConfig session;
};

/// WebSocket front end. start() binds and launches the network thread and the
/// engine thread; stop() joins both.
class Server {
public:
    Server(const ActivityDocument& doc, ServerOptions options);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    void start();
    void stop();

    unsigned short port() const;
    std::size_t client_count() const;
    std::int64_t ticks_run() const { return ticks_run_.load(); }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::atomic<std::int64_t> ticks_run_{0};
};

/// CLI entry point: loads the activity and serves until SIGINT or SIGTERM.
/// Returns 1 for an invalid activity and 2 for I/O or bind failures.
int serve_file(const std::filesystem::path& activity_path, unsigned short port,
               std::optional<double> tick_rate_hz, std::ostream& err);

}  // namespace phast::service
