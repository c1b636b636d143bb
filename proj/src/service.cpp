#include "phast/service.hpp"

#include "phast/wire.hpp"

#include <boost/asio/dispatch.hpp>
#include <boost/asio/io_context.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/signal_set.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <condition_variable>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

namespace phast::service {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

// ---------------------------------------------------------------- mailbox

void InputMailbox::post(const UserInput& u, Clock::time_point at) {
    std::lock_guard lock(mutex_);
    latest_.emplace(u, at);
}

UserInput InputMailbox::sample(Clock::time_point now) const {
    std::lock_guard lock(mutex_);
    if (!latest_ || now - latest_->second > staleness_) {
        return {};
    }
    return latest_->first;
}

// ------------------------------------------------------------------ queue

void BoundedQueue::push(std::string message) {
    items_.push_back(std::move(message));
    while (items_.size() > limit_) {
        items_.pop_front();
        ++dropped_;
    }
}

const std::string& BoundedQueue::begin_write() {
    in_flight_ = std::move(items_.front());
    items_.pop_front();
    writing_ = true;
    return in_flight_;
}

void BoundedQueue::finish_write() {
    in_flight_.clear();
    writing_ = false;
}

// ---------------------------------------------------------------- session

namespace {

std::string loaded_for(const ActivityDocument& doc, const Engine& engine) {
    return wire::encode_loaded(doc.name, engine.tree().tree().labels());
}

std::string join_diagnostics(const ParseResult& result) {
    std::string out;
    for (const Diagnostic& d : result.diagnostics) {
        if (!out.empty()) {
            out += '\n';
        }
        out += format(d);
    }
    return out;
}

}  // namespace

SessionLoop::SessionLoop(const ActivityDocument& doc, Broadcaster& out, SessionConfig config)
    : out_(out),
      rate_hz_(config.tick_rate_hz.value_or(doc.tick_rate_hz)),
      mailbox_(config.staleness),
      engine_(build_engine(doc, rate_hz_)),
      loaded_(loaded_for(doc, engine_)) {}

void SessionLoop::handle_frame(std::string_view text, const Reply& reply, Clock::time_point now) {
    auto decoded = wire::decode_client(text);
    if (auto* err = std::get_if<wire::ClientDecodeError>(&decoded)) {
        reply(wire::encode_error(err->code, err->detail));
        return;
    }
    auto& message = std::get<wire::ClientMessage>(decoded);
    if (auto* input = std::get_if<wire::InputMessage>(&message)) {
        mailbox_.post(input->u, now);
        return;
    }
    std::lock_guard lock(commands_mutex_);
    if (auto* load = std::get_if<wire::LoadMessage>(&message)) {
        commands_.emplace_back(LoadCommand{std::move(load->activity), reply});
    } else if (std::holds_alternative<wire::ResetMessage>(message)) {
        commands_.emplace_back(ResetCommand{});
    } else {
        commands_.emplace_back(ModeCommand{std::get<wire::SetModeMessage>(message).mode});
    }
}

void SessionLoop::apply(Command& command) {
    if (auto* load = std::get_if<LoadCommand>(&command)) {
        const ParseResult parsed = parse_activity(load->text);
        if (!parsed) {
            load->reply(wire::encode_error(wire::kErrorLoadFailed, join_diagnostics(parsed)));
            return;
        }
        engine_ = build_engine(*parsed.document, rate_hz_);
        std::string loaded = loaded_for(*parsed.document, engine_);
        {
            std::lock_guard lock(loaded_mutex_);
            loaded_ = loaded;
        }
        out_.broadcast(loaded);
    } else if (std::holds_alternative<ResetCommand>(command)) {
        engine_.reset();
        out_.broadcast(loaded_message());
    } else {
        engine_.set_fallthrough(std::get<ModeCommand>(command).mode);
    }
}

TickSnapshot SessionLoop::tick(Clock::time_point now) {
    std::vector<Command> pending;
    {
        std::lock_guard lock(commands_mutex_);
        pending.swap(commands_);
    }
    for (Command& command : pending) {
        apply(command);
    }
    TickSnapshot snap = engine_.step(mailbox_.sample(now));
    out_.broadcast(wire::encode_state(snap));
    return snap;
}

std::string SessionLoop::loaded_message() const {
    std::lock_guard lock(loaded_mutex_);
    return loaded_;
}

// ----------------------------------------------------------------- server

namespace {

class Client;

class Hub : public Broadcaster {
public:
    void add(const std::shared_ptr<Client>& c) {
        std::lock_guard lock(mutex_);
        clients_.insert(c);
    }
    void remove(const std::shared_ptr<Client>& c) {
        std::lock_guard lock(mutex_);
        clients_.erase(c);
    }
    void clear() {
        std::lock_guard lock(mutex_);
        clients_.clear();
    }
    std::size_t size() const {
        std::lock_guard lock(mutex_);
        return clients_.size();
    }
    void broadcast(const std::string& message) override;

private:
    mutable std::mutex mutex_;
    std::set<std::shared_ptr<Client>> clients_;
};

class Client : public std::enable_shared_from_this<Client> {
public:
    Client(tcp::socket socket, Hub& hub, SessionLoop& loop, std::size_t limit)
        : ws_(std::move(socket)), hub_(hub), loop_(loop), queue_(limit) {}

    void run() {
        net::dispatch(ws_.get_executor(), [self = shared_from_this()] { self->on_run(); });
    }

    void send(std::string message) {
        net::post(ws_.get_executor(),
                  [self = shared_from_this(), m = std::move(message)]() mutable {
                      self->enqueue(std::move(m));
                  });
    }

private:
    void on_run() {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept([self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
    }

    void on_accept(beast::error_code ec) {
        if (ec) {
            return;
        }
        ws_.text(true);
        // Runs on this client's strand, so the greeting is queued ahead of any
        // broadcast that arrives after registration.
        enqueue(loop_.loaded_message());
        hub_.add(shared_from_this());
        do_read();
    }

    void do_read() {
        ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            self->on_read(ec);
        });
    }

    void on_read(beast::error_code ec) {
        if (ec) {
            hub_.remove(shared_from_this());
            return;
        }
        const std::string text = beast::buffers_to_string(buffer_.data());
        buffer_.consume(buffer_.size());
        const std::weak_ptr<Client> weak = weak_from_this();
        loop_.handle_frame(
            text,
            [weak](std::string reply) {
                if (auto c = weak.lock()) {
                    c->send(std::move(reply));
                }
            },
            Clock::now());
        do_read();
    }

    void enqueue(std::string message) {
        queue_.push(std::move(message));
        if (!queue_.writing()) {
            do_write();
        }
    }

    void do_write() {
        const std::string& front = queue_.begin_write();
        ws_.async_write(net::buffer(front),
                        [self = shared_from_this()](beast::error_code ec, std::size_t) {
                            self->on_write(ec);
                        });
    }

    void on_write(beast::error_code ec) {
        queue_.finish_write();
        if (ec) {
            hub_.remove(shared_from_this());
            return;
        }
        if (!queue_.empty()) {
            do_write();
        }
    }

    websocket::stream<beast::tcp_stream> ws_;
    beast::flat_buffer buffer_;
    Hub& hub_;
    SessionLoop& loop_;
    BoundedQueue queue_;
};

void Hub::broadcast(const std::string& message) {
    std::lock_guard lock(mutex_);
    for (const auto& c : clients_) {
        c->send(message);
    }
}

}  // namespace

struct Server::Impl {
    Impl(const ActivityDocument& doc, ServerOptions opts)
        : options(std::move(opts)), loop(doc, hub, options.session), acceptor(ioc) {}

    void accept() {
        acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket s) {
            if (ec) {
                return;
            }
            std::make_shared<Client>(std::move(s), hub, loop, options.queue_limit)->run();
            accept();
        });
    }

    void engine_loop(std::atomic<std::int64_t>& counter) {
        const auto period = std::chrono::duration_cast<Clock::duration>(
            std::chrono::duration<double>(1.0 / loop.tick_rate_hz()));
        auto next = Clock::now();
        std::unique_lock lock(stop_mutex);
        while (!stopping) {
            lock.unlock();
            loop.tick(Clock::now());
            ++counter;
            lock.lock();
            // A late tick is run immediately rather than skipped.
            next += period;
            stop_cv.wait_until(lock, next, [this] { return stopping; });
        }
    }

    ServerOptions options;
    Hub hub;
    SessionLoop loop;
    net::io_context ioc{1};
    tcp::acceptor acceptor;
    std::thread io_thread;
    std::thread engine_thread;

    std::mutex stop_mutex;
    std::condition_variable stop_cv;
    bool stopping = false;
    bool started = false;
};

Server::Server(const ActivityDocument& doc, ServerOptions options)
    : impl_(std::make_unique<Impl>(doc, std::move(options))) {}

Server::~Server() { stop(); }

void Server::start() {
    Impl& s = *impl_;
    if (s.started) {
        return;
    }
    const tcp::endpoint endpoint(net::ip::make_address(s.options.address), s.options.port);
    s.acceptor.open(endpoint.protocol());
    s.acceptor.set_option(net::socket_base::reuse_address(true));
    s.acceptor.bind(endpoint);
    s.acceptor.listen(net::socket_base::max_listen_connections);
    s.accept();
    s.started = true;
    s.io_thread = std::thread([&s] { s.ioc.run(); });
    s.engine_thread = std::thread([this, &s] { s.engine_loop(ticks_run_); });
}

void Server::stop() {
    Impl& s = *impl_;
    if (!s.started) {
        return;
    }
    {
        std::lock_guard lock(s.stop_mutex);
        s.stopping = true;
    }
    s.stop_cv.notify_all();
    s.engine_thread.join();
    s.ioc.stop();
    s.io_thread.join();
    // Clients own sockets bound to the io_context; release them while it lives.
    s.hub.clear();
    s.started = false;
}

unsigned short Server::port() const {
    beast::error_code ec;
    const auto ep = impl_->acceptor.local_endpoint(ec);
    return ec ? 0 : ep.port();
}

std::size_t Server::client_count() const { return impl_->hub.size(); }

int serve_file(const std::filesystem::path& activity_path, unsigned short port,
               std::optional<double> tick_rate_hz, std::ostream& err) {
    std::ifstream in(activity_path, std::ios::binary);
    if (!in) {
        err << "error: cannot read activity file " << activity_path << '\n';
        return 2;
    }
    std::ostringstream text;
    text << in.rdbuf();
    const ParseResult parsed = parse_activity(text.str());
    if (!parsed) {
        for (const Diagnostic& d : parsed.diagnostics) {
            err << activity_path.string() << ':' << format(d) << '\n';
        }
        return 1;
    }

    ServerOptions options;
    options.address = "0.0.0.0";
    options.port = port;
    options.session.tick_rate_hz = tick_rate_hz;
    std::optional<Server> server;
    try {
        server.emplace(*parsed.document, options);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    try {
        server->start();
    } catch (const std::exception& e) {
        err << "error: cannot listen on port " << port << ": " << e.what() << '\n';
        return 2;
    }
    err << "serving " << parsed.document->name << " on port " << server->port() << '\n';

    net::io_context signals_ctx;
    net::signal_set signals(signals_ctx, SIGINT, SIGTERM);
    signals.async_wait([](const beast::error_code&, int) {});
    signals_ctx.run();
    server->stop();
    return 0;
}

}  // namespace phast::service
