// Copyright (c) 2026 teleimp contributors
// Use of this source code is governed by the Apache-2.0 license, see LICENSE
#include "teleimp/server.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <deque>
#include <iostream>
#include <mutex>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "teleimp/command_queue.hpp"
#include "teleimp/error.hpp"
#include "teleimp/session.hpp"

namespace teleimp {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using Frame = std::shared_ptr<const std::string>;

namespace {
constexpr std::size_t kMaxFrameBytes = 1 << 20;
}

ServerOptions ServerOptions::from_environment() {
  ServerOptions o;
  if (const char* bind = std::getenv("TELEIMP_BIND"); bind && *bind) o.bind_address = bind;
  return o;
}

// One operator link. All members are touched on the io thread only.
class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(Server::Impl& server, std::uint64_t id) : server_(server), id_(id) {}
  virtual ~Connection() = default;

  virtual void start() = 0;
  std::uint64_t id() const noexcept { return id_; }

  /// Thread-safe: queues a frame for writing.
  void send(Frame frame);
  /// Sends `frame`, then closes.
  void reject(Frame frame);
  void shutdown();

 protected:
  virtual void write_front() = 0;
  virtual void close_transport() = 0;
  virtual asio::any_io_executor executor() = 0;


 public:
  void on_written(beast::error_code ec);

 protected:
  void admit_and_read();
  void on_frame(std::string frame);
  void on_closed();

  virtual void read_next() = 0;

  Server::Impl& server_;
  std::uint64_t id_;
  std::deque<Frame> outgoing_;
  bool writing_ = false;
  bool close_after_write_ = false;
  bool closed_ = false;
};

struct Server::Impl {
  Scenario scenario;
  ServerOptions options;
  asio::io_context ioc{1};
  tcp::acceptor ws_acceptor{ioc};
  tcp::acceptor tcp_acceptor{ioc};
  std::uint16_t ws_port = 0;
  std::uint16_t tcp_port = 0;
  std::thread io_thread;
  std::thread sim_thread;
  std::atomic<bool> running{false};
  bool started = false;

  CommandQueue queue;
  std::mutex conn_mutex;
  std::shared_ptr<Connection> active;
  std::uint64_t next_id = 1;

  mutable std::mutex telemetry_mutex;
  std::optional<wire::Telemetry> latest;
  std::atomic<std::uint64_t> applied{0};

  Impl(Scenario s, ServerOptions o)
      : scenario(std::move(s)), options(std::move(o)), queue(options.queue_capacity) {}

  void listen(tcp::acceptor& acc, std::uint16_t port, std::uint16_t& bound) {
    const tcp::endpoint ep(asio::ip::make_address(options.bind_address), port);
    acc.open(ep.protocol());
    acc.set_option(asio::socket_base::reuse_address(true));
    acc.bind(ep);
    acc.listen();
    bound = acc.local_endpoint().port();
  }

  void accept_ws();
  void accept_tcp();

  bool admit(const std::shared_ptr<Connection>& c) {
    std::lock_guard lock(conn_mutex);
    if (active && active != c) return false;
    active = c;
    return true;
  }

  bool is_active(const Connection* c) {
    std::lock_guard lock(conn_mutex);
    return active.get() == c;
  }

  void closed(const Connection* c) {
    {
      std::lock_guard lock(conn_mutex);
      if (active.get() != c) return;
      active.reset();
    }
    queue.push(QueuedCommand{wire::TeleopToggle{}, c->id(), true});
  }

  void publish(const wire::ServerMessage& msg) {
    if (const auto* tm = std::get_if<wire::Telemetry>(&msg)) {
      std::lock_guard lock(telemetry_mutex);
      latest = *tm;
    }
    std::shared_ptr<Connection> c;
    {
      std::lock_guard lock(conn_mutex);
      c = active;
    }
    if (c) c->send(std::make_shared<const std::string>(wire::encode(msg)));
  }

  void sim_loop();
};

// ---------------------------------------------------------------------------

void Connection::send(Frame frame) {
  asio::post(executor(), [self = shared_from_this(), frame = std::move(frame)] {
    if (self->closed_) return;
    self->outgoing_.push_back(frame);
    if (!self->writing_) {
      self->writing_ = true;
      self->write_front();
    }
  });
}

void Connection::reject(Frame frame) {
  asio::post(executor(), [self = shared_from_this()] { self->close_after_write_ = true; });
  send(std::move(frame));
}

void Connection::shutdown() {
  asio::post(executor(), [self = shared_from_this()] {
    if (self->closed_) return;
    self->closed_ = true;
    self->close_transport();
  });
}

void Connection::on_written(beast::error_code ec) {
  if (ec) {
    on_closed();
    return;
  }
  outgoing_.pop_front();
  if (!outgoing_.empty()) {
    write_front();
    return;
  }
  writing_ = false;
  if (close_after_write_ && !closed_) {
    closed_ = true;
    close_transport();
  }
}

void Connection::admit_and_read() {
  if (!server_.admit(shared_from_this())) {
    reject(std::make_shared<const std::string>(
        wire::encode(wire::ServerMessage{wire::ErrorReply{"busy", "another operator is connected"}})));
    return;
  }
  read_next();
}

void Connection::on_frame(std::string frame) {
  if (!server_.is_active(this)) return;
  try {
    wire::DecodedClient decoded = wire::decode_client(frame);
    server_.queue.push(QueuedCommand{std::move(decoded.message), id_, false});
  } catch (const Error& e) {
    send(std::make_shared<const std::string>(
        wire::encode(wire::ServerMessage{wire::ErrorReply{"parse", e.what()}})));
  }
}

void Connection::on_closed() {
  if (!closed_) {
    closed_ = true;
    close_transport();
  }
  server_.closed(this);
}

class WsConnection final : public Connection {
 public:
  WsConnection(Server::Impl& server, std::uint64_t id, tcp::socket socket)
      : Connection(server, id), ws_(std::move(socket)) {}

  void start() override {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.read_message_max(kMaxFrameBytes);
    ws_.text(true);
    ws_.async_accept([self = std::static_pointer_cast<WsConnection>(shared_from_this())](beast::error_code ec) {
      if (ec) return;
      self->admit_and_read();
    });
  }

 protected:
  asio::any_io_executor executor() override { return ws_.get_executor(); }

  void read_next() override {
    ws_.async_read(buffer_, [self = std::static_pointer_cast<WsConnection>(shared_from_this())](
                                beast::error_code ec, std::size_t) {
      if (ec) {
        self->on_closed();
        return;
      }
      std::string frame = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->on_frame(std::move(frame));
      if (!self->closed_) self->read_next();
    });
  }

  void write_front() override {
    ws_.async_write(asio::buffer(*outgoing_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_written(ec); });
  }

  void close_transport() override {
    ws_.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) {});
  }

 private:
  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
};

class TcpConnection final : public Connection {
 public:
  TcpConnection(Server::Impl& server, std::uint64_t id, tcp::socket socket)
      : Connection(server, id), socket_(std::move(socket)), buffer_(kMaxFrameBytes) {}

  void start() override { admit_and_read(); }

 protected:
  asio::any_io_executor executor() override { return socket_.get_executor(); }

  void read_next() override {
    asio::async_read_until(socket_, buffer_, '\n',
                           [self = std::static_pointer_cast<TcpConnection>(shared_from_this())](
                               beast::error_code ec, std::size_t n) {
                             if (ec) {
                               self->on_closed();
                               return;
                             }
                             std::string line(asio::buffers_begin(self->buffer_.data()),
                                              asio::buffers_begin(self->buffer_.data()) +
                                                  static_cast<std::ptrdiff_t>(n - 1));
                             self->buffer_.consume(n);
                             if (!line.empty() && line.back() == '\r') line.pop_back();
                             if (!line.empty()) self->on_frame(std::move(line));
                             if (!self->closed_) self->read_next();
                           });
  }

  void write_front() override {
    line_ = *outgoing_.front() + '\n';
    asio::async_write(socket_, asio::buffer(line_),
                      [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_written(ec); });
  }

  void close_transport() override {
    beast::error_code ec;
    socket_.shutdown(tcp::socket::shutdown_both, ec);
    socket_.close(ec);
  }

 private:
  tcp::socket socket_;
  asio::streambuf buffer_;
  std::string line_;
};

void Server::Impl::accept_ws() {
  ws_acceptor.async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
    if (ec) return;  // acceptor closed
    std::make_shared<WsConnection>(*this, next_id++, std::move(socket))->start();
    accept_ws();
  });
}

void Server::Impl::accept_tcp() {
  tcp_acceptor.async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
    if (ec) return;
    std::make_shared<TcpConnection>(*this, next_id++, std::move(socket))->start();
    accept_tcp();
  });
}

void Server::Impl::sim_loop() {
  SessionOptions so;
  if (options.log_dir) {
    so.log_mode = LogMode::per_engagement;
    so.log_path = *options.log_dir;
  }
  so.wall_clock_headers = true;
  so.telemetry_rate = options.telemetry_rate;
  so.config = Json{{"mode", "serve"}};

  auto session = std::make_unique<Session>(scenario, so, [this](const wire::ServerMessage& m) { publish(m); });
  const auto dt = std::chrono::duration<double>(scenario.scene.dt);
  auto epoch = std::chrono::steady_clock::now();
  std::uint64_t steps = 0;
  std::vector<QueuedCommand> batch;

  while (running.load()) {
    if (options.realtime) {
      const auto due = epoch + std::chrono::duration_cast<std::chrono::steady_clock::duration>(dt * steps);
      if (std::chrono::steady_clock::now() < due) std::this_thread::sleep_until(due);
    } else if (steps % 64 == 0) {
      std::this_thread::yield();
    }
    batch.clear();
    queue.drain(batch);
    try {
      for (QueuedCommand& c : batch) {
        if (c.disconnect) {
          if (session->clutch().engaged) session->handle(wire::TeleopToggle{});
        } else {
          session->handle(c.message);
        }
        applied.fetch_add(1);
      }
      session->tick();
    } catch (const Error& e) {
      // a diverged world is restarted from the scenario; the operator is told
      std::cerr << "teleimp: " << e.what() << " (simulation reset)\n";
      publish(wire::ErrorReply{std::string(to_string(e.code())), e.what()});
      session.reset();
      session = std::make_unique<Session>(scenario, so, [this](const wire::ServerMessage& m) { publish(m); });
      epoch = std::chrono::steady_clock::now();
      steps = 0;
      continue;
    }
    ++steps;
  }
  session->finish();
}

// ---------------------------------------------------------------------------

Server::Server(Scenario scenario, ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(scenario), std::move(options))) {
  impl_->scenario.validate();
}

Server::~Server() { stop(); }

void Server::start() {
  Impl& s = *impl_;
  if (s.started) throw Error(Errc::state, "server already started");
  try {
    s.listen(s.ws_acceptor, s.options.ws_port, s.ws_port);
    if (s.options.enable_tcp) s.listen(s.tcp_acceptor, s.options.tcp_port, s.tcp_port);
  } catch (const boost::system::system_error& e) {
    throw Error(Errc::io, std::string("cannot listen on ") + s.options.bind_address + ": " + e.what());
  }
  s.started = true;
  s.running = true;
  s.accept_ws();
  if (s.options.enable_tcp) s.accept_tcp();
  s.io_thread = std::thread([&s] { s.ioc.run(); });
  s.sim_thread = std::thread([&s] { s.sim_loop(); });
}

void Server::stop() {
  Impl& s = *impl_;
  if (!s.started) return;
  s.started = false;
  s.running = false;
  if (s.sim_thread.joinable()) s.sim_thread.join();
  asio::post(s.ioc, [&s] {
    beast::error_code ec;
    s.ws_acceptor.close(ec);
    s.tcp_acceptor.close(ec);
  });
  {
    std::lock_guard lock(s.conn_mutex);
    if (s.active) s.active->shutdown();
    s.active.reset();
  }
  // let pending closes flush briefly, then stop
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  s.ioc.stop();
  if (s.io_thread.joinable()) s.io_thread.join();
}

std::uint16_t Server::ws_port() const noexcept { return impl_->ws_port; }
std::uint16_t Server::tcp_port() const noexcept { return impl_->tcp_port; }

std::optional<wire::Telemetry> Server::latest_telemetry() const {
  std::lock_guard lock(impl_->telemetry_mutex);
  return impl_->latest;
}

std::uint64_t Server::commands_applied() const noexcept { return impl_->applied.load(); }
std::uint64_t Server::commands_dropped() const noexcept { return impl_->queue.dropped(); }

}  // namespace teleimp
