#pragma once

// Local TCP relay between a Session and graph consoles. The server owns no
// executive state: inbound commands land in an Inbox that the foreground
// loop drains, and outbound messages are broadcast from that loop.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "irv/protocol.hpp"
#include "irv/session.hpp"

namespace irv::protocol {

inline constexpr std::uint16_t kDefaultPort = 7845;

class ServerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct InboxItem {
  int client = 0;
  std::string command;
};

/// Thread-safe FIFO of validated inbound commands.
class Inbox {
 public:
  void push(InboxItem item) {
    {
      std::lock_guard lk(mu_);
      q_.push_back(std::move(item));
    }
    cv_.notify_all();
  }

  std::optional<InboxItem> try_pop() {
    std::lock_guard lk(mu_);
    if (q_.empty()) return std::nullopt;
    InboxItem i = std::move(q_.front());
    q_.pop_front();
    return i;
  }

  std::optional<InboxItem> pop_for(std::chrono::milliseconds d) {
    std::unique_lock lk(mu_);
    if (!cv_.wait_for(lk, d, [&] { return !q_.empty(); })) return std::nullopt;
    InboxItem i = std::move(q_.front());
    q_.pop_front();
    return i;
  }

  bool empty() const {
    std::lock_guard lk(mu_);
    return q_.empty();
  }

  /// Interrupts bypass the queue so they can cut into a running program.
  void request_interrupt() { interrupt_ = true; }
  bool take_interrupt() { return interrupt_.exchange(false); }

 private:
  std::atomic<bool> interrupt_{false};
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<InboxItem> q_;
};

/// Whether a REPL line may be sent by a console. Returns the reason when not.
inline std::optional<std::string> reject_remote_command(const std::string& line) {
  cli::ParsedLine p = cli::classify(line);
  switch (p.verb) {
    case cli::Verb::Empty: return "empty command";
    case cli::Verb::Unknown: return "unknown command '" + line + "'";
    case cli::Verb::ShowGraph: return "show-graph is not available remotely";
    case cli::Verb::Exit: return "exit is not available remotely";
    default: return std::nullopt;
  }
}

class Server {
 public:
  explicit Server(Inbox& inbox) : inbox_(inbox) {}
  ~Server() { stop(); }
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds 127.0.0.1:port (0 picks a free port) and returns the bound port.
  std::uint16_t start(std::uint16_t port = kDefaultPort) {
    if (running_) throw ServerError("server already running");
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw ServerError(std::string("socket: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(fd, 8) < 0) {
      std::string err = std::strerror(errno);
      ::close(fd);
      throw ServerError("cannot listen on port " + std::to_string(port) + ": " + err);
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    listen_fd_ = fd;
    port_ = ntohs(addr.sin_port);
    running_ = true;
    accept_thread_ = std::thread([this] { accept_loop(); });
    return port_;
  }

  void stop() {
    if (!running_.exchange(false)) return;
    if (accept_thread_.joinable()) accept_thread_.join();
    ::close(listen_fd_);
    std::vector<std::thread> readers;
    {
      std::lock_guard lk(mu_);
      for (auto& c : clients_) ::shutdown(c->fd, SHUT_RDWR);
      readers.swap(readers_);
    }
    for (auto& t : readers) t.join();
    std::lock_guard lk(mu_);
    for (auto& c : clients_) ::close(c->fd);
    clients_.clear();
  }

  bool running() const { return running_; }
  std::uint16_t port() const { return port_; }

  /// Replaces the cached hello and sends it to every client.
  void set_hello(Hello h) {
    std::lock_guard lk(mu_);
    hello_ = std::move(h);
    for (auto& c : clients_) send_hello_locked(*c);
  }

  void broadcast(const Body& b) {
    std::lock_guard lk(mu_);
    for (auto& c : clients_) send_locked(*c, b);
  }

  std::size_t client_count() const {
    std::lock_guard lk(mu_);
    std::size_t n = 0;
    for (const auto& c : clients_) n += c->alive ? 1 : 0;
    return n;
  }

  std::uint64_t last_seq() const {
    std::lock_guard lk(mu_);
    return seq_;
  }

 private:
  struct Client {
    int id = 0;
    int fd = -1;
    bool controller = false;
    bool alive = true;
  };

  void accept_loop() {
    while (running_) {
      pollfd p{listen_fd_, POLLIN, 0};
      if (::poll(&p, 1, 50) <= 0) continue;
      int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd < 0) continue;
      std::lock_guard lk(mu_);
      auto c = std::make_shared<Client>();
      c->id = ++next_id_;
      c->fd = fd;
      bool has_controller = false;
      for (const auto& o : clients_) has_controller |= o->alive && o->controller;
      c->controller = !has_controller;
      clients_.push_back(c);
      send_hello_locked(*c);
      readers_.emplace_back([this, c] { read_loop(c); });
    }
  }

  void read_loop(std::shared_ptr<Client> c) {
    std::string buf;
    char chunk[4096];
    for (;;) {
      ssize_t n = ::recv(c->fd, chunk, sizeof chunk, 0);
      if (n <= 0) break;
      buf.append(chunk, static_cast<std::size_t>(n));
      for (std::size_t nl; (nl = buf.find('\n')) != std::string::npos;) {
        std::string line = buf.substr(0, nl);
        buf.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) handle_line(*c, line);
      }
    }
    std::lock_guard lk(mu_);
    c->alive = false;
  }

  void handle_line(Client& c, const std::string& line) {
    std::optional<std::string> err;
    try {
      Message m = parse(line);
      if (auto* cmd = std::get_if<Command>(&m.body)) {
        std::lock_guard lk(mu_);
        bool controller = c.controller;
        if (!controller) {
          err = "read-only connection";
        } else if (auto why = reject_remote_command(cmd->command)) {
          err = *why;
        }
        if (!err) {
          if (cli::classify(cmd->command).verb == cli::Verb::Interrupt)
            inbox_.request_interrupt();
          else
            inbox_.push({c.id, cmd->command});
        }
      } else if (std::holds_alternative<Subscribe>(m.body)) {
        std::lock_guard lk(mu_);
        send_hello_locked(c);
      } else {
        err = std::string("unexpected message type '") + type_name(m.body) + "'";
      }
    } catch (const ProtocolError& e) {
      err = e.what();
    }
    if (err) {
      std::lock_guard lk(mu_);
      send_locked(c, Error{*err});
    }
  }

  void send_hello_locked(Client& c) {
    Hello h = hello_;
    h.controller = c.controller;
    send_locked(c, h);
  }

  void send_locked(Client& c, const Body& b) {
    if (!c.alive) return;
    std::string s = serialize(Message{++seq_, b}) + "\n";
    std::size_t off = 0;
    while (off < s.size()) {
      ssize_t n = ::send(c.fd, s.data() + off, s.size() - off, MSG_NOSIGNAL);
      if (n <= 0) {
        c.alive = false;
        return;
      }
      off += static_cast<std::size_t>(n);
    }
  }

  Inbox& inbox_;
  mutable std::mutex mu_;
  std::vector<std::shared_ptr<Client>> clients_;
  std::vector<std::thread> readers_;
  std::thread accept_thread_;
  std::atomic<bool> running_{false};
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  int next_id_ = 0;
  std::uint64_t seq_ = 0;
  Hello hello_;
};

/// Connects a Session to a Server: notes and printed lines go out as
/// messages, inbox commands are executed on the caller's thread.
class Bridge {
 public:
  Bridge(cli::Session& s, Server& srv, Inbox& inbox) : session_(s), server_(srv), inbox_(inbox) {
    session_.set_note_listener([this](const Note& n) {
      if (std::holds_alternative<LogNote>(n)) return;  // printed lines are relayed below
      server_.broadcast(from_note(n, session_.executive()));
    });
    session_.set_output_listener([this](const std::string& line) { server_.broadcast(Log{line}); });
    session_.set_interrupt_poll([this] { return inbox_.take_interrupt(); });
  }

  /// Executes a line and refreshes the cached hello when the graph changed.
  cli::LineStatus execute(const std::string& line) {
    cli::LineStatus st = session_.execute(line);
    refresh_hello();
    return st;
  }

  /// Executes every queued console command. Returns how many ran.
  std::size_t pump() {
    std::size_t n = 0;
    inbox_.take_interrupt();  // nothing was running
    while (auto item = inbox_.try_pop()) {
      execute(item->command);
      ++n;
    }
    return n;
  }

  void refresh_hello() {
    Hello h = hello_for(session_.executive());
    if (!hello_sent_ || !(h == last_hello_)) {
      last_hello_ = h;
      hello_sent_ = true;
      server_.set_hello(std::move(h));
    }
  }

 private:
  cli::Session& session_;
  Server& server_;
  Inbox& inbox_;
  Hello last_hello_;
  bool hello_sent_ = false;
};

}  // namespace irv::protocol
