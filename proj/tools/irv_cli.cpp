#include <poll.h>
#include <unistd.h>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "irv/server.hpp"
#include "irv/session.hpp"

namespace {

std::atomic<bool> g_sigint{false};

extern "C" void on_sigint(int) { g_sigint = true; }

// Reads one line from stdin, pumping console commands while waiting.
// Returns nullopt at end of input.
std::optional<std::string> read_line(const std::function<void()>& idle) {
  std::string line;
  if (!idle) {
    if (!std::getline(std::cin, line)) return std::nullopt;
    return line;
  }
  for (;;) {
    pollfd p{STDIN_FILENO, POLLIN, 0};
    int r = ::poll(&p, 1, 50);
    if (r > 0) {
      if (!std::getline(std::cin, line)) return std::nullopt;
      return line;
    }
    idle();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"irv: interactive runtime verification of assembly programs"};
  std::string script;
  std::optional<int> port;
  bool no_color = false;
  bool fail_on_violation = false;
  app.add_option("--script", script, "Replay commands from a file and exit")->check(CLI::ExistingFile);
  app.add_option("--port", port, "Start the session server on this port (0 picks one)")->check(CLI::Range(0, 65535));
  app.add_flag("--no-color", no_color, "Plain output");
  app.add_flag("--fail-on-violation", fail_on_violation, "Exit with 2 when a non-accepting state is entered");
  CLI11_PARSE(app, argc, argv);

  bool interactive = script.empty();
  irv::cli::SessionOptions opts;
  opts.color = !no_color && interactive && ::isatty(STDOUT_FILENO);
  if (!interactive) opts.base_dir = std::filesystem::path(script).parent_path();
  irv::cli::Session session(std::cout, opts);

  irv::protocol::Inbox inbox;
  std::unique_ptr<irv::protocol::Server> server;
  std::unique_ptr<irv::protocol::Bridge> bridge;
  auto install_poll = [&] {
    session.set_interrupt_poll([&] { return g_sigint.exchange(false) || inbox.take_interrupt(); });
  };
  auto start_server = [&](std::uint16_t p) -> std::string {
    if (server) return "Session server already listening on 127.0.0.1:" + std::to_string(server->port());
    server = std::make_unique<irv::protocol::Server>(inbox);
    std::uint16_t bound = server->start(p);
    bridge = std::make_unique<irv::protocol::Bridge>(session, *server, inbox);
    install_poll();
    bridge->refresh_hello();
    return "Session server listening on 127.0.0.1:" + std::to_string(bound);
  };
  session.set_graph_starter([&] { return start_server(port ? static_cast<std::uint16_t>(*port) : irv::protocol::kDefaultPort); });
  install_poll();
  std::signal(SIGINT, on_sigint);

  if (port) {
    try {
      std::cout << start_server(static_cast<std::uint16_t>(*port)) << '\n';
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
  }

  auto execute = [&](const std::string& line) { return bridge ? bridge->execute(line) : session.execute(line); };

  if (!interactive) {
    std::ifstream in(script);
    for (std::string line; std::getline(in, line);) {
      std::cout << "(irv) " << line << '\n';
      irv::cli::LineStatus st = execute(line);
      if (bridge) bridge->pump();
      if (st == irv::cli::LineStatus::Exit) break;
      if (st == irv::cli::LineStatus::Error) return 1;
    }
    return fail_on_violation && session.violation_seen() ? 2 : 0;
  }

  std::setvbuf(stdin, nullptr, _IONBF, 0);  // poll() must see every pending byte
  bool tty = ::isatty(STDIN_FILENO);
  for (;;) {
    if (tty) std::cout << "(irv) " << std::flush;
    std::function<void()> idle;
    if (bridge) idle = [&] { bridge->pump(); };
    auto line = read_line(idle);
    if (!line) break;
    g_sigint = false;
    if (execute(*line) == irv::cli::LineStatus::Exit) break;
  }
  return fail_on_violation && session.violation_seen() ? 2 : 0;
}
