#include <gtest/gtest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <random>
#include <sstream>
#include <thread>

#include "irv/server.hpp"
#include "test_support.hpp"

using namespace irv;
using namespace irv::protocol;

namespace {

// ---- random messages ---------------------------------------------------------

std::string rand_name(std::mt19937_64& rng) {
  static const std::vector<std::string> names = {"init", "queue_ready", "sink", "q", "N", "maxSize", "x_1", "",
                                                 "with \"quotes\"", "tab\there", "üñí"};
  return names[rng() % names.size()];
}

Environment rand_env(std::mt19937_64& rng) {
  Environment e;
  for (int k = static_cast<int>(rng() % 4); k > 0; --k) {
    std::string key = "v" + std::to_string(rng() % 10);
    if (rng() & 1)
      e[key] = static_cast<Word>(rng());
    else
      e[key] = static_cast<bool>(rng() & 1);
  }
  return e;
}

Body rand_body(std::mt19937_64& rng, std::size_t kind) {
  switch (kind) {
    case 0: {
      Hello h;
      h.mode = rng() & 1 ? "interactive" : "passive";
      h.controller = rng() & 1;
      for (int p = static_cast<int>(rng() % 3); p > 0; --p) {
        PropertyGraph g{rand_name(rng), "init", {}, {}};
        for (int s = static_cast<int>(rng() % 4); s > 0; --s) g.states.push_back({rand_name(rng), bool(rng() & 1)});
        for (int t = static_cast<int>(rng() % 4); t > 0; --t)
          g.transitions.push_back({rng() % 9, rand_name(rng), rand_name(rng), rand_name(rng), bool(rng() & 1)});
        h.properties.push_back(std::move(g));
      }
      return h;
    }
    case 1: {
      StateChanged s;
      s.monitor = rng() % 3;
      s.property = rand_name(rng);
      if (rng() & 1) s.binding["q"] = rng() & 1 ? std::optional<Word>(static_cast<Word>(rng())) : std::nullopt;
      s.old_state = rand_name(rng);
      s.new_state = rand_name(rng);
      s.accepting = rng() & 1;
      s.env = rand_env(rng);
      s.event = rand_name(rng);
      if (rng() & 1) s.transition = TakenEdge{rng() % 7, rand_name(rng), rand_name(rng)};
      s.spawned = rng() & 1;
      return s;
    }
    case 2: return EventApplied{rand_name(rng)};
    case 3: return ModeChanged{rng() & 1 ? "interactive" : "passive", rand_name(rng)};
    case 4: {
      CheckpointList c;
      for (int k = static_cast<int>(rng() % 4); k > 0; --k) c.indices.push_back(static_cast<int>(rng() % 10));
      return c;
    }
    case 5: return Log{rand_name(rng)};
    case 6: return Error{rand_name(rng)};
    case 7: return Command{rand_name(rng)};
    default: return Subscribe{};
  }
}

// ---- a blocking test client --------------------------------------------------

class Client {
 public:
  explicit Client(std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in a{};
    a.sin_family = AF_INET;
    a.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    a.sin_port = htons(port);
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&a), sizeof a) < 0) throw std::runtime_error("connect failed");
  }
  ~Client() { ::close(fd_); }

  void send_line(const std::string& s) {
    std::string l = s + "\n";
    ASSERT_EQ(::send(fd_, l.data(), l.size(), MSG_NOSIGNAL), static_cast<ssize_t>(l.size()));
  }
  void send(const Message& m) { send_line(serialize(m)); }

  std::optional<Message> next(std::chrono::milliseconds timeout = std::chrono::milliseconds(2000)) {
    auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      if (auto nl = buf_.find('\n'); nl != std::string::npos) {
        std::string line = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        return parse(line);
      }
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) return std::nullopt;
      pollfd p{fd_, POLLIN, 0};
      if (::poll(&p, 1, static_cast<int>(left.count())) <= 0) return std::nullopt;
      char chunk[4096];
      ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n <= 0) return std::nullopt;
      buf_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  template <class T>
  std::optional<T> next_of(std::vector<Message>* skipped = nullptr) {
    while (auto m = next()) {
      if (auto* t = std::get_if<T>(&m->body)) return *t;
      if (skipped) skipped->push_back(*m);
    }
    return std::nullopt;
  }

  /// Everything that arrives until the line is quiet for `quiet`.
  std::vector<Message> drain(std::chrono::milliseconds quiet = std::chrono::milliseconds(150)) {
    std::vector<Message> out;
    while (auto m = next(quiet)) out.push_back(*m);
    return out;
  }

 private:
  int fd_ = -1;
  std::string buf_;
};

struct Live {
  std::ostringstream out;
  cli::Session session{out, cli::SessionOptions{std::string(IRV_SOURCE_DIR) + "/samples", false, 1'000'000'000}};
  Inbox inbox;
  Server server{inbox};
  std::unique_ptr<Bridge> bridge;
  std::uint16_t port = 0;

  Live() {
    port = server.start(0);
    bridge = std::make_unique<Bridge>(session, server, inbox);
    bridge->refresh_hello();
  }

  // Waits until a console command arrives and runs it.
  std::size_t pump_one(std::chrono::milliseconds timeout = std::chrono::milliseconds(2000)) {
    auto deadline = std::chrono::steady_clock::now() + timeout;
    while (std::chrono::steady_clock::now() < deadline) {
      if (std::size_t n = bridge->pump()) return n;
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    return 0;
  }
};

}  // namespace

TEST(ProtocolMessages, RoundTripOnEveryVariant) {
  std::mt19937_64 rng(11);
  for (int iter = 0; iter < 400; ++iter) {
    std::size_t kind = static_cast<std::size_t>(iter) % std::variant_size_v<Body>;
    Body b = rand_body(rng, kind);
    Message m{is_outbound(b) ? rng() % 100000 + 1 : 0, b};
    std::string line = serialize(m);
    EXPECT_EQ(line.find('\n'), std::string::npos);
    Message back = parse(line);
    EXPECT_EQ(back, m) << line;
    EXPECT_EQ(serialize(back), line);
  }
}

TEST(ProtocolMessages, TypeNamesAndSequenceField) {
  auto j = to_json(Message{7, ModeChanged{"passive", "continue"}});
  EXPECT_EQ(j["type"], "mode_changed");
  EXPECT_EQ(j["seq"], 7);
  EXPECT_FALSE(to_json(Message{0, Command{"step"}}).contains("seq"));
  EXPECT_EQ(parse(R"({"type":"command","command":"step"})").body, Body{Command{"step"}});
  EXPECT_EQ(parse(R"({"type":"subscribe"})").body, Body{Subscribe{}});
}

TEST(ProtocolMessages, UnknownFieldsAreIgnored) {
  auto m = parse(R"({"type":"log","seq":3,"line":"hi","color":"red","extra":{"a":[1,2]}})");
  EXPECT_EQ(m, (Message{3, Log{"hi"}}));
}

TEST(ProtocolMessages, MalformedInputIsRejected) {
  for (const char* bad : {"not json", "[1,2]", "{}", R"({"type":"nope"})", R"({"type":"command"})",
                          R"({"type":"command","command":5})", R"({"type":"mode_changed","mode":"sleeping"})",
                          R"({"type":"state_changed","binding":{"q":"x"},"old_state":"a","new_state":"b",
                              "accepting":true,"env":{}})",
                          R"({"type":"state_changed","binding":{},"old_state":"a","new_state":"b",
                              "accepting":true,"env":{"N":1.5}})"})
    EXPECT_THROW(parse(bad), ProtocolError) << bad;
}

TEST(ProtocolMessages, FromNotes) {
  StateChangedNote n;
  n.binding = {{"q", Word{1}}};
  n.old_state = "queue_ready";
  n.new_state = "sink";
  n.accepting = false;
  n.transition = 2;
  auto b = from_note(Note{n});
  auto* s = std::get_if<StateChanged>(&b);
  ASSERT_NE(s, nullptr);
  ASSERT_TRUE(s->transition);
  EXPECT_EQ(s->transition->destination, "sink");
  EXPECT_FALSE(s->accepting);

  StateChangedNote init;
  init.new_state = "init";
  EXPECT_FALSE(std::get<StateChanged>(from_note(Note{init})).transition);
  EXPECT_EQ(std::get<ModeChanged>(from_note(Note{ModeChangedNote{Mode::Passive, "continue"}})).mode, "passive");
  EXPECT_EQ(std::get<CheckpointList>(from_note(Note{CheckpointListNote{{0, 2}}})).indices, (std::vector<int>{0, 2}));
}

TEST(ProtocolMessages, QueueGraph) {
  auto p = dsl::load_property(irv::testing::read_file("tests/golden/queue.prop"), "queue");
  PropertyGraph g = graph_of(p);
  ASSERT_EQ(g.states.size(), 3u);
  EXPECT_EQ(g.states[2], (GraphState{"sink", false}));
  EXPECT_EQ(g.transitions.size(), p.delta.size());
}

TEST(Server, HelloOnConnectWithTheQueueGraph) {
  Live live;
  live.bridge->execute("load queue.asm");
  live.bridge->execute("load-property queue.prop");
  Client c(live.port);
  auto h = c.next_of<Hello>();
  ASSERT_TRUE(h);
  EXPECT_EQ(h->version, kVersion);
  EXPECT_TRUE(h->controller);
  ASSERT_EQ(h->properties.size(), 1u);
  EXPECT_EQ(h->properties[0].states.size(), 3u);
  EXPECT_EQ(h->mode, "interactive");
}

TEST(Server, HelloIsResentWhenAPropertyIsLoaded) {
  Live live;
  live.bridge->execute("load queue.asm");
  Client c(live.port);
  auto first = c.next_of<Hello>();
  ASSERT_TRUE(first);
  EXPECT_TRUE(first->properties.empty());
  live.bridge->execute("load-property queue.prop");
  auto second = c.next_of<Hello>();
  ASSERT_TRUE(second);
  EXPECT_EQ(second->properties.size(), 1u);
}

TEST(Server, StepCommandRunsExactlyOneStep) {
  Live live;
  live.bridge->execute("load queue.asm");
  Client c(live.port);
  ASSERT_TRUE(c.next_of<Hello>());
  c.drain();
  std::size_t ticks = live.session.executive()->counters().ticks;
  c.send(Message{0, Command{"step"}});
  ASSERT_EQ(live.pump_one(), 1u);
  EXPECT_EQ(live.session.executive()->counters().ticks, ticks + 1);
  EXPECT_EQ(live.session.executive()->counters().instructions, 1u);
  EXPECT_EQ(live.session.executive()->pc(), Address{1});
  auto got = c.drain();
  ASSERT_EQ(got.size(), 1u);
  auto* log = std::get_if<Log>(&got[0].body);
  ASSERT_NE(log, nullptr);
  EXPECT_EQ(log->line.rfind("@1", 0), 0u) << log->line;
  EXPECT_EQ(live.bridge->pump(), 0u);
}

TEST(Server, QueueOverflowRunEndsInSink) {
  Live live;
  Client c(live.port);
  for (const char* l : {"load queue.asm", "load-property queue.prop", "load-scenario overflow.sc"})
    live.bridge->execute(l);
  c.drain();
  c.send(Message{0, Command{"run"}});
  ASSERT_EQ(live.pump_one(), 1u);
  std::vector<Message> got = c.drain();
  std::optional<StateChanged> last;
  std::vector<std::string> modes;
  std::uint64_t seq = 0;
  for (const auto& m : got) {
    EXPECT_GT(m.seq, seq);
    seq = m.seq;
    if (auto* s = std::get_if<StateChanged>(&m.body)) last = *s;
    if (auto* mc = std::get_if<ModeChanged>(&m.body)) modes.push_back(mc->mode + ":" + mc->reason);
  }
  ASSERT_TRUE(last);
  EXPECT_EQ(last->new_state, "sink");
  EXPECT_FALSE(last->accepting);
  ASSERT_TRUE(last->transition);
  EXPECT_EQ(last->transition->source, "queue_ready");
  EXPECT_EQ(modes, (std::vector<std::string>{"passive:continue", "interactive:suspended"}));
}

TEST(Server, SecondClientIsReadOnly) {
  Live live;
  live.bridge->execute("load queue.asm");
  Client a(live.port);
  ASSERT_TRUE(a.next_of<Hello>()->controller);
  Client b(live.port);
  auto hb = b.next_of<Hello>();
  ASSERT_TRUE(hb);
  EXPECT_FALSE(hb->controller);
  b.send(Message{0, Command{"step"}});
  auto err = b.next_of<Error>();
  ASSERT_TRUE(err);
  EXPECT_EQ(err->message, "read-only connection");
  EXPECT_TRUE(live.inbox.empty());
  // broadcasts still reach the read-only client
  live.bridge->execute("step");
  EXPECT_TRUE(b.next_of<Log>());
}

TEST(Server, MalformedInputGetsAnErrorAndTheConnectionStays) {
  Live live;
  live.bridge->execute("load queue.asm");
  Client c(live.port);
  ASSERT_TRUE(c.next_of<Hello>());
  c.send_line("{oops");
  auto e = c.next_of<Error>();
  ASSERT_TRUE(e);
  EXPECT_EQ(e->message, "malformed JSON");
  c.send(Message{0, Command{"frobnicate"}});
  EXPECT_TRUE(c.next_of<Error>());
  c.send(Message{0, Command{"exit"}});
  EXPECT_TRUE(c.next_of<Error>());
  c.send(Message{0, Subscribe{}});
  EXPECT_TRUE(c.next_of<Hello>());
  EXPECT_TRUE(live.inbox.empty());
}

TEST(Server, InterruptCutsIntoARun) {
  Live live;
  std::ostringstream prog;
  prog << "VAR i = 0\nloop:\n  i := i + 1\n  more := i < 100000000\n  JZ more, done\n  JMP loop\ndone:\n";
  auto path = std::filesystem::temp_directory_path() / "irv_test_spin.asm";
  std::ofstream(path) << prog.str();
  live.bridge->execute("load " + path.string());
  Client c(live.port);
  ASSERT_TRUE(c.next_of<Hello>());
  std::thread t([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    c.send(Message{0, Command{"interrupt"}});
  });
  live.bridge->execute("run");
  t.join();
  EXPECT_EQ(live.session.executive()->mode(), Mode::Interactive);
  EXPECT_FALSE(live.session.executive()->at_stop());
  EXPECT_NE(live.out.str().find("Interrupted at"), std::string::npos);
}

TEST(Server, PortInUseFailsToStart) {
  Inbox inbox;
  Server a(inbox), b(inbox);
  std::uint16_t port = a.start(0);
  EXPECT_THROW(b.start(port), ServerError);
}
