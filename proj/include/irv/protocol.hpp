#pragma once

// Newline-delimited JSON messages exchanged with the graph console.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "irv/executive.hpp"

namespace irv::protocol {

inline constexpr int kVersion = 1;

using json = nlohmann::json;

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GraphState {
  std::string name;
  bool accepting = true;
  bool operator==(const GraphState&) const = default;
};

struct GraphTransition {
  std::size_t index = 0;
  std::string source;
  std::string destination;
  std::string event;
  bool on_pass = true;
  bool operator==(const GraphTransition&) const = default;
};

struct PropertyGraph {
  std::string name;
  std::string init;
  std::vector<GraphState> states;
  std::vector<GraphTransition> transitions;
  bool operator==(const PropertyGraph&) const = default;
};

struct Hello {
  int version = kVersion;
  std::vector<PropertyGraph> properties;
  std::string mode = "interactive";
  bool controller = false;
  bool operator==(const Hello&) const = default;
};

struct TakenEdge {
  std::size_t index = 0;
  std::string source;
  std::string destination;
  bool operator==(const TakenEdge&) const = default;
};

struct StateChanged {
  std::size_t monitor = 0;
  std::string property;
  SliceBinding binding;
  std::string old_state;
  std::string new_state;
  bool accepting = true;
  Environment env;
  std::string event;
  std::optional<TakenEdge> transition;  // absent for the initial state
  bool spawned = false;
  bool operator==(const StateChanged&) const = default;
};

struct EventApplied {
  std::string event;
  bool operator==(const EventApplied&) const = default;
};

struct ModeChanged {
  std::string mode;
  std::string reason;
  bool operator==(const ModeChanged&) const = default;
};

struct CheckpointList {
  std::vector<int> indices;
  bool operator==(const CheckpointList&) const = default;
};

struct Log {
  std::string line;
  bool operator==(const Log&) const = default;
};

struct Error {
  std::string message;
  bool operator==(const Error&) const = default;
};

struct Command {
  std::string command;
  bool operator==(const Command&) const = default;
};

struct Subscribe {
  bool operator==(const Subscribe&) const = default;
};

using Body =
    std::variant<Hello, StateChanged, EventApplied, ModeChanged, CheckpointList, Log, Error, Command, Subscribe>;

struct Message {
  std::uint64_t seq = 0;  // outbound only; inbound messages carry 0
  Body body;
  bool operator==(const Message&) const = default;
};

inline const char* type_name(const Body& b) {
  static constexpr const char* names[] = {"hello", "state_changed", "event_applied", "mode_changed",
                                          "checkpoint_list", "log", "error", "command", "subscribe"};
  return names[b.index()];
}

inline bool is_outbound(const Body& b) {
  return !std::holds_alternative<Command>(b) && !std::holds_alternative<Subscribe>(b);
}

// ---- JSON encoding ----------------------------------------------------------

namespace detail {

inline json env_json(const Environment& env) {
  json j = json::object();
  for (const auto& [k, v] : env) {
    if (const bool* b = std::get_if<bool>(&v))
      j[k] = *b;
    else
      j[k] = std::get<Word>(v);
  }
  return j;
}

inline Environment env_from(const json& j) {
  if (!j.is_object()) throw ProtocolError("env must be an object");
  Environment env;
  for (const auto& [k, v] : j.items()) {
    if (v.is_boolean())
      env[k] = v.get<bool>();
    else if (v.is_number_integer())
      env[k] = v.get<Word>();
    else
      throw ProtocolError("env value '" + k + "' must be an integer or a boolean");
  }
  return env;
}

inline json binding_json(const SliceBinding& b) {
  json j = json::object();
  for (const auto& [k, v] : b) j[k] = v ? json(*v) : json(nullptr);
  return j;
}

inline SliceBinding binding_from(const json& j) {
  if (!j.is_object()) throw ProtocolError("binding must be an object");
  SliceBinding b;
  for (const auto& [k, v] : j.items()) {
    if (v.is_null())
      b[k] = std::nullopt;
    else if (v.is_number_integer())
      b[k] = v.get<Word>();
    else
      throw ProtocolError("binding value '" + k + "' must be an integer or null");
  }
  return b;
}

template <class T>
T field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ProtocolError(std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ProtocolError(std::string("field '") + key + "' has the wrong type");
  }
}

template <class T>
T field_or(const json& j, const char* key, T dflt) {
  auto it = j.find(key);
  if (it == j.end()) return dflt;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ProtocolError(std::string("field '") + key + "' has the wrong type");
  }
}

inline const json& sub(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ProtocolError(std::string("missing field '") + key + "'");
  return *it;
}

}  // namespace detail

inline json to_json(const Message& m) {
  using namespace detail;
  json j;
  j["type"] = type_name(m.body);
  if (is_outbound(m.body)) j["seq"] = m.seq;
  std::visit(
      [&](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, Hello>) {
          j["version"] = b.version;
          j["mode"] = b.mode;
          j["controller"] = b.controller;
          json ps = json::array();
          for (const auto& p : b.properties) {
            json pj;
            pj["name"] = p.name;
            pj["init"] = p.init;
            pj["states"] = json::array();
            for (const auto& s : p.states) pj["states"].push_back({{"name", s.name}, {"accepting", s.accepting}});
            pj["transitions"] = json::array();
            for (const auto& t : p.transitions)
              pj["transitions"].push_back({{"index", t.index},
                                           {"source", t.source},
                                           {"destination", t.destination},
                                           {"event", t.event},
                                           {"on_pass", t.on_pass}});
            ps.push_back(std::move(pj));
          }
          j["properties"] = std::move(ps);
        } else if constexpr (std::is_same_v<T, StateChanged>) {
          j["monitor"] = b.monitor;
          j["property"] = b.property;
          j["binding"] = binding_json(b.binding);
          j["old_state"] = b.old_state;
          j["new_state"] = b.new_state;
          j["accepting"] = b.accepting;
          j["env"] = env_json(b.env);
          j["event"] = b.event;
          j["transition"] = b.transition ? json{{"index", b.transition->index},
                                                {"source", b.transition->source},
                                                {"destination", b.transition->destination}}
                                         : json(nullptr);
          j["spawned"] = b.spawned;
        } else if constexpr (std::is_same_v<T, EventApplied>) {
          j["event"] = b.event;
        } else if constexpr (std::is_same_v<T, ModeChanged>) {
          j["mode"] = b.mode;
          j["reason"] = b.reason;
        } else if constexpr (std::is_same_v<T, CheckpointList>) {
          j["indices"] = b.indices;
        } else if constexpr (std::is_same_v<T, Log>) {
          j["line"] = b.line;
        } else if constexpr (std::is_same_v<T, Error>) {
          j["message"] = b.message;
        } else if constexpr (std::is_same_v<T, Command>) {
          j["command"] = b.command;
        }
      },
      m.body);
  return j;
}

inline std::string serialize(const Message& m) { return to_json(m).dump(); }

inline Message from_json(const json& j) {
  using namespace detail;
  if (!j.is_object()) throw ProtocolError("message must be a JSON object");
  std::string type = field<std::string>(j, "type");
  Message m;
  m.seq = field_or<std::uint64_t>(j, "seq", 0);
  if (type == "hello") {
    Hello h;
    h.version = field<int>(j, "version");
    h.mode = field<std::string>(j, "mode");
    h.controller = field_or<bool>(j, "controller", false);
    for (const auto& pj : sub(j, "properties")) {
      PropertyGraph p;
      p.name = field<std::string>(pj, "name");
      p.init = field<std::string>(pj, "init");
      for (const auto& sj : sub(pj, "states"))
        p.states.push_back({field<std::string>(sj, "name"), field<bool>(sj, "accepting")});
      for (const auto& tj : sub(pj, "transitions"))
        p.transitions.push_back({field<std::size_t>(tj, "index"), field<std::string>(tj, "source"),
                                 field<std::string>(tj, "destination"), field<std::string>(tj, "event"),
                                 field_or<bool>(tj, "on_pass", true)});
      h.properties.push_back(std::move(p));
    }
    m.body = std::move(h);
  } else if (type == "state_changed") {
    StateChanged s;
    s.monitor = field_or<std::size_t>(j, "monitor", 0);
    s.property = field_or<std::string>(j, "property", "");
    s.binding = binding_from(sub(j, "binding"));
    s.old_state = field<std::string>(j, "old_state");
    s.new_state = field<std::string>(j, "new_state");
    s.accepting = field<bool>(j, "accepting");
    s.env = env_from(sub(j, "env"));
    s.event = field_or<std::string>(j, "event", "");
    if (auto it = j.find("transition"); it != j.end() && !it->is_null())
      s.transition = TakenEdge{field<std::size_t>(*it, "index"), field<std::string>(*it, "source"),
                               field<std::string>(*it, "destination")};
    s.spawned = field_or<bool>(j, "spawned", false);
    m.body = std::move(s);
  } else if (type == "event_applied") {
    m.body = EventApplied{field<std::string>(j, "event")};
  } else if (type == "mode_changed") {
    std::string mode = field<std::string>(j, "mode");
    if (mode != "interactive" && mode != "passive") throw ProtocolError("unknown mode '" + mode + "'");
    m.body = ModeChanged{mode, field_or<std::string>(j, "reason", "")};
  } else if (type == "checkpoint_list") {
    m.body = CheckpointList{field<std::vector<int>>(j, "indices")};
  } else if (type == "log") {
    m.body = Log{field<std::string>(j, "line")};
  } else if (type == "error") {
    m.body = Error{field<std::string>(j, "message")};
  } else if (type == "command") {
    m.body = Command{field<std::string>(j, "command")};
  } else if (type == "subscribe") {
    m.body = Subscribe{};
  } else {
    throw ProtocolError("unknown message type '" + type + "'");
  }
  return m;
}

/// Parses one line. Throws ProtocolError on malformed JSON or a bad message.
inline Message parse(const std::string& line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded()) throw ProtocolError("malformed JSON");
  return from_json(j);
}

// ---- construction from executive state ---------------------------------------

inline PropertyGraph graph_of(const Property& p) {
  PropertyGraph g;
  g.name = p.name;
  g.init = p.init;
  for (const auto& s : p.states) g.states.push_back({s, p.accepting.at(s)});
  for (std::size_t k = 0; k < p.delta.size(); ++k) {
    const auto& t = p.delta[k];
    g.transitions.push_back({k, t.source, t.destination, to_string(t.event), t.on_pass});
  }
  return g;
}

inline Hello hello_for(const Executive* ex) {
  Hello h;
  if (!ex) return h;
  h.mode = to_string(ex->mode());
  for (const auto& m : ex->monitors()) h.properties.push_back(graph_of(*m.property));
  return h;
}

/// The outbound body for an executive notification.
inline Body from_note(const Note& n, const Executive* ex = nullptr) {
  return std::visit(
      [&](const auto& v) -> Body {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, StateChangedNote>) {
          StateChanged s;
          s.monitor = v.monitor;
          s.property = v.property;
          s.binding = v.binding;
          s.old_state = v.old_state;
          s.new_state = v.new_state;
          s.accepting = v.accepting;
          s.env = v.env;
          s.event = v.event;
          s.spawned = v.spawned;
          if (!v.old_state.empty() && ex && v.monitor < ex->monitors().size()) {
            const auto& delta = ex->monitors()[v.monitor].property->delta;
            if (v.transition < delta.size())
              s.transition = TakenEdge{v.transition, delta[v.transition].source, delta[v.transition].destination};
          } else if (!v.old_state.empty()) {
            s.transition = TakenEdge{v.transition, v.old_state, v.new_state};
          }
          return s;
        } else if constexpr (std::is_same_v<T, EventAppliedNote>) {
          return EventApplied{v.event};
        } else if constexpr (std::is_same_v<T, ModeChangedNote>) {
          return ModeChanged{to_string(v.mode), v.reason};
        } else if constexpr (std::is_same_v<T, CheckpointListNote>) {
          return CheckpointList{v.indices};
        } else {
          return Log{v.line};
        }
      },
      n);
}

}  // namespace irv::protocol
