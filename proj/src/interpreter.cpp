#include "guitrace/interpreter.hpp"

#include <algorithm>

#include "guitrace/error.hpp"

namespace guitrace {

namespace {

/// Fault raised inside the executor; converted into a flagged record.
struct RuntimeFault {
  LineIndex line;
  std::string message;
};

std::uint64_t as_bits(std::int64_t v) { return static_cast<std::uint64_t>(v); }
std::int64_t from_bits(std::uint64_t v) { return static_cast<std::int64_t>(v); }

}  // namespace

std::string EventRecord::kindName() const { return event ? std::string(to_string(event->kind)) : "startup"; }

Json record_to_json(const EventRecord& r, bool withTimestamp) {
  Json snap = Json::array();
  for (const auto& e : r.snapshot.entries) {
    snap.push_back({{"id", e.id},
                    {"kind", std::string(to_string(e.kind))},
                    {"label", e.label},
                    {"depth", e.depth},
                    {"origin", e.origin}});
  }
  Json j{{"seq", r.seq},
         {"kind", r.kindName()},
         {"handlers", r.handlers},
         {"delta", r.coverageDelta},
         {"snapshot", snap}};
  if (r.event) {
    j["widget"] = r.event->widget;
    j["payload"] = r.event->payload;
  }
  if (withTimestamp) j["timestampMs"] = r.timestampMs;
  if (r.error) j["error"] = *r.error;
  return j;
}

EventRecord record_from_json(const Json& j) {
  try {
    EventRecord r;
    r.seq = j.at("seq").get<Seq>();
    if (auto it = j.find("timestampMs"); it != j.end()) r.timestampMs = it->get<std::int64_t>();
    const auto kind = j.at("kind").get<std::string>();
    if (kind != "startup") {
      const auto ek = event_kind_from_string(kind);
      if (!ek) throw ParseError("record has unknown event kind '" + kind + "'");
      r.event = FiredEvent{j.at("widget").get<std::string>(), *ek, j.at("payload").get<std::int64_t>()};
    }
    r.handlers = j.at("handlers").get<std::vector<std::string>>();
    r.coverageDelta = j.at("delta").get<std::vector<LineIndex>>();
    if (!std::is_sorted(r.coverageDelta.begin(), r.coverageDelta.end()) ||
        std::adjacent_find(r.coverageDelta.begin(), r.coverageDelta.end()) != r.coverageDelta.end())
      throw ParseError("record delta must be strictly increasing");
    for (const auto& e : j.at("snapshot")) {
      const auto wk = widget_kind_from_string(e.at("kind").get<std::string>());
      if (!wk) throw ParseError("snapshot has unknown widget kind");
      r.snapshot.entries.push_back({e.at("id").get<std::string>(), *wk, e.at("label").get<std::string>(),
                                    e.at("depth").get<int>(), e.at("origin").get<bool>()});
    }
    if (auto it = j.find("error"); it != j.end()) r.error = it->get<std::string>();
    return r;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("malformed event record: ") + e.what());
  }
}

Interpreter::Interpreter(const ProgramModel& model, InterpreterOptions options)
    : model_(model), options_(std::move(options)), epoch_(std::chrono::steady_clock::now()) {
  state_.coverage = LineBitmap(model.totalLines());
}

std::int64_t Interpreter::elapsedMs() const {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - epoch_).count();
}

void Interpreter::touch(LineIndex line) {
  if (options_.onLine) options_.onLine(root_, line);
  if (model_.isAppLine(line) && state_.coverage.set(line)) delta_.push_back(line);
}

std::int64_t Interpreter::eval(const Expr& e) const {
  switch (e.kind) {
    case Expr::Kind::literal: return e.literal;
    case Expr::Kind::payload: return payload_;
    case Expr::Kind::variable: {
      auto it = state_.variables.find(e.variable);
      if (it == state_.variables.end()) return 0;
      // A class tag reads as 1 in integer context.
      if (const auto* v = std::get_if<std::int64_t>(&it->second)) return *v;
      return 1;
    }
    case Expr::Kind::binary: {
      const std::int64_t a = eval(e.operands[0]);
      const std::int64_t b = eval(e.operands[1]);
      switch (e.op) {
        case BinaryOp::add: return from_bits(as_bits(a) + as_bits(b));
        case BinaryOp::sub: return from_bits(as_bits(a) - as_bits(b));
        case BinaryOp::eq: return a == b ? 1 : 0;
        case BinaryOp::lt: return a < b ? 1 : 0;
        case BinaryOp::gt: return a > b ? 1 : 0;
      }
    }
  }
  return 0;
}

void Interpreter::invoke(MethodIndex m, std::size_t depth, LineIndex site) {
  if (depth > options_.maxDepth)
    throw RuntimeFault{site, "call depth exceeded " + std::to_string(options_.maxDepth) + " frames calling " +
                                 model_.method(m).id};
  run(model_.method(m).def->body, m, depth);
}

Interpreter::Flow Interpreter::run(const std::vector<Stmt>& body, MethodIndex self, std::size_t depth) {
  for (const Stmt& s : body) {
    touch(s.line);
    Flow flow = Flow::normal;
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, SetStmt>) {
            if (n.expr) state_.variables[n.var] = eval(*n.expr);
            else state_.variables[n.var] = n.newClassIndex;
          } else if constexpr (std::is_same_v<T, IfStmt>) {
            flow = run(eval(n.cond) != 0 ? n.thenBody : n.elseBody, self, depth);
          } else if constexpr (std::is_same_v<T, CallStmt>) {
            if (!model_.method(self).isLibrary && !model_.method(n.targetIndex).isLibrary)
              state_.dynamicEdges.insert({self, n.targetIndex});
            invoke(n.targetIndex, depth + 1, s.line);
          } else if constexpr (std::is_same_v<T, VCallStmt>) {
            auto it = state_.variables.find(n.receiverVar);
            const ClassIndex* tag = it == state_.variables.end() ? nullptr : std::get_if<ClassIndex>(&it->second);
            if (!tag) throw RuntimeFault{s.line, "vcall on unset receiver '" + n.receiverVar + "'"};
            if (!model_.isSubtype(*tag, n.declaredTypeIndex))
              throw RuntimeFault{s.line, "receiver '" + n.receiverVar + "' holds " + model_.cls(*tag).id +
                                             ", not a " + n.declaredType};
            auto target = model_.resolveMethod(*tag, n.methodName);
            if (!target)
              throw RuntimeFault{s.line, model_.cls(*tag).id + " has no method '" + n.methodName + "'"};
            if (!model_.method(self).isLibrary && !model_.method(*target).isLibrary)
              state_.dynamicEdges.insert({self, *target});
            invoke(*target, depth + 1, s.line);
          } else if constexpr (std::is_same_v<T, ReturnStmt>) {
            flow = Flow::returned;
          }
        },
        s.node);
    if (flow == Flow::returned) return flow;
  }
  return Flow::normal;
}

WidgetSnapshot Interpreter::snapshot(const std::string* origin) const {
  WidgetSnapshot snap;
  auto walk = [&](auto&& self, const Widget& w, int depth) -> void {
    snap.entries.push_back({w.id, w.kind, w.label, depth, origin && *origin == w.id});
    for (const auto& c : w.children) self(self, c, depth + 1);
  };
  walk(walk, model_.document().widgetRoot, 0);
  return snap;
}

EventRecord Interpreter::start() {
  if (started()) throw Error("session already started");
  EventRecord rec;
  rec.seq = state_.nextSeq++;
  rec.timestampMs = elapsedMs();
  rec.snapshot = snapshot(nullptr);
  delta_.clear();
  payload_ = 0;
  root_ = model_.mainMethod();
  try {
    invoke(root_, 1, model_.method(root_).def->lineSpan.first);
  } catch (const RuntimeFault& f) {
    rec.error = "line " + std::to_string(f.line) + ": " + f.message;
  }
  std::sort(delta_.begin(), delta_.end());
  rec.coverageDelta = std::move(delta_);
  delta_.clear();
  return rec;
}

EventRecord Interpreter::fire(const FiredEvent& event) {
  if (!started()) throw Error("session not started");
  const WidgetInfo* w = model_.findWidget(event.widget);
  if (!w) throw UnknownWidgetError("unknown widget '" + event.widget + "'");

  EventRecord rec;
  rec.seq = state_.nextSeq++;
  rec.timestampMs = elapsedMs();
  rec.event = event;
  rec.snapshot = snapshot(&event.widget);
  delta_.clear();
  payload_ = event.payload;

  std::vector<MethodIndex> handlers;
  if (auto it = w->handlers.find(event.kind); it != w->handlers.end()) handlers = it->second;
  for (MethodIndex h : handlers) rec.handlers.push_back(model_.method(h).id);

  try {
    for (MethodIndex h : handlers) {
      root_ = h;
      invoke(h, 1, model_.method(h).def->lineSpan.first);
    }
  } catch (const RuntimeFault& f) {
    rec.error = "line " + std::to_string(f.line) + ": " + f.message;
  }
  payload_ = 0;
  std::sort(delta_.begin(), delta_.end());
  rec.coverageDelta = std::move(delta_);
  delta_.clear();
  return rec;
}

std::vector<FiredEvent> parse_script(std::string_view text) {
  const Json j = parse_json(text);
  if (!j.is_array()) throw ParseError("script must be a list of events");
  std::vector<FiredEvent> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Json& e = j[i];
    const std::string where = "script[" + std::to_string(i) + "]";
    if (!e.is_object() || !e.contains("widget") || !e["widget"].is_string() || !e.contains("kind") ||
        !e["kind"].is_string())
      throw ParseError(where + ": needs string 'widget' and 'kind'");
    const auto kind = event_kind_from_string(e["kind"].get<std::string>());
    if (!kind) throw ParseError(where + ": unknown event kind '" + e["kind"].get<std::string>() + "'");
    std::int64_t payload = 0;
    if (auto it = e.find("payload"); it != e.end()) {
      if (!it->is_number_integer()) throw ParseError(where + ": payload must be an integer");
      payload = it->get<std::int64_t>();
    }
    out.push_back({e["widget"].get<std::string>(), *kind, payload});
  }
  return out;
}

std::vector<FiredEvent> load_script(const std::string& path) { return parse_script(read_file(path)); }

std::string serialize_script(const std::vector<FiredEvent>& script) {
  Json arr = Json::array();
  for (const auto& e : script)
    arr.push_back({{"widget", e.widget}, {"kind", std::string(to_string(e.kind))}, {"payload", e.payload}});
  return to_canonical(arr);
}

std::vector<EventRecord> run_script_records(const ProgramModel& model, const std::vector<FiredEvent>& script,
                                            RuntimeState* finalState) {
  for (const auto& e : script)
    if (!model.findWidget(e.widget)) throw UnknownWidgetError("script names unknown widget '" + e.widget + "'");
  Interpreter interp(model);
  std::vector<EventRecord> out;
  out.push_back(interp.start());
  for (const auto& e : script) out.push_back(interp.fire(e));
  if (finalState) *finalState = interp.state();
  return out;
}

}  // namespace guitrace
