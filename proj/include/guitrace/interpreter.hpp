#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "guitrace/program.hpp"

namespace guitrace {

struct FiredEvent {
  std::string widget;
  EventKind kind = EventKind::action;
  std::int64_t payload = 0;

  friend bool operator==(const FiredEvent&, const FiredEvent&) = default;
};

/// Flattened widget tree (pre-order) with the originating widget marked.
struct WidgetSnapshot {
  struct Entry {
    std::string id;
    WidgetKind kind = WidgetKind::panel;
    std::string label;
    int depth = 0;
    bool origin = false;

    friend bool operator==(const Entry&, const Entry&) = default;
  };

  std::vector<Entry> entries;

  friend bool operator==(const WidgetSnapshot&, const WidgetSnapshot&) = default;
};

/// One handled event, or the startup pseudo-event at seq 0.
struct EventRecord {
  Seq seq = 0;
  std::int64_t timestampMs = 0;
  std::optional<FiredEvent> event;  // empty for startup
  std::vector<std::string> handlers;
  std::vector<LineIndex> coverageDelta;  // sorted
  WidgetSnapshot snapshot;
  std::optional<std::string> error;

  bool isStartup() const noexcept { return !event.has_value(); }
  std::string kindName() const;

  /// Timestamps are deliberately excluded.
  friend bool operator==(const EventRecord& a, const EventRecord& b) {
    return a.seq == b.seq && a.event == b.event && a.handlers == b.handlers && a.coverageDelta == b.coverageDelta &&
           a.snapshot == b.snapshot && a.error == b.error;
  }
};

Json record_to_json(const EventRecord& r, bool withTimestamp = true);
/// Throws ParseError on malformed input.
EventRecord record_from_json(const Json& j);

/// Integer or class tag (the result of `new`).
using Value = std::variant<std::int64_t, ClassIndex>;

struct RuntimeState {
  std::map<std::string, Value> variables;
  LineBitmap coverage;
  Seq nextSeq = 0;
  /// Observed application-to-application calls.
  std::set<std::pair<MethodIndex, MethodIndex>> dynamicEdges;
};

struct InterpreterOptions {
  std::size_t maxDepth = 512;
  /// Called for every executed statement with the handler whose frame is
  /// running (main during startup).
  std::function<void(MethodIndex root, LineIndex line)> onLine;
};

/// Deterministic executor for a ProgramModel. Stands in for the traced
/// application: runs main, dispatches events to their bound handlers in
/// binding order, and produces one EventRecord per handled event.
///
/// Not thread-safe; callers serialize start()/fire().
class Interpreter {
 public:
  explicit Interpreter(const ProgramModel& model, InterpreterOptions options = {});

  /// Runs main. The returned record has seq 0 and carries main's coverage.
  /// A runtime fault is reported in the record's error field.
  EventRecord start();

  /// Runs the handlers bound to (widget, kind). Throws UnknownWidgetError;
  /// runtime faults end handling and are reported in the record.
  EventRecord fire(const FiredEvent& event);

  bool started() const noexcept { return state_.nextSeq > 0; }
  const RuntimeState& state() const noexcept { return state_; }
  const ProgramModel& model() const noexcept { return model_; }

 private:
  enum class Flow { normal, returned };

  void invoke(MethodIndex m, std::size_t depth, LineIndex site);
  Flow run(const std::vector<Stmt>& body, MethodIndex self, std::size_t depth);
  std::int64_t eval(const Expr& e) const;
  void touch(LineIndex line);
  WidgetSnapshot snapshot(const std::string* origin) const;
  std::int64_t elapsedMs() const;

  const ProgramModel& model_;
  InterpreterOptions options_;
  RuntimeState state_;
  std::chrono::steady_clock::time_point epoch_;
  std::int64_t payload_ = 0;
  MethodIndex root_{};
  std::vector<LineIndex> delta_;
};

/// `.events` script: a list of {widget, kind, payload}.
std::vector<FiredEvent> parse_script(std::string_view text);
std::vector<FiredEvent> load_script(const std::string& path);
std::string serialize_script(const std::vector<FiredEvent>& script);

/// start() followed by fire() for each entry. Throws UnknownWidgetError up
/// front if any entry names a missing widget; runtime faults are carried in
/// the records and later entries still run.
std::vector<EventRecord> run_script_records(const ProgramModel& model, const std::vector<FiredEvent>& script,
                                            RuntimeState* finalState = nullptr);

}  // namespace guitrace
