#pragma once

#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "guitrace/call_graph.hpp"
#include "guitrace/interpreter.hpp"

namespace guitrace {

/// Per-record coverage numbers. ecg* are live: they grow when later records
/// cover lines of this record's event call graph.
struct EventMetrics {
  Seq seq = 0;
  std::size_t appCovered = 0;
  std::size_t appTotal = 0;
  std::size_t ecgCovered = 0;
  std::size_t ecgTotal = 0;
  std::vector<LineIndex> firstCovered;

  friend bool operator==(const EventMetrics&, const EventMetrics&) = default;
};

struct FilterSpec {
  std::set<EventKind> hiddenKinds;
  bool hideNonContributing = false;

  friend bool operator==(const FilterSpec&, const FilterSpec&) = default;
};

Json filter_to_json(const FilterSpec& f);
/// Throws ParseError on unknown kinds or wrong types.
FilterSpec filter_from_json(const Json& j);
/// Comma-separated event kinds, e.g. "mouseMoved,focusLost".
std::set<EventKind> parse_kind_list(std::string_view text);

/// An earlier record's event call graph coverage changed.
struct RetroUpdate {
  Seq seq = 0;
  std::size_t ecgCovered = 0;

  friend bool operator==(const RetroUpdate&, const RetroUpdate&) = default;
};

enum class LineStatus { covered, firstCoveredHere, uncovered };
std::string_view to_string(LineStatus s);

struct AnnotatedLine {
  LineIndex line = 0;
  LineStatus status = LineStatus::uncovered;
};

/// Host-side analytics over an ordered stream of records: cumulative
/// application coverage, per-event call graph coverage over the prefix seen
/// so far, first-covered attribution and presentation filters.
///
/// Not thread-safe.
class TraceSession {
 public:
  TraceSession(const ProgramModel& model, const CallGraph& cg);

  /// Throws OutOfOrderError unless record.seq == records().size(), and
  /// Error if the delta re-covers a line or names a non-application line.
  /// Returns the earlier records whose ecgCovered grew.
  std::vector<RetroUpdate> ingest(const EventRecord& record);

  /// (ecgCovered, ecgTotal). Throws UnknownSeqError.
  std::pair<std::size_t, std::size_t> event_cg_coverage(Seq seq) const;
  const std::vector<LineIndex>& first_covered(Seq seq) const;
  std::vector<Seq> filtered_view() const { return filtered_view(filters_); }
  std::vector<Seq> filtered_view(const FilterSpec& filters) const;
  /// Status of every line of `classId` against coverage up to and including
  /// `seq`. Throws UnknownClassError / UnknownSeqError.
  std::vector<AnnotatedLine> source_annotation(std::string_view classId, Seq seq) const;

  /// Event call graph of a record; null for startup and handler-less events.
  const EventCallGraph* eventGraph(Seq seq) const;
  /// Union of deltas of records 0..seq.
  LineBitmap coverageAt(Seq seq) const;

  const std::vector<EventRecord>& records() const noexcept { return records_; }
  const std::vector<EventMetrics>& metrics() const noexcept { return metrics_; }
  const EventMetrics& metricsFor(Seq seq) const;
  const EventRecord& record(Seq seq) const;
  const LineBitmap& cumulative() const noexcept { return cumulative_; }
  const FilterSpec& filters() const noexcept { return filters_; }
  void setFilters(FilterSpec f) { filters_ = std::move(f); }

  const ProgramModel& model() const noexcept { return model_; }
  const CallGraph& callGraph() const noexcept { return cg_; }

 private:
  void checkSeq(Seq seq) const;

  const ProgramModel& model_;
  const CallGraph& cg_;
  std::vector<EventRecord> records_;
  std::vector<EventMetrics> metrics_;
  LineBitmap cumulative_;
  FilterSpec filters_;
  /// Event call graphs keyed by "widget\0kind"; records point into this.
  std::map<std::string, std::shared_ptr<const EventCallGraph>> graphs_;
  std::vector<std::shared_ptr<const EventCallGraph>> recordGraph_;
  std::map<std::string, std::vector<Seq>> recordsByGraph_;
};

/// Coverage of one collapsed-graph group: sums over member methods.
struct GroupCoverage {
  std::size_t covered = 0;
  std::size_t total = 0;
  bool firstCoveredHere = false;
};

std::map<std::string, GroupCoverage> group_coverage(const CollapsedGraph& g, const ProgramModel& model,
                                                    const LineBitmap& covered, std::span<const LineIndex> firstCovered);

/// Headless run: start the interpreter, fire each scripted event, and feed
/// every record through the in-process wire link into a fresh session.
std::unique_ptr<TraceSession> script_run(const ProgramModel& model, const CallGraph& cg,
                                         const std::vector<FiredEvent>& script, RuntimeState* finalState = nullptr);

}  // namespace guitrace
