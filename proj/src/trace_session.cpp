#include "guitrace/trace_session.hpp"

#include <algorithm>

#include "guitrace/error.hpp"
#include "guitrace/host.hpp"

namespace guitrace {

Json filter_to_json(const FilterSpec& f) {
  Json kinds = Json::array();
  for (EventKind k : f.hiddenKinds) kinds.push_back(std::string(to_string(k)));
  return {{"hiddenKinds", kinds}, {"hideNonContributing", f.hideNonContributing}};
}

FilterSpec filter_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("filter must be an object");
  FilterSpec f;
  for (const auto& [key, value] : j.items()) {
    if (key == "hiddenKinds") {
      if (!value.is_array()) throw ParseError("hiddenKinds must be an array");
      for (const auto& k : value) {
        if (!k.is_string()) throw ParseError("hiddenKinds entries must be strings");
        auto ek = event_kind_from_string(k.get<std::string>());
        if (!ek) throw ParseError("unknown event kind '" + k.get<std::string>() + "'");
        f.hiddenKinds.insert(*ek);
      }
    } else if (key == "hideNonContributing") {
      if (!value.is_boolean()) throw ParseError("hideNonContributing must be a boolean");
      f.hideNonContributing = value.get<bool>();
    } else {
      throw ParseError("unknown filter key '" + key + "'");
    }
  }
  return f;
}

std::set<EventKind> parse_kind_list(std::string_view text) {
  std::set<EventKind> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    auto item = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    if (!item.empty()) {
      auto k = event_kind_from_string(item);
      if (!k) throw ParseError("unknown event kind '" + std::string(item) + "'");
      out.insert(*k);
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view to_string(LineStatus s) {
  switch (s) {
    case LineStatus::covered: return "covered";
    case LineStatus::firstCoveredHere: return "firstCoveredHere";
    case LineStatus::uncovered: return "uncovered";
  }
  return "?";
}

TraceSession::TraceSession(const ProgramModel& model, const CallGraph& cg)
    : model_(model), cg_(cg), cumulative_(model.totalLines()) {}

void TraceSession::checkSeq(Seq seq) const {
  if (seq >= records_.size()) throw UnknownSeqError("unknown seq " + std::to_string(seq));
}

std::vector<RetroUpdate> TraceSession::ingest(const EventRecord& record) {
  if (record.seq != records_.size())
    throw OutOfOrderError("expected seq " + std::to_string(records_.size()) + ", got " + std::to_string(record.seq));
  for (LineIndex l : record.coverageDelta) {
    if (l >= model_.totalLines() || !model_.isAppLine(l))
      throw Error("record " + std::to_string(record.seq) + " covers non-application line " + std::to_string(l));
    if (cumulative_.test(l))
      throw Error("record " + std::to_string(record.seq) + " re-covers line " + std::to_string(l));
  }

  // Resolve this record's event call graph before mutating anything.
  std::shared_ptr<const EventCallGraph> graph;
  std::string key;
  if (record.event && !record.handlers.empty()) {
    key = record.event->widget + '\0' + std::string(to_string(record.event->kind));
    auto it = graphs_.find(key);
    if (it == graphs_.end()) {
      std::vector<MethodIndex> handlers;
      for (const auto& h : record.handlers) {
        auto m = model_.findMethod(h);
        if (!m) throw Error("record " + std::to_string(record.seq) + " names unknown handler '" + h + "'");
        handlers.push_back(*m);
      }
      auto ecg = std::make_shared<const EventCallGraph>(
          reachable_subgraph(cg_, model_, record.event->widget, record.event->kind, std::move(handlers)));
      it = graphs_.emplace(key, std::move(ecg)).first;
    }
    graph = it->second;
  }

  for (LineIndex l : record.coverageDelta) cumulative_.set(l);

  std::vector<RetroUpdate> retro;
  if (!record.coverageDelta.empty()) {
    for (const auto& [k, seqs] : recordsByGraph_) {
      const auto& ecg = *graphs_.at(k);
      const auto gained = static_cast<std::size_t>(std::count_if(
          record.coverageDelta.begin(), record.coverageDelta.end(), [&](LineIndex l) { return ecg.inUniverse(l); }));
      if (gained == 0) continue;
      for (Seq s : seqs) {
        metrics_[s].ecgCovered += gained;
        retro.push_back({s, metrics_[s].ecgCovered});
      }
    }
    std::sort(retro.begin(), retro.end(), [](const RetroUpdate& a, const RetroUpdate& b) { return a.seq < b.seq; });
  }

  EventMetrics m;
  m.seq = record.seq;
  m.appCovered = cumulative_.count();
  m.appTotal = model_.totalAppLines();
  m.firstCovered = record.coverageDelta;
  if (graph) {
    m.ecgTotal = graph->universeSize();
    for (const auto& r : graph->lineUniverse) m.ecgCovered += cumulative_.count_in(r);
    recordsByGraph_[key].push_back(record.seq);
  }

  records_.push_back(record);
  metrics_.push_back(std::move(m));
  recordGraph_.push_back(std::move(graph));
  return retro;
}

std::pair<std::size_t, std::size_t> TraceSession::event_cg_coverage(Seq seq) const {
  checkSeq(seq);
  return {metrics_[seq].ecgCovered, metrics_[seq].ecgTotal};
}

const std::vector<LineIndex>& TraceSession::first_covered(Seq seq) const {
  checkSeq(seq);
  return records_[seq].coverageDelta;
}

const EventMetrics& TraceSession::metricsFor(Seq seq) const {
  checkSeq(seq);
  return metrics_[seq];
}

const EventRecord& TraceSession::record(Seq seq) const {
  checkSeq(seq);
  return records_[seq];
}

const EventCallGraph* TraceSession::eventGraph(Seq seq) const {
  checkSeq(seq);
  return recordGraph_[seq].get();
}

std::vector<Seq> TraceSession::filtered_view(const FilterSpec& filters) const {
  std::vector<Seq> out;
  for (const auto& r : records_) {
    if (r.event) {
      if (filters.hiddenKinds.count(r.event->kind)) continue;
      if (filters.hideNonContributing && r.coverageDelta.empty()) continue;
    }
    out.push_back(r.seq);
  }
  return out;
}

LineBitmap TraceSession::coverageAt(Seq seq) const {
  checkSeq(seq);
  LineBitmap b(model_.totalLines());
  for (Seq s = 0; s <= seq; ++s)
    for (LineIndex l : records_[s].coverageDelta) b.set(l);
  return b;
}

std::vector<AnnotatedLine> TraceSession::source_annotation(std::string_view classId, Seq seq) const {
  auto cls = model_.findClass(classId);
  if (!cls) throw UnknownClassError("unknown class '" + std::string(classId) + "'");
  checkSeq(seq);
  const LineBitmap prefix = coverageAt(seq);
  const auto& first = records_[seq].coverageDelta;
  std::vector<AnnotatedLine> out;
  for (MethodIndex m : model_.cls(*cls).methods) {
    const auto span = model_.method(m).def->lineSpan;
    for (LineIndex l = span.first; l <= span.last; ++l) {
      LineStatus st = LineStatus::uncovered;
      if (std::binary_search(first.begin(), first.end(), l)) st = LineStatus::firstCoveredHere;
      else if (prefix.test(l)) st = LineStatus::covered;
      out.push_back({l, st});
    }
  }
  return out;
}

std::map<std::string, GroupCoverage> group_coverage(const CollapsedGraph& g, const ProgramModel& model,
                                                    const LineBitmap& covered, std::span<const LineIndex> firstCovered) {
  std::map<std::string, GroupCoverage> out;
  for (const auto& [group, members] : g.members) {
    GroupCoverage gc;
    for (MethodIndex m : members) {
      const auto span = model.method(m).def->lineSpan;
      gc.covered += covered.count_in(span);
      gc.total += span.last - span.first + 1;
      auto it = std::lower_bound(firstCovered.begin(), firstCovered.end(), span.first);
      if (it != firstCovered.end() && *it <= span.last) gc.firstCoveredHere = true;
    }
    out.emplace(group, gc);
  }
  return out;
}

std::unique_ptr<TraceSession> script_run(const ProgramModel& model, const CallGraph& cg,
                                         const std::vector<FiredEvent>& script, RuntimeState* finalState) {
  for (const auto& e : script)
    if (!model.findWidget(e.widget)) throw UnknownWidgetError("script names unknown widget '" + e.widget + "'");

  auto session = std::make_unique<TraceSession>(model, cg);
  HostReceiver host(model.contentHash());
  host.addListener([&](const EventRecord& r) { session->ingest(r); });
  InProcessChannel channel(host);
  Interpreter interp(model);
  AgentLink agent(interp, channel);
  agent.start();
  for (const auto& e : script) agent.fire(e);
  agent.sendSnapshot();
  agent.close();
  if (finalState) *finalState = interp.state();
  return session;
}

}  // namespace guitrace
