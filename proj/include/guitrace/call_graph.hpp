#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "guitrace/program.hpp"

namespace guitrace {

struct CallEdge {
  MethodIndex caller;
  MethodIndex callee;
  LineIndex site = 0;

  friend auto operator<=>(const CallEdge&, const CallEdge&) = default;
};

/// Static, method-level call graph of the application (library methods are
/// never nodes).
struct CallGraph {
  std::set<MethodIndex> nodes;
  std::set<CallEdge> edges;
  std::uint64_t programHash = 0;

  friend bool operator==(const CallGraph&, const CallGraph&) = default;
};

/// Class-hierarchy analysis: every `call` site yields one edge; every `vcall`
/// site yields one edge per concrete subtype of the declared type that
/// defines or inherits the method, targeting the defining class's method.
CallGraph build_call_graph(const ProgramModel& model);

/// Reserved id for the synthetic start node. Method ids never contain '<'.
inline constexpr std::string_view kStartNode = "<start>";

/// Subgraph of the call graph reachable from the handlers bound to one
/// (widget, kind) pair, rooted at a synthetic start node.
struct EventCallGraph {
  std::string widget;
  EventKind kind = EventKind::action;
  /// Targets of the start node's outgoing edges, in binding order.
  std::vector<MethodIndex> handlers;
  /// Member methods (the start node is implicit).
  std::set<MethodIndex> nodes;
  /// Call-graph edges among members.
  std::set<CallEdge> edges;
  /// Global lines of all member methods, as sorted disjoint spans.
  std::vector<LineRange> lineUniverse;

  std::size_t universeSize() const;
  bool inUniverse(LineIndex line) const;
};

/// Throws UnknownWidgetError or NoHandlersError.
EventCallGraph event_call_graph(const CallGraph& cg, const ProgramModel& model, std::string_view widget, EventKind kind);

/// Same closure, from an explicit handler list.
EventCallGraph reachable_subgraph(const CallGraph& cg, const ProgramModel& model, std::string widget, EventKind kind,
                                  std::vector<MethodIndex> handlers);

enum class Granularity { method, class_, package };
std::string_view to_string(Granularity g);
std::optional<Granularity> granularity_from_string(std::string_view text);

/// Group id of a method: its own id, its class id, or its unit name.
std::string group_of(const ProgramModel& model, MethodIndex m, Granularity g);

struct CollapsedGraph {
  Granularity granularity = Granularity::method;
  /// Group ids, including kStartNode.
  std::set<std::string> nodes;
  /// Cross-group edges with the number of underlying edges.
  std::map<std::pair<std::string, std::string>, std::size_t> edges;
  /// Per-group count of edges whose endpoints share the group.
  std::map<std::string, std::size_t> internalCalls;
  /// Member methods of each group (empty for the start node).
  std::map<std::string, std::vector<MethodIndex>> members;

  std::size_t edgeCountSum() const;
  std::size_t internalCallSum() const;
};

/// Merges nodes by group. Start edges count as underlying edges from the
/// start group, so the total edge count of the input equals
/// edgeCountSum() + internalCallSum().
CollapsedGraph collapse(const EventCallGraph& ecg, const ProgramModel& model, Granularity g);

enum class CollationMode { collated, perHandler };
std::optional<CollationMode> collation_from_string(std::string_view text);

/// collated returns {ecg}; perHandler recomputes reachability per handler.
std::vector<EventCallGraph> collate_or_split(const EventCallGraph& ecg, const CallGraph& cg, const ProgramModel& model,
                                             CollationMode mode);

/// `.cg` cache document.
std::string serialize_call_graph(const CallGraph& cg, const ProgramModel& model);
/// Throws StaleCacheError when the cached hash differs from the model, and
/// CacheFormatError for unreadable content.
CallGraph deserialize_call_graph(std::string_view text, const ProgramModel& model);
void save_call_graph(const CallGraph& cg, const ProgramModel& model, const std::string& path);
CallGraph load_call_graph(const std::string& path, const ProgramModel& model);

/// Graphviz rendering; node label = group id, edge label = count.
std::string to_dot(const CollapsedGraph& g, std::string_view name);

}  // namespace guitrace
