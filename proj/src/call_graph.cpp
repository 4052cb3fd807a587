#include "guitrace/call_graph.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

#include "guitrace/error.hpp"

namespace guitrace {

namespace {

template <class F>
void for_each_stmt(const std::vector<Stmt>& body, const F& f) {
  for (const auto& s : body) {
    f(s);
    if (const auto* ifs = std::get_if<IfStmt>(&s.node)) {
      for_each_stmt(ifs->thenBody, f);
      for_each_stmt(ifs->elseBody, f);
    }
  }
}

void collect_handlers(const ProgramModel& model, std::set<MethodIndex>& out) {
  for (const auto& id : model.widgetOrder())
    for (const auto& [kind, list] : model.findWidget(id)->handlers) out.insert(list.begin(), list.end());
}

std::string dot_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

CallGraph build_call_graph(const ProgramModel& model) {
  CallGraph cg;
  cg.programHash = model.contentHash();
  cg.nodes.insert(model.mainMethod());
  collect_handlers(model, cg.nodes);

  const auto& methods = model.methods();
  for (std::uint32_t i = 0; i < methods.size(); ++i) {
    if (methods[i].isLibrary) continue;
    const MethodIndex caller{i};
    for_each_stmt(methods[i].def->body, [&](const Stmt& s) {
      if (const auto* call = std::get_if<CallStmt>(&s.node)) {
        if (!model.method(call->targetIndex).isLibrary) cg.edges.insert({caller, call->targetIndex, s.line});
      } else if (const auto* v = std::get_if<VCallStmt>(&s.node)) {
        for (ClassIndex c : model.concreteSubtypes(v->declaredTypeIndex)) {
          auto target = model.resolveMethod(c, v->methodName);
          if (target && !model.method(*target).isLibrary) cg.edges.insert({caller, *target, s.line});
        }
      }
    });
  }
  for (const auto& e : cg.edges) {
    cg.nodes.insert(e.caller);
    cg.nodes.insert(e.callee);
  }
  return cg;
}

std::size_t EventCallGraph::universeSize() const {
  std::size_t n = 0;
  for (const auto& r : lineUniverse) n += r.last - r.first + 1;
  return n;
}

bool EventCallGraph::inUniverse(LineIndex line) const {
  auto it = std::upper_bound(lineUniverse.begin(), lineUniverse.end(), line,
                             [](LineIndex l, const LineRange& r) { return l < r.first; });
  if (it == lineUniverse.begin()) return false;
  --it;
  return line <= it->last;
}

EventCallGraph reachable_subgraph(const CallGraph& cg, const ProgramModel& model, std::string widget, EventKind kind,
                                  std::vector<MethodIndex> handlers) {
  EventCallGraph ecg;
  ecg.widget = std::move(widget);
  ecg.kind = kind;
  ecg.handlers = std::move(handlers);

  std::deque<MethodIndex> work(ecg.handlers.begin(), ecg.handlers.end());
  ecg.nodes.insert(ecg.handlers.begin(), ecg.handlers.end());
  while (!work.empty()) {
    const MethodIndex m = work.front();
    work.pop_front();
    for (auto it = cg.edges.lower_bound(CallEdge{m, MethodIndex{0}, 0}); it != cg.edges.end() && it->caller == m; ++it) {
      ecg.edges.insert(*it);
      if (ecg.nodes.insert(it->callee).second) work.push_back(it->callee);
    }
  }

  std::vector<LineRange> spans;
  for (MethodIndex m : ecg.nodes) spans.push_back(model.method(m).def->lineSpan);
  std::sort(spans.begin(), spans.end(), [](const LineRange& a, const LineRange& b) { return a.first < b.first; });
  for (const auto& s : spans) {
    if (!ecg.lineUniverse.empty() && ecg.lineUniverse.back().last + 1 == s.first) ecg.lineUniverse.back().last = s.last;
    else ecg.lineUniverse.push_back(s);
  }
  return ecg;
}

EventCallGraph event_call_graph(const CallGraph& cg, const ProgramModel& model, std::string_view widget,
                                EventKind kind) {
  const WidgetInfo* w = model.findWidget(widget);
  if (!w) throw UnknownWidgetError("unknown widget '" + std::string(widget) + "'");
  auto it = w->handlers.find(kind);
  if (it == w->handlers.end() || it->second.empty())
    throw NoHandlersError("widget '" + std::string(widget) + "' has no " + std::string(to_string(kind)) + " handlers");
  return reachable_subgraph(cg, model, std::string(widget), kind, it->second);
}

std::string_view to_string(Granularity g) {
  switch (g) {
    case Granularity::method: return "method";
    case Granularity::class_: return "class";
    case Granularity::package: return "package";
  }
  return "?";
}

std::optional<Granularity> granularity_from_string(std::string_view text) {
  if (text == "method") return Granularity::method;
  if (text == "class") return Granularity::class_;
  if (text == "package") return Granularity::package;
  return std::nullopt;
}

std::optional<CollationMode> collation_from_string(std::string_view text) {
  if (text == "collated") return CollationMode::collated;
  if (text == "perHandler") return CollationMode::perHandler;
  return std::nullopt;
}

std::string group_of(const ProgramModel& model, MethodIndex m, Granularity g) {
  const MethodInfo& info = model.method(m);
  switch (g) {
    case Granularity::method: return info.id;
    case Granularity::class_: return model.cls(info.owner).id;
    case Granularity::package: return model.document().units[model.cls(info.owner).unit].name;
  }
  return {};
}

std::size_t CollapsedGraph::edgeCountSum() const {
  std::size_t n = 0;
  for (const auto& [_, c] : edges) n += c;
  return n;
}

std::size_t CollapsedGraph::internalCallSum() const {
  std::size_t n = 0;
  for (const auto& [_, c] : internalCalls) n += c;
  return n;
}

CollapsedGraph collapse(const EventCallGraph& ecg, const ProgramModel& model, Granularity g) {
  CollapsedGraph out;
  out.granularity = g;
  const std::string start(kStartNode);
  out.nodes.insert(start);
  out.members[start];
  for (MethodIndex m : ecg.nodes) {
    const auto grp = group_of(model, m, g);
    out.nodes.insert(grp);
    out.members[grp].push_back(m);
    out.internalCalls.try_emplace(grp, 0);
  }
  for (MethodIndex h : ecg.handlers) ++out.edges[{start, group_of(model, h, g)}];
  for (const auto& e : ecg.edges) {
    auto from = group_of(model, e.caller, g);
    auto to = group_of(model, e.callee, g);
    if (from == to) ++out.internalCalls[from];
    else ++out.edges[{std::move(from), std::move(to)}];
  }
  return out;
}

std::vector<EventCallGraph> collate_or_split(const EventCallGraph& ecg, const CallGraph& cg, const ProgramModel& model,
                                             CollationMode mode) {
  if (mode == CollationMode::collated) return {ecg};
  std::vector<EventCallGraph> out;
  out.reserve(ecg.handlers.size());
  for (MethodIndex h : ecg.handlers) out.push_back(reachable_subgraph(cg, model, ecg.widget, ecg.kind, {h}));
  return out;
}

// --- cache ---------------------------------------------------------------------

std::string serialize_call_graph(const CallGraph& cg, const ProgramModel& model) {
  Json nodes = Json::array();
  for (MethodIndex m : cg.nodes) nodes.push_back(model.method(m).id);
  Json edges = Json::array();
  for (const auto& e : cg.edges) edges.push_back(Json::array({model.method(e.caller).id, model.method(e.callee).id, e.site}));
  return to_canonical({{"programHash", hash_to_hex(cg.programHash)}, {"nodes", nodes}, {"edges", edges}});
}

CallGraph deserialize_call_graph(std::string_view text, const ProgramModel& model) {
  Json j;
  try {
    j = parse_json(text);
  } catch (const ParseError& e) {
    throw CacheFormatError(std::string("unreadable call graph cache: ") + e.what());
  }
  CallGraph cg;
  try {
    cg.programHash = hash_from_hex(j.at("programHash").get<std::string>());
  } catch (const std::exception& e) {
    throw CacheFormatError(std::string("call graph cache has no valid programHash: ") + e.what());
  }
  if (cg.programHash != model.contentHash())
    throw StaleCacheError("call graph cache was computed for program " + hash_to_hex(cg.programHash) +
                          " but the program is now " + model.hashHex());
  auto method = [&](const Json& v) {
    if (!v.is_string()) throw CacheFormatError("call graph cache: method id must be a string");
    auto m = model.findMethod(v.get<std::string>());
    if (!m) throw CacheFormatError("call graph cache names unknown method '" + v.get<std::string>() + "'");
    return *m;
  };
  try {
    for (const auto& n : j.at("nodes")) cg.nodes.insert(method(n));
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 3 || !e[2].is_number_unsigned())
        throw CacheFormatError("call graph cache: malformed edge " + e.dump());
      cg.edges.insert({method(e[0]), method(e[1]), e[2].get<LineIndex>()});
    }
  } catch (const Json::exception& e) {
    throw CacheFormatError(std::string("call graph cache: ") + e.what());
  }
  for (const auto& e : cg.edges) {
    if (!cg.nodes.count(e.caller) || !cg.nodes.count(e.callee))
      throw CacheFormatError("call graph cache: edge endpoint missing from node list");
  }
  return cg;
}

void save_call_graph(const CallGraph& cg, const ProgramModel& model, const std::string& path) {
  write_file(path, serialize_call_graph(cg, model));
}

CallGraph load_call_graph(const std::string& path, const ProgramModel& model) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw CacheFormatError(e.what());
  }
  return deserialize_call_graph(text, model);
}

std::string to_dot(const CollapsedGraph& g, std::string_view name) {
  std::ostringstream os;
  os << "digraph " << dot_quote(name) << " {\n";
  os << "  rankdir=LR;\n";
  for (const auto& n : g.nodes) {
    os << "  " << dot_quote(n) << " [label=" << dot_quote(n);
    if (n == kStartNode) os << ", shape=box";
    os << "];\n";
  }
  for (const auto& [ends, count] : g.edges)
    os << "  " << dot_quote(ends.first) << " -> " << dot_quote(ends.second) << " [label=\"" << count << "\"];\n";
  os << "}\n";
  return os.str();
}

}  // namespace guitrace
