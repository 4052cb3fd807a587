#include <gtest/gtest.h>

#include <filesystem>

#include "fuzz.hpp"
#include "guitrace/call_graph.hpp"
#include "guitrace/error.hpp"
#include "oracle.hpp"
#include "paths.hpp"

using namespace guitrace;

namespace {

std::unique_ptr<ProgramModel> model_of(const std::string& text) { return parse_program(text); }

std::set<oracle::Edge> named(const CallGraph& cg, const ProgramModel& m) {
  std::set<oracle::Edge> out;
  for (const auto& e : cg.edges) out.insert({m.method(e.caller).id, m.method(e.callee).id, e.site});
  return out;
}

std::set<std::string> node_ids(const EventCallGraph& g, const ProgramModel& m) {
  std::set<std::string> out;
  for (MethodIndex n : g.nodes) out.insert(m.method(n).id);
  return out;
}

// I with implementations A and B (both define m), C.h vcalls I.m, D.f calls
// E.g statically. Handlers: h on button "b", plus f on "s".
const char* kDispatch = R"({
  "name": "cg", "main": "p.C.main",
  "units": [{"name": "p", "classes": [
    {"name": "I", "interface": true},
    {"name": "A", "implements": ["p.I"], "methods": [{"name": "m", "body": [{"kind": "exec", "text": "a"}]}]},
    {"name": "B", "implements": ["p.I"], "methods": [{"name": "m", "body": [{"kind": "exec", "text": "b"}]}]},
    {"name": "C", "methods": [
      {"name": "main", "body": [{"kind": "set", "var": "r", "new": "p.A"}]},
      {"name": "h", "body": [{"kind": "call", "target": "p.C.f"}]},
      {"name": "f", "body": [{"kind": "vcall", "type": "p.I", "method": "m", "receiver": "r"}]}]},
    {"name": "D", "methods": [{"name": "f", "body": [{"kind": "call", "target": "p.E.g"}, {"kind": "call", "target": "p.E.g"}]}]},
    {"name": "E", "methods": [{"name": "g", "body": [{"kind": "exec", "text": "g"}]}]}]}],
  "widgets": {"id": "w", "kind": "window", "label": "W", "children": [
    {"id": "b", "kind": "button", "label": "B", "handlers": {"action": ["p.C.h"], "selection": ["p.C.h", "p.D.f"]}},
    {"id": "s", "kind": "button", "label": "S", "handlers": {"action": ["p.D.f"]}},
    {"id": "quiet", "kind": "panel", "label": "Q"}]}
})";

}  // namespace

TEST(CallGraph, StaticCallsOnly) {
  auto m = model_of(R"({"name": "s", "main": "p.A.f", "units": [{"name": "p", "classes": [
      {"name": "A", "methods": [{"name": "f", "body": [{"kind": "call", "target": "p.B.g"}]}]},
      {"name": "B", "methods": [{"name": "g", "body": [{"kind": "exec", "text": "x"}]}]}]}],
      "widgets": {"id": "w", "kind": "window", "label": "W"}})");
  const auto cg = build_call_graph(*m);
  EXPECT_EQ(named(cg, *m), (std::set<oracle::Edge>{{"p.A.f", "p.B.g", 0}}));
  EXPECT_EQ(cg.nodes.size(), 2u);
}

TEST(CallGraph, VcallYieldsOneEdgePerConcreteResolver) {
  auto m = model_of(kDispatch);
  const auto edges = named(build_call_graph(*m), *m);
  const LineIndex site = m->method(*m->findMethod("p.C.f")).def->lineSpan.first;
  EXPECT_TRUE(edges.count({"p.C.f", "p.A.m", site}));
  EXPECT_TRUE(edges.count({"p.C.f", "p.B.m", site}));
}

TEST(CallGraph, MatchesBruteForceOracleOnFuzzCorpus) {
  for (std::uint64_t seed = 0; seed < 150; ++seed) {
    const Json doc = fuzz::program(seed);
    auto m = parse_program(doc.dump());
    const auto cg = build_call_graph(*m);
    const auto o = oracle::load(doc);
    const auto oe = oracle::cha_edges(o);
    ASSERT_EQ(named(cg, *m), oe) << "seed " << seed;
    std::set<std::string> nodes;
    for (MethodIndex n : cg.nodes) nodes.insert(m->method(n).id);
    ASSERT_EQ(nodes, oracle::cha_nodes(o, oe)) << "seed " << seed;
    for (MethodIndex n : cg.nodes) EXPECT_FALSE(m->method(n).isLibrary);
    for (const auto& e : cg.edges) {
      EXPECT_TRUE(cg.nodes.count(e.caller));
      EXPECT_TRUE(cg.nodes.count(e.callee));
    }
  }
}

TEST(EventCallGraph, Errors) {
  auto m = model_of(kDispatch);
  const auto cg = build_call_graph(*m);
  EXPECT_THROW(event_call_graph(cg, *m, "nope", EventKind::action), UnknownWidgetError);
  EXPECT_THROW(event_call_graph(cg, *m, "quiet", EventKind::action), NoHandlersError);
}

TEST(EventCallGraph, ReachabilityThroughDispatch) {
  auto m = model_of(kDispatch);
  const auto cg = build_call_graph(*m);
  const auto g = event_call_graph(cg, *m, "b", EventKind::action);
  EXPECT_EQ(node_ids(g, *m), (std::set<std::string>{"p.C.h", "p.C.f", "p.A.m", "p.B.m"}));
  ASSERT_EQ(g.handlers.size(), 1u);
  EXPECT_EQ(g.universeSize(), 4u);
  EXPECT_EQ(g.edges.size(), 3u);
  for (LineIndex l = 0; l < m->totalLines(); ++l) {
    const bool member = g.nodes.count(m->line(l).method) > 0;
    EXPECT_EQ(g.inUniverse(l), member) << l;
  }
}

TEST(EventCallGraph, SinkHandlerHasTwoNodes) {
  auto m = model_of(R"({"name": "s", "main": "p.A.main", "units": [{"name": "p", "classes": [
      {"name": "A", "methods": [{"name": "main", "body": [{"kind": "exec", "text": "x"}]},
                                {"name": "h", "body": [{"kind": "exec", "text": "1"}, {"kind": "exec", "text": "2"}]}]}]}],
      "widgets": {"id": "w", "kind": "window", "label": "W", "handlers": {"action": ["p.A.h"]}}})");
  const auto cg = build_call_graph(*m);
  const auto g = event_call_graph(cg, *m, "w", EventKind::action);
  EXPECT_EQ(node_ids(g, *m), std::set<std::string>{"p.A.h"});
  EXPECT_TRUE(g.edges.empty());
  EXPECT_EQ(g.lineUniverse, (std::vector<LineRange>{{1, 2}}));
  const auto c = collapse(g, *m, Granularity::method);
  EXPECT_EQ(c.nodes, (std::set<std::string>{std::string(kStartNode), "p.A.h"}));
  EXPECT_EQ(c.edgeCountSum(), 1u);
}

TEST(EventCallGraph, ClosureMatchesOracleAndIsTight) {
  for (std::uint64_t seed = 200; seed < 300; ++seed) {
    const Json doc = fuzz::program(seed);
    auto m = parse_program(doc.dump());
    const auto cg = build_call_graph(*m);
    const auto o = oracle::load(doc);
    const auto oe = oracle::cha_edges(o);
    for (const auto& [widget, kinds] : o.bindings) {
      for (const auto& [kind, handlers] : kinds) {
        if (handlers.empty()) continue;
        const auto g = event_call_graph(cg, *m, widget, *event_kind_from_string(kind));
        const auto expect = oracle::reach(oe, handlers);
        ASSERT_EQ(node_ids(g, *m), expect) << "seed " << seed;
        const auto uni = oracle::universe(o, expect);
        ASSERT_EQ(g.universeSize(), uni.size());
        for (auto l : uni) ASSERT_TRUE(g.inUniverse(l));
        std::size_t inner = 0;
        for (const auto& [a, b, s] : oe)
          if (expect.count(a) && expect.count(b)) ++inner;
        EXPECT_EQ(g.edges.size(), inner);
        for (MethodIndex n : g.nodes) EXPECT_FALSE(m->method(n).isLibrary);
      }
    }
  }
}

TEST(Collapse, ClassGraphOfTwoClasses) {
  // A{f,g}, B{h}, edges f->g and f->h.
  auto m = model_of(R"({"name": "c", "main": "p.A.f", "units": [{"name": "p", "classes": [
      {"name": "A", "methods": [{"name": "f", "body": [{"kind": "call", "target": "p.A.g"}, {"kind": "call", "target": "p.B.h"}]},
                                {"name": "g", "body": [{"kind": "exec", "text": "g"}]}]},
      {"name": "B", "methods": [{"name": "h", "body": [{"kind": "exec", "text": "h"}]}]}]}],
      "widgets": {"id": "w", "kind": "window", "label": "W", "handlers": {"action": ["p.A.f"]}}})");
  const auto cg = build_call_graph(*m);
  const auto g = event_call_graph(cg, *m, "w", EventKind::action);
  const auto c = collapse(g, *m, Granularity::class_);
  EXPECT_EQ(c.nodes, (std::set<std::string>{std::string(kStartNode), "p.A", "p.B"}));
  EXPECT_EQ(c.edges.at({"p.A", "p.B"}), 1u);
  EXPECT_EQ(c.edges.at({std::string(kStartNode), "p.A"}), 1u);
  EXPECT_EQ(c.internalCalls.at("p.A"), 1u);
  EXPECT_EQ(c.members.at("p.A").size(), 2u);

  const auto pkg = collapse(g, *m, Granularity::package);
  EXPECT_EQ(pkg.nodes, (std::set<std::string>{std::string(kStartNode), "p"}));
  EXPECT_EQ(pkg.edges.size(), 1u);
  EXPECT_EQ(pkg.internalCalls.at("p"), 2u);

  const auto meth = collapse(g, *m, Granularity::method);
  EXPECT_EQ(meth.nodes.size(), 4u);
  for (const auto& [ends, count] : meth.edges) EXPECT_EQ(count, 1u);
  EXPECT_EQ(meth.internalCallSum(), 0u);
}

TEST(Collapse, MethodGranularityIsIdentityUpToSites) {
  auto m = model_of(kDispatch);
  const auto cg = build_call_graph(*m);
  const auto g = event_call_graph(cg, *m, "s", EventKind::action);
  const auto c = collapse(g, *m, Granularity::method);
  // D.f calls E.g from two sites: one collapsed edge counting both.
  EXPECT_EQ(c.edges.at({"p.D.f", "p.E.g"}), 2u);
  EXPECT_EQ(c.edgeCountSum(), g.edges.size() + g.handlers.size());
}

TEST(Collapse, ConservationMatchesOracleOnFuzzCorpus) {
  for (std::uint64_t seed = 300; seed < 400; ++seed) {
    const Json doc = fuzz::program(seed);
    auto m = parse_program(doc.dump());
    const auto cg = build_call_graph(*m);
    const auto o = oracle::load(doc);
    const auto oe = oracle::cha_edges(o);
    for (const auto& [widget, kinds] : o.bindings)
      for (const auto& [kind, handlers] : kinds) {
        if (handlers.empty()) continue;
        const auto g = event_call_graph(cg, *m, widget, *event_kind_from_string(kind));
        for (auto [gran, name] : {std::pair{Granularity::method, "method"}, {Granularity::class_, "class"},
                                  {Granularity::package, "package"}}) {
          const auto c = collapse(g, *m, gran);
          EXPECT_EQ(c.edgeCountSum() + c.internalCallSum(), g.edges.size() + g.handlers.size());
          const auto oc = oracle::collapse(o, oe, handlers, name);
          EXPECT_EQ(c.nodes, oc.nodes);
          EXPECT_EQ(c.edges, oc.edges);
          std::map<std::string, std::size_t> internal;
          for (const auto& [k, v] : c.internalCalls)
            if (v) internal[k] = v;
          EXPECT_EQ(internal, oc.internal);
        }
      }
  }
}

TEST(Collapse, SinglePackageHasNoCrossEdges) {
  auto m = model_of(kDispatch);
  const auto cg = build_call_graph(*m);
  const auto c = collapse(event_call_graph(cg, *m, "b", EventKind::action), *m, Granularity::package);
  EXPECT_EQ(c.nodes.size(), 2u);
  EXPECT_EQ(c.edges.size(), 1u);  // only the start edge
  EXPECT_EQ(c.edges.begin()->first.first, kStartNode);
}

TEST(CollateOrSplit, SingleHandlerGivesSameGraph) {
  auto m = model_of(kDispatch);
  const auto cg = build_call_graph(*m);
  const auto g = event_call_graph(cg, *m, "b", EventKind::action);
  for (auto mode : {CollationMode::collated, CollationMode::perHandler}) {
    const auto parts = collate_or_split(g, cg, *m, mode);
    ASSERT_EQ(parts.size(), 1u);
    EXPECT_EQ(parts[0].nodes, g.nodes);
    EXPECT_EQ(parts[0].edges, g.edges);
  }
}

TEST(CollateOrSplit, DisjointHandlersPartitionTheUniverse) {
  auto m = model_of(kDispatch);
  const auto cg = build_call_graph(*m);
  const auto g = event_call_graph(cg, *m, "b", EventKind::selection);
  const auto parts = collate_or_split(g, cg, *m, CollationMode::perHandler);
  ASSERT_EQ(parts.size(), 2u);
  EXPECT_EQ(parts[0].universeSize() + parts[1].universeSize(), g.universeSize());
  for (LineIndex l = 0; l < m->totalLines(); ++l)
    EXPECT_EQ(g.inUniverse(l), parts[0].inUniverse(l) || parts[1].inUniverse(l));
  EXPECT_EQ(parts[0].handlers, std::vector<MethodIndex>{*m->findMethod("p.C.h")});
}

TEST(CollateOrSplit, SharedCalleeAppearsInEveryTab) {
  auto m = model_of(R"({"name": "c", "main": "p.A.a", "units": [{"name": "p", "classes": [
      {"name": "A", "methods": [{"name": "a", "body": [{"kind": "call", "target": "p.A.f"}]},
                                {"name": "b", "body": [{"kind": "call", "target": "p.A.f"}]},
                                {"name": "f", "body": [{"kind": "exec", "text": "f"}]}]}]}],
      "widgets": {"id": "w", "kind": "window", "label": "W", "handlers": {"action": ["p.A.a", "p.A.b"]}}})");
  const auto cg = build_call_graph(*m);
  const auto g = event_call_graph(cg, *m, "w", EventKind::action);
  const auto f = *m->findMethod("p.A.f");
  EXPECT_EQ(g.nodes.count(f), 1u);
  EXPECT_EQ(g.nodes.size(), 3u);
  for (const auto& part : collate_or_split(g, cg, *m, CollationMode::perHandler)) EXPECT_TRUE(part.nodes.count(f));
}

TEST(Cache, RoundTripAndStaleness) {
  auto m = load_program(source_path("data/demo-mindmap.edp"));
  const auto cg = build_call_graph(*m);
  const auto text = serialize_call_graph(cg, *m);
  EXPECT_EQ(deserialize_call_graph(text, *m), cg);
  EXPECT_EQ(serialize_call_graph(deserialize_call_graph(text, *m), *m), text);

  Json edited = parse_json(read_file(source_path("data/demo-mindmap.edp")));
  edited["units"][0]["classes"][0]["methods"][0]["body"].push_back({{"kind", "exec"}, {"text", "more()"}});
  auto m2 = parse_program(edited.dump());
  EXPECT_THROW(deserialize_call_graph(text, *m2), StaleCacheError);
  EXPECT_THROW(deserialize_call_graph("{\"programHash\": 3}", *m), CacheFormatError);
  EXPECT_THROW(deserialize_call_graph("not json", *m), CacheFormatError);

  const auto dir = std::filesystem::temp_directory_path() / "guitrace-cache-test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "demo.cg").string();
  save_call_graph(cg, *m, path);
  const auto first = read_file(path);
  save_call_graph(load_call_graph(path, *m), *m, path);
  EXPECT_EQ(read_file(path), first);
  std::filesystem::remove_all(dir);
}

TEST(Dot, RendersGroupsAndCounts) {
  auto m = model_of(kDispatch);
  const auto cg = build_call_graph(*m);
  const auto c = collapse(event_call_graph(cg, *m, "s", EventKind::action), *m, Granularity::method);
  const auto dot = to_dot(c, "ev");
  EXPECT_NE(dot.find("digraph"), std::string::npos);
  EXPECT_NE(dot.find("\"p.D.f\" -> \"p.E.g\" [label=\"2\"]"), std::string::npos) << dot;
  EXPECT_EQ(dot, to_dot(c, "ev"));
}

TEST(CallGraph, DemoMatchesGolden) {
  auto m = load_program(source_path("data/demo-mindmap.edp"));
  const Json golden = parse_json(read_file(source_path("tests/fixtures/demo-mindmap.golden.json")));
  const auto cg = build_call_graph(*m);
  EXPECT_EQ(cg.nodes.size(), golden["callGraph"]["nodes"].get<std::size_t>());
  EXPECT_EQ(cg.edges.size(), golden["callGraph"]["edges"].get<std::size_t>());
  const auto& tb = golden["toolbarEvent"];
  const auto g = event_call_graph(cg, *m, "newNode", EventKind::action);
  EXPECT_EQ(g.nodes.size() + 1, tb["nodes"].get<std::size_t>());
  EXPECT_EQ(g.edges.size() + g.handlers.size(), tb["edges"].get<std::size_t>());
  EXPECT_EQ(g.universeSize(), tb["lines"].get<std::size_t>());
  const auto c = collapse(g, *m, Granularity::class_);
  const auto& gc = tb["collapsed"]["class"];
  EXPECT_EQ(c.nodes, gc["nodes"].get<std::set<std::string>>());
  for (const auto& e : gc["edges"]) EXPECT_EQ(c.edges.at({e[0], e[1]}), e[2].get<std::size_t>());
  EXPECT_EQ(c.edges.size(), gc["edges"].size());
}
