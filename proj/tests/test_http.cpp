#include <gtest/gtest.h>

#include <thread>

#include "guitrace/net/http_server.hpp"
#include "http_client.hpp"
#include "paths.hpp"

using namespace guitrace;
using guitrace::net::route_request;

namespace {

struct Fixture : ::testing::Test {
  std::unique_ptr<ProgramModel> model = load_program(source_path("data/demo-mindmap.edp"));
  CallGraph cg = build_call_graph(*model);
  SessionService svc{*model, cg};

  void SetUp() override {
    svc.start();
    svc.waitReady();
  }
};

using Routes = Fixture;
using Server = Fixture;

}  // namespace

TEST_F(Routes, StatusCodes) {
  EXPECT_EQ(route_request(svc, "GET", "/program", "").status, 200u);
  EXPECT_EQ(route_request(svc, "GET", "/nowhere", "").status, 404u);
  EXPECT_EQ(route_request(svc, "POST", "/program", "").status, 405u);
  EXPECT_EQ(route_request(svc, "GET", "/fire", "").status, 405u);
  EXPECT_EQ(route_request(svc, "DELETE", "/filters", "").status, 405u);

  EXPECT_EQ(route_request(svc, "POST", "/fire", "{not json").status, 400u);
  EXPECT_EQ(route_request(svc, "POST", "/fire", R"({"widget": "newNode"})").status, 400u);
  EXPECT_EQ(route_request(svc, "POST", "/fire", R"({"widget": "newNode", "kind": "explode"})").status, 400u);
  EXPECT_EQ(route_request(svc, "POST", "/fire", R"({"widget": "newNode", "kind": "action", "payload": "x"})").status,
            400u);
  EXPECT_EQ(route_request(svc, "POST", "/fire", R"({"widget": "ghost", "kind": "action"})").status, 404u);

  EXPECT_EQ(route_request(svc, "GET", "/callgraph", "").status, 400u);
  EXPECT_EQ(route_request(svc, "GET", "/callgraph?seq=-1", "").status, 400u);
  EXPECT_EQ(route_request(svc, "GET", "/callgraph?seq=0&granularity=module", "").status, 400u);
  EXPECT_EQ(route_request(svc, "GET", "/callgraph?seq=0&mode=sideways", "").status, 400u);
  EXPECT_EQ(route_request(svc, "GET", "/callgraph?seq=42", "").status, 404u);
  EXPECT_EQ(route_request(svc, "GET", "/source?class=mindmap.ui.MainWindow", "").status, 400u);
  EXPECT_EQ(route_request(svc, "GET", "/source?class=nope.X&seq=0", "").status, 404u);
  EXPECT_EQ(route_request(svc, "GET", "/trace?hiddenKinds=bogus", "").status, 400u);
  EXPECT_EQ(route_request(svc, "GET", "/trace?hideNonContributing=maybe", "").status, 400u);
  EXPECT_EQ(route_request(svc, "GET", "/trace?x=%zz", "").status, 400u);
  EXPECT_EQ(route_request(svc, "POST", "/filters", R"({"hiddenKinds": ["nope"]})").status, 400u);
  EXPECT_EQ(route_request(svc, "POST", "/filters", R"({"colour": 1})").status, 400u);
}

TEST_F(Routes, FireAndQuery) {
  const auto fired = route_request(svc, "POST", "/fire", R"({"widget": "newNode", "kind": "action", "payload": 1})");
  ASSERT_EQ(fired.status, 200u);
  EXPECT_EQ(fired.body["record"]["seq"], 1);
  route_request(svc, "POST", "/fire", R"({"widget": "canvas", "kind": "mouseMoved"})");

  const auto all = route_request(svc, "GET", "/trace", "");
  EXPECT_EQ(all.body["records"].size(), 3u);
  const auto hidden = route_request(svc, "GET", "/trace?hiddenKinds=mouseMoved%2CfocusLost", "");
  EXPECT_EQ(hidden.body["records"].size(), 2u);
  EXPECT_EQ(hidden.body["filters"]["hiddenKinds"], Json::array({"focusLost", "mouseMoved"}));

  const auto cg = route_request(svc, "GET", "/callgraph?seq=1&granularity=package&mode=perHandler", "");
  ASSERT_EQ(cg.status, 200u);
  EXPECT_EQ(cg.body["granularity"], "package");
  EXPECT_EQ(cg.body["graphs"].size(), 1u);

  const auto src = route_request(svc, "GET", "/source?class=mindmap.ui.MainWindow&seq=1", "");
  ASSERT_EQ(src.status, 200u);
  EXPECT_EQ(src.body["class"], "mindmap.ui.MainWindow");

  ASSERT_EQ(route_request(svc, "POST", "/filters", R"({"hideNonContributing": true})").status, 200u);
  EXPECT_EQ(route_request(svc, "GET", "/filters", "").body["hideNonContributing"], true);
  EXPECT_EQ(route_request(svc, "GET", "/export", "").body, svc.export_report());
}

TEST_F(Server, HttpRoundTrip) {
  net::HttpServer server(svc, 0);
  server.start();
  ASSERT_NE(server.port(), 0);

  const auto prog = testnet::request(server.port(), "GET", "/program");
  EXPECT_EQ(prog.status, 200u);
  EXPECT_EQ(prog.contentType, "application/json");
  EXPECT_EQ(prog.json()["status"], "live");
  EXPECT_EQ(prog.body, to_canonical(prog.json()));

  const auto fired =
      testnet::request(server.port(), "POST", "/fire", R"({"widget": "save", "kind": "action", "payload": 1})");
  EXPECT_EQ(fired.status, 200u);
  EXPECT_EQ(fired.json()["record"]["widget"], "save");

  EXPECT_EQ(testnet::request(server.port(), "GET", "/missing").status, 404u);
  EXPECT_EQ(testnet::request(server.port(), "PUT", "/fire").status, 405u);
  EXPECT_EQ(testnet::request(server.port(), "POST", "/fire", "[").status, 400u);
  server.stop();
}

TEST_F(Server, QueueFullIsServiceUnavailable) {
  // A capacity of one: concurrent fires either land or get 503, never both
  // a gap in seq numbers or some other failure.
  ServiceOptions opts;
  opts.fireQueueCapacity = 1;
  SessionService tight(*model, cg, opts);
  tight.start();
  tight.waitReady();
  std::atomic<int> ok{0}, busy{0}, other{0};
  std::vector<std::thread> ts;
  for (int i = 0; i < 16; ++i)
    ts.emplace_back([&] {
      for (int k = 0; k < 20; ++k) {
        const auto r = route_request(tight, "POST", "/fire", R"({"widget": "canvas", "kind": "mouseMoved"})");
        (r.status == 200 ? ok : r.status == 503 ? busy : other)++;
      }
    });
  for (auto& t : ts) t.join();
  EXPECT_EQ(other, 0);
  EXPECT_EQ(ok + busy, 320);
  const Json recs = tight.get_trace()["records"];
  ASSERT_EQ(recs.size(), static_cast<std::size_t>(ok + 1));
  for (std::size_t i = 0; i < recs.size(); ++i) EXPECT_EQ(recs[i]["seq"], i);
}

TEST_F(Server, LivePushMirrorsTrace) {
  net::HttpServer server(svc, 0);
  server.start();
  testnet::LiveClient live(server.port());
  auto backlog = live.next();
  ASSERT_TRUE(backlog);
  EXPECT_EQ((*backlog)["type"], "record");
  EXPECT_EQ((*backlog)["record"]["seq"], 0);

  testnet::request(server.port(), "POST", "/fire", R"({"widget": "newNode", "kind": "action", "payload": 1})");
  testnet::request(server.port(), "POST", "/fire", R"({"widget": "fold", "kind": "action", "payload": 0})");
  Json records = Json::array({(*backlog)["record"]});
  while (records.size() < 3) {
    auto m = live.next();
    ASSERT_TRUE(m);
    if ((*m)["type"] == "record") records.push_back((*m)["record"]);
    else records[(*m)["seq"].get<std::size_t>()]["metrics"]["ecgCovered"] = (*m)["ecgCovered"];
  }
  // Drain retro notices that follow the last record.
  while (auto m = live.next(std::chrono::milliseconds(300)))
    records[(*m)["seq"].get<std::size_t>()]["metrics"]["ecgCovered"] = (*m)["ecgCovered"];
  EXPECT_EQ(records, svc.get_trace()["records"]);
  server.stop();
}

TEST_F(Server, SlowLiveClientIsDisconnected) {
  ServiceOptions opts;
  opts.subscriberBuffer = 2;
  SessionService small(*model, cg, opts);
  small.start();
  small.waitReady();
  for (int i = 0; i < 4; ++i) small.post_fire({"canvas", EventKind::mouseMoved, 0});
  net::HttpServer server(small, 0);
  server.start();
  testnet::LiveClient live(server.port());
  while (live.next(std::chrono::seconds(2))) {
  }
  EXPECT_TRUE(live.closedByServer());
  server.stop();
}
