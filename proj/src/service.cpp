#include "guitrace/service.hpp"

#include <random>

#include "guitrace/error.hpp"
#include "guitrace/net/tcp_transport.hpp"
#include "guitrace/report.hpp"

namespace guitrace {

namespace {

std::string random_session_id() {
  std::random_device rd;
  std::uniform_int_distribution<std::uint64_t> dist;
  return hash_to_hex(dist(rd));
}

Json widget_tree(const ProgramModel& model, const Widget& w) {
  Json handlers = Json::object();
  Json events = Json::array();
  for (const auto& [kind, list] : w.handlers) {
    handlers[std::string(to_string(kind))] = list;
    if (!list.empty()) events.push_back(std::string(to_string(kind)));
  }
  Json kids = Json::array();
  for (const auto& c : w.children) kids.push_back(widget_tree(model, c));
  return {{"id", w.id},
          {"kind", std::string(to_string(w.kind))},
          {"label", w.label},
          {"events", events},
          {"handlers", handlers},
          {"children", kids}};
}

Json code_index(const ProgramModel& model) {
  Json units = Json::array();
  const auto& doc = model.document();
  for (std::size_t u = 0; u < doc.units.size(); ++u) {
    Json classes = Json::array();
    for (const auto& ci : model.classes()) {
      if (ci.unit != u) continue;
      Json methods = Json::array();
      for (MethodIndex m : ci.methods) {
        const auto& mi = model.method(m);
        methods.push_back({{"id", mi.id},
                           {"name", mi.def->name},
                           {"firstLine", mi.def->lineSpan.first},
                           {"lastLine", mi.def->lineSpan.last}});
      }
      classes.push_back({{"id", ci.id}, {"interface", ci.isInterface}, {"methods", methods}});
    }
    units.push_back({{"name", doc.units[u].name}, {"library", doc.units[u].isLibrary}, {"classes", classes}});
  }
  return units;
}

std::string coverage_class(std::size_t covered, std::size_t total) {
  if (total > 0 && covered == total) return "fully";
  if (covered > 0) return "partially";
  return "uncovered";
}

}  // namespace

Json metrics_to_json(const EventMetrics& m) {
  return {{"seq", m.seq},
          {"appCovered", m.appCovered},
          {"appTotal", m.appTotal},
          {"ecgCovered", m.ecgCovered},
          {"ecgTotal", m.ecgTotal}};
}

SessionService::SessionService(const ProgramModel& model, const CallGraph& cg, ServiceOptions options)
    : model_(model),
      cg_(cg),
      options_(options),
      sessionId_(random_session_id()),
      host_(model.contentHash()),
      session_(model, cg),
      commands_(options.fireQueueCapacity) {}

SessionService::~SessionService() { stop(); }

void SessionService::start() {
  if (started_.exchange(true)) throw Error("service already started");
  interp_ = std::make_unique<Interpreter>(model_);
  if (options_.transport == AgentTransport::inProcess) {
    host_.addListener([this](const EventRecord& r) { onRecord(r); });
    sink_ = std::make_unique<InProcessChannel>(host_);
  } else {
    listener_ = std::make_unique<net::TcpHostListener>(
        host_, options_.agentPort, [this](const EventRecord& r) { onRecord(r); },
        [this](std::exception_ptr e) { onLinkError(e); });
    sink_ = std::make_unique<net::TcpAgentSink>("127.0.0.1", listener_->port());
  }
  agent_ = std::make_unique<AgentLink>(*interp_, *sink_, options_.snapshotEvery);
  loopThread_ = std::thread([this] { loop(); });

  Command startup;
  startup_ = startup.done.get_future().share();
  commands_.push(std::move(startup));
}

void SessionService::loop() {
  while (auto cmd = commands_.pop()) {
    try {
      const EventRecord rec = cmd->event ? agent_->fire(*cmd->event) : agent_->start();
      cmd->done.set_value(rec.seq);
    } catch (...) {
      cmd->done.set_exception(std::current_exception());
    }
  }
  try {
    agent_->close();
  } catch (...) {
    // The host may already be gone; nothing left to report to.
  }
}

void SessionService::onRecord(const EventRecord& record) {
  std::unique_lock lock(mu_);
  const auto retro = session_.ingest(record);
  ++version_;
  Json recMsg{{"type", "record"}, {"version", version_}, {"record", recordEntry(record.seq)}};
  std::vector<Json> msgs{std::move(recMsg)};
  for (const auto& u : retro)
    msgs.push_back({{"type", "retro"}, {"version", version_}, {"seq", u.seq}, {"ecgCovered", u.ecgCovered}});
  for (auto& sub : subscribers_)
    for (const auto& m : msgs) sub->offer(m);
  std::erase_if(subscribers_, [](const auto& s) { return s->dropped() || s->closed(); });
  if (record.seq == 0) ready_ = true;
  ingested_.notify_all();
}

void SessionService::onLinkError(std::exception_ptr e) {
  std::unique_lock lock(mu_);
  if (!linkError_) linkError_ = e;
  ingested_.notify_all();
}

void SessionService::awaitIngested(Seq seq) {
  std::unique_lock lock(mu_);
  ingested_.wait(lock, [&] { return session_.records().size() > seq || linkError_; });
  if (session_.records().size() <= seq) std::rethrow_exception(linkError_);
}

void SessionService::waitReady() {
  if (!started_) throw Error("service not started");
  awaitIngested(startup_.get());
}

void SessionService::stop() {
  if (!started_ || !loopThread_.joinable()) return;
  commands_.close();
  loopThread_.join();
  // Closing the agent's end gives the TCP reader its EOF.
  agent_.reset();
  sink_.reset();
  if (listener_) {
    listener_->join();
    listener_.reset();
  }
  std::unique_lock lock(mu_);
  for (auto& s : subscribers_) s->close();
  subscribers_.clear();
}

std::uint64_t SessionService::version() const {
  std::shared_lock lock(mu_);
  return version_;
}

Json SessionService::recordEntry(Seq seq) const {
  Json j = record_to_json(session_.record(seq), false);
  j["metrics"] = metrics_to_json(session_.metricsFor(seq));
  return j;
}

Json SessionService::get_program() const {
  if (!ready_) return {{"status", "starting"}};
  std::shared_lock lock(mu_);
  return {{"status", "live"},
          {"sessionId", sessionId_},
          {"version", version_},
          {"program",
           {{"name", model_.name()},
            {"hash", model_.hashHex()},
            {"main", model_.method(model_.mainMethod()).id},
            {"appTotal", model_.totalAppLines()},
            {"totalLines", model_.totalLines()}}},
          {"widgets", widget_tree(model_, model_.document().widgetRoot)},
          {"units", code_index(model_)}};
}

Json SessionService::post_fire(const FiredEvent& event) {
  waitReady();
  if (!model_.findWidget(event.widget)) throw UnknownWidgetError("unknown widget '" + event.widget + "'");
  Command cmd;
  cmd.event = event;
  auto done = cmd.done.get_future();
  if (!commands_.try_push(std::move(cmd))) throw QueueFullError("event queue is full");
  const Seq seq = done.get();
  awaitIngested(seq);
  std::shared_lock lock(mu_);
  return {{"version", version_}, {"record", recordEntry(seq)}};
}

Json SessionService::get_trace(const std::optional<FilterSpec>& filters) const {
  std::shared_lock lock(mu_);
  const FilterSpec& f = filters ? *filters : session_.filters();
  Json records = Json::array();
  for (Seq s : session_.filtered_view(f)) records.push_back(recordEntry(s));
  return {{"version", version_}, {"filters", filter_to_json(f)}, {"records", records}};
}

Json SessionService::get_filters() const {
  std::shared_lock lock(mu_);
  return filter_to_json(session_.filters());
}

Json SessionService::set_filters(FilterSpec filters) {
  std::unique_lock lock(mu_);
  session_.setFilters(std::move(filters));
  return filter_to_json(session_.filters());
}

Json SessionService::get_callgraph(Seq seq, Granularity g, CollationMode mode) const {
  std::shared_lock lock(mu_);
  const EventCallGraph* ecg = session_.eventGraph(seq);
  Json doc{{"version", version_},
           {"seq", seq},
           {"granularity", std::string(to_string(g))},
           {"mode", mode == CollationMode::collated ? "collated" : "perHandler"}};
  Json graphs = Json::array();
  if (ecg) {
    const auto& first = session_.record(seq).coverageDelta;
    for (const auto& part : collate_or_split(*ecg, cg_, model_, mode)) {
      const auto collapsed = collapse(part, model_, g);
      const auto cov = group_coverage(collapsed, model_, session_.cumulative(), first);
      Json nodes = Json::array();
      for (const auto& id : collapsed.nodes) {
        const bool isStart = id == kStartNode;
        const auto& gc = cov.at(id);
        Json members = Json::array();
        for (MethodIndex m : collapsed.members.at(id)) members.push_back(model_.method(m).id);
        auto ic = collapsed.internalCalls.find(id);
        nodes.push_back({{"id", id},
                         {"start", isStart},
                         {"coveredLines", gc.covered},
                         {"totalLines", gc.total},
                         {"status", isStart ? "start" : coverage_class(gc.covered, gc.total)},
                         {"firstCoveredHere", gc.firstCoveredHere},
                         {"members", members},
                         {"internalCalls", ic == collapsed.internalCalls.end() ? 0 : ic->second}});
      }
      Json edges = Json::array();
      for (const auto& [ends, count] : collapsed.edges)
        edges.push_back({{"from", ends.first}, {"to", ends.second}, {"count", count}});
      Json gdoc{{"nodes", nodes}, {"edges", edges}, {"lineTotal", part.universeSize()}};
      gdoc["handler"] = mode == CollationMode::perHandler ? Json(model_.method(part.handlers.front()).id) : Json(nullptr);
      graphs.push_back(std::move(gdoc));
    }
  }
  doc["graphs"] = graphs;
  return doc;
}

Json SessionService::get_source(std::string_view classId, Seq seq) const {
  std::shared_lock lock(mu_);
  const auto annotated = session_.source_annotation(classId, seq);
  const auto& ci = model_.cls(*model_.findClass(classId));
  Json lines = Json::array();
  std::size_t counts[3] = {0, 0, 0};
  for (const auto& a : annotated) {
    const auto& info = model_.line(a.line);
    lines.push_back({{"line", a.line},
                     {"method", model_.method(info.method).id},
                     {"depth", info.depth},
                     {"text", render_statement(*info.stmt)},
                     {"status", std::string(to_string(a.status))}});
    ++counts[static_cast<int>(a.status)];
  }
  return {{"version", version_},
          {"class", ci.id},
          {"library", ci.isLibrary},
          {"seq", seq},
          {"lines", lines},
          {"counts", {{"covered", counts[0]}, {"firstCoveredHere", counts[1]}, {"uncovered", counts[2]}}}};
}

Json SessionService::export_report() const {
  std::shared_lock lock(mu_);
  return session_report(session_);
}

std::shared_ptr<Subscription> SessionService::subscribe() {
  auto sub = std::make_shared<Subscription>(options_.subscriberBuffer);
  std::unique_lock lock(mu_);
  for (const auto& r : session_.records())
    sub->offer({{"type", "record"}, {"version", version_}, {"record", recordEntry(r.seq)}});
  if (!sub->dropped()) subscribers_.push_back(sub);
  return sub;
}

}  // namespace guitrace
