#include "guitrace/report.hpp"

#include <array>
#include <filesystem>

namespace guitrace {

namespace {

constexpr std::array kGranularities{Granularity::method, Granularity::class_, Granularity::package};

std::string dot_path(Seq seq, Granularity g) {
  return "dot/event-" + std::to_string(seq) + "-" + std::string(to_string(g)) + ".dot";
}

}  // namespace

std::vector<std::string> dot_export_paths(const TraceSession& session) {
  std::vector<std::string> out;
  for (const auto& r : session.records())
    if (session.eventGraph(r.seq))
      for (Granularity g : kGranularities) out.push_back(dot_path(r.seq, g));
  return out;
}

Json session_report(const TraceSession& session) {
  const auto& model = session.model();
  Json events = Json::array();
  for (const auto& r : session.records()) {
    const auto& m = session.metricsFor(r.seq);
    Json e{{"seq", r.seq},
           {"kind", r.kindName()},
           {"handlers", r.handlers},
           {"firstCovered", r.coverageDelta},
           {"appCovered", m.appCovered},
           {"appTotal", m.appTotal},
           {"ecgCovered", m.ecgCovered},
           {"ecgTotal", m.ecgTotal}};
    if (r.event) {
      e["widget"] = r.event->widget;
      e["payload"] = r.event->payload;
    }
    if (r.error) e["error"] = *r.error;
    events.push_back(std::move(e));
  }
  Json ranges = Json::array();
  for (const auto& rg : session.cumulative().to_ranges()) ranges.push_back(Json::array({rg.first, rg.last}));
  return {{"program",
           {{"name", model.name()},
            {"hash", model.hashHex()},
            {"appTotal", model.totalAppLines()},
            {"totalLines", model.totalLines()}}},
          {"final",
           {{"appCovered", session.cumulative().count()},
            {"appTotal", model.totalAppLines()},
            {"coveredRanges", ranges}}},
          {"events", events},
          {"filters", filter_to_json(session.filters())},
          {"visible", session.filtered_view()},
          {"dot", dot_export_paths(session)}};
}

void write_report(const TraceSession& session, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "dot");
  write_file((fs::path(dir) / "report.json").string(), to_canonical(session_report(session)));
  for (const auto& r : session.records()) {
    const EventCallGraph* ecg = session.eventGraph(r.seq);
    if (!ecg) continue;
    for (Granularity g : kGranularities) {
      const auto cg = collapse(*ecg, session.model(), g);
      const std::string name = "event-" + std::to_string(r.seq) + "-" + std::string(to_string(g));
      write_file((fs::path(dir) / dot_path(r.seq, g)).string(), to_dot(cg, name));
    }
  }
}

}  // namespace guitrace
