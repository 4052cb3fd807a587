#pragma once

#include <string>
#include <vector>

#include "guitrace/trace_session.hpp"

namespace guitrace {

/// Session report document: program summary, final coverage, per-event
/// metrics (current values), the filtered seq list and the DOT file index.
/// Contains no timestamps, so equal sessions give byte-identical reports.
Json session_report(const TraceSession& session);

/// Relative paths of the DOT exports for a session, in write order.
std::vector<std::string> dot_export_paths(const TraceSession& session);

/// Writes `<dir>/report.json` and `<dir>/dot/event-<seq>-<granularity>.dot`
/// for every record that has an event call graph.
void write_report(const TraceSession& session, const std::string& dir);

}  // namespace guitrace
