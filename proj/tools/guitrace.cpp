// guitrace: validate programs, build call-graph caches, run scripted
// sessions and serve live ones.
//
//   guitrace graph --program P --cache OUT
//   guitrace run   --program P --script S --report DIR [--cache C] [--strict-cache]
//                  [--filter-kinds k1,k2] [--hide-noncontributing]
//   guitrace serve --program P [--port N] [--cache C] [--strict-cache] [--tcp]
//
// Exit codes: 0 ok, 2 usage, 3 invalid program, 4 script failed or faulted,
// 5 cache error.

#include <CLI11.hpp>
#include <csignal>
#include <filesystem>
#include <iostream>

#include "guitrace/error.hpp"
#include "guitrace/net/http_server.hpp"
#include "guitrace/report.hpp"
#include "guitrace/service.hpp"

using namespace guitrace;

namespace {

enum Exit { kOk = 0, kUsage = 2, kInvalidProgram = 3, kScriptError = 4, kCacheError = 5 };

struct ExitError {
  int code;
  std::string message;
};

std::unique_ptr<ProgramModel> open_program(const std::string& path) {
  try {
    return load_program(path);
  } catch (const Error& e) {
    throw ExitError{kInvalidProgram, path + ": " + e.what()};
  }
}

// Loads the cache when it is current; otherwise rebuilds and rewrites it,
// unless strict, in which case any unusable cache is fatal.
CallGraph obtain_call_graph(const ProgramModel& model, const std::string& cachePath, bool strict) {
  if (cachePath.empty()) return build_call_graph(model);
  if (std::filesystem::exists(cachePath)) {
    try {
      return load_call_graph(cachePath, model);
    } catch (const StaleCacheError& e) {
      if (strict) throw ExitError{kCacheError, cachePath + ": " + e.what()};
      std::cerr << "guitrace: " << cachePath << ": " << e.what() << "; rebuilding\n";
    } catch (const Error& e) {
      if (strict) throw ExitError{kCacheError, cachePath + ": " + e.what()};
      std::cerr << "guitrace: " << cachePath << ": " << e.what() << "; rebuilding\n";
    }
  } else if (strict) {
    throw ExitError{kCacheError, cachePath + ": cache missing"};
  }
  CallGraph cg = build_call_graph(model);
  try {
    save_call_graph(cg, model, cachePath);
  } catch (const Error& e) {
    throw ExitError{kCacheError, cachePath + ": " + e.what()};
  }
  return cg;
}

int cmd_graph(const std::string& programPath, const std::string& cacheOut) {
  auto model = open_program(programPath);
  const CallGraph cg = build_call_graph(*model);
  try {
    save_call_graph(cg, *model, cacheOut);
  } catch (const Error& e) {
    throw ExitError{kCacheError, cacheOut + ": " + e.what()};
  }
  std::cout << "nodes " << cg.nodes.size() << "\nedges " << cg.edges.size() << "\n";
  return kOk;
}

int cmd_run(const std::string& programPath, const std::string& scriptPath, const std::string& reportDir,
            const std::string& cachePath, bool strict, const std::string& filterKinds, bool hideNonContributing) {
  auto model = open_program(programPath);
  FilterSpec filters;
  try {
    filters.hiddenKinds = parse_kind_list(filterKinds);
  } catch (const ParseError& e) {
    throw ExitError{kUsage, std::string("--filter-kinds: ") + e.what()};
  }
  filters.hideNonContributing = hideNonContributing;

  std::vector<FiredEvent> script;
  try {
    script = load_script(scriptPath);
  } catch (const Error& e) {
    throw ExitError{kScriptError, scriptPath + ": " + e.what()};
  }
  const CallGraph cg = obtain_call_graph(*model, cachePath, strict);

  std::unique_ptr<TraceSession> session;
  try {
    session = script_run(*model, cg, script);
  } catch (const Error& e) {
    throw ExitError{kScriptError, scriptPath + ": " + e.what()};
  }
  session->setFilters(filters);
  write_report(*session, reportDir);

  int faults = 0;
  for (const auto& r : session->records()) {
    if (!r.error) continue;
    std::cerr << "guitrace: event " << r.seq << " (" << r.kindName() << "): " << *r.error << "\n";
    ++faults;
  }
  const auto& m = session->metrics().back();
  std::cout << "events " << session->records().size() - 1 << "\napp lines " << m.appCovered << "/" << m.appTotal
            << "\n";
  return faults ? kScriptError : kOk;
}

int cmd_serve(const std::string& programPath, std::uint16_t port, const std::string& cachePath, bool strict,
              bool tcp) {
  auto model = open_program(programPath);
  const CallGraph cg = obtain_call_graph(*model, cachePath, strict);

  // Block termination signals before any thread starts so only sigwait
  // below sees them.
  sigset_t sigs;
  sigemptyset(&sigs);
  sigaddset(&sigs, SIGINT);
  sigaddset(&sigs, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &sigs, nullptr);

  ServiceOptions opts;
  opts.transport = tcp ? AgentTransport::tcp : AgentTransport::inProcess;
  SessionService service(*model, cg, opts);
  std::unique_ptr<net::HttpServer> server;
  try {
    server = std::make_unique<net::HttpServer>(service, port);
  } catch (const std::exception& e) {
    throw ExitError{kUsage, "cannot listen on port " + std::to_string(port) + ": " + e.what()};
  }
  service.start();
  server->start();
  std::cout << "listening on port " << server->port() << std::endl;

  int sig = 0;
  sigwait(&sigs, &sig);
  server->stop();
  service.stop();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event call graph coverage tracing for modeled GUI programs"};
  app.require_subcommand(1);

  std::string program, script, report, cache, filterKinds;
  bool strict = false, hideNonContributing = false, tcp = false;
  std::uint16_t port = net::kDefaultHttpPort;

  auto* graph = app.add_subcommand("graph", "Build the call graph and write its cache");
  graph->add_option("--program", program, "Program document (.edp)")->required()->check(CLI::ExistingFile);
  graph->add_option("--cache", cache, "Cache file to write")->required();

  auto* run = app.add_subcommand("run", "Run an event script headlessly and write a report");
  run->add_option("--program", program, "Program document (.edp)")->required()->check(CLI::ExistingFile);
  run->add_option("--script", script, "Event script (.events)")->required()->check(CLI::ExistingFile);
  run->add_option("--report", report, "Report directory")->required();
  run->add_option("--cache", cache, "Call-graph cache; built and saved when missing or stale");
  run->add_flag("--strict-cache", strict, "Fail instead of rebuilding a missing, stale or corrupt cache");
  run->add_option("--filter-kinds", filterKinds, "Comma-separated event kinds hidden from the report view");
  run->add_flag("--hide-noncontributing", hideNonContributing, "Hide events that covered no new lines");

  auto* serve = app.add_subcommand("serve", "Start the exploration service");
  serve->add_option("--program", program, "Program document (.edp)")->required()->check(CLI::ExistingFile);
  serve->add_option("--port", port, "HTTP port; 0 picks a free one")->capture_default_str();
  serve->add_option("--cache", cache, "Call-graph cache; built and saved when missing or stale");
  serve->add_flag("--strict-cache", strict, "Fail instead of rebuilding a missing, stale or corrupt cache");
  serve->add_flag("--tcp", tcp, "Connect agent and host over a local socket");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*graph) return cmd_graph(program, cache);
    if (*run) return cmd_run(program, script, report, cache, strict, filterKinds, hideNonContributing);
    if (*serve) return cmd_serve(program, port, cache, strict, tcp);
  } catch (const ExitError& e) {
    std::cerr << "guitrace: " << e.message << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "guitrace: " << e.what() << "\n";
    return 1;
  }
  return kUsage;
}
