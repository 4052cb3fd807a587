#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include "guitrace/bounded_queue.hpp"
#include "guitrace/host.hpp"
#include "guitrace/trace_session.hpp"

namespace guitrace {

namespace net {
class TcpAgentSink;
class TcpHostListener;
}  // namespace net

enum class AgentTransport { inProcess, tcp };

struct ServiceOptions {
  AgentTransport transport = AgentTransport::inProcess;
  /// Host listener port for the TCP transport; 0 picks a free port.
  std::uint16_t agentPort = 0;
  /// Pending fire commands before post_fire reports queue-full.
  std::size_t fireQueueCapacity = 256;
  /// Undelivered push messages before a subscriber is dropped.
  std::size_t subscriberBuffer = 4096;
  std::size_t snapshotEvery = 50;
};

/// One push-channel subscriber. Messages arrive in ingest order; a
/// subscriber that falls `subscriberBuffer` messages behind is dropped.
class Subscription {
 public:
  explicit Subscription(std::size_t capacity) : queue_(capacity) {}

  /// Next message, or nullopt on timeout or after the subscriber was
  /// dropped and drained.
  std::optional<Json> next(std::chrono::milliseconds timeout) { return queue_.pop_for(timeout); }
  bool dropped() const noexcept { return dropped_; }
  bool closed() const { return queue_.closed(); }
  void close() { queue_.close(); }

 private:
  friend class SessionService;
  void offer(Json msg) {
    if (!queue_.try_push(std::move(msg))) {
      dropped_ = true;
      queue_.close();
    }
  }

  BoundedQueue<Json> queue_;
  std::atomic<bool> dropped_{false};
};

/// The exploration backend: runs the program on a single event-loop thread
/// (the agent), receives its records over the wire link (the host), keeps
/// the live TraceSession, and answers queries. Every response is computed
/// under one lock and stamped with the session version it reflects.
class SessionService {
 public:
  SessionService(const ProgramModel& model, const CallGraph& cg, ServiceOptions options = {});
  ~SessionService();
  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  /// Launches the event loop and runs main asynchronously.
  void start();
  /// Blocks until the startup record is ingested. Throws if startup failed.
  void waitReady();
  bool ready() const noexcept { return ready_; }
  void stop();

  Json get_program() const;
  /// Fires an event and returns after its record is ingested and pushed.
  /// Throws UnknownWidgetError, QueueFullError, or Error on link failure.
  Json post_fire(const FiredEvent& event);
  Json get_trace(const std::optional<FilterSpec>& filters = std::nullopt) const;
  Json get_filters() const;
  Json set_filters(FilterSpec filters);
  /// Throws UnknownSeqError.
  Json get_callgraph(Seq seq, Granularity g, CollationMode mode) const;
  /// Throws UnknownClassError / UnknownSeqError.
  Json get_source(std::string_view classId, Seq seq) const;
  Json export_report() const;

  /// Registers a subscriber and queues the current trace as backlog.
  std::shared_ptr<Subscription> subscribe();

  std::uint64_t version() const;
  const std::string& sessionId() const noexcept { return sessionId_; }

 private:
  struct Command {
    std::optional<FiredEvent> event;  // empty = startup
    std::promise<Seq> done;
  };

  void loop();
  void onRecord(const EventRecord& record);
  void onLinkError(std::exception_ptr e);
  void awaitIngested(Seq seq);
  Json recordEntry(Seq seq) const;

  const ProgramModel& model_;
  const CallGraph& cg_;
  ServiceOptions options_;
  std::string sessionId_;

  // Host side.
  HostReceiver host_;
  mutable std::shared_mutex mu_;
  TraceSession session_;
  std::uint64_t version_ = 0;
  std::vector<std::shared_ptr<Subscription>> subscribers_;
  std::condition_variable_any ingested_;
  std::exception_ptr linkError_;

  // Agent side; touched only by the loop thread after start().
  std::unique_ptr<Interpreter> interp_;
  std::unique_ptr<FrameSink> sink_;
  std::unique_ptr<AgentLink> agent_;
  std::unique_ptr<net::TcpHostListener> listener_;

  BoundedQueue<Command> commands_;
  std::thread loopThread_;
  std::atomic<bool> ready_{false};
  std::atomic<bool> started_{false};
  std::shared_future<Seq> startup_;
};

Json metrics_to_json(const EventMetrics& m);

}  // namespace guitrace
