#pragma once

#include <functional>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "guitrace/interpreter.hpp"
#include "guitrace/wire.hpp"

namespace guitrace {

/// Byte-stream endpoint the agent writes frames into.
class FrameSink {
 public:
  virtual ~FrameSink() = default;
  virtual void write(std::span<const std::uint8_t> frame) = 0;
};

/// Agent side of the link: wraps an Interpreter and emits Hello, one Event
/// frame per record, a Snapshot every `snapshotEvery` fired events (and on
/// request), and Bye.
class AgentLink {
 public:
  AgentLink(Interpreter& interp, FrameSink& sink, std::size_t snapshotEvery = 50);

  EventRecord start();
  EventRecord fire(const FiredEvent& event);
  void sendSnapshot();
  void close();

 private:
  void send(const wire::Message& msg);

  Interpreter& interp_;
  FrameSink& sink_;
  std::size_t snapshotEvery_;
  Seq lastSeq_ = 0;
  bool closed_ = false;
};

/// Host side of the link. Validates message order, sequence contiguity and
/// snapshot coherence, and notifies listeners once per record, in order.
class HostReceiver {
 public:
  using RecordListener = std::function<void(const EventRecord&)>;

  /// With `expectedHash`, a Hello for a different program is rejected.
  explicit HostReceiver(std::optional<std::uint64_t> expectedHash = std::nullopt);

  void addListener(RecordListener listener);

  /// Consumes bytes at arbitrary boundaries. Throws wire::ProtocolError.
  void feed(std::span<const std::uint8_t> bytes);
  /// Processes one already-decoded message.
  void handle(const wire::Message& msg);

  const std::optional<wire::HelloMsg>& hello() const noexcept { return hello_; }
  bool closed() const noexcept { return closed_; }
  Seq nextSeq() const noexcept { return nextSeq_; }
  std::size_t snapshotsVerified() const noexcept { return snapshotsVerified_; }

 private:
  std::optional<std::uint64_t> expectedHash_;
  std::vector<RecordListener> listeners_;
  wire::FrameDecoder decoder_;
  std::optional<wire::HelloMsg> hello_;
  std::set<LineIndex> covered_;
  Seq nextSeq_ = 0;
  bool closed_ = false;
  std::size_t snapshotsVerified_ = 0;
};

/// In-process transport: bytes written by the agent are fed straight into
/// the host, producing the same message sequence as a socket.
class InProcessChannel : public FrameSink {
 public:
  explicit InProcessChannel(HostReceiver& host) : host_(host) {}
  void write(std::span<const std::uint8_t> frame) override { host_.feed(frame); }

 private:
  HostReceiver& host_;
};

/// Sink that records every frame; useful for inspecting the agent's output.
class RecordingSink : public FrameSink {
 public:
  void write(std::span<const std::uint8_t> frame) override { bytes.insert(bytes.end(), frame.begin(), frame.end()); }
  wire::Bytes bytes;
};

}  // namespace guitrace
