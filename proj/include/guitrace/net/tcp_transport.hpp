#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <string>
#include <thread>

#include "guitrace/bounded_queue.hpp"
#include "guitrace/host.hpp"

namespace guitrace::net {

/// Agent-side socket: connects to a host listener and writes frames.
class TcpAgentSink : public FrameSink {
 public:
  TcpAgentSink(const std::string& host, std::uint16_t port);
  ~TcpAgentSink() override;
  TcpAgentSink(const TcpAgentSink&) = delete;
  TcpAgentSink& operator=(const TcpAgentSink&) = delete;

  void write(std::span<const std::uint8_t> frame) override;
  void close();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Host-side socket endpoint. Accepts one agent connection, feeds the bytes
/// into `receiver`, and hands each record to `deliver` on a separate
/// dispatcher thread through a buffer of `bufferLimit` records; a full
/// buffer stalls the socket reader.
class TcpHostListener {
 public:
  using Deliver = std::function<void(const EventRecord&)>;
  using OnError = std::function<void(std::exception_ptr)>;

  TcpHostListener(HostReceiver& receiver, std::uint16_t port, Deliver deliver, OnError onError,
                  std::size_t bufferLimit = 10000);
  ~TcpHostListener();
  TcpHostListener(const TcpHostListener&) = delete;
  TcpHostListener& operator=(const TcpHostListener&) = delete;

  /// Bound port (useful when constructed with port 0).
  std::uint16_t port() const noexcept;
  /// Blocks until the connection has closed and every record is delivered.
  void join();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace guitrace::net
