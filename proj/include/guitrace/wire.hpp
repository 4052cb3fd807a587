#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "guitrace/error.hpp"
#include "guitrace/interpreter.hpp"

namespace guitrace::wire {

// Frame layout (big-endian):
//   0..3  magic "GTRC"
//   4     version (1)
//   5     message type
//   6..9  payload length
//   10..  payload (canonical structured text)
inline constexpr std::array<std::uint8_t, 4> kMagic{'G', 'T', 'R', 'C'};
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 10;
inline constexpr std::uint32_t kMaxPayload = 16u * 1024u * 1024u;
inline constexpr std::uint16_t kDefaultPort = 4790;

enum class MsgType : std::uint8_t { hello = 1, event = 2, snapshot = 3, bye = 4 };

struct HelloMsg {
  std::string programHash;  // 16 hex digits
  std::uint64_t totalAppLines = 0;
  std::string programName;

  friend bool operator==(const HelloMsg&, const HelloMsg&) = default;
};

struct EventMsg {
  EventRecord record;

  friend bool operator==(const EventMsg& a, const EventMsg& b) {
    return a.record == b.record && a.record.timestampMs == b.record.timestampMs;
  }
};

/// Cumulative coverage after record `seq`, as maximal sorted ranges.
struct SnapshotMsg {
  Seq seq = 0;
  std::vector<LineRange> ranges;

  friend bool operator==(const SnapshotMsg&, const SnapshotMsg&) = default;
};

struct ByeMsg {
  friend bool operator==(const ByeMsg&, const ByeMsg&) = default;
};

using Message = std::variant<HelloMsg, EventMsg, SnapshotMsg, ByeMsg>;
using Bytes = std::vector<std::uint8_t>;

class ProtocolError : public Error {
 public:
  enum class Kind { badMagic, badVersion, badType, lengthOverflow, badPayload, order, seqGap, divergence, hashMismatch };

  ProtocolError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

Bytes encode(const Message& msg);

/// More input is required; `needed` is the minimum total buffer size that
/// could complete the frame.
struct NeedMore {
  std::size_t needed = 0;
};

struct Decoded {
  Message message;
  std::size_t consumed = 0;
};

/// Decodes exactly one frame from the front of `bytes`. Corrupt input
/// throws ProtocolError; a valid but incomplete prefix yields NeedMore.
std::variant<NeedMore, Decoded> decode(std::span<const std::uint8_t> bytes);

/// Incremental decoder over an arbitrarily chunked byte stream.
class FrameDecoder {
 public:
  void feed(std::span<const std::uint8_t> bytes);
  /// Next complete message, if any. Throws ProtocolError on corrupt input.
  std::optional<Message> next();
  std::size_t buffered() const noexcept { return buffer_.size() - start_; }

 private:
  Bytes buffer_;
  std::size_t start_ = 0;
};

}  // namespace guitrace::wire
