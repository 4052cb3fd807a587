#include "guitrace/wire.hpp"

#include <algorithm>

namespace guitrace::wire {

namespace {

Json payload_of(const Message& msg) {
  return std::visit(
      [](const auto& m) -> Json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, HelloMsg>) {
          return {{"programHash", m.programHash}, {"totalAppLines", m.totalAppLines}, {"programName", m.programName}};
        } else if constexpr (std::is_same_v<T, EventMsg>) {
          return record_to_json(m.record);
        } else if constexpr (std::is_same_v<T, SnapshotMsg>) {
          Json ranges = Json::array();
          for (const auto& r : m.ranges) ranges.push_back(Json::array({r.first, r.last}));
          return {{"seq", m.seq}, {"ranges", ranges}};
        } else {
          return nullptr;
        }
      },
      msg);
}

MsgType type_of(const Message& msg) {
  switch (msg.index()) {
    case 0: return MsgType::hello;
    case 1: return MsgType::event;
    case 2: return MsgType::snapshot;
    default: return MsgType::bye;
  }
}

[[noreturn]] void bad_payload(const std::string& what) {
  throw ProtocolError(ProtocolError::Kind::badPayload, "bad frame payload: " + what);
}

Message parse_payload(MsgType type, std::span<const std::uint8_t> body) {
  if (type == MsgType::bye) {
    if (!body.empty()) bad_payload("bye carries no payload");
    return ByeMsg{};
  }
  Json j;
  try {
    j = Json::parse(body.begin(), body.end());
  } catch (const Json::exception& e) {
    bad_payload(e.what());
  }
  try {
    switch (type) {
      case MsgType::hello:
        return HelloMsg{j.at("programHash").get<std::string>(), j.at("totalAppLines").get<std::uint64_t>(),
                        j.at("programName").get<std::string>()};
      case MsgType::event:
        return EventMsg{record_from_json(j)};
      case MsgType::snapshot: {
        SnapshotMsg s;
        s.seq = j.at("seq").get<Seq>();
        for (const auto& r : j.at("ranges")) {
          if (!r.is_array() || r.size() != 2) bad_payload("snapshot range must be a pair");
          LineRange lr{r[0].get<LineIndex>(), r[1].get<LineIndex>()};
          if (lr.first > lr.last) bad_payload("inverted snapshot range");
          if (!s.ranges.empty() && s.ranges.back().last + 1 >= lr.first) bad_payload("snapshot ranges overlap or touch");
          s.ranges.push_back(lr);
        }
        return s;
      }
      case MsgType::bye:
        break;
    }
  } catch (const Json::exception& e) {
    bad_payload(e.what());
  } catch (const ParseError& e) {
    bad_payload(e.what());
  }
  bad_payload("unreachable");
}

}  // namespace

Bytes encode(const Message& msg) {
  std::string body;
  if (!std::holds_alternative<ByeMsg>(msg)) body = to_canonical(payload_of(msg));
  if (body.size() > kMaxPayload)
    throw ProtocolError(ProtocolError::Kind::lengthOverflow, "payload exceeds " + std::to_string(kMaxPayload) + " bytes");
  const auto len = static_cast<std::uint32_t>(body.size());
  Bytes out(kHeaderSize + body.size());
  std::copy(kMagic.begin(), kMagic.end(), out.begin());
  out[4] = kVersion;
  out[5] = static_cast<std::uint8_t>(type_of(msg));
  out[6] = static_cast<std::uint8_t>(len >> 24);
  out[7] = static_cast<std::uint8_t>(len >> 16);
  out[8] = static_cast<std::uint8_t>(len >> 8);
  out[9] = static_cast<std::uint8_t>(len);
  std::copy(body.begin(), body.end(), out.begin() + kHeaderSize);
  return out;
}

std::variant<NeedMore, Decoded> decode(std::span<const std::uint8_t> bytes) {
  const std::size_t magicSeen = std::min(bytes.size(), kMagic.size());
  if (!std::equal(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(magicSeen), kMagic.begin()))
    throw ProtocolError(ProtocolError::Kind::badMagic, "bad frame magic");
  if (bytes.size() > 4 && bytes[4] != kVersion)
    throw ProtocolError(ProtocolError::Kind::badVersion, "unsupported protocol version " + std::to_string(bytes[4]));
  if (bytes.size() > 5 && (bytes[5] < 1 || bytes[5] > 4))
    throw ProtocolError(ProtocolError::Kind::badType, "unknown message type " + std::to_string(bytes[5]));
  if (bytes.size() < kHeaderSize) return NeedMore{kHeaderSize};

  const std::uint32_t len = (std::uint32_t{bytes[6]} << 24) | (std::uint32_t{bytes[7]} << 16) |
                            (std::uint32_t{bytes[8]} << 8) | std::uint32_t{bytes[9]};
  if (len > kMaxPayload)
    throw ProtocolError(ProtocolError::Kind::lengthOverflow, "frame length " + std::to_string(len) + " exceeds limit");
  const std::size_t total = kHeaderSize + len;
  if (bytes.size() < total) return NeedMore{total};
  return Decoded{parse_payload(static_cast<MsgType>(bytes[5]), bytes.subspan(kHeaderSize, len)), total};
}

void FrameDecoder::feed(std::span<const std::uint8_t> bytes) {
  if (start_ > 0 && start_ >= buffer_.size() / 2) {
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(start_));
    start_ = 0;
  }
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
}

std::optional<Message> FrameDecoder::next() {
  auto result = decode(std::span<const std::uint8_t>(buffer_).subspan(start_));
  if (auto* d = std::get_if<Decoded>(&result)) {
    start_ += d->consumed;
    return std::move(d->message);
  }
  return std::nullopt;
}

}  // namespace guitrace::wire
