#include "guitrace/host.hpp"

#include <algorithm>

namespace guitrace {

using wire::ProtocolError;

AgentLink::AgentLink(Interpreter& interp, FrameSink& sink, std::size_t snapshotEvery)
    : interp_(interp), sink_(sink), snapshotEvery_(snapshotEvery) {}

void AgentLink::send(const wire::Message& msg) {
  const auto bytes = wire::encode(msg);
  sink_.write(bytes);
}

EventRecord AgentLink::start() {
  const auto& model = interp_.model();
  send(wire::HelloMsg{model.hashHex(), model.totalAppLines(), model.name()});
  EventRecord rec = interp_.start();
  lastSeq_ = rec.seq;
  send(wire::EventMsg{rec});
  return rec;
}

EventRecord AgentLink::fire(const FiredEvent& event) {
  if (closed_) throw Error("agent link closed");
  EventRecord rec = interp_.fire(event);
  lastSeq_ = rec.seq;
  send(wire::EventMsg{rec});
  if (snapshotEvery_ > 0 && rec.seq % snapshotEvery_ == 0) sendSnapshot();
  return rec;
}

void AgentLink::sendSnapshot() {
  send(wire::SnapshotMsg{lastSeq_, interp_.state().coverage.to_ranges()});
}

void AgentLink::close() {
  if (closed_) return;
  closed_ = true;
  send(wire::ByeMsg{});
}

HostReceiver::HostReceiver(std::optional<std::uint64_t> expectedHash) : expectedHash_(expectedHash) {}

void HostReceiver::addListener(RecordListener listener) { listeners_.push_back(std::move(listener)); }

void HostReceiver::feed(std::span<const std::uint8_t> bytes) {
  decoder_.feed(bytes);
  while (auto msg = decoder_.next()) handle(*msg);
}

void HostReceiver::handle(const wire::Message& msg) {
  using Kind = ProtocolError::Kind;
  if (closed_) throw ProtocolError(Kind::order, "frame after Bye");
  if (const auto* h = std::get_if<wire::HelloMsg>(&msg)) {
    if (hello_) throw ProtocolError(Kind::order, "duplicate Hello");
    if (expectedHash_ && hash_to_hex(*expectedHash_) != h->programHash)
      throw ProtocolError(Kind::hashMismatch,
                          "agent runs program " + h->programHash + ", host expects " + hash_to_hex(*expectedHash_));
    hello_ = *h;
    return;
  }
  if (!hello_) throw ProtocolError(Kind::order, "message before Hello");

  if (const auto* e = std::get_if<wire::EventMsg>(&msg)) {
    if (e->record.seq != nextSeq_)
      throw ProtocolError(Kind::seqGap, "expected seq " + std::to_string(nextSeq_) + ", got " +
                                            std::to_string(e->record.seq));
    ++nextSeq_;
    covered_.insert(e->record.coverageDelta.begin(), e->record.coverageDelta.end());
    for (const auto& l : listeners_) l(e->record);
  } else if (const auto* s = std::get_if<wire::SnapshotMsg>(&msg)) {
    if (nextSeq_ == 0 || s->seq != nextSeq_ - 1)
      throw ProtocolError(Kind::order, "snapshot for seq " + std::to_string(s->seq) + " does not follow the last record");
    std::size_t n = 0;
    auto it = covered_.begin();
    for (const auto& r : s->ranges) {
      for (LineIndex l = r.first;; ++l) {
        if (it == covered_.end() || *it != l)
          throw ProtocolError(Kind::divergence, "snapshot at seq " + std::to_string(s->seq) + " has line " +
                                                    std::to_string(l) + " not covered by any delta");
        ++it;
        ++n;
        if (l == r.last) break;
      }
    }
    if (n != covered_.size())
      throw ProtocolError(Kind::divergence, "snapshot at seq " + std::to_string(s->seq) + " is missing " +
                                                std::to_string(covered_.size() - n) + " covered lines");
    ++snapshotsVerified_;
  } else {
    closed_ = true;
  }
}

}  // namespace guitrace
