#include "guitrace/net/tcp_transport.hpp"

#include <sys/socket.h>

#include <boost/asio.hpp>

namespace guitrace::net {

namespace asio = boost::asio;
using asio::ip::tcp;

struct TcpAgentSink::Impl {
  asio::io_context io;
  tcp::socket socket{io};
};

TcpAgentSink::TcpAgentSink(const std::string& host, std::uint16_t port) : impl_(std::make_unique<Impl>()) {
  tcp::resolver resolver(impl_->io);
  asio::connect(impl_->socket, resolver.resolve(host, std::to_string(port)));
  impl_->socket.set_option(tcp::no_delay(true));
}

TcpAgentSink::~TcpAgentSink() { close(); }

void TcpAgentSink::write(std::span<const std::uint8_t> frame) {
  asio::write(impl_->socket, asio::buffer(frame.data(), frame.size()));
}

void TcpAgentSink::close() {
  boost::system::error_code ec;
  if (impl_->socket.is_open()) {
    impl_->socket.shutdown(tcp::socket::shutdown_send, ec);
    impl_->socket.close(ec);
  }
}

struct TcpHostListener::Impl {
  Impl(HostReceiver& r, std::size_t limit) : receiver(r), buffer(limit) {}

  HostReceiver& receiver;
  asio::io_context io;
  tcp::acceptor acceptor{io};
  tcp::socket socket{io};
  BoundedQueue<EventRecord> buffer;
  std::thread reader;
  std::thread dispatcher;
  std::atomic<bool> stopping{false};
  std::uint16_t port = 0;
};

TcpHostListener::TcpHostListener(HostReceiver& receiver, std::uint16_t port, Deliver deliver, OnError onError,
                                 std::size_t bufferLimit)
    : impl_(std::make_unique<Impl>(receiver, bufferLimit)) {
  auto& im = *impl_;
  const tcp::endpoint ep(asio::ip::make_address("127.0.0.1"), port);
  im.acceptor.open(ep.protocol());
  im.acceptor.set_option(tcp::acceptor::reuse_address(true));
  im.acceptor.bind(ep);
  im.acceptor.listen(1);
  im.port = im.acceptor.local_endpoint().port();

  receiver.addListener([&im](const EventRecord& r) { im.buffer.push(r); });

  im.reader = std::thread([&im, onError] {
    try {
      im.acceptor.accept(im.socket);
      std::array<std::uint8_t, 64 * 1024> chunk{};
      while (true) {
        boost::system::error_code ec;
        const std::size_t n = im.socket.read_some(asio::buffer(chunk), ec);
        if (ec == asio::error::eof || (ec && im.stopping)) break;
        if (ec) throw boost::system::system_error(ec);
        im.receiver.feed(std::span<const std::uint8_t>(chunk.data(), n));
      }
    } catch (...) {
      if (!im.stopping && onError) onError(std::current_exception());
    }
    im.buffer.close();
  });

  im.dispatcher = std::thread([&im, deliver = std::move(deliver), onError] {
    while (auto rec = im.buffer.pop()) {
      try {
        deliver(*rec);
      } catch (...) {
        if (onError) onError(std::current_exception());
      }
    }
  });
}

TcpHostListener::~TcpHostListener() {
  stop();
  join();
}

std::uint16_t TcpHostListener::port() const noexcept { return impl_->port; }

void TcpHostListener::join() {
  if (impl_->reader.joinable()) impl_->reader.join();
  if (impl_->dispatcher.joinable()) impl_->dispatcher.join();
}

void TcpHostListener::stop() {
  auto& im = *impl_;
  if (im.stopping.exchange(true)) return;
  // Unblock accept()/read_some() in the reader thread.
  ::shutdown(im.acceptor.native_handle(), SHUT_RDWR);
  if (im.socket.is_open()) ::shutdown(im.socket.native_handle(), SHUT_RDWR);
  im.buffer.close();
}

}  // namespace guitrace::net
