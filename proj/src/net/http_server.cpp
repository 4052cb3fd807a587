#include "guitrace/net/http_server.hpp"

#include <sys/socket.h>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <charconv>
#include <list>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "guitrace/error.hpp"

namespace guitrace::net {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

struct BadRequest : Error {
  using Error::Error;
};

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string percent_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '+') {
      out += ' ';
    } else if (s[i] == '%') {
      if (i + 2 >= s.size()) throw BadRequest("truncated percent escape in query");
      const int hi = hex_value(s[i + 1]);
      const int lo = hex_value(s[i + 2]);
      if (hi < 0 || lo < 0) throw BadRequest("bad percent escape in query");
      out += static_cast<char>(hi * 16 + lo);
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

std::map<std::string, std::string> parse_query(std::string_view q) {
  std::map<std::string, std::string> out;
  while (!q.empty()) {
    const auto amp = q.find('&');
    const auto part = q.substr(0, amp);
    if (!part.empty()) {
      const auto eq = part.find('=');
      out[percent_decode(part.substr(0, eq))] = eq == std::string_view::npos ? "" : percent_decode(part.substr(eq + 1));
    }
    if (amp == std::string_view::npos) break;
    q.remove_prefix(amp + 1);
  }
  return out;
}

const std::string& param(const std::map<std::string, std::string>& q, const std::string& key) {
  auto it = q.find(key);
  if (it == q.end()) throw BadRequest("missing query parameter '" + key + "'");
  return it->second;
}

Seq parse_seq(const std::string& text) {
  Seq v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size()) throw BadRequest("seq must be a non-negative integer");
  return v;
}

bool parse_flag(const std::string& text) {
  if (text == "1" || text == "true") return true;
  if (text == "0" || text == "false" || text.empty()) return false;
  throw BadRequest("flag must be true/false");
}

Json parse_body(std::string_view body) {
  try {
    return parse_json(body);
  } catch (const ParseError& e) {
    throw BadRequest(e.what());
  }
}

HttpResponse dispatch(SessionService& svc, std::string_view method, std::string_view path,
                      const std::map<std::string, std::string>& q, std::string_view body) {
  const bool get = method == "GET";
  const bool post = method == "POST";
  auto wrong_method = [] { return HttpResponse{405, {{"error", "method not allowed"}}}; };

  if (path == "/program") {
    if (!get) return wrong_method();
    return {200, svc.get_program()};
  }
  if (path == "/fire") {
    if (!post) return wrong_method();
    const Json j = parse_body(body);
    if (!j.is_object() || !j.contains("widget") || !j["widget"].is_string() || !j.contains("kind") ||
        !j["kind"].is_string())
      throw BadRequest("fire needs string 'widget' and 'kind'");
    const auto kind = event_kind_from_string(j["kind"].get<std::string>());
    if (!kind) throw BadRequest("unknown event kind '" + j["kind"].get<std::string>() + "'");
    std::int64_t payload = 0;
    if (j.contains("payload")) {
      if (!j["payload"].is_number_integer()) throw BadRequest("payload must be an integer");
      payload = j["payload"].get<std::int64_t>();
    }
    return {200, svc.post_fire({j["widget"].get<std::string>(), *kind, payload})};
  }
  if (path == "/trace") {
    if (!get) return wrong_method();
    std::optional<FilterSpec> f;
    if (q.count("hiddenKinds") || q.count("hideNonContributing")) {
      f.emplace();
      if (auto it = q.find("hiddenKinds"); it != q.end()) f->hiddenKinds = parse_kind_list(it->second);
      if (auto it = q.find("hideNonContributing"); it != q.end()) f->hideNonContributing = parse_flag(it->second);
    }
    return {200, svc.get_trace(f)};
  }
  if (path == "/filters") {
    if (get) return {200, svc.get_filters()};
    if (post) return {200, svc.set_filters(filter_from_json(parse_body(body)))};
    return wrong_method();
  }
  if (path == "/callgraph") {
    if (!get) return wrong_method();
    const Seq seq = parse_seq(param(q, "seq"));
    auto g = granularity_from_string(q.count("granularity") ? q.at("granularity") : "method");
    if (!g) throw BadRequest("granularity must be method, class or package");
    auto mode = collation_from_string(q.count("mode") ? q.at("mode") : "collated");
    if (!mode) throw BadRequest("mode must be collated or perHandler");
    return {200, svc.get_callgraph(seq, *g, *mode)};
  }
  if (path == "/source") {
    if (!get) return wrong_method();
    return {200, svc.get_source(param(q, "class"), parse_seq(param(q, "seq")))};
  }
  if (path == "/export") {
    if (!get) return wrong_method();
    return {200, svc.export_report()};
  }
  return {404, {{"error", "no route for " + std::string(path)}}};
}

}  // namespace

HttpResponse route_request(SessionService& service, std::string_view method, std::string_view target,
                           std::string_view body) {
  const auto qpos = target.find('?');
  const std::string_view path = target.substr(0, qpos);
  try {
    const auto query = qpos == std::string_view::npos ? std::map<std::string, std::string>{}
                                                       : parse_query(target.substr(qpos + 1));
    return dispatch(service, method, path, query, body);
  } catch (const BadRequest& e) {
    return {400, {{"error", e.what()}}};
  } catch (const ParseError& e) {
    return {400, {{"error", e.what()}}};
  } catch (const UnknownWidgetError& e) {
    return {404, {{"error", e.what()}}};
  } catch (const UnknownSeqError& e) {
    return {404, {{"error", e.what()}}};
  } catch (const UnknownClassError& e) {
    return {404, {{"error", e.what()}}};
  } catch (const QueueFullError& e) {
    return {503, {{"error", e.what()}}};
  } catch (const std::exception& e) {
    return {500, {{"error", e.what()}}};
  }
}

struct HttpServer::Impl {
  Impl(SessionService& s, std::uint16_t port, const std::string& address) : service(s) {
    const tcp::endpoint ep(asio::ip::make_address(address), port);
    acceptor.open(ep.protocol());
    acceptor.set_option(tcp::acceptor::reuse_address(true));
    acceptor.bind(ep);
    acceptor.listen();
    boundPort = acceptor.local_endpoint().port();
  }

  void acceptLoop() {
    while (!stopping) {
      tcp::socket socket(io);
      boost::system::error_code ec;
      acceptor.accept(socket, ec);
      if (ec) {
        if (stopping) break;
        continue;
      }
      std::lock_guard lock(mu);
      const int fd = socket.native_handle();
      open.insert(fd);
      workers.emplace_back([this, s = std::move(socket), fd]() mutable {
        serve(std::move(s));
        std::lock_guard l(mu);
        open.erase(fd);
      });
    }
  }

  void serve(tcp::socket socket) {
    beast::flat_buffer buffer;
    boost::system::error_code ec;
    while (!stopping) {
      http::request<http::string_body> req;
      http::read(socket, buffer, req, ec);
      if (ec) break;
      const std::string target(req.target());
      if (websocket::is_upgrade(req) && target.substr(0, target.find('?')) == "/live") {
        servePush(std::move(socket), req);
        return;
      }
      const auto res = route_request(service, std::string(req.method_string()), target, req.body());
      http::response<http::string_body> out{static_cast<http::status>(res.status), req.version()};
      out.set(http::field::server, "guitrace");
      out.set(http::field::content_type, "application/json");
      out.set(http::field::access_control_allow_origin, "*");
      out.keep_alive(req.keep_alive());
      out.body() = to_canonical(res.body);
      out.prepare_payload();
      http::write(socket, out, ec);
      if (ec || !req.keep_alive()) break;
    }
    socket.shutdown(tcp::socket::shutdown_send, ec);
  }

  void servePush(tcp::socket socket, const http::request<http::string_body>& req) {
    websocket::stream<tcp::socket> ws(std::move(socket));
    boost::system::error_code ec;
    ws.accept(req, ec);
    if (ec) return;
    ws.text(true);
    auto sub = service.subscribe();
    while (!stopping) {
      auto msg = sub->next(std::chrono::milliseconds(200));
      if (msg) {
        ws.write(asio::buffer(to_canonical(*msg)), ec);
        if (ec) break;
      } else if (sub->dropped()) {
        ws.close(websocket::close_reason(websocket::close_code::policy_error, "subscriber too slow"), ec);
        break;
      } else if (sub->closed()) {
        ws.close(websocket::close_code::going_away, ec);
        break;
      }
    }
    sub->close();
  }

  SessionService& service;
  asio::io_context io;
  tcp::acceptor acceptor{io};
  std::uint16_t boundPort = 0;
  std::atomic<bool> stopping{false};
  std::thread acceptThread;
  std::mutex mu;
  std::set<int> open;
  std::list<std::thread> workers;
};

HttpServer::HttpServer(SessionService& service, std::uint16_t port, std::string address)
    : impl_(std::make_unique<Impl>(service, port, address)) {}

HttpServer::~HttpServer() { stop(); }

std::uint16_t HttpServer::port() const noexcept { return impl_->boundPort; }

void HttpServer::start() {
  impl_->acceptThread = std::thread([this] { impl_->acceptLoop(); });
}

void HttpServer::stop() {
  auto& im = *impl_;
  if (im.stopping.exchange(true)) return;
  ::shutdown(im.acceptor.native_handle(), SHUT_RDWR);
  if (im.acceptThread.joinable()) im.acceptThread.join();
  {
    std::lock_guard lock(im.mu);
    for (int fd : im.open) ::shutdown(fd, SHUT_RDWR);
  }
  for (auto& t : im.workers)
    if (t.joinable()) t.join();
}

}  // namespace guitrace::net
