// SPDX-License-Identifier: Apache-2.0

#include "server.hpp"

#include <array>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "catalog.hpp"
#include "protocol.hpp"
#include "store.hpp"

namespace arcall::server {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace proto = arcall::protocol;
using tcp = net::ip::tcp;
using BytesPtr = std::shared_ptr<const proto::Bytes>;

Millis wall_clock_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::optional<LogLevel> parse_log_level(std::string_view s) {
  if (s == "error") return LogLevel::Error;
  if (s == "warn") return LogLevel::Warn;
  if (s == "info") return LogLevel::Info;
  if (s == "debug") return LogLevel::Debug;
  return std::nullopt;
}

namespace {

std::optional<tcp::endpoint> parse_endpoint(const std::string& addr) {
  auto colon = addr.rfind(':');
  if (colon == std::string::npos) return std::nullopt;
  std::string host = addr.substr(0, colon);
  if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
  if (host.empty()) host = "0.0.0.0";
  boost::system::error_code ec;
  auto ip = net::ip::make_address(host, ec);
  if (ec) return std::nullopt;
  unsigned long port = 0;
  try {
    std::size_t used = 0;
    port = std::stoul(addr.substr(colon + 1), &used);
    if (used != addr.size() - colon - 1 || port > 65535) return std::nullopt;
  } catch (...) {
    return std::nullopt;
  }
  return tcp::endpoint(ip, static_cast<unsigned short>(port));
}

std::string percent_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size() && std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
        std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
      out += static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16));
      i += 2;
    } else if (s[i] == '+') {
      out += ' ';
    } else {
      out += s[i];
    }
  }
  return out;
}

std::map<std::string, std::string> parse_query(std::string_view target) {
  std::map<std::string, std::string> out;
  auto q = target.find('?');
  if (q == std::string_view::npos) return out;
  std::string_view rest = target.substr(q + 1);
  while (!rest.empty()) {
    auto amp = rest.find('&');
    std::string_view kv = rest.substr(0, amp);
    auto eq = kv.find('=');
    out[percent_decode(kv.substr(0, eq))] = eq == std::string_view::npos ? "" : percent_decode(kv.substr(eq + 1));
    if (amp == std::string_view::npos) break;
    rest = rest.substr(amp + 1);
  }
  return out;
}

std::string_view mime_type(const std::filesystem::path& p) {
  static const std::map<std::string, std::string_view> types = {
      {".html", "text/html"},        {".js", "application/javascript"}, {".mjs", "application/javascript"},
      {".css", "text/css"},          {".json", "application/json"},     {".svg", "image/svg+xml"},
      {".png", "image/png"},         {".wasm", "application/wasm"},     {".map", "application/json"},
      {".ico", "image/x-icon"},      {".txt", "text/plain"}};
  auto it = types.find(p.extension().string());
  return it == types.end() ? "application/octet-stream" : it->second;
}

struct Peer {
  virtual ~Peer() = default;
  virtual void send(BytesPtr bytes) = 0;
  virtual void close_after_flush() = 0;
};

}  // namespace

struct Server::Impl {
  explicit Impl(ServerOptions o, relay::StoreData data)
      : opts(std::move(o)),
        store(opts.store_dir),
        relay(make_options(opts), std::move(data), catalog::Catalog(catalog::builtin_catalog())) {}

  static relay::RelayOptions make_options(const ServerOptions& o) {
    relay::RelayOptions r;
    r.fov.glasses_fraction = o.glasses_fraction;
    return r;
  }

  void log(LogLevel level, const std::string& line) {
    if (level > opts.log_level) return;
    static constexpr const char* names[] = {"error", "warn", "info", "debug"};
    std::cerr << wall_clock_ms() << ' ' << names[static_cast<int>(level)] << ' ' << line << '\n';
  }

  relay::ConnId attach(std::shared_ptr<Peer> peer) {
    relay::ConnId id = next_id++;
    peers[id] = std::move(peer);
    return id;
  }

  void identify(relay::ConnId id, const std::string& user, relay::Role role, const std::string& token) {
    dispatch(relay.connect(id, user, role, token, wall_clock_ms()));
  }

  void on_message(relay::ConnId id, const proto::Message& msg) {
    log(LogLevel::Debug, "conn " + std::to_string(id) + " -> " + std::string(proto::type_name(proto::type_of(msg))));
    dispatch(relay.handle(id, msg, wall_clock_ms()));
  }

  void on_closed(relay::ConnId id) {
    peers.erase(id);
    dispatch(relay.disconnect(id, wall_clock_ms()));
  }

  void dispatch(relay::Output&& out) {
    for (auto& m : out.messages) {
      auto it = peers.find(m.to);
      if (it == peers.end()) continue;
      it->second->send(std::make_shared<const proto::Bytes>(proto::encode(m.message)));
    }
    for (auto& e : out.events) {
      const bool noisy = e.kind == relay::EventKind::MediaDropped;
      std::ostringstream line;
      line << to_string(e.kind);
      if (!e.session_id.empty()) line << " session=" << e.session_id;
      if (!e.dropin_id.empty()) line << " dropin=" << e.dropin_id;
      if (!e.detail.empty()) line << " detail=" << e.detail;
      if (e.value != 0) line << " value=" << e.value;
      log(noisy ? LogLevel::Debug : LogLevel::Info, line.str());
    }
    for (auto c : out.close) {
      auto it = peers.find(c);
      if (it != peers.end()) it->second->close_after_flush();
    }
    if (relay.take_store_dirty()) {
      auto r = store.persist(relay.store());
      if (!r) log(LogLevel::Error, "store: " + r.error().message());
    }
  }

  void arm_timer() {
    timer.expires_after(std::chrono::milliseconds(opts.tick_interval_ms));
    timer.async_wait([this](boost::system::error_code ec) {
      if (ec) return;
      dispatch(relay.tick(wall_clock_ms()));
      arm_timer();
    });
  }

  void accept_tcp();
  void accept_ws();

  ServerOptions opts;
  relay::Store store;
  relay::Relay relay;
  net::io_context ioc{1};
  tcp::acceptor tcp_acceptor{ioc};
  tcp::acceptor ws_acceptor{ioc};
  net::steady_timer timer{ioc};
  std::map<relay::ConnId, std::shared_ptr<Peer>> peers;
  relay::ConnId next_id = 1;
  std::thread thread;
  std::mutex mu;
  std::condition_variable cv;
  bool stopped = false;
  bool started = false;
};

namespace {

using Impl = Server::Impl;

class TcpPeer : public Peer, public std::enable_shared_from_this<TcpPeer> {
 public:
  TcpPeer(tcp::socket sock, Impl& srv) : sock_(std::move(sock)), srv_(srv) {}

  void start(relay::ConnId id) {
    id_ = id;
    read();
  }

  void send(BytesPtr bytes) override {
    if (closed_ || closing_) return;
    queue_.push_back(std::move(bytes));
    if (queue_.size() == 1) write();
  }

  void close_after_flush() override {
    closing_ = true;
    if (queue_.empty()) finish();
  }

 private:
  void read() {
    sock_.async_read_some(net::buffer(buf_), [self = shared_from_this()](boost::system::error_code ec, std::size_t n) {
      if (ec) return self->finish();
      self->decoder_.feed(std::span<const std::uint8_t>(self->buf_.data(), n));
      while (!self->closed_ && !self->closing_) {
        auto r = self->decoder_.next();
        if (r.ok()) {
          self->srv_.on_message(self->id_, *r);
          continue;
        }
        if (r.error().code == proto::DecodeErrorCode::Truncated) break;
        self->srv_.log(LogLevel::Warn, "conn " + std::to_string(self->id_) + " bad envelope: " + r.error().detail);
        self->send(std::make_shared<const proto::Bytes>(
            proto::encode(proto::Error{"BadEnvelope", std::string(proto::to_string(r.error().code))})));
        self->close_after_flush();
        return;
      }
      if (!self->closed_ && !self->closing_) self->read();
    });
  }

  void write() {
    net::async_write(sock_, net::buffer(*queue_.front()),
                     [self = shared_from_this()](boost::system::error_code ec, std::size_t) {
                       if (ec) return self->finish();
                       self->queue_.pop_front();
                       if (!self->queue_.empty())
                         self->write();
                       else if (self->closing_)
                         self->finish();
                     });
  }

  void finish() {
    if (closed_) return;
    closed_ = true;
    boost::system::error_code ignored;
    sock_.shutdown(tcp::socket::shutdown_both, ignored);
    sock_.close(ignored);
    srv_.on_closed(id_);
  }

  tcp::socket sock_;
  Impl& srv_;
  relay::ConnId id_ = 0;
  proto::StreamDecoder decoder_;
  std::array<std::uint8_t, 64 * 1024> buf_{};
  std::deque<BytesPtr> queue_;
  bool closing_ = false;
  bool closed_ = false;
};

class WsPeer : public Peer, public std::enable_shared_from_this<WsPeer> {
 public:
  WsPeer(beast::tcp_stream stream, Impl& srv) : ws_(std::move(stream)), srv_(srv) {}

  void start(http::request<http::string_body> req) {
    ws_.binary(true);
    ws_.read_message_max(40u * 1024 * 1024);
    auto params = parse_query(std::string_view(req.target().data(), req.target().size()));
    ws_.async_accept(req, [self = shared_from_this(), params](boost::system::error_code ec) {
      if (ec) return;
      self->id_ = self->srv_.attach(self);
      self->accepted_ = true;
      auto user = params.find("user");
      auto role = params.find("role");
      if (user != params.end() && role != params.end()) {
        auto token = params.count("token") ? params.at("token") : std::string{};
        if (auto r = relay::parse_role(role->second)) self->srv_.identify(self->id_, user->second, *r, token);
      }
      if (!self->closed_) self->read();
    });
  }

  void send(BytesPtr bytes) override {
    if (closed_ || closing_) return;
    queue_.push_back(std::move(bytes));
    if (queue_.size() == 1) write();
  }

  void close_after_flush() override {
    closing_ = true;
    if (queue_.empty()) shutdown();
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](boost::system::error_code ec, std::size_t) {
      if (ec) return self->finish();
      auto data = self->buffer_.data();
      std::span<const std::uint8_t> bytes(static_cast<const std::uint8_t*>(data.data()), data.size());
      auto r = proto::decode(bytes);
      if (r.ok() && r->consumed == bytes.size()) {
        self->buffer_.consume(self->buffer_.size());
        self->srv_.on_message(self->id_, r->message);
      } else {
        self->buffer_.consume(self->buffer_.size());
        std::string why = r.ok() ? "trailing bytes after envelope" : std::string(proto::to_string(r.error().code));
        self->send(std::make_shared<const proto::Bytes>(proto::encode(proto::Error{"BadEnvelope", why})));
        self->close_after_flush();
        return;
      }
      if (!self->closed_ && !self->closing_) self->read();
    });
  }

  void write() {
    ws_.async_write(net::buffer(*queue_.front()), [self = shared_from_this()](boost::system::error_code ec, std::size_t) {
      if (ec) return self->finish();
      self->queue_.pop_front();
      if (!self->queue_.empty())
        self->write();
      else if (self->closing_)
        self->shutdown();
    });
  }

  void shutdown() {
    if (closed_) return;
    ws_.async_close(websocket::close_code::normal,
                    [self = shared_from_this()](boost::system::error_code) { self->finish(); });
  }

  void finish() {
    if (closed_) return;
    closed_ = true;
    boost::system::error_code ignored;
    beast::get_lowest_layer(ws_).socket().close(ignored);
    if (accepted_) srv_.on_closed(id_);
  }

  websocket::stream<beast::tcp_stream> ws_;
  Impl& srv_;
  relay::ConnId id_ = 0;
  beast::flat_buffer buffer_;
  std::deque<BytesPtr> queue_;
  bool accepted_ = false;
  bool closing_ = false;
  bool closed_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket sock, Impl& srv) : stream_(std::move(sock)), srv_(srv) {}

  void start() { read(); }

 private:
  void read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, [self = shared_from_this()](boost::system::error_code ec, std::size_t) {
      if (ec) return self->close();
      if (websocket::is_upgrade(self->req_)) {
        beast::get_lowest_layer(self->stream_).expires_never();
        std::make_shared<WsPeer>(std::move(self->stream_), self->srv_)->start(std::move(self->req_));
        return;
      }
      self->respond();
    });
  }

  void respond() {
    auto res = std::make_shared<http::response<http::string_body>>(serve());
    res->keep_alive(req_.keep_alive());
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](boost::system::error_code ec, std::size_t) {
      if (ec || !res->keep_alive()) return self->close();
      self->read();
    });
  }

  http::response<http::string_body> serve() {
    auto reply = [&](http::status status, std::string body, std::string_view type) {
      http::response<http::string_body> res{status, req_.version()};
      res.set(http::field::server, "arcall");
      res.set(http::field::content_type, std::string(type));
      res.body() = std::move(body);
      return res;
    };
    if (req_.method() != http::verb::get && req_.method() != http::verb::head)
      return reply(http::status::method_not_allowed, "method not allowed\n", "text/plain");
    if (srv_.opts.static_dir.empty()) return reply(http::status::not_found, "no static directory configured\n", "text/plain");

    std::string target(req_.target().data(), req_.target().size());
    target = percent_decode(target.substr(0, target.find('?')));
    if (target.empty() || target.front() != '/' || target.find("..") != std::string::npos)
      return reply(http::status::bad_request, "bad path\n", "text/plain");
    if (target.back() == '/') target += "index.html";
    std::filesystem::path path = std::filesystem::path(srv_.opts.static_dir) / target.substr(1);
    std::ifstream in(path, std::ios::binary);
    if (!in || std::filesystem::is_directory(path)) return reply(http::status::not_found, "not found\n", "text/plain");
    std::ostringstream body;
    body << in.rdbuf();
    auto res = reply(http::status::ok, body.str(), mime_type(path));
    if (req_.method() == http::verb::head) res.body().clear();
    return res;
  }

  void close() {
    boost::system::error_code ignored;
    stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
  }

  beast::tcp_stream stream_;
  Impl& srv_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

}  // namespace

void Server::Impl::accept_tcp() {
  tcp_acceptor.async_accept([this](boost::system::error_code ec, tcp::socket sock) {
    if (ec) return;
    sock.set_option(tcp::no_delay(true), ec);
    auto peer = std::make_shared<TcpPeer>(std::move(sock), *this);
    peer->start(attach(peer));
    accept_tcp();
  });
}

void Server::Impl::accept_ws() {
  ws_acceptor.async_accept([this](boost::system::error_code ec, tcp::socket sock) {
    if (ec) return;
    std::make_shared<HttpSession>(std::move(sock), *this)->start();
    accept_ws();
  });
}

Server::Server(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}

Server::~Server() {
  stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

Result<std::unique_ptr<Server>, ServerError> Server::create(ServerOptions options) {
  if (!(options.glasses_fraction > 0.0 && options.glasses_fraction <= 1.0))
    return fail(ServerError{ServerError::Code::BadAddress, "glasses fraction must be in (0, 1]"});
  if (!parse_endpoint(options.listen_addr))
    return fail(ServerError{ServerError::Code::BadAddress, "bad listen address '" + options.listen_addr + "'"});
  if (!parse_endpoint(options.ws_addr))
    return fail(ServerError{ServerError::Code::BadAddress, "bad websocket address '" + options.ws_addr + "'"});
  std::error_code fsec;
  std::filesystem::create_directories(options.store_dir, fsec);
  if (fsec) return fail(ServerError{ServerError::Code::Io, options.store_dir + ": " + fsec.message()});
  auto data = relay::Store(options.store_dir).load();
  if (!data) {
    auto code = data.error().code == relay::StoreErrorCode::CorruptStore ? ServerError::Code::CorruptStore
                                                                          : ServerError::Code::Io;
    return fail(ServerError{code, data.error().message()});
  }
  return std::unique_ptr<Server>(new Server(std::make_unique<Impl>(std::move(options), std::move(*data))));
}

Result<bool, ServerError> Server::start() {
  auto& s = *impl_;
  if (s.started) return true;
  auto open = [&](tcp::acceptor& acc, const std::string& addr) -> std::optional<ServerError> {
    boost::system::error_code ec;
    auto ep = *parse_endpoint(addr);
    acc.open(ep.protocol(), ec);
    if (!ec) acc.set_option(net::socket_base::reuse_address(true), ec);
    if (!ec) acc.bind(ep, ec);
    if (!ec) acc.listen(net::socket_base::max_listen_connections, ec);
    if (ec) return ServerError{ServerError::Code::Bind, addr + ": " + ec.message()};
    return std::nullopt;
  };
  if (auto e = open(s.tcp_acceptor, s.opts.listen_addr)) return fail(*e);
  if (auto e = open(s.ws_acceptor, s.opts.ws_addr)) return fail(*e);
  s.accept_tcp();
  s.accept_ws();
  s.arm_timer();
  s.started = true;
  s.log(LogLevel::Info, "listening tcp=" + std::to_string(tcp_port()) + " ws=" + std::to_string(ws_port()));
  s.thread = std::thread([&s] { s.ioc.run(); });
  return true;
}

std::uint16_t Server::tcp_port() const {
  boost::system::error_code ec;
  auto ep = impl_->tcp_acceptor.local_endpoint(ec);
  return ec ? 0 : ep.port();
}

std::uint16_t Server::ws_port() const {
  boost::system::error_code ec;
  auto ep = impl_->ws_acceptor.local_endpoint(ec);
  return ec ? 0 : ep.port();
}

void Server::wait() {
  std::unique_lock lock(impl_->mu);
  impl_->cv.wait(lock, [&] { return impl_->stopped; });
  lock.unlock();
  if (impl_->thread.joinable() && impl_->thread.get_id() != std::this_thread::get_id()) impl_->thread.join();
}

void Server::stop() {
  {
    std::lock_guard lock(impl_->mu);
    if (impl_->stopped) return;
    impl_->stopped = true;
  }
  impl_->ioc.stop();
  impl_->cv.notify_all();
}

}  // namespace arcall::server
