// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "relay.hpp"
#include "result.hpp"

namespace arcall::server {

enum class LogLevel { Error, Warn, Info, Debug };

std::optional<LogLevel> parse_log_level(std::string_view s);

struct ServerOptions {
  std::string listen_addr = "127.0.0.1:7700";  // framed envelopes over TCP
  std::string ws_addr = "127.0.0.1:7701";      // WebSocket + static files
  std::string store_dir = "arcall-store";
  std::string static_dir;                      // empty: no static serving
  double glasses_fraction = 0.4;
  LogLevel log_level = LogLevel::Info;
  Millis tick_interval_ms = 50;
};

struct ServerError {
  enum class Code { BadAddress, CorruptStore, Io, Bind } code;
  std::string detail;
};

/// Relay server: one io thread owns the Relay, so every session's mutations are
/// totally ordered.
class Server {
 public:
  static Result<std::unique_ptr<Server>, ServerError> create(ServerOptions options);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds both listeners and starts the io thread.
  Result<bool, ServerError> start();
  std::uint16_t tcp_port() const;
  std::uint16_t ws_port() const;
  /// Blocks until stop() is called (from any thread or a signal handler).
  void wait();
  void stop();

  struct Impl;

 private:
  explicit Server(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

Millis wall_clock_ms();

}  // namespace arcall::server
