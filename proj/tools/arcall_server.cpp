// SPDX-License-Identifier: Apache-2.0

#include <csignal>
#include <cstdlib>
#include <pthread.h>

#include "CLI11.hpp"
#include "common.hpp"

int main(int argc, char** argv) {
  CLI::App app{"ARcall relay server"};
  std::string listen_addr = "127.0.0.1:7700";
  std::string ws_addr = "127.0.0.1:7701";
  std::string store_dir = "arcall-store";
  std::string static_dir;
  double glasses_fraction = 0.4;
  std::string log_level = "info";
  app.add_option("--listen-addr", listen_addr, "TCP address for framed envelopes")->capture_default_str();
  app.add_option("--ws-addr", ws_addr, "WebSocket and static-file address")->capture_default_str();
  app.add_option("--store-dir", store_dir, "Store directory (ARCALL_STORE_DIR overrides)")->capture_default_str();
  app.add_option("--static-dir", static_dir, "Directory served over HTTP (console bundle)");
  app.add_option("--glasses-fraction", glasses_fraction, "Glasses viewport as a fraction of the phone view")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  app.add_option("--log-level", log_level, "error|warn|info|debug")
      ->check(CLI::IsMember({"error", "warn", "info", "debug"}))
      ->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  if (const char* env = std::getenv("ARCALL_STORE_DIR"); env && *env) store_dir = env;

  // Block the termination signals in every thread; the main thread waits for them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  arcall_server_options opts;
  arcall_server_options_init(&opts);
  opts.listen_addr = listen_addr.c_str();
  opts.ws_addr = ws_addr.c_str();
  opts.store_dir = store_dir.c_str();
  opts.static_dir = static_dir.empty() ? nullptr : static_dir.c_str();
  opts.glasses_fraction = glasses_fraction;
  opts.log_level = log_level.c_str();

  arcall_server* server = nullptr;
  if (auto s = arcall_server_create(&opts, &server); s != ARCALL_OK) return tools::report(s, "arcall-server");
  if (auto s = arcall_server_start(server); s != ARCALL_OK) {
    arcall_server_destroy(server);
    return tools::report(s, "arcall-server");
  }
  std::cout << "tcp " << arcall_server_tcp_port(server) << " ws " << arcall_server_ws_port(server) << std::endl;

  int sig = 0;
  sigwait(&signals, &sig);
  arcall_server_stop(server);
  arcall_server_wait(server);
  arcall_server_destroy(server);
  return 0;
}
