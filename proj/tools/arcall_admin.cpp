// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>

#include "CLI11.hpp"
#include "common.hpp"

int main(int argc, char** argv) {
  CLI::App app{"ARcall store administration"};
  std::string store_dir = "arcall-store";
  app.add_option("--store-dir", store_dir, "Store directory (ARCALL_STORE_DIR overrides)")->capture_default_str();
  app.require_subcommand(1);

  std::string a, b, user, token, config;
  auto* befriend = app.add_subcommand("befriend", "Record a symmetric friendship");
  befriend->add_option("a", a)->required();
  befriend->add_option("b", b)->required();
  auto* unfriend = app.add_subcommand("unfriend", "Remove a friendship");
  unfriend->add_option("a", a)->required();
  unfriend->add_option("b", b)->required();
  auto* set_token = app.add_subcommand("set-token", "Set (or clear with \"\") a user's static token");
  set_token->add_option("user", user)->required();
  set_token->add_option("token", token)->required();
  auto* prefs = app.add_subcommand("set-prefs", "Store a wearer's default session config (JSON)");
  prefs->add_option("wearer", user)->required();
  prefs->add_option("config", config, R"(e.g. {"arcall_duration_s":1800,"blur_level":3})")->required();
  auto* dump = app.add_subcommand("dump", "Print the store (tokens redacted)");
  CLI11_PARSE(app, argc, argv);

  if (const char* env = std::getenv("ARCALL_STORE_DIR"); env && *env) store_dir = env;

  arcall_store* store = nullptr;
  if (auto s = arcall_store_open(store_dir.c_str(), &store); s != ARCALL_OK) return tools::report(s, "open");
  arcall_status s = ARCALL_OK;
  if (*befriend) s = arcall_store_befriend(store, a.c_str(), b.c_str());
  if (*unfriend) s = arcall_store_unfriend(store, a.c_str(), b.c_str());
  if (*set_token) s = arcall_store_set_token(store, user.c_str(), token.c_str());
  if (*prefs) s = arcall_store_set_preferences(store, user.c_str(), config.c_str());
  if (*dump) {
    char* out = nullptr;
    s = arcall_store_dump(store, &out);
    if (s == ARCALL_OK) std::cout << tools::take(out) << '\n';
  }
  arcall_store_close(store);
  return s == ARCALL_OK ? 0 : tools::report(s, "arcall-admin");
}
