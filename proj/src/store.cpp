// SPDX-License-Identifier: Apache-2.0

#include "store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace arcall::relay {

using nlohmann::json;
namespace fs = std::filesystem;

bool FriendshipDb::add(const UserId& a, const UserId& b) {
  if (a.empty() || b.empty() || a == b) return false;
  edges_[a].insert(b);
  edges_[b].insert(a);
  return true;
}

bool FriendshipDb::remove(const UserId& a, const UserId& b) {
  auto drop = [this](const UserId& x, const UserId& y) {
    auto it = edges_.find(x);
    if (it == edges_.end()) return false;
    bool erased = it->second.erase(y) > 0;
    if (it->second.empty()) edges_.erase(it);
    return erased;
  };
  bool r1 = drop(a, b);
  bool r2 = drop(b, a);
  return r1 || r2;
}

bool FriendshipDb::are_friends(const UserId& a, const UserId& b) const {
  auto it = edges_.find(a);
  return it != edges_.end() && it->second.count(b) > 0;
}

std::set<UserId> FriendshipDb::friends_of(const UserId& user) const {
  auto it = edges_.find(user);
  return it == edges_.end() ? std::set<UserId>{} : it->second;
}

bool FriendshipDb::symmetric() const {
  for (const auto& [a, set] : edges_) {
    if (set.count(a)) return false;
    for (const auto& b : set)
      if (!are_friends(b, a)) return false;
  }
  return true;
}

const session::SessionConfig* Preferences::get(const UserId& wearer) const {
  auto it = by_wearer_.find(wearer);
  return it == by_wearer_.end() ? nullptr : &it->second;
}

std::string StoreError::message() const {
  const char* kind = code == StoreErrorCode::CorruptStore ? "corrupt store file" : "store I/O error";
  return std::string(kind) + " " + file.string() + ": " + detail;
}

namespace {

StoreError corrupt(const fs::path& file, std::string detail) {
  return {StoreErrorCode::CorruptStore, file, std::move(detail)};
}

StoreError io_error(const fs::path& file, std::string detail) {
  return {StoreErrorCode::Io, file, std::move(detail)};
}

// nullopt when the file is absent.
Result<std::optional<json>, StoreError> read_json(const fs::path& path) {
  std::error_code ec;
  if (!fs::exists(path, ec)) return std::optional<json>{};
  std::ifstream in(path, std::ios::binary);
  if (!in) return fail(corrupt(path, "cannot open"));
  std::stringstream ss;
  ss << in.rdbuf();
  json j = json::parse(ss.str(), nullptr, false);
  if (j.is_discarded()) return fail(corrupt(path, "not valid JSON"));
  if (!j.is_object()) return fail(corrupt(path, "top level must be an object"));
  return std::optional<json>{std::move(j)};
}

json config_to_json(const session::SessionConfig& c) {
  return json{{"arcall_duration_s", c.arcall_duration_s},
              {"dropin_duration_s", c.dropin_duration_s},
              {"blur_level", c.blur_level},
              {"friend", c.friend_id},
              {"presence_indicator", c.presence_indicator},
              {"strict_extensions", c.strict_extensions}};
}

}  // namespace

Result<StoreData, StoreError> Store::load() const {
  StoreData data;

  const fs::path fpath = dir_ / kFriendshipsFile;
  auto fj = read_json(fpath);
  if (!fj) return fail(fj.error());
  if (*fj) {
    const json& doc = **fj;
    auto it = doc.find("friendships");
    if (it == doc.end() || !it->is_object()) return fail(corrupt(fpath, "missing 'friendships' object"));
    for (const auto& [user, list] : it->items()) {
      if (!list.is_array()) return fail(corrupt(fpath, "friends of '" + user + "' must be an array"));
      for (const auto& other : list) {
        if (!other.is_string()) return fail(corrupt(fpath, "friend ids must be strings"));
        if (!data.friendships.add(user, other.get<std::string>()))
          return fail(corrupt(fpath, "invalid friendship for '" + user + "'"));
      }
    }
    // Every edge must be listed from both sides.
    for (const auto& [user, set] : data.friendships.edges()) {
      auto listed = it->find(user);
      if (listed == it->end() || listed->size() != set.size())
        return fail(corrupt(fpath, "friendship list is not symmetric at '" + user + "'"));
    }
  }

  const fs::path ppath = dir_ / kPreferencesFile;
  auto pj = read_json(ppath);
  if (!pj) return fail(pj.error());
  if (*pj) {
    const json& doc = **pj;
    auto it = doc.find("preferences");
    if (it == doc.end() || !it->is_object()) return fail(corrupt(ppath, "missing 'preferences' object"));
    for (const auto& [wearer, cfg] : it->items()) {
      if (!cfg.is_object()) return fail(corrupt(ppath, "preferences of '" + wearer + "' must be an object"));
      session::RawConfig raw;
      try {
        raw.arcall_duration_s = cfg.at("arcall_duration_s").get<std::int64_t>();
        raw.dropin_duration_s = cfg.at("dropin_duration_s").get<std::int64_t>();
        raw.blur_level = cfg.at("blur_level").get<std::int64_t>();
        raw.friend_id = cfg.at("friend").get<std::string>();
        raw.presence_indicator = cfg.value("presence_indicator", false);
        raw.strict_extensions = cfg.value("strict_extensions", false);
      } catch (const json::exception& e) {
        return fail(corrupt(ppath, "preferences of '" + wearer + "': " + e.what()));
      }
      auto valid = session::validate_config(raw);
      if (!valid)
        return fail(corrupt(ppath, "preferences of '" + wearer + "': invalid " + valid.error().field));
      data.preferences.set(wearer, *valid);
    }
  }

  const fs::path tpath = dir_ / kTokensFile;
  auto tj = read_json(tpath);
  if (!tj) return fail(tj.error());
  if (*tj) {
    const json& doc = **tj;
    auto it = doc.find("tokens");
    if (it == doc.end() || !it->is_object()) return fail(corrupt(tpath, "missing 'tokens' object"));
    for (const auto& [user, tok] : it->items()) {
      if (!tok.is_string()) return fail(corrupt(tpath, "token of '" + user + "' must be a string"));
      data.tokens[user] = tok.get<std::string>();
    }
  }
  return data;
}

Result<bool, StoreError> Store::persist(const StoreData& data) const {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) return fail(io_error(dir_, ec.message()));

  json friends = json::object();
  for (const auto& [user, set] : data.friendships.edges()) friends[user] = set;
  json prefs = json::object();
  for (const auto& [wearer, cfg] : data.preferences.all()) prefs[wearer] = config_to_json(cfg);
  json tokens = json::object();
  for (const auto& [user, tok] : data.tokens) tokens[user] = tok;

  for (auto [file, doc] : {std::pair{kFriendshipsFile, json{{"friendships", friends}}},
                           std::pair{kPreferencesFile, json{{"preferences", prefs}}},
                           std::pair{kTokensFile, json{{"tokens", tokens}}}}) {
    auto r = atomic_write(dir_ / file, doc.dump(2) + "\n");
    if (!r) return r;
  }
  return true;
}

Result<bool, StoreError> atomic_write(const fs::path& path, const std::string& contents) {
  const fs::path tmp = path.string() + ".tmp";
  int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) return fail(io_error(tmp, std::strerror(errno)));
  std::size_t off = 0;
  while (off < contents.size()) {
    ssize_t n = ::write(fd, contents.data() + off, contents.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      int err = errno;
      ::close(fd);
      return fail(io_error(tmp, std::strerror(err)));
    }
    off += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) {
    int err = errno;
    ::close(fd);
    return fail(io_error(tmp, std::strerror(err)));
  }
  ::close(fd);
  if (std::rename(tmp.c_str(), path.c_str()) != 0) return fail(io_error(path, std::strerror(errno)));

  const fs::path parent = path.has_parent_path() ? path.parent_path() : fs::path(".");
  int dfd = ::open(parent.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (dfd >= 0) {
    ::fsync(dfd);
    ::close(dfd);
  }
  return true;
}

}  // namespace arcall::relay
