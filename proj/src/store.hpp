// SPDX-License-Identifier: Apache-2.0

/// \file store.hpp
/// \brief Friendship database, per-wearer preferences and user tokens,
/// persisted as one JSON document per file with atomic replace-on-write.

#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>

#include "result.hpp"
#include "session.hpp"

namespace arcall::relay {

/// Symmetric friendship relation without self-edges.
class FriendshipDb {
 public:
  /// False for a self-friendship or an empty id.
  bool add(const UserId& a, const UserId& b);
  bool remove(const UserId& a, const UserId& b);
  bool are_friends(const UserId& a, const UserId& b) const;
  std::set<UserId> friends_of(const UserId& user) const;
  const std::map<UserId, std::set<UserId>>& edges() const { return edges_; }
  bool symmetric() const;

  bool operator==(const FriendshipDb&) const = default;

 private:
  std::map<UserId, std::set<UserId>> edges_;
};

/// Last-used / default session configuration per wearer.
class Preferences {
 public:
  void set(const UserId& wearer, const session::SessionConfig& cfg) { by_wearer_[wearer] = cfg; }
  const session::SessionConfig* get(const UserId& wearer) const;
  const std::map<UserId, session::SessionConfig>& all() const { return by_wearer_; }
  bool operator==(const Preferences&) const = default;

 private:
  std::map<UserId, session::SessionConfig> by_wearer_;
};

struct StoreData {
  FriendshipDb friendships;
  Preferences preferences;
  std::map<UserId, std::string> tokens;
  bool operator==(const StoreData&) const = default;
};

enum class StoreErrorCode { CorruptStore, Io };

struct StoreError {
  StoreErrorCode code;
  std::filesystem::path file;
  std::string detail;
  std::string message() const;
};

/// Files inside the store directory.
inline constexpr const char* kFriendshipsFile = "friendships.json";
inline constexpr const char* kPreferencesFile = "preferences.json";
inline constexpr const char* kTokensFile = "tokens.json";

class Store {
 public:
  explicit Store(std::filesystem::path dir) : dir_(std::move(dir)) {}

  /// Missing files load as empty documents; unreadable or invalid ones are
  /// CorruptStore naming the file.
  Result<StoreData, StoreError> load() const;
  Result<bool, StoreError> persist(const StoreData& data) const;

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

/// Writes `contents` to a sibling temp file, fsyncs, then renames over
/// `path`.
Result<bool, StoreError> atomic_write(const std::filesystem::path& path, const std::string& contents);

}  // namespace arcall::relay
