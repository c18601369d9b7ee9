#pragma once

#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "wi2vi/errors.hpp"

namespace wi2vi {

// Strict reader for one JSON object: every key must be consumed, and type
// errors are reported with the dotted path of the offending field.
class JsonFields {
 public:
  JsonFields(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  void optional(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(where(key) + e.what());
    }
  }

  template <class T>
  void required(const std::string& key, T& out) {
    if (!j_.contains(key)) throw ConfigError(where(key) + "missing required field");
    optional(key, out);
  }

  // Marks the key consumed and returns the raw value, or nullptr if absent.
  const nlohmann::json* child(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  // Rejects keys that were never read.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(where(it.key()) + "unknown key");
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ConfigError(where(key) + msg);
  }

 private:
  std::string where(const std::string& key = {}) const {
    const auto p = key.empty() ? path_ : path(key);
    return p.empty() ? std::string() : p + ": ";
  }

  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace wi2vi
