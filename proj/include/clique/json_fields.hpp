#pragma once

#include <json.hpp>

#include <set>
#include <string>

#include "clique/core.hpp"

namespace clique {

// Reads optional fields from a JSON object and rejects keys nobody asked for.
class FieldReader {
 public:
  FieldReader(const nlohmann::json& j, std::string context) : j_(j), context_(std::move(context)) {
    if (!j_.is_object()) throw InvalidInput(context_ + ": expected an object");
  }

  template <typename T>
  FieldReader& opt(const char* key, T& out) {
    known_.insert(key);
    if (auto it = j_.find(key); it != j_.end()) {
      try {
        out = it->template get<T>();
      } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(context_ + "." + key + ": " + e.what());
      }
    }
    return *this;
  }

  template <typename T>
  FieldReader& req(const char* key, T& out) {
    if (!j_.contains(key)) throw InvalidInput(context_ + ": missing '" + key + "'");
    return opt(key, out);
  }

  bool has(const char* key) {
    known_.insert(key);
    return j_.contains(key);
  }

  const nlohmann::json& sub(const char* key) {
    known_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!known_.count(k)) throw InvalidInput(context_ + ": unknown key '" + k + "'");
  }

 private:
  const nlohmann::json& j_;
  std::string context_;
  std::set<std::string> known_;
};

}  // namespace clique
