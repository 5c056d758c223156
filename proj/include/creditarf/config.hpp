#pragma once

#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "creditarf/arf/encoder.hpp"
#include "creditarf/crp/model.hpp"
#include "creditarf/error.hpp"
#include "creditarf/fnf/encoders.hpp"

namespace creditarf::config {

using nlohmann::json;

// Reads optional fields from one JSON object and rejects keys it was never
// asked about. Errors are InputError naming the dotted path.
class StrictObject {
 public:
  StrictObject(const json& j, std::string path);

  template <class V>
  void get(const std::string& key, V& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<V>();
    } catch (const json::exception& e) {
      throw InputError("config " + where(key) + ": " + e.what());
    }
  }

  // Marks `key` as known; returns the value or nullptr when absent.
  const json* child(const std::string& key);
  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  void finish() const;

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json to_json(const fnf::FnfConfig& c);
json to_json(const arf::ArfConfig& c);
json to_json(const crp::CrpConfig& c);
json to_json(const crp::ModelSpec& s);

void read(const json& j, const std::string& path, fnf::FnfConfig& c);
void read(const json& j, const std::string& path, arf::ArfConfig& c);
void read(const json& j, const std::string& path, crp::CrpConfig& c);
void read(const json& j, const std::string& path, crp::ModelSpec& s);

}  // namespace creditarf::config
