#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace gelato {

enum class ValueKind { kString, kPath, kInt, kSeed, kReal, kBool, kIntList, kRealList };

struct ConfigKey {
  std::string name;
  ValueKind kind;
  std::string default_value;
  std::string help;
};

const std::vector<ConfigKey>& config_keys();

using ConfigMap = std::map<std::string, std::string>;

// "key = value" lines; '#' starts a comment. Problems are appended rather
// than thrown so every issue can be reported together.
ConfigMap parse_config_text(const std::string& text, const std::string& origin,
                            std::vector<std::string>& problems);

// Values of GELATO_<KEY> variables for every known key.
ConfigMap environment_overrides();

// Flat configuration resolved from defaults, then a file, then environment
// variables, then explicit flags.
class RunConfig {
 public:
  // Throws kParameter listing every unknown key and malformed value.
  static RunConfig resolve(const std::optional<std::filesystem::path>& file,
                           const ConfigMap& env, const ConfigMap& flags);

  const std::string& get(const std::string& key) const;
  bool has(const std::string& key) const { return !get(key).empty(); }
  // True when a file, environment variable or flag supplied the key.
  bool is_explicit(const std::string& key) const { return explicit_.count(key) > 0; }
  std::int64_t get_int(const std::string& key) const;
  std::uint64_t get_seed() const;
  double get_real(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<std::int64_t> get_int_list(const std::string& key) const;
  std::vector<double> get_real_list(const std::string& key) const;

  // Every key, sorted, as "key = value" lines.
  std::string echo() const;
  const ConfigMap& values() const { return values_; }

 private:
  ConfigMap values_;
  std::set<std::string> explicit_;
};

}  // namespace gelato
