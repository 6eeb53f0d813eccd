#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace paramine {

// `key = value` per line, UTF-8. Blank lines and lines starting with '#' are
// ignored. Unknown keys are an error at the consumer level: read values
// through ConfigReader and call finish().
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config(std::istream& in);
ConfigMap parse_config_file(const std::string& path);  // throws IoError if unreadable

// Tracks which keys a consumer understood, so typos surface by name.
class ConfigReader {
 public:
  explicit ConfigReader(ConfigMap values) : values_(std::move(values)) {}

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback);
  long long get_int(const std::string& key, long long fallback);
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
  double get_double(const std::string& key, double fallback);
  bool get_bool(const std::string& key, bool fallback);
  // Comma-separated list, whitespace trimmed.
  std::vector<std::string> get_list(const std::string& key,
                                    const std::vector<std::string>& fallback);

  // Throws ConfigError naming the first unconsumed key.
  void finish() const;

  // Snapshot of the resolved values a consumer actually used (for manifests).
  const std::map<std::string, std::string>& resolved() const { return resolved_; }

 private:
  std::string take(const std::string& key);
  void note(const std::string& key, const std::string& value);

  ConfigMap values_;
  std::set<std::string> consumed_;
  std::map<std::string, std::string> resolved_;
};

}  // namespace paramine
