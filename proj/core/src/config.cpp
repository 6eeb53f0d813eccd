#include "paramine/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "paramine/error.hpp"

namespace paramine {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

ConfigMap parse_config(std::istream& in) {
  ConfigMap out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected 'key = value', got '" + stripped + "'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    }
    if (out.count(key)) {
      throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + key +
                        "'");
    }
    out.emplace(key, value);
  }
  return out;
}

ConfigMap parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  return parse_config(in);
}

std::string ConfigReader::take(const std::string& key) {
  consumed_.insert(key);
  const auto it = values_.find(key);
  return it == values_.end() ? std::string() : it->second;
}

void ConfigReader::note(const std::string& key, const std::string& value) {
  resolved_[key] = value;
}

std::string ConfigReader::get_string(const std::string& key, const std::string& fallback) {
  const bool present = has(key);
  const std::string raw = take(key);
  const std::string value = present ? raw : fallback;
  note(key, value);
  return value;
}

long long ConfigReader::get_int(const std::string& key, long long fallback) {
  const bool present = has(key);
  const std::string raw = take(key);
  long long value = fallback;
  if (present) {
    errno = 0;
    char* end = nullptr;
    value = std::strtoll(raw.c_str(), &end, 10);
    if (errno != 0 || end == raw.c_str() || *end != '\0') {
      throw ConfigError("key '" + key + "': expected integer, got '" + raw + "'");
    }
  }
  note(key, std::to_string(value));
  return value;
}

std::uint64_t ConfigReader::get_u64(const std::string& key, std::uint64_t fallback) {
  const bool present = has(key);
  const std::string raw = take(key);
  std::uint64_t value = fallback;
  if (present) {
    errno = 0;
    char* end = nullptr;
    value = std::strtoull(raw.c_str(), &end, 10);
    if (errno != 0 || end == raw.c_str() || *end != '\0' || raw.find('-') != std::string::npos) {
      throw ConfigError("key '" + key + "': expected unsigned integer, got '" + raw + "'");
    }
  }
  note(key, std::to_string(value));
  return value;
}

double ConfigReader::get_double(const std::string& key, double fallback) {
  const bool present = has(key);
  const std::string raw = take(key);
  double value = fallback;
  if (present) {
    errno = 0;
    char* end = nullptr;
    value = std::strtod(raw.c_str(), &end);
    if (errno != 0 || end == raw.c_str() || *end != '\0') {
      throw ConfigError("key '" + key + "': expected number, got '" + raw + "'");
    }
  }
  std::ostringstream os;
  os << value;
  note(key, os.str());
  return value;
}

bool ConfigReader::get_bool(const std::string& key, bool fallback) {
  const bool present = has(key);
  const std::string raw = take(key);
  bool value = fallback;
  if (present) {
    if (raw == "true" || raw == "1") {
      value = true;
    } else if (raw == "false" || raw == "0") {
      value = false;
    } else {
      throw ConfigError("key '" + key + "': expected true/false, got '" + raw + "'");
    }
  }
  note(key, value ? "true" : "false");
  return value;
}

std::vector<std::string> ConfigReader::get_list(const std::string& key,
                                                const std::vector<std::string>& fallback) {
  const bool present = has(key);
  const std::string raw = take(key);
  std::vector<std::string> value;
  if (present) {
    std::istringstream parts(raw);
    std::string item;
    while (std::getline(parts, item, ',')) {
      const std::string trimmed = trim(item);
      if (!trimmed.empty()) value.push_back(trimmed);
    }
  } else {
    value = fallback;
  }
  std::string joined;
  for (std::size_t i = 0; i < value.size(); ++i) {
    if (i) joined += ",";
    joined += value[i];
  }
  note(key, joined);
  return value;
}

void ConfigReader::finish() const {
  for (const auto& [key, value] : values_) {
    if (!consumed_.count(key)) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
}

}  // namespace paramine
