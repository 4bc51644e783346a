#include "drivestyle/cli/config.hpp"

#include "drivestyle/common/hash.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace drivestyle::cli {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return from_text(ss.str());
}

RunConfig RunConfig::from_text(const std::string& text) {
  RunConfig config;
  std::istringstream is(text);
  std::string line, section = "run";
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') {
        throw std::runtime_error("config line " + std::to_string(line_no) + ": unterminated section");
      }
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty()) {
        throw std::runtime_error("config line " + std::to_string(line_no) + ": empty section name");
      }
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) {
      throw std::runtime_error("config line " + std::to_string(line_no) + ": empty key");
    }
    config.sections_[section][key] = value;
  }
  return config;
}

void RunConfig::set(const std::string& dotted_key, const std::string& value) {
  const auto dot = dotted_key.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == dotted_key.size()) {
    throw std::invalid_argument("config override: expected section.key, got '" + dotted_key + "'");
  }
  sections_[dotted_key.substr(0, dot)][dotted_key.substr(dot + 1)] = value;
}

void RunConfig::apply_overrides(const std::vector<std::string>& overrides) {
  for (const std::string& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config override: expected section.key=value, got '" + item + "'");
    }
    set(trim(item.substr(0, eq)), trim(item.substr(eq + 1)));
  }
}

bool RunConfig::has(const std::string& section, const std::string& key) const {
  const auto sit = sections_.find(section);
  return sit != sections_.end() && sit->second.count(key) > 0;
}

std::string RunConfig::get(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
  const auto sit = sections_.find(section);
  if (sit == sections_.end()) return fallback;
  const auto kit = sit->second.find(key);
  return kit == sit->second.end() ? fallback : kit->second;
}

std::string RunConfig::require(const std::string& section, const std::string& key) const {
  if (!has(section, key)) {
    throw std::runtime_error("config: missing required key [" + section + "] " + key);
  }
  return get(section, key, "");
}

long RunConfig::get_int(const std::string& section, const std::string& key, long fallback) const {
  const std::string v = get(section, key, "");
  if (v.empty()) return fallback;
  std::size_t consumed = 0;
  long out = 0;
  try {
    out = std::stol(v, &consumed);
  } catch (const std::exception&) {
    consumed = 0;
  }
  if (consumed != v.size()) {
    throw std::runtime_error("config: [" + section + "] " + key + " = '" + v + "' is not an integer");
  }
  return out;
}

double RunConfig::get_double(const std::string& section, const std::string& key,
                             double fallback) const {
  const std::string v = get(section, key, "");
  if (v.empty()) return fallback;
  try {
    return std::stod(v);
  } catch (const std::exception&) {
    throw std::runtime_error("config: [" + section + "] " + key + " = '" + v + "' is not a number");
  }
}

bool RunConfig::get_flag(const std::string& section, const std::string& key, bool fallback) const {
  const std::string v = get(section, key, "");
  if (v.empty()) return fallback;
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw std::runtime_error("config: [" + section + "] " + key + " = '" + v + "' is not a flag");
}

std::uint64_t RunConfig::master_seed() const {
  return static_cast<std::uint64_t>(get_int("run", "seed", 1));
}

std::string RunConfig::canonical() const {
  std::ostringstream os;
  for (const auto& [section, kv] : sections_) {
    // Transient sections: [cli] flags and [eval] protocol knobs do not
    // change what was trained, so they stay out of the fingerprint. The
    // output directory is a location, not a setting.
    if (section == "cli" || section == "eval") continue;
    os << "[" << section << "]\n";
    for (const auto& [key, value] : kv) {
      if (section == "run" && key == "output_dir") continue;
      os << key << " = " << value << "\n";
    }
  }
  return os.str();
}

std::string RunConfig::fingerprint() const { return hex64(fnv1a64(canonical())); }

}  // namespace drivestyle::cli
