#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace drivestyle::cli {

/// Plain-text key/value configuration with [section] headers. Flags override
/// file values via "section.key=value". The fingerprint is the FNV-1a hash
/// of the canonical (sorted) dump; the transient [cli] and [eval] sections
/// are excluded so artifact provenance tracks data and training settings.
class RunConfig {
 public:
  RunConfig() = default;

  static RunConfig from_file(const std::string& path);
  static RunConfig from_text(const std::string& text);

  void set(const std::string& dotted_key, const std::string& value);
  void apply_overrides(const std::vector<std::string>& overrides);  // "a.b=c" items

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const;
  std::string require(const std::string& section, const std::string& key) const;
  long get_int(const std::string& section, const std::string& key, long fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  bool get_flag(const std::string& section, const std::string& key, bool fallback) const;
  std::uint64_t master_seed() const;  // [run] seed, default 1

  /// Sorted canonical text (also what gets echoed into output directories).
  std::string canonical() const;
  std::string fingerprint() const;

  const std::map<std::string, std::map<std::string, std::string>>& sections() const {
    return sections_;
  }

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

}  // namespace drivestyle::cli
