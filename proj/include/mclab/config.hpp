#ifndef MCLAB_CONFIG_HPP
#define MCLAB_CONFIG_HPP

#include <map>
#include <string>
#include <vector>

namespace mclab {

// Flat key-value configuration with [section] headers. Insertion order is
// preserved so that serialization round-trips bit-identically.
class Config {
 public:
  Config() = default;

  static Config parse(const std::string& text);
  static Config load(const std::string& path);
  std::string serialize() const;

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double_or(const std::string& section, const std::string& key,
                       double fallback) const;
  long get_int_or(const std::string& section, const std::string& key,
                  long fallback) const;

  void set(const std::string& section, const std::string& key,
           const std::string& value);

 private:
  struct Entry {
    std::string section, key, value;
  };
  std::vector<Entry> entries_;
};

}  // namespace mclab

#endif
