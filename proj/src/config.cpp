#include "mclab/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mclab {

namespace {
std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}
}  // namespace

Config Config::parse(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line, section;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: bad line: " + line);
    cfg.set(section, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

std::string Config::serialize() const {
  std::ostringstream os;
  std::string current = "\x01";  // sentinel: never a real section name
  for (const auto& e : entries_) {
    if (e.section != current) {
      current = e.section;
      if (!current.empty()) os << "[" << current << "]\n";
    }
    os << e.key << " = " << e.value << "\n";
  }
  return os.str();
}

bool Config::has(const std::string& section, const std::string& key) const {
  for (const auto& e : entries_)
    if (e.section == section && e.key == key) return true;
  return false;
}

std::string Config::get(const std::string& section,
                        const std::string& key) const {
  for (const auto& e : entries_)
    if (e.section == section && e.key == key) return e.value;
  throw std::runtime_error("config: missing key [" + section + "] " + key);
}

std::string Config::get_or(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
  return has(section, key) ? get(section, key) : fallback;
}

double Config::get_double(const std::string& section,
                          const std::string& key) const {
  return std::stod(get(section, key));
}

double Config::get_double_or(const std::string& section, const std::string& key,
                             double fallback) const {
  return has(section, key) ? std::stod(get(section, key)) : fallback;
}

long Config::get_int_or(const std::string& section, const std::string& key,
                        long fallback) const {
  return has(section, key) ? std::stol(get(section, key)) : fallback;
}

void Config::set(const std::string& section, const std::string& key,
                 const std::string& value) {
  for (auto& e : entries_) {
    if (e.section == section && e.key == key) {
      e.value = value;
      return;
    }
  }
  entries_.push_back({section, key, value});
}

}  // namespace mclab
