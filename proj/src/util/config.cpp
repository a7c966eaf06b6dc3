#include "vectorworld/util/config.hpp"

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vw {

namespace {
std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}
}  // namespace

Config Config::from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    return from_string(ss.str());
}

Config Config::from_string(const std::string& text) {
    Config cfg;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw std::runtime_error("config: bad section at line " + std::to_string(lineno));
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: missing '=' at line " + std::to_string(lineno));
        std::string key = trim(t.substr(0, eq));
        std::string value = t.substr(eq + 1);
        size_t hash = value.find('#');
        if (hash != std::string::npos) value = value.substr(0, hash);
        value = trim(value);
        if (key.empty())
            throw std::runtime_error("config: empty key at line " + std::to_string(lineno));
        cfg.kv_[section.empty() ? key : section + "." + key] = value;
    }
    return cfg;
}

std::string Config::get_str(const std::string& key, const std::string& dflt) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? dflt : it->second;
}

double Config::get_double(const std::string& key, double dflt) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    try {
        return std::stod(it->second);
    } catch (...) {
        throw std::runtime_error("config: field '" + key + "' is not a number: " + it->second);
    }
}

int Config::get_int(const std::string& key, int dflt) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    try {
        return std::stoi(it->second);
    } catch (...) {
        throw std::runtime_error("config: field '" + key + "' is not an integer: " + it->second);
    }
}

uint64_t Config::get_u64(const std::string& key, uint64_t dflt) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    try {
        return std::stoull(it->second);
    } catch (...) {
        throw std::runtime_error("config: field '" + key + "' is not an integer: " + it->second);
    }
}

bool Config::get_bool(const std::string& key, bool dflt) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw std::runtime_error("config: field '" + key + "' is not a boolean: " + v);
}

std::string Config::hash() const {
    // FNV-1a over the sorted entries
    uint64_t h = 1469598103934665603ULL;
    for (const auto& [k, v] : kv_) {
        for (char c : k + "=" + v + ";") {
            h ^= static_cast<uint8_t>(c);
            h *= 1099511628211ULL;
        }
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace vw
