#pragma once

#include <map>
#include <string>

namespace vw {

// Plain-text key-value configuration with [section] headers.
// Lines starting with '#' or ';' are comments. Keys are addressed as
// "section.key". Unknown keys are kept verbatim.
class Config {
public:
    Config() = default;
    static Config from_file(const std::string& path);
    static Config from_string(const std::string& text);

    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    std::string get_str(const std::string& key, const std::string& dflt) const;
    double get_double(const std::string& key, double dflt) const;
    int get_int(const std::string& key, int dflt) const;
    uint64_t get_u64(const std::string& key, uint64_t dflt) const;
    bool get_bool(const std::string& key, bool dflt) const;

    void set(const std::string& key, const std::string& value) { kv_[key] = value; }

    const std::map<std::string, std::string>& entries() const { return kv_; }

    // stable content hash for artifact stamping
    std::string hash() const;

private:
    std::map<std::string, std::string> kv_;
};

}  // namespace vw
