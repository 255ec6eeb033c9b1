#pragma once

#include "tk/model.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace tk {

// `key = value` text configuration, one pair per line, `#` comments.
class KeyValueConfig {
public:
    static KeyValueConfig parse_file(const std::string& path);
    static KeyValueConfig parse_string(const std::string& text);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::size_t get_size(const std::string& key, std::size_t fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_double_list(const std::string& key,
                                        const std::vector<double>& fallback) const;
    std::vector<std::size_t> get_size_list(const std::string& key,
                                           const std::vector<std::size_t>& fallback) const;

    void set(const std::string& key, const std::string& value);
    void set_double(const std::string& key, double value);
    void set_size(const std::string& key, std::size_t value);
    void set_bool(const std::string& key, bool value);
    void set_double_list(const std::string& key, const std::vector<double>& values);
    void set_size_list(const std::string& key, const std::vector<std::size_t>& values);

    std::string serialize() const; // sorted keys, round-trip exact values

private:
    std::map<std::string, std::string> entries_;
};

TKConfig tk_config_from(const KeyValueConfig& kv);
void tk_config_into(const TKConfig& config, KeyValueConfig& kv);

} // namespace tk
