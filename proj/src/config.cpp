#include "tk/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tk {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, end);
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> parts;
    std::string part;
    std::istringstream in(s);
    while (std::getline(in, part, ',')) {
        part = trim(part);
        if (!part.empty()) parts.push_back(part);
    }
    return parts;
}

} // namespace

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_string(buffer.str());
}

KeyValueConfig KeyValueConfig::parse_string(const std::string& text) {
    KeyValueConfig kv;
    std::istringstream in(text);
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("config line " + std::to_string(line_number) +
                                     ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw std::runtime_error("config line " + std::to_string(line_number) + ": empty key");
        }
        kv.entries_[key] = value;
    }
    return kv;
}

bool KeyValueConfig::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw std::runtime_error("config: key '" + key + "' is not a number: " + it->second);
    }
}

std::size_t KeyValueConfig::get_size(const std::string& key, std::size_t fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
        return static_cast<std::size_t>(std::stoull(it->second));
    } catch (const std::exception&) {
        throw std::runtime_error("config: key '" + key + "' is not an integer: " + it->second);
    }
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
    return static_cast<std::uint64_t>(get_size(key, static_cast<std::size_t>(fallback)));
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw std::runtime_error("config: key '" + key + "' is not a boolean: " + it->second);
}

std::vector<double> KeyValueConfig::get_double_list(const std::string& key,
                                                    const std::vector<double>& fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    std::vector<double> values;
    for (const auto& part : split_commas(it->second)) {
        try {
            values.push_back(std::stod(part));
        } catch (const std::exception&) {
            throw std::runtime_error("config: key '" + key + "' has non-numeric entry: " + part);
        }
    }
    return values;
}

std::vector<std::size_t> KeyValueConfig::get_size_list(
    const std::string& key, const std::vector<std::size_t>& fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    std::vector<std::size_t> values;
    for (const auto& part : split_commas(it->second)) {
        try {
            values.push_back(static_cast<std::size_t>(std::stoull(part)));
        } catch (const std::exception&) {
            throw std::runtime_error("config: key '" + key + "' has non-integer entry: " + part);
        }
    }
    return values;
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
    entries_[key] = value;
}

void KeyValueConfig::set_double(const std::string& key, double value) {
    entries_[key] = format_double(value);
}

void KeyValueConfig::set_size(const std::string& key, std::size_t value) {
    entries_[key] = std::to_string(value);
}

void KeyValueConfig::set_bool(const std::string& key, bool value) {
    entries_[key] = value ? "true" : "false";
}

void KeyValueConfig::set_double_list(const std::string& key, const std::vector<double>& values) {
    std::string joined;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) joined += ",";
        joined += format_double(values[i]);
    }
    entries_[key] = joined;
}

void KeyValueConfig::set_size_list(const std::string& key, const std::vector<std::size_t>& values) {
    std::string joined;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) joined += ",";
        joined += std::to_string(values[i]);
    }
    entries_[key] = joined;
}

std::string KeyValueConfig::serialize() const {
    std::string out;
    for (const auto& [key, value] : entries_) {
        out += key;
        out += " = ";
        out += value;
        out += "\n";
    }
    return out;
}

TKConfig tk_config_from(const KeyValueConfig& kv) {
    TKConfig c;
    c.embedding_dim = kv.get_size("embedding_dim", c.embedding_dim);
    c.layers = kv.get_size("layers", c.layers);
    c.heads = kv.get_size("heads", c.heads);
    c.head_dim = kv.get_size("head_dim", c.head_dim);
    c.ff_dim = kv.get_size("ff_dim", c.ff_dim);
    c.kernel_mus = kv.get_double_list("kernel_mus", c.kernel_mus);
    c.kernel_sigma = kv.get_double("kernel_sigma", c.kernel_sigma);
    c.log_base = kv.get_double("log_base", c.log_base);
    c.query_cap = kv.get_size("query_cap", c.query_cap);
    c.doc_cap = kv.get_size("doc_cap", c.doc_cap);
    c.windowed = kv.get_bool("windowed", c.windowed);
    c.window.sizes = kv.get_size_list("window_sizes", c.window.sizes);
    std::vector<std::size_t> default_strides;
    for (std::size_t s : c.window.sizes) default_strides.push_back(std::max<std::size_t>(1, s / 2));
    c.window.strides = kv.get_size_list("window_strides", default_strides);
    c.window.top_r = kv.get_size("window_top_r", c.window.top_r);
    c.validate();
    return c;
}

void tk_config_into(const TKConfig& config, KeyValueConfig& kv) {
    kv.set_size("embedding_dim", config.embedding_dim);
    kv.set_size("layers", config.layers);
    kv.set_size("heads", config.heads);
    kv.set_size("head_dim", config.head_dim);
    kv.set_size("ff_dim", config.ff_dim);
    kv.set_double_list("kernel_mus", config.kernel_mus);
    kv.set_double("kernel_sigma", config.kernel_sigma);
    kv.set_double("log_base", config.log_base);
    kv.set_size("query_cap", config.query_cap);
    kv.set_size("doc_cap", config.doc_cap);
    kv.set_bool("windowed", config.windowed);
    kv.set_size_list("window_sizes", config.window.sizes);
    kv.set_size_list("window_strides", config.window.strides);
    kv.set_size("window_top_r", config.window.top_r);
}

} // namespace tk
