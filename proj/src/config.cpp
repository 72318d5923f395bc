#include "snecl/config.hpp"

#include "snecl/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace snecl {

std::string trim(const std::string& text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = text.find_last_not_of(" \t\r\n");
    return text.substr(first, last - first + 1);
}

std::vector<std::string> split_trimmed(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string piece;
    std::istringstream is(text);
    while (std::getline(is, piece, sep)) parts.push_back(trim(piece));
    if (!text.empty() && text.back() == sep) parts.emplace_back();
    return parts;
}

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

KeyValues KeyValues::parse(std::istream& is, const std::string& source) {
    KeyValues kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw FormatError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw FormatError(source + ":" + std::to_string(lineno) + ": empty key");
        kv.entries_[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

KeyValues KeyValues::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open config file '" + path + "'");
    return parse(in, path);
}

void KeyValues::write(std::ostream& os) const {
    for (const auto& [k, v] : entries_) os << k << " = " << v << '\n';
}

void KeyValues::set(const std::string& key, const std::string& value) {
    entries_[key] = value;
}

void KeyValues::set(const std::string& key, double value) {
    entries_[key] = format_double(value);
}

void KeyValues::set(const std::string& key, std::int64_t value) {
    entries_[key] = std::to_string(value);
}

void KeyValues::merge(const KeyValues& other) {
    for (const auto& [k, v] : other.entries_) entries_[k] = v;
}

std::optional<std::string> KeyValues::find(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

std::string KeyValues::get_string(const std::string& key, const std::string& fallback) const {
    return find(key).value_or(fallback);
}

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T value{};
    const char* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, value);
    if (res.ec != std::errc() || res.ptr != end) {
        throw ValidationError("config key '" + key + "': cannot parse '" + text + "' as a number");
    }
    return value;
}

} // namespace

double KeyValues::get_double(const std::string& key, double fallback) const {
    const auto v = find(key);
    if (!v) return fallback;
    const double d = parse_number<double>(key, *v);
    if (!std::isfinite(d)) throw ValidationError("config key '" + key + "' must be finite");
    return d;
}

std::int64_t KeyValues::get_int(const std::string& key, std::int64_t fallback) const {
    const auto v = find(key);
    return v ? parse_number<std::int64_t>(key, *v) : fallback;
}

std::size_t KeyValues::get_count(const std::string& key, std::size_t fallback) const {
    const auto v = find(key);
    if (!v) return fallback;
    if (!v->empty() && (*v)[0] == '-') {
        throw ValidationError("config key '" + key + "' must be non-negative, got " + *v);
    }
    return parse_number<std::size_t>(key, *v);
}

std::uint64_t KeyValues::get_u64(const std::string& key, std::uint64_t fallback) const {
    const auto v = find(key);
    return v ? parse_number<std::uint64_t>(key, *v) : fallback;
}

bool KeyValues::get_bool(const std::string& key, bool fallback) const {
    const auto v = find(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ValidationError("config key '" + key + "' must be true or false, got '" + *v + "'");
}

std::vector<std::string> KeyValues::get_list(const std::string& key) const {
    const auto v = find(key);
    if (!v || v->empty()) return {};
    return split_trimmed(*v, ',');
}

} // namespace snecl
