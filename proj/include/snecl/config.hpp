#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace snecl {

/// Flat `key = value` configuration. Keys are sorted, so the text form of a
/// given set of entries is unique.
///
/// Text grammar: one `key = value` per line; `#` starts a comment; blank lines
/// are ignored; a repeated key keeps its last value.
class KeyValues {
public:
    KeyValues() = default;

    static KeyValues parse(std::istream& is, const std::string& source = "<input>");
    static KeyValues parse_file(const std::string& path);

    void write(std::ostream& os) const;

    void set(const std::string& key, const std::string& value);
    void set(const std::string& key, double value); // round-trip precision
    void set(const std::string& key, std::int64_t value);

    /// Entries of `other` replace entries of this object.
    void merge(const KeyValues& other);

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    std::optional<std::string> find(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    std::size_t get_count(const std::string& key, std::size_t fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    /// Accepts true/false, 1/0 and yes/no.
    bool get_bool(const std::string& key, bool fallback) const;
    /// Comma-separated list; empty value means an empty list.
    std::vector<std::string> get_list(const std::string& key) const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    std::map<std::string, std::string> entries_;
};

/// Shortest decimal text that reads back as exactly `value`.
std::string format_double(double value);

/// Splits on `sep`, trimming surrounding whitespace from every piece.
std::vector<std::string> split_trimmed(const std::string& text, char sep);

std::string trim(const std::string& text);

} // namespace snecl
