#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace clarity {

// Invalid user input (config values, CLI arguments). The CLI maps this to a
// different exit code than runtime failures.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Flat dotted-key configuration: `vae.latent_dim = 16`, '#' comments, one
// binding per line. Keys are unordered in the file; canonical form sorts them.
class Config {
  public:
    static Config parse_file(const std::string& path);
    static Config parse_text(const std::string& text, const std::string& origin = "<text>");

    void set(const std::string& key, const std::string& value) { kv_[key] = value; }
    void apply_override(const std::string& key_eq_value);  // "key=value"
    void merge_defaults(const Config& defaults);           // fills keys absent here

    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    std::string str(const std::string& key, const std::string& fallback) const;
    std::string must_str(const std::string& key) const;
    double num(const std::string& key, double fallback) const;
    std::int64_t integer(const std::string& key, std::int64_t fallback) const;
    bool flag(const std::string& key, bool fallback) const;
    std::uint64_t seed(const std::string& key, std::uint64_t fallback) const;

    // sorted "key = value" lines, LF-terminated
    std::string canonical() const;
    std::uint64_t hash() const;  // FNV-1a of canonical()

    const std::map<std::string, std::string>& entries() const { return kv_; }

  private:
    std::map<std::string, std::string> kv_;
};

std::uint64_t fnv1a(const std::string& s);
std::string hex16(std::uint64_t v);

}  // namespace clarity
