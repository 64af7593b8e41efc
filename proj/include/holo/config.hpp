#pragma once

#include <map>
#include <optional>
#include <string>

namespace holo {

/// Layered option lookup with the precedence
///   CLI flag > environment (HOLO_<KEY>) > config file > built-in default.
/// Config files are plain `key=value` lines; '#' starts a comment.
class Config {
public:
    static Config load(const std::optional<std::string>& file_path);

    /// `cli` carries the flag value when the user passed it.
    std::string resolve(const std::string& key, const std::optional<std::string>& cli,
                        const std::string& fallback) const;
    double resolve_double(const std::string& key, const std::optional<double>& cli,
                          double fallback) const;
    long long resolve_int(const std::string& key, const std::optional<long long>& cli,
                          long long fallback) const;

    /// HOLO_<KEY> with dashes mapped to underscores, upper-cased.
    static std::string env_name(const std::string& key);

private:
    std::map<std::string, std::string> file_values_;
};

}  // namespace holo
