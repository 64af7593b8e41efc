#include "holo/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

namespace holo {

Config Config::load(const std::optional<std::string>& file_path) {
    Config config;
    if (!file_path) return config;
    std::ifstream in(*file_path);
    if (!in) throw std::runtime_error("cannot open config file: " + *file_path);
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!key.empty()) config.file_values_[key] = value;
    }
    return config;
}

std::string Config::env_name(const std::string& key) {
    std::string name = "HOLO_";
    for (char c : key)
        name += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return name;
}

std::string Config::resolve(const std::string& key, const std::optional<std::string>& cli,
                            const std::string& fallback) const {
    if (cli) return *cli;
    if (const char* env = std::getenv(env_name(key).c_str())) return env;
    const auto it = file_values_.find(key);
    if (it != file_values_.end()) return it->second;
    return fallback;
}

double Config::resolve_double(const std::string& key, const std::optional<double>& cli,
                              double fallback) const {
    if (cli) return *cli;
    std::optional<std::string> none;
    return std::stod(resolve(key, none, std::to_string(fallback)));
}

long long Config::resolve_int(const std::string& key, const std::optional<long long>& cli,
                              long long fallback) const {
    if (cli) return *cli;
    std::optional<std::string> none;
    return std::stoll(resolve(key, none, std::to_string(fallback)));
}

}  // namespace holo
