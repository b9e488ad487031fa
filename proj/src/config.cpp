#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "metric_gate/errors.hpp"
#include "metric_gate/gate.hpp"

namespace mgate {
namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T number(std::string_view key, std::string_view value) {
    T out{};
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError("config key '" + std::string(key) + "': bad number '" + std::string(value) + "'");
    }
    return out;
}

}  // namespace

OutputFormat parse_format(std::string_view name) {
    if (name == "json") return OutputFormat::Json;
    if (name == "text") return OutputFormat::Text;
    throw ConfigError("unknown format '" + std::string(name) + "' (expected json or text)");
}

GateConfig parse_config(std::string_view text, GateConfig cfg) {
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key == "threshold") {
            cfg.threshold = number<double>(key, value);
        } else if (key == "model") {
            cfg.model_path = std::string(value);
        } else if (key == "lexicon") {
            cfg.lexicon_path = std::string(value);
        } else if (key == "embedder") {
            cfg.embedder.kind = std::string(value);
        } else if (key == "embedder_cmd") {
            cfg.embedder.command = std::string(value);
        } else if (key == "embed_dim") {
            cfg.embedder.dim = number<std::size_t>(key, value);
        } else if (key == "format") {
            cfg.format = parse_format(value);
        } else if (key == "jobs") {
            cfg.jobs = number<std::size_t>(key, value);
        } else {
            throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" +
                              std::string(key) + "'");
        }
    }
    return cfg;
}

GateConfig load_config(const std::filesystem::path& path, GateConfig base) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), std::move(base));
}

GateConfig config_from_env() {
    const char* path = std::getenv("METRIC_GATE_CONFIG");
    if (path == nullptr || *path == '\0') return {};
    return load_config(path);
}

}  // namespace mgate
