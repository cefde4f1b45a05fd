#include "a2gnn/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace a2gnn {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::size_t parse_size(const std::string& key, const std::string& v) {
    std::size_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
    }
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") {
        return true;
    }
    if (v == "false" || v == "0" || v == "no") {
        return false;
    }
    throw ConfigError("config key '" + key + "': expected true/false, got '" + v + "'");
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Field {
    std::string key;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define A2GNN_SIZE(name) \
    Field{#name, [](RunConfig& c, const std::string& v) { c.name = parse_size(#name, v); }, \
          [](const RunConfig& c) { return std::to_string(c.name); }}
#define A2GNN_DOUBLE(name) \
    Field{#name, [](RunConfig& c, const std::string& v) { c.name = parse_double(#name, v); }, \
          [](const RunConfig& c) { return format_double(c.name); }}
#define A2GNN_BOOL(name) \
    Field{#name, [](RunConfig& c, const std::string& v) { c.name = parse_bool(#name, v); }, \
          [](const RunConfig& c) { return std::string(c.name ? "true" : "false"); }}
#define A2GNN_STRING(name) \
    Field{#name, [](RunConfig& c, const std::string& v) { c.name = v; }, \
          [](const RunConfig& c) { return c.name; }}

const std::vector<Field>& fields() {
    static const std::vector<Field> table{
        A2GNN_STRING(series_path),
        A2GNN_STRING(adjacency_path),
        A2GNN_STRING(series_layout),
        A2GNN_SIZE(expected_nodes),
        A2GNN_SIZE(t_in),
        A2GNN_SIZE(t_out),
        A2GNN_DOUBLE(train_ratio),
        A2GNN_DOUBLE(valid_ratio),
        A2GNN_DOUBLE(test_ratio),
        A2GNN_SIZE(lstm_out),
        A2GNN_SIZE(gnn_layers),
        A2GNN_SIZE(gnn_out),
        A2GNN_SIZE(d_value),
        A2GNN_SIZE(attn_dim),
        A2GNN_SIZE(embed_dim),
        A2GNN_SIZE(samples),
        A2GNN_DOUBLE(tau),
        A2GNN_DOUBLE(lr_agl),
        A2GNN_DOUBLE(lr_other),
        A2GNN_DOUBLE(clip),
        A2GNN_DOUBLE(dropout),
        A2GNN_BOOL(use_agl),
        A2GNN_BOOL(use_ap),
        A2GNN_BOOL(use_arl),
        A2GNN_BOOL(exclude_self_loops),
        A2GNN_BOOL(mask_zeros),
        Field{"seed", [](RunConfig& c, const std::string& v) { c.seed = parse_size("seed", v); },
              [](const RunConfig& c) { return std::to_string(c.seed); }},
        A2GNN_SIZE(epochs),
        A2GNN_SIZE(batch_size),
    };
    return table;
}

#undef A2GNN_SIZE
#undef A2GNN_DOUBLE
#undef A2GNN_BOOL
#undef A2GNN_STRING

}  // namespace

KeyValues parse_key_values(std::string_view text, std::string_view origin) {
    KeyValues kv;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = std::min(text.find('\n', pos), text.size());
        const auto line = trim(text.substr(pos, end - pos));
        ++line_no;
        pos = end + 1;
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) +
                              ": expected key=value, got '" + std::string(line) + "'");
        }
        const auto key = trim(line.substr(0, eq));
        if (key.empty()) {
            throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) + ": empty key");
        }
        kv[std::string(key)] = std::string(trim(line.substr(eq + 1)));
    }
    return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_key_values(ss.str(), path.string());
}

void apply_override(KeyValues& kv, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || trim(assignment.substr(0, eq)).empty()) {
        throw ConfigError("override must look like key=value, got '" + std::string(assignment) + "'");
    }
    kv[std::string(trim(assignment.substr(0, eq)))] = std::string(trim(assignment.substr(eq + 1)));
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

const std::vector<std::string>& RunConfig::keys() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& f : fields()) {
            out.push_back(f.key);
        }
        return out;
    }();
    return names;
}

RunConfig RunConfig::from_key_values(const KeyValues& kv) {
    RunConfig cfg;
    for (const auto& [key, value] : kv) {
        const auto it = std::find_if(fields().begin(), fields().end(),
                                     [&](const Field& f) { return f.key == key; });
        if (it == fields().end()) {
            std::string valid;
            for (const auto& k : keys()) {
                valid += (valid.empty() ? "" : ", ") + k;
            }
            throw ConfigError("unknown config key '" + key + "'; valid keys: " + valid);
        }
        it->set(cfg, value);
    }
    if (cfg.t_in == 0 || cfg.t_out == 0) {
        throw ConfigError("t_in and t_out must be positive");
    }
    if (!(cfg.tau > 0.0)) {
        throw ConfigError("tau must be positive");
    }
    if (cfg.gnn_layers == 0) {
        throw ConfigError("gnn_layers must be at least 1");
    }
    if (cfg.batch_size == 0) {
        throw ConfigError("batch_size must be positive");
    }
    if (cfg.series_layout != "timesteps" && cfg.series_layout != "nodes") {
        throw ConfigError("series_layout must be 'timesteps' or 'nodes'");
    }
    return cfg;
}

KeyValues RunConfig::to_key_values() const {
    KeyValues kv;
    for (const auto& f : fields()) {
        kv[f.key] = f.get(*this);
    }
    return kv;
}

std::string RunConfig::canonical() const {
    std::string out;
    for (const auto& [k, v] : to_key_values()) {
        out += k + "=" + v + "\n";
    }
    return out;
}

std::string RunConfig::variant_label() const {
    std::vector<std::string> removed;
    if (!use_agl && !use_arl) {
        removed.emplace_back("A2");
    } else if (!use_agl) {
        removed.emplace_back("AGL");
    } else if (!use_arl) {
        removed.emplace_back("ARL");
    }
    if (!use_ap && !adjacency_path.empty()) {
        removed.emplace_back("Ap");
    }
    if (removed.empty()) {
        return "A2GNN";
    }
    std::string label = "w/o ";
    for (std::size_t i = 0; i < removed.size(); ++i) {
        label += (i ? "+" : "") + removed[i];
    }
    return label;
}

std::string artifact_header(std::uint64_t config_hash, std::uint64_t seed, std::string_view kind) {
    return "# a2gnn " + std::string(kind) + " config_hash=" + hex64(config_hash) +
           " seed=" + std::to_string(seed);
}

}  // namespace a2gnn
