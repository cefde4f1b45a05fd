#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace a2gnn {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Flat key=value text. '#' starts a comment line; blank lines are ignored.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(std::string_view text, std::string_view origin = "<text>");
KeyValues read_key_values(const std::filesystem::path& path);
// Applies one "key=value" override on top of `kv`.
void apply_override(KeyValues& kv, std::string_view assignment);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

// Everything needed to reproduce one training run. Defaults follow the
// METR-LA-style configuration (12-in / 12-out, 7:1:2 split).
struct RunConfig {
    std::string series_path;
    std::string adjacency_path;
    std::string series_layout = "timesteps";  // or "nodes": one node per line
    std::size_t expected_nodes = 0;           // 0 accepts any node count

    std::size_t t_in = 12;
    std::size_t t_out = 12;
    double train_ratio = 0.7;
    double valid_ratio = 0.1;
    double test_ratio = 0.2;

    std::size_t lstm_out = 16;
    std::size_t gnn_layers = 2;
    std::size_t gnn_out = 128;
    std::size_t d_value = 256;
    std::size_t attn_dim = 128;
    std::size_t embed_dim = 64;
    std::size_t samples = 15;  // C: Gumbel draws per node, also the top-C width
    double tau = 0.5;

    double lr_agl = 0.01;
    double lr_other = 0.001;
    double clip = 5.0;
    double dropout = 0.3;

    bool use_agl = true;
    bool use_ap = true;
    bool use_arl = true;
    bool exclude_self_loops = true;
    bool mask_zeros = false;

    std::uint64_t seed = 1;
    std::size_t epochs = 50;
    std::size_t batch_size = 32;

    // Unknown keys raise ConfigError listing every valid key.
    static RunConfig from_key_values(const KeyValues& kv);
    KeyValues to_key_values() const;
    static const std::vector<std::string>& keys();

    // Sorted key=value lines; stable across runs and platforms.
    std::string canonical() const;
    std::uint64_t hash() const { return fnv1a64(canonical()); }

    // Row label used in reports: "A2GNN", "w/o AGL", "w/o Ap", "w/o ARL", "w/o A2".
    std::string variant_label() const;
};

// First line of every artifact file written by the tools.
std::string artifact_header(std::uint64_t config_hash, std::uint64_t seed, std::string_view kind);

}  // namespace a2gnn
