#pragma once

#include "a2gnn/config.hpp"
#include "a2gnn/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace a2gnn {

// Malformed or unusable input data. Messages carry file/line/column when known.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InsufficientDataError : public DataError {
public:
    using DataError::DataError;
};

enum class SeriesLayout {
    timestep_rows,  // one timestep per line, one node per column
    node_rows,      // one node per line, one timestep per column
};

enum class Split { train, valid, test };

const char* split_name(Split s);

struct NormStats {
    std::vector<double> mean;
    std::vector<double> std;  // zero-variance nodes carry 1
};

// Node-major multivariate series plus windowing and split metadata.
// raw and normalized are T x N, row-major.
struct SeriesDataset {
    std::size_t nodes = 0;
    std::size_t steps = 0;
    std::vector<double> raw;
    std::vector<double> normalized;  // filled by split_and_normalize
    std::size_t t_in = 12;
    std::size_t t_out = 12;
    NormStats norm;
    std::size_t train_end = 0;
    std::size_t valid_end = 0;

    double raw_at(std::size_t t, std::size_t node) const { return raw[t * nodes + node]; }
    double norm_at(std::size_t t, std::size_t node) const { return normalized[t * nodes + node]; }
    bool is_split() const { return train_end > 0; }

    // [begin, end) row range of a split.
    std::pair<std::size_t, std::size_t> split_rows(Split s) const;
    std::size_t window_count(Split s) const;

    double denormalize(double value, std::size_t node) const {
        return value * norm.std[node] + norm.mean[node];
    }
};

// Sliding windows of one split; X is B x t_in x N, Y is B x t_out x N, both
// flattened row-major. y_raw holds the de-normalized targets.
struct WindowSet {
    std::size_t count = 0;
    std::size_t t_in = 0;
    std::size_t t_out = 0;
    std::size_t nodes = 0;
    std::size_t first_row = 0;  // dataset row of window 0's first input step
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> y_raw;

    double x_at(std::size_t b, std::size_t t, std::size_t n) const {
        return x[(b * t_in + t) * nodes + n];
    }
    double y_at(std::size_t b, std::size_t t, std::size_t n) const {
        return y[(b * t_out + t) * nodes + n];
    }
};

struct PredefinedGraph {
    Tensor weights;  // N x N, non-negative, diagonal kept as loaded
    bool present = false;
};

enum class GraphFormat { detect, dense, edge_list };

struct SyntheticSpec {
    std::size_t n = 20;
    std::size_t t = 3000;
    std::size_t k_true = 3;
    double noise_std = 0.1;
    std::uint64_t seed = 1;
    std::string dynamics = "var1-tanh";

    static SyntheticSpec from_key_values(const KeyValues& kv);
    KeyValues to_key_values() const;
    std::string canonical() const;
};

struct SyntheticData {
    SeriesDataset dataset;
    std::vector<std::uint8_t> true_graph;  // N x N; row i marks the nodes i reads from
    std::vector<double> weights;           // N x N coupling weights, zero off the graph
};

// Comma-separated numeric text. Lines beginning with '#' are skipped.
SeriesDataset load_series(const std::filesystem::path& path,
                          SeriesLayout layout = SeriesLayout::timestep_rows,
                          std::size_t expected_nodes = 0);

// Sets chronological split boundaries and z-scores every node with statistics
// from the training rows only.
SeriesDataset split_and_normalize(SeriesDataset ds, double train, double valid, double test);

WindowSet make_windows(const SeriesDataset& ds, Split split);

SyntheticData gen_synthetic(const SyntheticSpec& spec);

// Empty path yields present == false. Edge lists are "i,j,w" with zero-based
// indices and need node_count; detect picks dense when the file is node_count
// lines of node_count values.
PredefinedGraph load_predefined_graph(const std::filesystem::path& path, std::size_t node_count,
                                      GraphFormat format = GraphFormat::detect);

// Each row divided by its sum; all-zero rows stay zero.
Tensor row_normalized(const Tensor& adjacency);

void write_series_csv(const std::filesystem::path& path, const SeriesDataset& ds,
                      const std::string& header);

}  // namespace a2gnn
