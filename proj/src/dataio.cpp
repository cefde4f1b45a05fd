#include "a2gnn/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

namespace a2gnn {

namespace {

struct CsvRow {
    std::size_t line = 0;
    std::vector<double> values;
};

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<CsvRow> read_numeric_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    std::vector<CsvRow> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty() || body.front() == '#') {
            continue;
        }
        CsvRow row{line_no, {}};
        std::size_t col = 0;
        std::size_t pos = 0;
        while (true) {
            const auto comma = body.find(',', pos);
            const auto cell = trim(body.substr(pos, comma == std::string_view::npos ? body.npos : comma - pos));
            ++col;
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
                throw DataError(path.string() + ":" + std::to_string(line_no) + ":" + std::to_string(col) +
                                ": non-numeric cell '" + std::string(cell) + "'");
            }
            if (!std::isfinite(v)) {
                throw DataError(path.string() + ":" + std::to_string(line_no) + ":" + std::to_string(col) +
                                ": non-finite cell '" + std::string(cell) + "'");
            }
            row.values.push_back(v);
            if (comma == std::string_view::npos) {
                break;
            }
            pos = comma + 1;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::valid: return "valid";
        case Split::test: return "test";
    }
    return "?";
}

std::pair<std::size_t, std::size_t> SeriesDataset::split_rows(Split s) const {
    switch (s) {
        case Split::train: return {0, train_end};
        case Split::valid: return {train_end, valid_end};
        case Split::test: return {valid_end, steps};
    }
    return {0, 0};
}

std::size_t SeriesDataset::window_count(Split s) const {
    const auto [begin, end] = split_rows(s);
    const std::size_t len = end - begin;
    return len >= t_in + t_out ? len - t_in - t_out + 1 : 0;
}

SeriesDataset load_series(const std::filesystem::path& path, SeriesLayout layout,
                          std::size_t expected_nodes) {
    const auto rows = read_numeric_csv(path);
    if (rows.empty()) {
        throw DataError(path.string() + ": empty series file");
    }
    const std::size_t width = rows.front().values.size();
    for (const auto& r : rows) {
        if (r.values.size() != width) {
            throw DataError(path.string() + ":" + std::to_string(r.line) + ": ragged row with " +
                            std::to_string(r.values.size()) + " columns, expected " +
                            std::to_string(width));
        }
    }
    SeriesDataset ds;
    if (layout == SeriesLayout::timestep_rows) {
        ds.steps = rows.size();
        ds.nodes = width;
        ds.raw.reserve(ds.steps * ds.nodes);
        for (const auto& r : rows) {
            ds.raw.insert(ds.raw.end(), r.values.begin(), r.values.end());
        }
    } else {
        ds.nodes = rows.size();
        ds.steps = width;
        ds.raw.resize(ds.steps * ds.nodes);
        for (std::size_t n = 0; n < ds.nodes; ++n) {
            for (std::size_t t = 0; t < ds.steps; ++t) {
                ds.raw[t * ds.nodes + n] = rows[n].values[t];
            }
        }
    }
    if (expected_nodes != 0 && ds.nodes != expected_nodes) {
        throw DataError(path.string() + ": expected " + std::to_string(expected_nodes) + " nodes, found " +
                        std::to_string(ds.nodes));
    }
    return ds;
}

SeriesDataset split_and_normalize(SeriesDataset ds, double train, double valid, double test) {
    if (!(train > 0 && valid > 0 && test > 0) || std::abs(train + valid + test - 1.0) > 1e-9) {
        throw DataError("split ratios must be positive and sum to 1");
    }
    const double T = static_cast<double>(ds.steps);
    ds.train_end = static_cast<std::size_t>(std::floor(T * train + 1e-9));
    ds.valid_end = static_cast<std::size_t>(std::floor(T * (train + valid) + 1e-9));
    const std::size_t need = ds.t_in + ds.t_out;
    for (Split s : {Split::train, Split::valid, Split::test}) {
        const auto [b, e] = ds.split_rows(s);
        if (e <= b || e - b < need) {
            throw InsufficientDataError(std::string(split_name(s)) + " split has " +
                                        std::to_string(e > b ? e - b : 0) + " rows, needs at least " +
                                        std::to_string(need) + " (t_in + t_out)");
        }
    }

    const std::size_t N = ds.nodes;
    ds.norm.mean.assign(N, 0.0);
    ds.norm.std.assign(N, 0.0);
    for (std::size_t t = 0; t < ds.train_end; ++t) {
        for (std::size_t n = 0; n < N; ++n) {
            ds.norm.mean[n] += ds.raw_at(t, n);
        }
    }
    for (double& m : ds.norm.mean) {
        m /= static_cast<double>(ds.train_end);
    }
    for (std::size_t t = 0; t < ds.train_end; ++t) {
        for (std::size_t n = 0; n < N; ++n) {
            const double d = ds.raw_at(t, n) - ds.norm.mean[n];
            ds.norm.std[n] += d * d;
        }
    }
    for (double& s : ds.norm.std) {
        s = std::sqrt(s / static_cast<double>(ds.train_end));
        if (s < 1e-12) {
            s = 1.0;
        }
    }
    ds.normalized.resize(ds.raw.size());
    for (std::size_t t = 0; t < ds.steps; ++t) {
        for (std::size_t n = 0; n < N; ++n) {
            ds.normalized[t * N + n] = (ds.raw_at(t, n) - ds.norm.mean[n]) / ds.norm.std[n];
        }
    }
    return ds;
}

WindowSet make_windows(const SeriesDataset& ds, Split split) {
    if (!ds.is_split()) {
        throw DataError("make_windows: dataset has not been split and normalized");
    }
    const auto [begin, end] = ds.split_rows(split);
    const std::size_t len = end - begin;
    if (len < ds.t_in + ds.t_out) {
        throw InsufficientDataError(std::string(split_name(split)) + " split of length " +
                                    std::to_string(len) + " is shorter than t_in + t_out = " +
                                    std::to_string(ds.t_in + ds.t_out));
    }
    WindowSet w;
    w.count = len - ds.t_in - ds.t_out + 1;
    w.t_in = ds.t_in;
    w.t_out = ds.t_out;
    w.nodes = ds.nodes;
    w.first_row = begin;
    const std::size_t N = ds.nodes;
    w.x.reserve(w.count * w.t_in * N);
    w.y.reserve(w.count * w.t_out * N);
    w.y_raw.reserve(w.count * w.t_out * N);
    for (std::size_t b = 0; b < w.count; ++b) {
        const std::size_t row = begin + b;
        for (std::size_t t = 0; t < ds.t_in; ++t) {
            for (std::size_t n = 0; n < N; ++n) {
                w.x.push_back(ds.norm_at(row + t, n));
            }
        }
        for (std::size_t t = 0; t < ds.t_out; ++t) {
            for (std::size_t n = 0; n < N; ++n) {
                w.y.push_back(ds.norm_at(row + ds.t_in + t, n));
                w.y_raw.push_back(ds.raw_at(row + ds.t_in + t, n));
            }
        }
    }
    return w;
}

SyntheticSpec SyntheticSpec::from_key_values(const KeyValues& kv) {
    SyntheticSpec spec;
    for (const auto& [key, value] : kv) {
        try {
            if (key == "n") {
                spec.n = std::stoull(value);
            } else if (key == "t") {
                spec.t = std::stoull(value);
            } else if (key == "k_true") {
                spec.k_true = std::stoull(value);
            } else if (key == "noise_std") {
                spec.noise_std = std::stod(value);
            } else if (key == "seed") {
                spec.seed = std::stoull(value);
            } else if (key == "dynamics") {
                spec.dynamics = value;
            } else {
                throw ConfigError("unknown synthetic key '" + key +
                                  "'; valid keys: n, t, k_true, noise_std, seed, dynamics");
            }
        } catch (const std::logic_error&) {
            throw ConfigError("synthetic key '" + key + "': bad value '" + value + "'");
        }
    }
    return spec;
}

KeyValues SyntheticSpec::to_key_values() const {
    return {{"n", std::to_string(n)},          {"t", std::to_string(t)},
            {"k_true", std::to_string(k_true)}, {"noise_std", format_value(noise_std)},
            {"seed", std::to_string(seed)},     {"dynamics", dynamics}};
}

std::string SyntheticSpec::canonical() const {
    std::string out;
    for (const auto& [k, v] : to_key_values()) {
        out += k + "=" + v + "\n";
    }
    return out;
}

SyntheticData gen_synthetic(const SyntheticSpec& spec) {
    if (spec.dynamics != "var1-tanh") {
        throw ConfigError("unsupported synthetic dynamics '" + spec.dynamics + "'");
    }
    if (spec.n < 2 || spec.k_true == 0 || spec.k_true >= spec.n) {
        throw ConfigError("synthetic spec needs 0 < k_true < n, got k_true=" + std::to_string(spec.k_true) +
                          " n=" + std::to_string(spec.n));
    }
    if (spec.t < 2 || spec.noise_std < 0.0) {
        throw ConfigError("synthetic spec needs t >= 2 and noise_std >= 0");
    }
    const std::size_t N = spec.n;
    std::mt19937_64 rng(spec.seed);
    SyntheticData out;
    out.true_graph.assign(N * N, 0);
    out.weights.assign(N * N, 0.0);
    std::uniform_real_distribution<double> weight(0.5, 1.0);
    std::vector<std::size_t> others;
    for (std::size_t i = 0; i < N; ++i) {
        others.clear();
        for (std::size_t j = 0; j < N; ++j) {
            if (j != i) {
                others.push_back(j);
            }
        }
        std::shuffle(others.begin(), others.end(), rng);
        for (std::size_t k = 0; k < spec.k_true; ++k) {
            out.true_graph[i * N + others[k]] = 1;
        }
        for (std::size_t j = 0; j < N; ++j) {
            if (out.true_graph[i * N + j]) {
                out.weights[i * N + j] = weight(rng) / static_cast<double>(spec.k_true);
            }
        }
    }

    auto& ds = out.dataset;
    ds.nodes = N;
    ds.steps = spec.t;
    ds.raw.assign(N * spec.t, 0.0);
    std::normal_distribution<double> unit(0.0, 1.0);
    for (std::size_t n = 0; n < N; ++n) {
        ds.raw[n] = unit(rng);
    }
    for (std::size_t t = 0; t + 1 < spec.t; ++t) {
        for (std::size_t i = 0; i < N; ++i) {
            double drive = 0.0;
            for (std::size_t j = 0; j < N; ++j) {
                drive += out.weights[i * N + j] * ds.raw[t * N + j];
            }
            const double eps = spec.noise_std > 0.0 ? spec.noise_std * unit(rng) : 0.0;
            ds.raw[(t + 1) * N + i] = std::tanh(drive) + eps;
        }
    }
    return out;
}

PredefinedGraph load_predefined_graph(const std::filesystem::path& path, std::size_t node_count,
                                      GraphFormat format) {
    if (path.empty()) {
        return {};
    }
    const auto rows = read_numeric_csv(path);
    if (rows.empty()) {
        throw DataError(path.string() + ": empty adjacency file");
    }
    if (format == GraphFormat::detect) {
        const bool square = node_count != 0 && rows.size() == node_count &&
                            std::all_of(rows.begin(), rows.end(),
                                        [&](const CsvRow& r) { return r.values.size() == node_count; });
        const bool triples = std::all_of(rows.begin(), rows.end(),
                                         [](const CsvRow& r) { return r.values.size() == 3; });
        if (square) {
            format = GraphFormat::dense;
        } else if (triples) {
            format = GraphFormat::edge_list;
        } else {
            format = GraphFormat::dense;
        }
    }

    PredefinedGraph g;
    g.present = true;
    if (format == GraphFormat::dense) {
        const std::size_t n = rows.size();
        if (node_count != 0 && n != node_count) {
            throw DataError(path.string() + ": adjacency has " + std::to_string(n) + " rows, expected " +
                            std::to_string(node_count));
        }
        std::vector<double> v;
        v.reserve(n * n);
        for (const auto& r : rows) {
            if (r.values.size() != n) {
                throw DataError(path.string() + ":" + std::to_string(r.line) + ": adjacency row has " +
                                std::to_string(r.values.size()) + " entries, expected " + std::to_string(n));
            }
            for (std::size_t c = 0; c < n; ++c) {
                if (r.values[c] < 0.0) {
                    throw DataError(path.string() + ":" + std::to_string(r.line) + ":" + std::to_string(c + 1) +
                                    ": negative edge weight");
                }
            }
            v.insert(v.end(), r.values.begin(), r.values.end());
        }
        g.weights = Tensor::from(n, n, std::move(v));
        return g;
    }

    if (node_count == 0) {
        throw DataError(path.string() + ": edge list needs the node count");
    }
    g.weights = Tensor::zeros(node_count, node_count);
    for (const auto& r : rows) {
        if (r.values.size() != 3) {
            throw DataError(path.string() + ":" + std::to_string(r.line) + ": edge line must be i,j,w");
        }
        const double fi = r.values[0];
        const double fj = r.values[1];
        const double w = r.values[2];
        const bool integral = fi == std::floor(fi) && fj == std::floor(fj);
        if (!integral || fi < 0 || fj < 0 || fi >= static_cast<double>(node_count) ||
            fj >= static_cast<double>(node_count)) {
            throw DataError(path.string() + ":" + std::to_string(r.line) + ": node index out of range [0, " +
                            std::to_string(node_count) + ")");
        }
        if (w < 0.0) {
            throw DataError(path.string() + ":" + std::to_string(r.line) + ": negative edge weight");
        }
        g.weights.at(static_cast<std::size_t>(fi), static_cast<std::size_t>(fj)) = w;
    }
    return g;
}

Tensor row_normalized(const Tensor& adjacency) {
    Tensor out = adjacency.detach();
    for (std::size_t i = 0; i < out.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < out.cols(); ++j) {
            s += out.at(i, j);
        }
        if (s > 0.0) {
            for (std::size_t j = 0; j < out.cols(); ++j) {
                out.at(i, j) /= s;
            }
        }
    }
    return out;
}

void write_series_csv(const std::filesystem::path& path, const SeriesDataset& ds, const std::string& header) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    if (!header.empty()) {
        out << header << '\n';
    }
    for (std::size_t t = 0; t < ds.steps; ++t) {
        for (std::size_t n = 0; n < ds.nodes; ++n) {
            out << (n ? "," : "") << format_value(ds.raw_at(t, n));
        }
        out << '\n';
    }
}

}  // namespace a2gnn
