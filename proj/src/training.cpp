#include "a2gnn/training.hpp"

#include "a2gnn/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace a2gnn {

AdamReport adam_step(const std::vector<NamedParameter>& params, AdamState& state, const AdamConfig& cfg) {
    double sq = 0.0;
    for (const auto& p : params) {
        if (!p.value.has_grad()) {
            continue;
        }
        for (double g : p.value.grad()) {
            if (!std::isfinite(g)) {
                throw NumericError("adam_step: non-finite gradient in '" + p.name + "' at step " +
                                   std::to_string(state.step + 1));
            }
            sq += g * g;
        }
    }
    AdamReport report;
    report.grad_norm = std::sqrt(sq);
    if (cfg.clip > 0.0 && report.grad_norm > cfg.clip) {
        report.clip_scale = cfg.clip / report.grad_norm;
    }

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correct1 = 1.0 - std::pow(cfg.beta1, t);
    const double correct2 = 1.0 - std::pow(cfg.beta2, t);
    for (const auto& p : params) {
        Tensor value = p.value;
        auto& mom = state.moments[p.name];
        if (mom.m.size() != value.size()) {
            mom.m.assign(value.size(), 0.0);
            mom.v.assign(value.size(), 0.0);
        }
        if (!value.has_grad()) {
            continue;
        }
        const double lr = p.group == ParamGroup::graph_learner ? cfg.lr_graph : cfg.lr_other;
        const auto grad = value.grad();
        auto w = value.mutable_values();
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double g = grad[i] * report.clip_scale;
            mom.m[i] = cfg.beta1 * mom.m[i] + (1.0 - cfg.beta1) * g;
            mom.v[i] = cfg.beta2 * mom.v[i] + (1.0 - cfg.beta2) * g * g;
            const double m_hat = mom.m[i] / correct1;
            const double v_hat = mom.v[i] / correct2;
            w[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
        }
    }
    return report;
}

ModelState ModelState::snapshot() const { return {config, model.clone(), adam, norm}; }

TrainingData prepare_training_data(const RunConfig& cfg, SeriesDataset series, PredefinedGraph predefined) {
    series.t_in = cfg.t_in;
    series.t_out = cfg.t_out;
    TrainingData data;
    data.dataset = split_and_normalize(std::move(series), cfg.train_ratio, cfg.valid_ratio, cfg.test_ratio);
    data.predefined = std::move(predefined);
    if (data.predefined.present && data.predefined.weights.rows() != data.dataset.nodes) {
        throw DataError("predefined adjacency has " + std::to_string(data.predefined.weights.rows()) +
                        " nodes, series has " + std::to_string(data.dataset.nodes));
    }
    return data;
}

TrainingData load_training_data(const RunConfig& cfg) {
    if (cfg.series_path.empty()) {
        throw ConfigError("series_path is not set");
    }
    const auto layout = cfg.series_layout == "nodes" ? SeriesLayout::node_rows : SeriesLayout::timestep_rows;
    SeriesDataset series = load_series(cfg.series_path, layout, cfg.expected_nodes);
    PredefinedGraph predefined;
    if (!cfg.adjacency_path.empty()) {
        predefined = load_predefined_graph(cfg.adjacency_path, series.nodes);
    }
    return prepare_training_data(cfg, std::move(series), std::move(predefined));
}

ModelState init_state(const RunConfig& cfg, const TrainingData& data) {
    auto rng = make_stream(cfg.seed, Stream::init);
    std::optional<Tensor> predefined;
    if (data.predefined.present) {
        predefined = data.predefined.weights;
    }
    ModelState state{cfg, Model(cfg, data.dataset.nodes, predefined, rng), {}, data.dataset.norm};
    for (const auto& p : state.model.parameters()) {
        state.adam.moments[p.name] = {std::vector<double>(p.value.size(), 0.0),
                                      std::vector<double>(p.value.size(), 0.0)};
    }
    return state;
}

Predictions predict(const ModelState& state, const WindowSet& windows, std::size_t batch_size) {
    ad::NoGradGuard no_grad;
    const std::size_t n = windows.nodes;
    Predictions out;
    out.windows = windows.count;
    out.horizon = windows.t_out;
    out.nodes = n;
    out.normalized.resize(windows.count * windows.t_out * n);
    std::vector<double> attention_sum;
    std::size_t channels = 0;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < windows.count; start += batch_size) {
        const std::size_t end = std::min(windows.count, start + batch_size);
        idx.resize(end - start);
        std::iota(idx.begin(), idx.end(), start);
        const Batch batch = make_batch(windows, idx);
        const ForwardOutput fwd = state.model.forward(batch.steps, {Mode::inference});
        const auto layout = to_window_layout(fwd.prediction, idx.size(), n);
        std::copy(layout.begin(), layout.end(),
                  out.normalized.begin() + static_cast<std::ptrdiff_t>(start * windows.t_out * n));
        if (fwd.attention.defined()) {
            channels = fwd.attention.cols();
            attention_sum.resize(n * channels, 0.0);
            for (std::size_t r = 0; r < fwd.attention.rows(); ++r) {
                for (std::size_t k = 0; k < channels; ++k) {
                    attention_sum[(r % n) * channels + k] += fwd.attention.at(r, k);
                }
            }
        }
    }
    out.denormalized.resize(out.normalized.size());
    for (std::size_t i = 0; i < out.normalized.size(); ++i) {
        const std::size_t node = i % n;
        out.denormalized[i] = out.normalized[i] * state.norm.std[node] + state.norm.mean[node];
    }
    if (channels > 0) {
        for (double& v : attention_sum) {
            v /= static_cast<double>(windows.count);
        }
        out.mean_attention = Tensor::from(n, channels, std::move(attention_sum));
    }
    return out;
}

MetricReport evaluate(const ModelState& state, const SeriesDataset& dataset, Split split) {
    const WindowSet windows = make_windows(dataset, split);
    if (windows.count == 0) {
        throw InsufficientDataError(std::string("evaluate: ") + split_name(split) + " split has no windows");
    }
    const Predictions pred = predict(state, windows);
    return compute_metrics(windows.y_raw, pred.denormalized, windows.count, windows.t_out, windows.nodes);
}

double normalized_rmse(const ModelState& state, const SeriesDataset& dataset, Split split) {
    const WindowSet windows = make_windows(dataset, split);
    const Predictions pred = predict(state, windows);
    double sq = 0.0;
    for (std::size_t i = 0; i < windows.y.size(); ++i) {
        const double e = pred.normalized[i] - windows.y[i];
        sq += e * e;
    }
    return std::sqrt(sq / static_cast<double>(windows.y.size()));
}

TrainResult train(const RunConfig& cfg, const TrainingData& data, const EpochCallback& on_epoch) {
    TrainResult result;
    ModelState state = init_state(cfg, data);
    const AdamConfig adam_cfg = AdamConfig::from(cfg);
    const WindowSet train_windows = make_windows(data.dataset, Split::train);
    auto gumbel_rng = make_stream(cfg.seed, Stream::gumbel);
    auto dropout_rng = make_stream(cfg.seed, Stream::dropout);
    auto shuffle_rng = make_stream(cfg.seed, Stream::shuffle);

    std::vector<std::size_t> order(train_windows.count);
    std::iota(order.begin(), order.end(), 0);
    const auto params = state.model.parameters();
    double best_rmse = std::numeric_limits<double>::infinity();
    result.best = state.snapshot();

    for (std::size_t epoch = 1; epoch <= cfg.epochs && !result.diverged; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const Batch batch =
                make_batch(train_windows, std::span(order).subspan(start, end - start));
            for (const auto& p : params) {
                Tensor t = p.value;
                t.zero_grad();
            }
            ForwardContext ctx{Mode::training, &gumbel_rng, &dropout_rng, true};
            const ForwardOutput fwd = state.model.forward(batch.steps, ctx);
            std::vector<double> weights;
            if (cfg.mask_zeros) {
                weights = nonzero_weights(batch.target_raw);
            }
            const Tensor loss = rmse_loss(fwd.prediction, batch.target, weights);
            if (!std::isfinite(loss.item())) {
                result.diverged = true;
                result.diagnostic = "training loss became non-finite at epoch " + std::to_string(epoch);
                break;
            }
            backward(loss);
            try {
                adam_step(params, state.adam, adam_cfg);
            } catch (const NumericError& e) {
                result.diverged = true;
                result.diagnostic = e.what();
                break;
            }
            loss_sum += loss.item();
            ++batches;
        }
        if (result.diverged) {
            break;
        }
        EpochRecord record;
        record.epoch = epoch;
        record.train_loss = batches > 0 ? loss_sum / static_cast<double>(batches) : 0.0;
        record.valid = evaluate(state, data.dataset, Split::valid);
        if (record.valid.overall.rmse < best_rmse) {
            best_rmse = record.valid.overall.rmse;
            result.best = state.snapshot();
            result.best_epoch = epoch;
        }
        result.history.push_back(record);
        if (on_epoch) {
            on_epoch(record, state);
        }
    }
    result.last = std::move(state);
    result.test = evaluate(result.best, data.dataset, Split::test);
    return result;
}

double edge_separation(const Model& model, const std::vector<std::uint8_t>& true_graph) {
    const Tensor& logits = model.graph().logits;
    const std::size_t n = logits.rows();
    double on = 0.0;
    double off = 0.0;
    std::size_t n_on = 0;
    std::size_t n_off = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) {
                continue;
            }
            if (true_graph[i * n + j]) {
                on += logits.at(i, j);
                ++n_on;
            } else {
                off += logits.at(i, j);
                ++n_off;
            }
        }
    }
    return on / static_cast<double>(std::max<std::size_t>(n_on, 1)) -
           off / static_cast<double>(std::max<std::size_t>(n_off, 1));
}

double precision_at_c(const Model& model, const std::vector<std::uint8_t>& true_graph) {
    const LearnedGraph& g = model.graph();
    const std::size_t n = g.nodes();
    std::size_t hits = 0;
    std::size_t total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j : topc_neighbors(g, i)) {
            hits += true_graph[i * n + j] ? 1 : 0;
            ++total;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace a2gnn
