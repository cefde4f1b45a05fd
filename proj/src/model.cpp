#include "a2gnn/model.hpp"

#include <cmath>

namespace a2gnn {

namespace {

Tensor xavier(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> v(fan_in * fan_out);
    for (double& x : v) {
        x = dist(rng);
    }
    return Tensor::from(fan_in, fan_out, std::move(v), true);
}

}  // namespace

Batch make_batch(const WindowSet& windows, std::span<const std::size_t> indices) {
    const std::size_t n = windows.nodes;
    const std::size_t b = indices.size();
    Batch batch;
    batch.windows = b;
    batch.nodes = n;
    for (std::size_t t = 0; t < windows.t_in; ++t) {
        std::vector<double> v(b * n);
        for (std::size_t w = 0; w < b; ++w) {
            for (std::size_t v_i = 0; v_i < n; ++v_i) {
                v[w * n + v_i] = windows.x_at(indices[w], t, v_i);
            }
        }
        batch.steps.push_back(Tensor::from(b * n, 1, std::move(v)));
    }
    std::vector<double> y(b * n * windows.t_out);
    batch.target_raw.resize(y.size());
    for (std::size_t w = 0; w < b; ++w) {
        for (std::size_t v_i = 0; v_i < n; ++v_i) {
            for (std::size_t t = 0; t < windows.t_out; ++t) {
                const std::size_t src = (indices[w] * windows.t_out + t) * n + v_i;
                const std::size_t dst = (w * n + v_i) * windows.t_out + t;
                y[dst] = windows.y[src];
                batch.target_raw[dst] = windows.y_raw[src];
            }
        }
    }
    batch.target = Tensor::from(b * n, windows.t_out, std::move(y));
    return batch;
}

std::vector<double> to_window_layout(const Tensor& rows, std::size_t windows, std::size_t nodes) {
    const std::size_t horizon = rows.cols();
    if (rows.rows() != windows * nodes) {
        throw DimensionError("to_window_layout: " + rows.shape().str() + " for " + std::to_string(windows) +
                             " windows of " + std::to_string(nodes) + " nodes");
    }
    std::vector<double> out(rows.size());
    for (std::size_t w = 0; w < windows; ++w) {
        for (std::size_t n = 0; n < nodes; ++n) {
            for (std::size_t t = 0; t < horizon; ++t) {
                out[(w * horizon + t) * nodes + n] = rows.at(w * nodes + n, t);
            }
        }
    }
    return out;
}

Model::Model(const RunConfig& config, std::size_t nodes, const std::optional<Tensor>& predefined,
             std::mt19937_64& init_rng)
    : config_(config), nodes_(nodes) {
    if (nodes < 2 && config.use_agl) {
        throw ConfigError("the graph learner needs at least 2 nodes");
    }
    if (config.use_ap && predefined) {
        if (predefined->rows() != nodes || predefined->cols() != nodes) {
            throw DimensionError("predefined adjacency " + predefined->shape().str() + " for " +
                                 std::to_string(nodes) + " nodes");
        }
        predefined_raw_ = predefined->detach();
        predefined_ = row_normalized(*predefined);
    }
    const std::size_t d_enc = config.t_in * config.lstm_out;
    const std::size_t d_h = config.gnn_out;

    lstm_ = LstmParams::init(1, config.lstm_out, init_rng);
    if (config.use_agl) {
        graph_ = LearnedGraph::init(nodes, config.samples, config.tau, config.exclude_self_loops, init_rng);
        if (config.samples == 0 || config.samples > graph_.candidate_count()) {
            throw ConfigError("samples (C) must lie in [1, " + std::to_string(graph_.candidate_count()) +
                              "] for " + std::to_string(nodes) + " nodes");
        }
    }
    gnn_ = GnnParams::init(d_enc, d_h, config.gnn_layers, config.use_agl, predefined_.has_value(), init_rng);
    const std::size_t k = 1 + (config.use_agl ? 1 : 0) + (predefined_ ? 1 : 0);
    const bool attention = config.use_arl && k >= 2;
    arl_ = ArlParams::init(nodes, config.embed_dim, d_h, config.attn_dim, config.d_value, attention, init_rng);
    head_ = xavier(k * config.d_value, config.t_out, init_rng);
}

std::vector<std::string> Model::channel_names() const {
    std::vector<std::string> out{"own"};
    if (config_.use_agl) {
        out.emplace_back("implicit");
    }
    if (predefined_) {
        out.emplace_back("predefined");
    }
    return out;
}

std::vector<NamedParameter> Model::parameters() const {
    std::vector<NamedParameter> out;
    const auto add = [&](std::string name, const Tensor& t, ParamGroup g = ParamGroup::other) {
        out.push_back({std::move(name), t, g});
    };
    add("encoder.w_ih", lstm_.w_ih);
    add("encoder.w_hh", lstm_.w_hh);
    add("encoder.bias", lstm_.bias);
    if (config_.use_agl) {
        add("agl.logits", graph_.logits, ParamGroup::graph_learner);
    }
    add("gnn.own.w1", gnn_.own.w1);
    add("gnn.own.b1", gnn_.own.b1);
    add("gnn.own.w2", gnn_.own.w2);
    add("gnn.own.b2", gnn_.own.b2);
    for (std::size_t l = 0; l < gnn_.implicit_layers.size(); ++l) {
        add("gnn.implicit.w" + std::to_string(l), gnn_.implicit_layers[l]);
    }
    for (std::size_t l = 0; l < gnn_.predefined_layers.size(); ++l) {
        add("gnn.predefined.w" + std::to_string(l), gnn_.predefined_layers[l]);
    }
    if (arl_.has_attention()) {
        add("arl.embedding", arl_.embedding);
        add("arl.w_query", arl_.w_query);
        add("arl.w_key", arl_.w_key);
    }
    add("arl.w_value", arl_.w_value);
    add("head.w", head_);
    return out;
}

Model Model::clone() const {
    Model copy = *this;
    const auto deep = [](Tensor& t) {
        if (t.defined()) {
            Tensor c = t.clone();
            c.set_requires_grad(t.requires_grad());
            t = c;
        }
    };
    deep(copy.lstm_.w_ih);
    deep(copy.lstm_.w_hh);
    deep(copy.lstm_.bias);
    deep(copy.graph_.logits);
    deep(copy.gnn_.own.w1);
    deep(copy.gnn_.own.b1);
    deep(copy.gnn_.own.w2);
    deep(copy.gnn_.own.b2);
    for (auto& w : copy.gnn_.implicit_layers) {
        deep(w);
    }
    for (auto& w : copy.gnn_.predefined_layers) {
        deep(w);
    }
    deep(copy.arl_.embedding);
    deep(copy.arl_.w_query);
    deep(copy.arl_.w_key);
    deep(copy.arl_.w_value);
    deep(copy.head_);
    return copy;
}

ForwardOutput Model::forward(std::span<const Tensor> steps, const ForwardContext& ctx) const {
    if (steps.size() != config_.t_in) {
        throw DimensionError("forward: got " + std::to_string(steps.size()) + " input steps, model expects t_in=" +
                             std::to_string(config_.t_in));
    }
    if (steps.front().rows() % nodes_ != 0) {
        throw DimensionError("forward: " + std::to_string(steps.front().rows()) + " rows is not a multiple of " +
                             std::to_string(nodes_) + " nodes");
    }
    const bool training = ctx.mode == Mode::training;
    ForwardOutput out;
    if (config_.use_agl) {
        if (training) {
            if (ctx.gumbel_rng == nullptr) {
                throw std::invalid_argument("forward: training mode needs a Gumbel random stream");
            }
            out.adjacency = sample_adjacency(graph_, *ctx.gumbel_rng);
        } else {
            out.adjacency = topc_inference(graph_);
        }
    }

    const Tensor s = encode_sequence(lstm_, steps);
    const DropoutSpec drop{config_.dropout, training && ctx.dropout, ctx.dropout_rng};
    std::optional<Tensor> learned;
    if (out.adjacency) {
        learned = out.adjacency->weights;
    }
    const RelationBundle bundle = build_bundle(gnn_, s, learned, predefined_, drop);

    Tensor z;
    if (arl_.has_attention()) {
        const Tensor p = attention_coeffs(arl_, bundle);
        z = fuse(arl_, bundle, p).z;
        out.attention = p;
    } else {
        z = fuse_concat(arl_, bundle);
        if (config_.use_arl) {
            // A single channel: attention degenerates to weight 1.
            out.attention = Tensor::full(z.rows(), 1, 1.0);
        }
    }
    out.prediction = ops::matmul(z, head_);
    return out;
}

Tensor rmse_loss(const Tensor& prediction, const Tensor& target, std::span<const double> weights) {
    if (prediction.shape() != target.shape()) {
        throw DimensionError("rmse_loss: prediction " + prediction.shape().str() + " vs target " +
                             target.shape().str());
    }
    const Tensor sq = ops::square(ops::sub(prediction, target));
    if (weights.empty()) {
        return ops::sqrt(ops::mean(sq));
    }
    bool any = false;
    for (double w : weights) {
        any = any || w > 0.0;
    }
    if (!any) {
        throw NumericError("rmse_loss: every entry is masked");
    }
    return ops::sqrt(ops::weighted_mean(sq, weights));
}

std::vector<double> nonzero_weights(std::span<const double> target_raw) {
    std::vector<double> w(target_raw.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = target_raw[i] == 0.0 ? 0.0 : 1.0;
    }
    return w;
}

}  // namespace a2gnn
