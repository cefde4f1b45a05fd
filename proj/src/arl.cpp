#include "a2gnn/arl.hpp"

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

ArlParams ArlParams::init(std::size_t nodes, std::size_t d_m, std::size_t d_h, std::size_t d,
                          std::size_t d_value, bool attention, std::mt19937_64& rng) {
    ArlParams p;
    if (attention) {
        std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(d_m)));
        std::vector<double> m(nodes * d_m);
        for (double& x : m) {
            x = dist(rng);
        }
        p.embedding = Tensor::from(nodes, d_m, std::move(m), true);
        p.w_query = xavier(d_m, d, rng);
        p.w_key = xavier(d_h, d, rng);
    }
    p.w_value = xavier(d_h, d_value, rng);
    return p;
}

Tensor attention_scores(const ArlParams& params, const RelationBundle& bundle) {
    if (!params.has_attention()) {
        throw std::invalid_argument("attention_scores: parameters were built without attention");
    }
    const std::size_t n = params.embedding.rows();
    const std::size_t rows = bundle.own.rows();
    if (n == 0 || rows % n != 0) {
        throw DimensionError("attention_scores: " + std::to_string(rows) + " bundle rows for " +
                             std::to_string(n) + " node embeddings");
    }
    const Tensor query = ops::tile_rows(ops::matmul(params.embedding, params.w_query), rows / n);
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(params.attn_dim()));
    std::vector<Tensor> scores;
    for (const Tensor& h : bundle.channels()) {
        if (h.cols() != params.w_key.rows()) {
            throw DimensionError("attention_scores: channel " + h.shape().str() + " vs w_key " +
                                 params.w_key.shape().str());
        }
        scores.push_back(ops::rowwise_dot(query, ops::matmul(h, params.w_key)));
    }
    return ops::scale(ops::concat_cols(scores), inv_sqrt_d);
}

Tensor attention_coeffs(const ArlParams& params, const RelationBundle& bundle) {
    if (bundle.channels().size() < 2) {
        throw std::invalid_argument("attention_coeffs: attention needs at least two channels");
    }
    return ops::softmax_rows(attention_scores(params, bundle));
}

FusedRepresentation fuse(const ArlParams& params, const RelationBundle& bundle, const Tensor& p) {
    const auto channels = bundle.channels();
    if (p.cols() != channels.size() || p.rows() != bundle.own.rows()) {
        throw DimensionError("fuse: coefficients " + p.shape().str() + " for " + std::to_string(channels.size()) +
                             " channels of " + bundle.own.shape().str());
    }
    std::vector<Tensor> blocks;
    for (std::size_t k = 0; k < channels.size(); ++k) {
        if (channels[k].cols() != params.w_value.rows()) {
            throw DimensionError("fuse: channel " + channels[k].shape().str() + " vs w_value " +
                                 params.w_value.shape().str());
        }
        blocks.push_back(ops::scale_rows(ops::matmul(channels[k], params.w_value), ops::slice_cols(p, k, k + 1)));
    }
    return {blocks.size() == 1 ? blocks.front() : ops::concat_cols(blocks), p};
}

Tensor fuse_concat(const ArlParams& params, const RelationBundle& bundle) {
    std::vector<Tensor> blocks;
    for (const Tensor& h : bundle.channels()) {
        if (h.cols() != params.w_value.rows()) {
            throw DimensionError("fuse_concat: channel " + h.shape().str() + " vs w_value " +
                                 params.w_value.shape().str());
        }
        blocks.push_back(ops::matmul(h, params.w_value));
    }
    return blocks.size() == 1 ? blocks.front() : ops::concat_cols(blocks);
}

}  // namespace a2gnn
