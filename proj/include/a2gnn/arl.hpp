#pragma once

#include "a2gnn/gnn.hpp"
#include "a2gnn/tensor.hpp"

#include <random>

namespace a2gnn {

// Attention over relation channels. Query comes from a per-node embedding,
// keys and values from each channel's representation; W_key and W_value are
// shared across channels.
struct ArlParams {
    Tensor embedding;  // M: N x d_m
    Tensor w_query;    // d_m x d
    Tensor w_key;      // d_h x d
    Tensor w_value;    // d_h x d_value

    std::size_t attn_dim() const { return w_key.cols(); }
    bool has_attention() const { return embedding.defined(); }

    // M ~ Normal(0, 1/sqrt(d_m)), projections Xavier-uniform. With
    // attention == false only w_value is created.
    static ArlParams init(std::size_t nodes, std::size_t d_m, std::size_t d_h, std::size_t d,
                          std::size_t d_value, bool attention, std::mt19937_64& rng);
};

struct FusedRepresentation {
    Tensor z;  // rows x (K * d_value)
    Tensor p;  // rows x K
};

// Scaled dot-product scores (m_i W_query) . (h^k_i W_key) / sqrt(d), rows x K.
// Bundle rows may stack several windows of N nodes.
Tensor attention_scores(const ArlParams& params, const RelationBundle& bundle);

// Softmax over the present channels; needs K >= 2.
Tensor attention_coeffs(const ArlParams& params, const RelationBundle& bundle);

// z_i = concat_k p_ik (h^k_i W_value).
FusedRepresentation fuse(const ArlParams& params, const RelationBundle& bundle, const Tensor& p);

// Plain concatenation of the value projections (the ablation without attention).
Tensor fuse_concat(const ArlParams& params, const RelationBundle& bundle);

}  // namespace a2gnn
