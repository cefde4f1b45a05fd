#pragma once

#include "a2gnn/tensor.hpp"

#include <random>
#include <span>

namespace a2gnn {

// Single LSTM layer shared by all nodes. Gate blocks along the 4h axis are
// ordered input, forget, cell candidate, output.
struct LstmParams {
    Tensor w_ih;  // 4h x d_in
    Tensor w_hh;  // 4h x h
    Tensor bias;  // 1 x 4h

    std::size_t hidden() const { return w_hh.cols(); }
    std::size_t input_dim() const { return w_ih.cols(); }

    // U(-1/sqrt(h), 1/sqrt(h)) weights, forget-gate bias 1, other biases 0.
    static LstmParams init(std::size_t input_dim, std::size_t hidden, std::mt19937_64& rng);
    static LstmParams zeros(std::size_t input_dim, std::size_t hidden);
};

struct LstmState {
    Tensor h;  // rows x hidden
    Tensor c;
};

LstmState lstm_step(const LstmParams& params, const Tensor& x, const LstmState& state);

// Runs t_in steps from a zero state and concatenates every hidden state:
// S has rows x (t_in * hidden) columns. steps[t] is rows x d_in.
Tensor encode_sequence(const LstmParams& params, std::span<const Tensor> steps);

}  // namespace a2gnn
