#include "a2gnn/encoder.hpp"

#include <cmath>

namespace a2gnn {

namespace {

Tensor uniform(std::size_t r, std::size_t c, double bound, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> v(r * c);
    for (double& x : v) {
        x = dist(rng);
    }
    return Tensor::from(r, c, std::move(v), true);
}

void check_shapes(const LstmParams& p, const Tensor& x, const LstmState& s) {
    const std::size_t h = p.hidden();
    if (p.w_ih.rows() != 4 * h || p.w_hh.rows() != 4 * h || p.bias.rows() != 1 || p.bias.cols() != 4 * h) {
        throw DimensionError("lstm: inconsistent parameters w_ih " + p.w_ih.shape().str() + ", w_hh " +
                             p.w_hh.shape().str() + ", bias " + p.bias.shape().str());
    }
    if (x.cols() != p.input_dim()) {
        throw DimensionError("lstm: input " + x.shape().str() + " does not match w_ih " + p.w_ih.shape().str());
    }
    if (s.h.rows() != x.rows() || s.h.cols() != h || s.c.shape() != s.h.shape()) {
        throw DimensionError("lstm: state " + s.h.shape().str() + "/" + s.c.shape().str() +
                             " does not match input " + x.shape().str());
    }
}

LstmState step_transposed(const Tensor& w_ih_t, const Tensor& w_hh_t, const Tensor& bias, std::size_t h,
                          const Tensor& x, const LstmState& state) {
    const Tensor gates = ops::add(ops::add(ops::matmul(x, w_ih_t), ops::matmul(state.h, w_hh_t)), bias);
    const Tensor in = ops::sigmoid(ops::slice_cols(gates, 0, h));
    const Tensor forget = ops::sigmoid(ops::slice_cols(gates, h, 2 * h));
    const Tensor cell = ops::tanh(ops::slice_cols(gates, 2 * h, 3 * h));
    const Tensor out = ops::sigmoid(ops::slice_cols(gates, 3 * h, 4 * h));
    Tensor c = ops::add(ops::mul(forget, state.c), ops::mul(in, cell));
    Tensor hn = ops::mul(out, ops::tanh(c));
    return {std::move(hn), std::move(c)};
}

}  // namespace

LstmParams LstmParams::init(std::size_t input_dim, std::size_t hidden, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    LstmParams p;
    p.w_ih = uniform(4 * hidden, input_dim, bound, rng);
    p.w_hh = uniform(4 * hidden, hidden, bound, rng);
    p.bias = Tensor::zeros(1, 4 * hidden, true);
    for (std::size_t j = hidden; j < 2 * hidden; ++j) {
        p.bias.at(0, j) = 1.0;
    }
    return p;
}

LstmParams LstmParams::zeros(std::size_t input_dim, std::size_t hidden) {
    return {Tensor::zeros(4 * hidden, input_dim, true), Tensor::zeros(4 * hidden, hidden, true),
            Tensor::zeros(1, 4 * hidden, true)};
}

LstmState lstm_step(const LstmParams& params, const Tensor& x, const LstmState& state) {
    check_shapes(params, x, state);
    return step_transposed(ops::transpose(params.w_ih), ops::transpose(params.w_hh), params.bias,
                           params.hidden(), x, state);
}

Tensor encode_sequence(const LstmParams& params, std::span<const Tensor> steps) {
    if (steps.empty()) {
        throw DimensionError("encode_sequence: t_in must be at least 1");
    }
    const std::size_t h = params.hidden();
    const std::size_t rows = steps.front().rows();
    LstmState state{Tensor::zeros(rows, h), Tensor::zeros(rows, h)};
    check_shapes(params, steps.front(), state);
    const Tensor w_ih_t = ops::transpose(params.w_ih);
    const Tensor w_hh_t = ops::transpose(params.w_hh);
    std::vector<Tensor> hidden;
    hidden.reserve(steps.size());
    for (const Tensor& x : steps) {
        if (x.rows() != rows || x.cols() != params.input_dim()) {
            throw DimensionError("encode_sequence: step input " + x.shape().str() + " differs from " +
                                 steps.front().shape().str());
        }
        state = step_transposed(w_ih_t, w_hh_t, params.bias, h, x, state);
        hidden.push_back(state.h);
    }
    return hidden.size() == 1 ? hidden.front() : ops::concat_cols(hidden);
}

}  // namespace a2gnn
