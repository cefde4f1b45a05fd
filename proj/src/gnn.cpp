#include "a2gnn/gnn.hpp"

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

std::vector<Tensor> stack(std::size_t d_enc, std::size_t d_h, std::size_t layers, std::mt19937_64& rng) {
    std::vector<Tensor> out;
    for (std::size_t l = 0; l < layers; ++l) {
        out.push_back(xavier(l == 0 ? d_enc : d_h, d_h, rng));
    }
    return out;
}

}  // namespace

GnnParams GnnParams::init(std::size_t d_enc, std::size_t d_h, std::size_t layers, bool implicit,
                          bool predefined, std::mt19937_64& rng) {
    GnnParams p;
    p.own.w1 = xavier(d_enc, d_h, rng);
    p.own.b1 = Tensor::zeros(1, d_h, true);
    p.own.w2 = xavier(d_h, d_h, rng);
    p.own.b2 = Tensor::zeros(1, d_h, true);
    if (implicit) {
        p.implicit_layers = stack(d_enc, d_h, layers, rng);
    }
    if (predefined) {
        p.predefined_layers = stack(d_enc, d_h, layers, rng);
    }
    return p;
}

std::vector<Tensor> RelationBundle::channels() const {
    std::vector<Tensor> out{own};
    if (implicit) {
        out.push_back(*implicit);
    }
    if (predefined) {
        out.push_back(*predefined);
    }
    return out;
}

std::vector<std::string> RelationBundle::channel_names() const {
    std::vector<std::string> out{"own"};
    if (implicit) {
        out.emplace_back("implicit");
    }
    if (predefined) {
        out.emplace_back("predefined");
    }
    return out;
}

Tensor own_mlp(const OwnMlp& mlp, const Tensor& s) {
    if (s.cols() != mlp.w1.rows()) {
        throw DimensionError("own_mlp: input " + s.shape().str() + " vs w1 " + mlp.w1.shape().str());
    }
    const Tensor hidden = ops::relu(ops::add(ops::matmul(s, mlp.w1), mlp.b1));
    return ops::add(ops::matmul(hidden, mlp.w2), mlp.b2);
}

Tensor propagate(const Tensor& s, const Tensor& adj, const std::vector<Tensor>& layers,
                 const DropoutSpec& dropout) {
    if (layers.empty()) {
        throw DimensionError("propagate: at least one layer is required");
    }
    for (double v : adj.values()) {
        if (!std::isfinite(v)) {
            throw NumericError("propagate: adjacency contains a non-finite entry");
        }
    }
    Tensor h = s;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (h.cols() != layers[l].rows()) {
            throw DimensionError("propagate: layer " + std::to_string(l) + " weight " +
                                 layers[l].shape().str() + " vs features " + h.shape().str());
        }
        // adj (H W) == (adj H) W; multiplying by W first keeps the block product narrow.
        h = ops::block_left_matmul(adj, ops::matmul(h, layers[l]));
        if (l + 1 < layers.size()) {
            h = ops::relu(h);
            if (dropout.training && dropout.rate > 0.0) {
                if (dropout.rng == nullptr) {
                    throw std::invalid_argument("propagate: training dropout needs a random stream");
                }
                h = ops::dropout(h, dropout.rate, true, *dropout.rng);
            }
        }
    }
    return h;
}

RelationBundle build_bundle(const GnnParams& params, const Tensor& s, const std::optional<Tensor>& learned_adj,
                            const std::optional<Tensor>& predefined_adj, const DropoutSpec& dropout) {
    RelationBundle bundle{own_mlp(params.own, s), std::nullopt, std::nullopt};
    if (learned_adj) {
        bundle.implicit = propagate(s, *learned_adj, params.implicit_layers, dropout);
    }
    if (predefined_adj) {
        bundle.predefined = propagate(s, *predefined_adj, params.predefined_layers, dropout);
    }
    return bundle;
}

}  // namespace a2gnn
