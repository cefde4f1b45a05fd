#include "a2gnn/agl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace a2gnn {

namespace {

void require_nodes(const LearnedGraph& g) {
    if (g.logits.rows() != g.logits.cols()) {
        throw DimensionError("learned graph logits must be square, got " + g.logits.shape().str());
    }
    if (g.nodes() < 2) {
        throw DimensionError("learned graph needs at least 2 nodes to have neighbours");
    }
}

void require_tau(double tau) {
    if (!(tau > 0.0)) {
        throw std::invalid_argument("gumbel temperature must be positive, got " + std::to_string(tau));
    }
}

}  // namespace

ops::Mask LearnedGraph::candidates() const {
    const std::size_t n = nodes();
    ops::Mask mask(n * n, true);
    if (exclude_self) {
        for (std::size_t i = 0; i < n; ++i) {
            mask[i * n + i] = false;
        }
    }
    return mask;
}

LearnedGraph LearnedGraph::init(std::size_t nodes, std::size_t samples, double tau, bool exclude_self,
                                std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, 0.01);
    std::vector<double> v(nodes * nodes);
    for (double& x : v) {
        x = dist(rng);
    }
    return {Tensor::from(nodes, nodes, std::move(v), true), samples, tau, exclude_self};
}

Tensor edge_probs(const LearnedGraph& g) {
    require_nodes(g);
    const auto mask = g.candidates();
    return ops::softmax_rows(g.logits, &mask);
}

Tensor edge_log_probs(const LearnedGraph& g) {
    require_nodes(g);
    const auto mask = g.candidates();
    return ops::log_softmax_rows(g.logits, &mask);
}

Tensor gumbel_noise(std::size_t nodes, const ops::Mask& mask, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double tiny = std::numeric_limits<double>::min();
    std::vector<double> eps(nodes * nodes, 0.0);
    for (std::size_t k = 0; k < eps.size(); ++k) {
        // Drawn for every entry so the stream position does not depend on the mask.
        const double s = std::max(unit(rng), tiny);
        if (mask[k]) {
            eps[k] = -std::log(-std::log(s));
        }
    }
    return Tensor::from(nodes, nodes, std::move(eps));
}

Tensor gumbel_sample_log(const Tensor& log_probs, double tau, const Tensor& noise, const ops::Mask& mask) {
    require_tau(tau);
    if (noise.shape() != log_probs.shape()) {
        throw DimensionError("gumbel noise " + noise.shape().str() + " does not match " +
                             log_probs.shape().str());
    }
    return ops::softmax_rows(ops::scale(ops::add(log_probs, noise), 1.0 / tau), &mask);
}

Tensor gumbel_sample(const Tensor& probs, double tau, const Tensor& noise, const ops::Mask& mask) {
    require_tau(tau);
    if (mask.size() != probs.size()) {
        throw DimensionError("gumbel mask does not match " + probs.shape().str());
    }
    // Masked entries are shifted to 1 so log() stays finite; the softmax ignores them.
    std::vector<double> shift(probs.size(), 0.0);
    for (std::size_t k = 0; k < shift.size(); ++k) {
        if (!mask[k]) {
            shift[k] = 1.0 - probs.values()[k];
        }
    }
    const Tensor log_probs = ops::log(ops::add(probs, Tensor::from(probs.rows(), probs.cols(), std::move(shift))));
    return gumbel_sample_log(log_probs, tau, noise, mask);
}

Tensor gumbel_sample(const Tensor& probs, double tau, const ops::Mask& mask, std::mt19937_64& rng) {
    require_tau(tau);
    if (probs.rows() != probs.cols()) {
        throw DimensionError("gumbel_sample expects a square matrix, got " + probs.shape().str());
    }
    return gumbel_sample(probs, tau, gumbel_noise(probs.rows(), mask, rng), mask);
}

EffectiveAdjacency aggregate_samples(const std::vector<Tensor>& samples) {
    if (samples.empty()) {
        throw std::invalid_argument("aggregate_samples: empty sample list");
    }
    Tensor total = samples.front();
    for (std::size_t c = 1; c < samples.size(); ++c) {
        total = ops::add(total, samples[c]);
    }
    return {ops::normalize_rows(total), Mode::training};
}

EffectiveAdjacency sample_adjacency(const LearnedGraph& g, std::mt19937_64& rng) {
    require_tau(g.tau);
    if (g.samples == 0) {
        throw std::invalid_argument("sample_adjacency: C must be at least 1");
    }
    const auto mask = g.candidates();
    const Tensor log_probs = edge_log_probs(g);
    std::vector<Tensor> draws;
    draws.reserve(g.samples);
    for (std::size_t c = 0; c < g.samples; ++c) {
        draws.push_back(gumbel_sample_log(log_probs, g.tau, gumbel_noise(g.nodes(), mask, rng), mask));
    }
    return aggregate_samples(draws);
}

std::vector<std::size_t> topc_neighbors(const LearnedGraph& g, std::size_t row) {
    require_nodes(g);
    const std::size_t n = g.nodes();
    if (g.samples == 0 || g.samples > g.candidate_count()) {
        throw std::invalid_argument("top-C needs 1 <= C <= " + std::to_string(g.candidate_count()) +
                                    ", got C=" + std::to_string(g.samples));
    }
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < n; ++j) {
        if (!(g.exclude_self && j == row)) {
            idx.push_back(j);
        }
    }
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return g.logits.at(row, a) > g.logits.at(row, b); });
    idx.resize(g.samples);
    return idx;
}

EffectiveAdjacency topc_inference(const LearnedGraph& g) {
    require_nodes(g);
    const std::size_t n = g.nodes();
    Tensor out = Tensor::zeros(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto keep = topc_neighbors(g, i);
        const double top = g.logits.at(i, keep.front());
        double z = 0.0;
        for (std::size_t j : keep) {
            z += std::exp(g.logits.at(i, j) - top);
        }
        for (std::size_t j : keep) {
            out.at(i, j) = std::exp(g.logits.at(i, j) - top) / z;
        }
    }
    return {out, Mode::inference};
}

}  // namespace a2gnn
