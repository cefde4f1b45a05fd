#pragma once

#include "a2gnn/tensor.hpp"

#include <random>
#include <vector>

namespace a2gnn {

enum class Mode { training, inference };

// Trainable edge logits plus the sampling hyper-parameters.
struct LearnedGraph {
    Tensor logits;          // N x N
    std::size_t samples = 1;  // C
    double tau = 0.5;
    bool exclude_self = true;

    std::size_t nodes() const { return logits.rows(); }
    // Candidate neighbour mask: everything except the diagonal when self-loops are excluded.
    ops::Mask candidates() const;
    std::size_t candidate_count() const { return exclude_self ? nodes() - 1 : nodes(); }

    // Logits drawn from Normal(0, 0.01^2).
    static LearnedGraph init(std::size_t nodes, std::size_t samples, double tau, bool exclude_self,
                             std::mt19937_64& rng);
};

// Row-stochastic propagation operator produced by the graph learner.
struct EffectiveAdjacency {
    Tensor weights;  // N x N
    Mode mode = Mode::training;
};

// Sampling probability of each candidate edge: masked row softmax of the logits.
Tensor edge_probs(const LearnedGraph& g);
// log of edge_probs computed stably; masked entries are 0.
Tensor edge_log_probs(const LearnedGraph& g);

// Standard Gumbel noise -log(-log(s)), s ~ U(0, 1); masked entries are 0.
Tensor gumbel_noise(std::size_t nodes, const ops::Mask& mask, std::mt19937_64& rng);

// softmax_j((log pi_ij + eps_ij) / tau) over the candidates of each row.
Tensor gumbel_sample(const Tensor& probs, double tau, const Tensor& noise, const ops::Mask& mask);
Tensor gumbel_sample(const Tensor& probs, double tau, const ops::Mask& mask, std::mt19937_64& rng);
// Same relaxation starting from log-probabilities.
Tensor gumbel_sample_log(const Tensor& log_probs, double tau, const Tensor& noise, const ops::Mask& mask);

// a*_ij = sum_c s^c_ij / sum_c sum_k s^c_ik.
EffectiveAdjacency aggregate_samples(const std::vector<Tensor>& samples);

// Training path: C independent relaxed samples with fresh noise, aggregated.
EffectiveAdjacency sample_adjacency(const LearnedGraph& g, std::mt19937_64& rng);

// Inference path: per row keep the C largest candidate logits (ties broken
// toward the lower node index) and softmax over them. Not differentiable.
EffectiveAdjacency topc_inference(const LearnedGraph& g);

// Indices chosen by topc_inference for one row, best first.
std::vector<std::size_t> topc_neighbors(const LearnedGraph& g, std::size_t row);

}  // namespace a2gnn
