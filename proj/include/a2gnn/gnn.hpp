#pragma once

#include "a2gnn/tensor.hpp"

#include <optional>
#include <random>
#include <vector>

namespace a2gnn {

// Own-information perceptron: relu(S W1 + b1) W2 + b2.
struct OwnMlp {
    Tensor w1;  // d_enc x d_h
    Tensor b1;  // 1 x d_h
    Tensor w2;  // d_h x d_h
    Tensor b2;  // 1 x d_h
};

struct GnnParams {
    OwnMlp own;
    std::vector<Tensor> implicit_layers;    // d_enc -> d_h -> ... -> d_h, empty when AGL is off
    std::vector<Tensor> predefined_layers;  // empty when no predefined graph is used

    // Xavier-uniform weights, zero biases.
    static GnnParams init(std::size_t d_enc, std::size_t d_h, std::size_t layers, bool implicit,
                          bool predefined, std::mt19937_64& rng);
};

// Dropout applied after each hidden activation of the propagation stacks.
struct DropoutSpec {
    double rate = 0.0;
    bool training = false;
    std::mt19937_64* rng = nullptr;
};

struct RelationBundle {
    Tensor own;                         // H1
    std::optional<Tensor> implicit;     // H2
    std::optional<Tensor> predefined;   // H3

    // Present channels in fixed order own, implicit, predefined.
    std::vector<Tensor> channels() const;
    std::vector<std::string> channel_names() const;
};

Tensor own_mlp(const OwnMlp& mlp, const Tensor& s);

// H <- relu(adj . H . W_i) for hidden layers, adj . H . W_L for the last.
// S may stack several windows of N rows each; adj acts on every block.
Tensor propagate(const Tensor& s, const Tensor& adj, const std::vector<Tensor>& layers,
                 const DropoutSpec& dropout = {});

// H1 always; H2 when an effective adjacency is supplied; H3 when a
// row-normalized predefined adjacency is supplied.
RelationBundle build_bundle(const GnnParams& params, const Tensor& s, const std::optional<Tensor>& learned_adj,
                            const std::optional<Tensor>& predefined_adj, const DropoutSpec& dropout = {});

}  // namespace a2gnn
