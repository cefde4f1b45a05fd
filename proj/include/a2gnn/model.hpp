#pragma once

#include "a2gnn/agl.hpp"
#include "a2gnn/arl.hpp"
#include "a2gnn/config.hpp"
#include "a2gnn/dataio.hpp"
#include "a2gnn/encoder.hpp"
#include "a2gnn/gnn.hpp"
#include "a2gnn/tensor.hpp"

#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace a2gnn {

enum class ParamGroup { graph_learner, other };

struct NamedParameter {
    std::string name;
    Tensor value;
    ParamGroup group = ParamGroup::other;
};

// A batch of windows flattened to (B * N) rows, window-major.
struct Batch {
    std::size_t windows = 0;
    std::size_t nodes = 0;
    std::vector<Tensor> steps;         // t_in tensors of (B*N) x 1
    Tensor target;                     // (B*N) x t_out, normalized scale
    std::vector<double> target_raw;    // same layout, original scale
};

Batch make_batch(const WindowSet& windows, std::span<const std::size_t> indices);

// (B*N) x t_out rows back to the windows x horizon x nodes layout.
std::vector<double> to_window_layout(const Tensor& rows, std::size_t windows, std::size_t nodes);

struct ForwardContext {
    Mode mode = Mode::inference;
    std::mt19937_64* gumbel_rng = nullptr;   // required for training mode with AGL
    std::mt19937_64* dropout_rng = nullptr;  // required for training mode with dropout > 0
    bool dropout = true;                     // false disables dropout even in training mode
};

struct ForwardOutput {
    Tensor prediction;  // (B*N) x t_out, normalized scale
    Tensor attention;   // (B*N) x K; undefined when attention is ablated
    std::optional<EffectiveAdjacency> adjacency;
};

// The full forecaster: LSTM encoder, graph learner, relation GNNs,
// attentional fusion and the linear multi-horizon head.
class Model {
public:
    Model() = default;
    // predefined is the raw adjacency; it is row-normalized here and used
    // only when config.use_ap is set.
    Model(const RunConfig& config, std::size_t nodes, const std::optional<Tensor>& predefined,
          std::mt19937_64& init_rng);

    ForwardOutput forward(std::span<const Tensor> steps, const ForwardContext& ctx) const;

    const RunConfig& config() const { return config_; }
    std::size_t nodes() const { return nodes_; }
    std::vector<std::string> channel_names() const;
    bool uses_attention() const { return arl_.has_attention(); }
    bool uses_graph_learner() const { return config_.use_agl; }

    const LstmParams& encoder() const { return lstm_; }
    const LearnedGraph& graph() const { return graph_; }
    const GnnParams& gnn() const { return gnn_; }
    const ArlParams& arl() const { return arl_; }
    const Tensor& head() const { return head_; }
    const std::optional<Tensor>& predefined() const { return predefined_; }
    const std::optional<Tensor>& predefined_raw() const { return predefined_raw_; }

    // Every trainable tensor, in a fixed order. Handles share storage with the model.
    std::vector<NamedParameter> parameters() const;
    // Deep copy with independent parameter storage.
    Model clone() const;

private:
    RunConfig config_;
    std::size_t nodes_ = 0;
    std::optional<Tensor> predefined_;  // row-normalized
    std::optional<Tensor> predefined_raw_;
    LstmParams lstm_;
    LearnedGraph graph_;
    GnnParams gnn_;
    ArlParams arl_;
    Tensor head_;  // (K * d_value) x t_out
};

// sqrt(mean((yhat - y)^2)) over entries with nonzero weight.
Tensor rmse_loss(const Tensor& prediction, const Tensor& target, std::span<const double> weights = {});

// Weight 0 where the original-scale target is exactly zero, 1 elsewhere.
std::vector<double> nonzero_weights(std::span<const double> target_raw);

}  // namespace a2gnn
