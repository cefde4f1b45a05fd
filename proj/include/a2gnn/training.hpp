#pragma once

#include "a2gnn/config.hpp"
#include "a2gnn/dataio.hpp"
#include "a2gnn/metrics.hpp"
#include "a2gnn/model.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace a2gnn {

struct AdamMoments {
    std::vector<double> m;
    std::vector<double> v;
};

struct AdamState {
    std::uint64_t step = 0;
    std::map<std::string, AdamMoments> moments;  // one pair per parameter name
};

struct AdamConfig {
    double lr_graph = 0.01;
    double lr_other = 0.001;
    double clip = 5.0;  // global gradient-norm bound; <= 0 disables clipping
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamConfig from(const RunConfig& cfg) { return {cfg.lr_agl, cfg.lr_other, cfg.clip}; }
};

struct AdamReport {
    double grad_norm = 0.0;  // before clipping
    double clip_scale = 1.0;
};

// Global-norm clipping followed by one bias-corrected Adam update, reading
// each parameter's accumulated gradient. Graph-learner logits use lr_graph.
// Non-finite gradients throw NumericError before anything is modified.
AdamReport adam_step(const std::vector<NamedParameter>& params, AdamState& state, const AdamConfig& cfg);

// Parameters, optimizer moments and the data statistics needed to reuse a model.
struct ModelState {
    RunConfig config;
    Model model;
    AdamState adam;
    NormStats norm;

    ModelState snapshot() const;
};

struct TrainingData {
    SeriesDataset dataset;  // split and normalized
    PredefinedGraph predefined;
};

// Loads, splits and normalizes the series named by the config, plus the
// optional predefined adjacency.
TrainingData load_training_data(const RunConfig& cfg);
// Splits/normalizes an in-memory series with the config's window and ratio settings.
TrainingData prepare_training_data(const RunConfig& cfg, SeriesDataset series,
                                   PredefinedGraph predefined = {});

ModelState init_state(const RunConfig& cfg, const TrainingData& data);

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;  // mean batch RMSE, normalized scale
    MetricReport valid;
};

struct TrainResult {
    ModelState best;  // lowest validation RMSE
    ModelState last;
    std::size_t best_epoch = 0;
    std::vector<EpochRecord> history;
    MetricReport test;  // best state on the test split
    bool diverged = false;
    std::string diagnostic;
};

using EpochCallback = std::function<void(const EpochRecord&, const ModelState&)>;

TrainResult train(const RunConfig& cfg, const TrainingData& data, const EpochCallback& on_epoch = {});

struct Predictions {
    std::size_t windows = 0;
    std::size_t horizon = 0;
    std::size_t nodes = 0;
    std::vector<double> normalized;  // windows x horizon x nodes
    std::vector<double> denormalized;
    Tensor mean_attention;  // N x K averaged over windows; undefined without attention
};

// Inference-mode forward over every window, batched, without a tape.
Predictions predict(const ModelState& state, const WindowSet& windows, std::size_t batch_size = 64);

MetricReport evaluate(const ModelState& state, const SeriesDataset& dataset, Split split);

// Inference-mode RMSE on the normalized scale over a split (training-fit checks).
double normalized_rmse(const ModelState& state, const SeriesDataset& dataset, Split split);

// Mean learned logit on true edges minus mean logit on non-edges (off-diagonal).
double edge_separation(const Model& model, const std::vector<std::uint8_t>& true_graph);

// Fraction of top-C inferred neighbours that are true edges, pooled over nodes.
double precision_at_c(const Model& model, const std::vector<std::uint8_t>& true_graph);

}  // namespace a2gnn
