#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace a2gnn {

struct Metrics {
    double rse = 0.0;
    double corr = 0.0;
    double mae = 0.0;
    double rmse = 0.0;
    double mape = 0.0;  // percent
};

struct MetricReport {
    std::vector<Metrics> per_horizon;  // index h is forecast step h + 1
    Metrics overall;
};

// truth / pred are laid out windows x horizon x nodes (row-major), on the
// original scale. Per horizon the metrics pool all windows and nodes.
//   RSE  = sum (y - yhat)^2 / sum (y - mean y)^2
//   CORR = per-node Pearson correlation over windows, averaged over nodes
//          whose truth is not constant (a constant prediction scores 0)
//   MAPE = 100 * mean |(y - yhat) / y| over entries with y != 0
// The overall row pools every horizon the same way.
MetricReport compute_metrics(std::span<const double> truth, std::span<const double> pred,
                             std::size_t windows, std::size_t horizon, std::size_t nodes);

// Horizons printed in reports: {3, 6, 12} for a 12-step forecast, otherwise every step.
std::vector<std::size_t> reporting_horizons(std::size_t t_out);

}  // namespace a2gnn
