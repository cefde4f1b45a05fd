#include "a2gnn/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace a2gnn {

namespace {

// Accumulates the pooled metrics of one slice of the forecast tensor.
struct Pool {
    double n = 0.0;
    double sum_y = 0.0;
    double sq_err = 0.0;
    double abs_err = 0.0;
    double ape = 0.0;
    double ape_n = 0.0;

    void add(double y, double yhat) {
        const double e = y - yhat;
        n += 1.0;
        sum_y += y;
        sq_err += e * e;
        abs_err += std::abs(e);
        if (y != 0.0) {
            ape += std::abs(e / y);
            ape_n += 1.0;
        }
    }
};

// Sums for one node's Pearson correlation.
struct PairStats {
    double n = 0.0;
    double sum_y = 0.0;
    double sum_p = 0.0;
    double syy = 0.0;
    double spp = 0.0;
    double syp = 0.0;
};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

MetricReport compute_metrics(std::span<const double> truth, std::span<const double> pred, std::size_t windows,
                             std::size_t horizon, std::size_t nodes) {
    const std::size_t total = windows * horizon * nodes;
    if (truth.size() != total || pred.size() != total) {
        throw std::invalid_argument("compute_metrics: expected " + std::to_string(total) + " values, got " +
                                    std::to_string(truth.size()) + "/" + std::to_string(pred.size()));
    }
    if (windows == 0) {
        throw std::invalid_argument("compute_metrics: no windows to evaluate");
    }
    const auto at = [&](std::size_t b, std::size_t t, std::size_t n) { return (b * horizon + t) * nodes + n; };

    // Slice h < horizon is one forecast step; slice `horizon` pools everything.
    std::vector<Pool> pools(horizon + 1);
    for (std::size_t b = 0; b < windows; ++b) {
        for (std::size_t t = 0; t < horizon; ++t) {
            for (std::size_t n = 0; n < nodes; ++n) {
                const std::size_t k = at(b, t, n);
                pools[t].add(truth[k], pred[k]);
                pools[horizon].add(truth[k], pred[k]);
            }
        }
    }

    // Second pass: centred sums need the means.
    std::vector<double> ss_tot(horizon + 1, 0.0);
    std::vector<std::vector<PairStats>> pairs(horizon + 1, std::vector<PairStats>(nodes));
    for (std::size_t b = 0; b < windows; ++b) {
        for (std::size_t t = 0; t < horizon; ++t) {
            for (std::size_t n = 0; n < nodes; ++n) {
                const std::size_t k = at(b, t, n);
                for (std::size_t slice : {t, horizon}) {
                    const double d = truth[k] - pools[slice].sum_y / pools[slice].n;
                    ss_tot[slice] += d * d;
                    auto& ps = pairs[slice][n];
                    ps.n += 1.0;
                    ps.sum_y += truth[k];
                    ps.sum_p += pred[k];
                }
            }
        }
    }
    for (std::size_t b = 0; b < windows; ++b) {
        for (std::size_t t = 0; t < horizon; ++t) {
            for (std::size_t n = 0; n < nodes; ++n) {
                const std::size_t k = at(b, t, n);
                for (std::size_t slice : {t, horizon}) {
                    auto& ps = pairs[slice][n];
                    const double dy = truth[k] - ps.sum_y / ps.n;
                    const double dp = pred[k] - ps.sum_p / ps.n;
                    ps.syy += dy * dy;
                    ps.spp += dp * dp;
                    ps.syp += dy * dp;
                }
            }
        }
    }

    const auto finish = [&](std::size_t slice) {
        const Pool& p = pools[slice];
        Metrics m;
        m.rse = ss_tot[slice] > 0.0 ? p.sq_err / ss_tot[slice] : kNaN;
        m.mae = p.abs_err / p.n;
        m.rmse = std::sqrt(p.sq_err / p.n);
        m.mape = p.ape_n > 0.0 ? 100.0 * p.ape / p.ape_n : kNaN;
        double corr_sum = 0.0;
        std::size_t used = 0;
        for (const auto& ps : pairs[slice]) {
            if (ps.syy <= 0.0) {
                continue;
            }
            corr_sum += ps.spp > 0.0 ? ps.syp / (std::sqrt(ps.syy) * std::sqrt(ps.spp)) : 0.0;
            ++used;
        }
        m.corr = used > 0 ? corr_sum / static_cast<double>(used) : kNaN;
        return m;
    };

    MetricReport report;
    for (std::size_t t = 0; t < horizon; ++t) {
        report.per_horizon.push_back(finish(t));
    }
    report.overall = finish(horizon);
    return report;
}

std::vector<std::size_t> reporting_horizons(std::size_t t_out) {
    if (t_out == 12) {
        return {3, 6, 12};
    }
    std::vector<std::size_t> all;
    for (std::size_t h = 1; h <= t_out; ++h) {
        all.push_back(h);
    }
    return all;
}

}  // namespace a2gnn
