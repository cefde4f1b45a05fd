#include "a2gnn/grad_check.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>

namespace a2gnn {

namespace {

double evaluate(const std::function<Tensor()>& f) {
    Tensor out = f();
    if (out.size() != 1) {
        out = ops::sum(out);
    }
    return out.item();
}

}  // namespace

double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h) {
    Tensor input = x;
    input.set_requires_grad(true);
    return grad_check([&] { return f(input); }, {{"x", input}}, h).max_rel_error;
}

GradCheckReport grad_check(const std::function<Tensor()>& f,
                           const std::vector<std::pair<std::string, Tensor>>& params, double h) {
    if (!(h >= 1e-8 && h <= 1e-4)) {
        throw std::invalid_argument("grad_check: step must lie in [1e-8, 1e-4]");
    }
    const double first = evaluate(f);
    const double second = evaluate(f);
    if (std::bit_cast<std::uint64_t>(first) != std::bit_cast<std::uint64_t>(second)) {
        throw ReproducibilityError("grad_check: function is not deterministic under a fixed seed");
    }

    for (auto [name, t] : params) {
        t.set_requires_grad(true);
        t.zero_grad();
    }
    Tensor out = f();
    if (out.size() != 1) {
        out = ops::sum(out);
    }
    backward(out);

    GradCheckReport report;
    for (auto [name, t] : params) {
        const std::vector<double> analytic(t.grad().begin(), t.grad().end());
        auto values = t.mutable_values();
        double worst = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + h;
            const double plus = evaluate(f);
            values[i] = saved - h;
            const double minus = evaluate(f);
            values[i] = saved;
            const double numeric = (plus - minus) / (2.0 * h);
            worst = std::max(worst, std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(numeric)));
        }
        report.per_tensor.emplace_back(name, worst);
        report.max_rel_error = std::max(report.max_rel_error, worst);
    }
    return report;
}

}  // namespace a2gnn
