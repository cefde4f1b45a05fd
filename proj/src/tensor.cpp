#include "a2gnn/tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

namespace a2gnn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

ConstMap view(const std::vector<double>& v, std::size_t r, std::size_t c) {
    return ConstMap(v.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

MutMap view(std::vector<double>& v, std::size_t r, std::size_t c) {
    return MutMap(v.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

ConstMap view(const ad::Node& n) { return view(n.value, n.shape.rows, n.shape.cols); }
MutMap grad_view(ad::Node& n) { return view(n.grad, n.shape.rows, n.shape.cols); }

// Parent gradient buffers exist only for nodes on the tape.
bool wants(const ad::Node& n) { return n.requires_grad && !n.grad.empty(); }

thread_local bool g_grad_enabled = true;

Tensor make(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
            std::function<void(ad::Node&)> fn) {
    auto node = std::make_shared<ad::Node>();
    node->shape = shape;
    node->value = std::move(value);
    for (const auto& p : parents) {
        if (p.requires_grad() && g_grad_enabled) {
            node->requires_grad = true;
        }
    }
    if (node->requires_grad) {
        node->parents.reserve(parents.size());
        for (const auto& p : parents) {
            node->parents.push_back(p.node());
        }
        node->backward_fn = std::move(fn);
    }
    return Tensor(std::move(node));
}

void require_same(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " +
                             b.shape().str());
    }
}

bool is_row_broadcast(const Tensor& a, const Tensor& b) {
    return b.rows() == 1 && b.cols() == a.cols() && a.rows() != 1;
}

void require_broadcastable(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape() && !is_row_broadcast(a, b)) {
        throw DimensionError(std::string(op) + ": cannot combine " + a.shape().str() + " with " +
                             b.shape().str());
    }
}

template <typename F, typename D>
Tensor unary(const Tensor& a, F f, D dfdx) {
    std::vector<double> out(a.size());
    const auto in = a.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = f(in[i]);
    }
    return make(a.shape(), std::move(out), {a}, [dfdx](ad::Node& self) {
        auto& p = *self.parents[0];
        if (!wants(p)) {
            return;
        }
        for (std::size_t i = 0; i < self.value.size(); ++i) {
            p.grad[i] += self.grad[i] * dfdx(p.value[i], self.value[i]);
        }
    });
}

}  // namespace

namespace ad {

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

}  // namespace ad

std::string Shape::str() const {
    return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols, bool requires_grad) {
    return full(rows, cols, 0.0, requires_grad);
}

Tensor Tensor::full(std::size_t rows, std::size_t cols, double v, bool requires_grad) {
    return from(rows, cols, std::vector<double>(rows * cols, v), requires_grad);
}

Tensor Tensor::from(std::size_t rows, std::size_t cols, std::vector<double> values,
                    bool requires_grad) {
    if (values.size() != rows * cols) {
        throw DimensionError("tensor of shape " + Shape{rows, cols}.str() + " given " +
                             std::to_string(values.size()) + " values");
    }
    auto node = std::make_shared<ad::Node>();
    node->shape = {rows, cols};
    node->value = std::move(values);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::from_rows(const std::vector<std::vector<double>>& rows, bool requires_grad) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.front().size();
    std::vector<double> v;
    v.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) {
            throw DimensionError("ragged rows in tensor literal");
        }
        v.insert(v.end(), row.begin(), row.end());
    }
    return from(r, c, std::move(v), requires_grad);
}

Tensor Tensor::scalar(double v, bool requires_grad) { return from(1, 1, {v}, requires_grad); }

Tensor Tensor::eye(std::size_t n) {
    auto t = zeros(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        t.at(i, i) = 1.0;
    }
    return t;
}

double Tensor::item() const {
    if (size() != 1) {
        throw DimensionError("item() on non-scalar tensor " + shape().str());
    }
    return node_->value[0];
}

void Tensor::zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

Tensor Tensor::detach() const { return from(rows(), cols(), node_->value, false); }

Tape::Tape(const Tensor& root) {
    // Iterative post-order DFS over nodes that take part in differentiation.
    std::unordered_set<const ad::Node*> seen;
    std::vector<std::pair<ad::Node*, std::size_t>> stack;
    stack.emplace_back(root.node().get(), 0);
    seen.insert(root.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            ad::Node* parent = node->parents[next++].get();
            if (parent->requires_grad && seen.insert(parent).second) {
                stack.emplace_back(parent, 0);
            }
            continue;
        }
        order_.push_back(node);
        stack.pop_back();
    }
}

void backward(const Tensor& loss) {
    if (!loss.defined()) {
        throw std::logic_error("backward: undefined loss");
    }
    if (loss.size() != 1) {
        throw DimensionError("backward: loss must be scalar, got " + loss.shape().str());
    }
    if (loss.node()->consumed) {
        throw std::logic_error("backward: already run on this loss; rebuild the forward pass");
    }
    if (!loss.requires_grad()) {
        throw std::logic_error("backward: loss is detached from every trainable tensor");
    }
    const Tape tape(loss);
    for (ad::Node* n : tape.order()) {
        if (n->backward_fn) {
            n->grad.assign(n->value.size(), 0.0);
        } else if (n->grad.size() != n->value.size()) {
            n->grad.assign(n->value.size(), 0.0);
        }
    }
    loss.node()->grad[0] += 1.0;
    const auto& order = tape.order();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->backward_fn) {
            (*it)->backward_fn(**it);
        }
    }
    for (ad::Node* n : order) {
        if (n->backward_fn) {
            n->backward_fn = nullptr;
            n->parents.clear();
        }
    }
    loss.node()->consumed = true;
}

namespace ops {

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: inner dimensions differ, " + a.shape().str() + " x " +
                             b.shape().str());
    }
    std::vector<double> out(a.rows() * b.cols());
    view(out, a.rows(), b.cols()).noalias() = view(*a.node()) * view(*b.node());
    return make({a.rows(), b.cols()}, std::move(out), {a, b}, [](ad::Node& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        const auto g = grad_view(self);
        if (wants(pa)) {
            grad_view(pa).noalias() += g * view(pb).transpose();
        }
        if (wants(pb)) {
            grad_view(pb).noalias() += view(pa).transpose() * g;
        }
    });
}

Tensor transpose(const Tensor& a) {
    std::vector<double> out(a.size());
    view(out, a.cols(), a.rows()) = view(*a.node()).transpose();
    return make({a.cols(), a.rows()}, std::move(out), {a}, [](ad::Node& self) {
        auto& p = *self.parents[0];
        if (wants(p)) {
            grad_view(p) += grad_view(self).transpose();
        }
    });
}

namespace {

// Shared kernel for add/sub/mul with optional row broadcast of b.
template <typename F, typename DA, typename DB>
Tensor binary(const Tensor& a, const Tensor& b, const char* name, F f, DA dfa, DB dfb) {
    require_broadcastable(a, b, name);
    const bool bcast = is_row_broadcast(a, b);
    const std::size_t cols = a.cols();
    std::vector<double> out(a.size());
    const auto av = a.values();
    const auto bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = f(av[i], bv[bcast ? i % cols : i]);
    }
    return make(a.shape(), std::move(out), {a, b}, [bcast, cols, dfa, dfb](ad::Node& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        const bool ga = wants(pa);
        const bool gb = wants(pb);
        for (std::size_t i = 0; i < self.value.size(); ++i) {
            const std::size_t j = bcast ? i % cols : i;
            if (ga) {
                pa.grad[i] += self.grad[i] * dfa(pa.value[i], pb.value[j]);
            }
            if (gb) {
                pb.grad[j] += self.grad[i] * dfb(pa.value[i], pb.value[j]);
            }
        }
    });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return binary(
        a, b, "add", [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
        [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary(
        a, b, "sub", [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
        [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary(
        a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y) { return y; },
        [](double x, double) { return x; });
}

Tensor scale(const Tensor& a, double s) {
    return unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Tensor add_scalar(const Tensor& a, double s) {
    return unary(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Tensor tanh(const Tensor& a) {
    return unary(
        a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
    return unary(
        a,
        [](double x) {
            if (x >= 0) {
                return 1.0 / (1.0 + std::exp(-x));
            }
            const double e = std::exp(x);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(const Tensor& a) {
    return unary(
        a, [](double x) { return x > 0 ? x : 0.0; },
        [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Tensor exp(const Tensor& a) {
    return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
    for (double v : a.values()) {
        if (!(v > 0.0)) {
            throw NumericError("log: non-positive input " + std::to_string(v));
        }
    }
    return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor sqrt(const Tensor& a) {
    for (double v : a.values()) {
        if (v < 0.0) {
            throw NumericError("sqrt: negative input " + std::to_string(v));
        }
    }
    // Subgradient 0 at the origin keeps a perfect fit from producing inf.
    return unary(
        a, [](double x) { return std::sqrt(x); },
        [](double, double y) { return y > 0 ? 0.5 / y : 0.0; });
}

Tensor square(const Tensor& a) {
    return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

namespace {

void require_mask(const Tensor& x, const Mask* mask, const char* op) {
    if (mask != nullptr && mask->size() != x.size()) {
        throw DimensionError(std::string(op) + ": mask has " + std::to_string(mask->size()) +
                             " entries for " + x.shape().str());
    }
}

bool active(const Mask* mask, std::size_t i) { return mask == nullptr || (*mask)[i]; }

// Per-row max and log-sum-exp over unmasked entries.
std::pair<std::vector<double>, std::vector<double>> row_lse(const Tensor& x, const Mask* mask,
                                                            const char* op) {
    const std::size_t r = x.rows();
    const std::size_t c = x.cols();
    const auto v = x.values();
    std::vector<double> mx(r, -std::numeric_limits<double>::infinity());
    std::vector<double> lse(r, 0.0);
    for (std::size_t i = 0; i < r; ++i) {
        bool any = false;
        for (std::size_t j = 0; j < c; ++j) {
            if (active(mask, i * c + j)) {
                mx[i] = std::max(mx[i], v[i * c + j]);
                any = true;
            }
        }
        if (!any) {
            throw NumericError(std::string(op) + ": row " + std::to_string(i) +
                               " has no unmasked entry (degenerate row)");
        }
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            if (active(mask, i * c + j)) {
                s += std::exp(v[i * c + j] - mx[i]);
            }
        }
        lse[i] = std::log(s);
    }
    return {std::move(mx), std::move(lse)};
}

}  // namespace

Tensor softmax_rows(const Tensor& x, const Mask* mask) {
    require_mask(x, mask, "softmax_rows");
    const std::size_t r = x.rows();
    const std::size_t c = x.cols();
    const auto [mx, lse] = row_lse(x, mask, "softmax_rows");
    const auto v = x.values();
    std::vector<double> out(x.size(), 0.0);
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            const std::size_t k = i * c + j;
            if (active(mask, k)) {
                out[k] = std::exp(v[k] - mx[i] - lse[i]);
            }
        }
    }
    return make(x.shape(), std::move(out), {x}, [r, c](ad::Node& self) {
        auto& p = *self.parents[0];
        if (!wants(p)) {
            return;
        }
        for (std::size_t i = 0; i < r; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
                dot += self.grad[i * c + j] * self.value[i * c + j];
            }
            for (std::size_t j = 0; j < c; ++j) {
                const std::size_t k = i * c + j;
                p.grad[k] += self.value[k] * (self.grad[k] - dot);
            }
        }
    });
}

Tensor log_softmax_rows(const Tensor& x, const Mask* mask) {
    require_mask(x, mask, "log_softmax_rows");
    const std::size_t r = x.rows();
    const std::size_t c = x.cols();
    const auto [mx, lse] = row_lse(x, mask, "log_softmax_rows");
    const auto v = x.values();
    std::vector<double> out(x.size(), 0.0);
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            const std::size_t k = i * c + j;
            if (active(mask, k)) {
                out[k] = v[k] - mx[i] - lse[i];
            }
        }
    }
    Mask m = mask != nullptr ? *mask : Mask(x.size(), true);
    return make(x.shape(), std::move(out), {x}, [r, c, m = std::move(m)](ad::Node& self) {
        auto& p = *self.parents[0];
        if (!wants(p)) {
            return;
        }
        for (std::size_t i = 0; i < r; ++i) {
            double gsum = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
                if (m[i * c + j]) {
                    gsum += self.grad[i * c + j];
                }
            }
            for (std::size_t j = 0; j < c; ++j) {
                const std::size_t k = i * c + j;
                if (m[k]) {
                    p.grad[k] += self.grad[k] - std::exp(self.value[k]) * gsum;
                }
            }
        }
    });
}

Tensor normalize_rows(const Tensor& x) {
    const std::size_t r = x.rows();
    const std::size_t c = x.cols();
    const auto v = x.values();
    std::vector<double> sums(r, 0.0);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            sums[i] += v[i * c + j];
        }
        if (sums[i] == 0.0 || !std::isfinite(sums[i])) {
            throw NumericError("normalize_rows: row " + std::to_string(i) + " sums to " +
                               std::to_string(sums[i]));
        }
        for (std::size_t j = 0; j < c; ++j) {
            out[i * c + j] = v[i * c + j] / sums[i];
        }
    }
    return make(x.shape(), std::move(out), {x}, [r, c, sums](ad::Node& self) {
        auto& p = *self.parents[0];
        if (!wants(p)) {
            return;
        }
        for (std::size_t i = 0; i < r; ++i) {
            // d(x_j/s)/dx_k = delta_jk/s - x_j/s^2
            double dot = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
                dot += self.grad[i * c + j] * self.value[i * c + j];
            }
            for (std::size_t j = 0; j < c; ++j) {
                p.grad[i * c + j] += (self.grad[i * c + j] - dot) / sums[i];
            }
        }
    });
}

Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (double v : a.values()) {
        s += v;
    }
    return make({1, 1}, {s}, {a}, [](ad::Node& self) {
        auto& p = *self.parents[0];
        if (!wants(p)) {
            return;
        }
        for (double& g : p.grad) {
            g += self.grad[0];
        }
    });
}

Tensor mean(const Tensor& a) {
    if (a.size() == 0) {
        throw DimensionError("mean of empty tensor");
    }
    return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor weighted_mean(const Tensor& a, std::span<const double> weights) {
    if (weights.size() != a.size()) {
        throw DimensionError("weighted_mean: " + std::to_string(weights.size()) +
                             " weights for " + a.shape().str());
    }
    double wsum = 0.0;
    double s = 0.0;
    const auto v = a.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        wsum += weights[i];
        s += weights[i] * v[i];
    }
    if (wsum <= 0.0) {
        throw NumericError("weighted_mean: total weight is zero");
    }
    std::vector<double> w(weights.begin(), weights.end());
    return make({1, 1}, {s / wsum}, {a}, [w = std::move(w), wsum](ad::Node& self) {
        auto& p = *self.parents[0];
        if (!wants(p)) {
            return;
        }
        for (std::size_t i = 0; i < w.size(); ++i) {
            p.grad[i] += self.grad[0] * w[i] / wsum;
        }
    });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) {
        throw DimensionError("concat_cols: no inputs");
    }
    const std::size_t r = parts.front().rows();
    std::vector<std::size_t> offsets;
    std::size_t total = 0;
    for (const auto& p : parts) {
        if (p.rows() != r) {
            throw DimensionError("concat_cols: row mismatch " + parts.front().shape().str() +
                                 " vs " + p.shape().str());
        }
        offsets.push_back(total);
        total += p.cols();
    }
    std::vector<double> out(r * total);
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const auto v = parts[k].values();
        const std::size_t c = parts[k].cols();
        for (std::size_t i = 0; i < r; ++i) {
            std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(i * c), c,
                        out.begin() + static_cast<std::ptrdiff_t>(i * total + offsets[k]));
        }
    }
    return make({r, total}, std::move(out), parts, [offsets, total, r](ad::Node& self) {
        for (std::size_t k = 0; k < self.parents.size(); ++k) {
            auto& p = *self.parents[k];
            if (!wants(p)) {
                continue;
            }
            const std::size_t c = p.shape.cols;
            for (std::size_t i = 0; i < r; ++i) {
                for (std::size_t j = 0; j < c; ++j) {
                    p.grad[i * c + j] += self.grad[i * total + offsets[k] + j];
                }
            }
        }
    });
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
    if (begin > end || end > a.cols()) {
        throw DimensionError("slice_cols: [" + std::to_string(begin) + ", " + std::to_string(end) +
                             ") out of range for " + a.shape().str());
    }
    const std::size_t r = a.rows();
    const std::size_t c = a.cols();
    const std::size_t w = end - begin;
    std::vector<double> out(r * w);
    const auto v = a.values();
    for (std::size_t i = 0; i < r; ++i) {
        std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(i * c + begin), w,
                    out.begin() + static_cast<std::ptrdiff_t>(i * w));
    }
    return make({r, w}, std::move(out), {a}, [r, c, w, begin](ad::Node& self) {
        auto& p = *self.parents[0];
        if (!wants(p)) {
            return;
        }
        for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < w; ++j) {
                p.grad[i * c + begin + j] += self.grad[i * w + j];
            }
        }
    });
}

Tensor block_left_matmul(const Tensor& adj, const Tensor& x) {
    const std::size_t n = adj.rows();
    if (adj.cols() != n || n == 0 || x.rows() % n != 0) {
        throw DimensionError("block_left_matmul: operator " + adj.shape().str() +
                             " incompatible with " + x.shape().str());
    }
    const std::size_t blocks = x.rows() / n;
    const std::size_t d = x.cols();
    std::vector<double> out(x.size());
    const auto op = view(*adj.node());
    for (std::size_t b = 0; b < blocks; ++b) {
        ConstMap xb(x.values().data() + b * n * d, static_cast<Eigen::Index>(n),
                    static_cast<Eigen::Index>(d));
        MutMap yb(out.data() + b * n * d, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
        yb.noalias() = op * xb;
    }
    return make(x.shape(), std::move(out), {adj, x}, [n, d, blocks](ad::Node& self) {
        auto& pa = *self.parents[0];
        auto& px = *self.parents[1];
        const bool ga = wants(pa);
        const bool gx = wants(px);
        for (std::size_t b = 0; b < blocks; ++b) {
            const auto off = static_cast<std::ptrdiff_t>(b * n * d);
            ConstMap gb(self.grad.data() + off, static_cast<Eigen::Index>(n),
                        static_cast<Eigen::Index>(d));
            if (ga) {
                ConstMap xb(px.value.data() + off, static_cast<Eigen::Index>(n),
                            static_cast<Eigen::Index>(d));
                grad_view(pa).noalias() += gb * xb.transpose();
            }
            if (gx) {
                MutMap gxb(px.grad.data() + off, static_cast<Eigen::Index>(n),
                           static_cast<Eigen::Index>(d));
                gxb.noalias() += view(pa).transpose() * gb;
            }
        }
    });
}

Tensor tile_rows(const Tensor& a, std::size_t reps) {
    const std::size_t n = a.size();
    std::vector<double> out;
    out.reserve(n * reps);
    for (std::size_t k = 0; k < reps; ++k) {
        out.insert(out.end(), a.values().begin(), a.values().end());
    }
    return make({a.rows() * reps, a.cols()}, std::move(out), {a}, [n, reps](ad::Node& self) {
        auto& p = *self.parents[0];
        if (!wants(p)) {
            return;
        }
        for (std::size_t k = 0; k < reps; ++k) {
            for (std::size_t i = 0; i < n; ++i) {
                p.grad[i] += self.grad[k * n + i];
            }
        }
    });
}

Tensor rowwise_dot(const Tensor& a, const Tensor& b) {
    require_same(a, b, "rowwise_dot");
    const std::size_t r = a.rows();
    const std::size_t c = a.cols();
    std::vector<double> out(r, 0.0);
    const auto av = a.values();
    const auto bv = b.values();
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            out[i] += av[i * c + j] * bv[i * c + j];
        }
    }
    return make({r, 1}, std::move(out), {a, b}, [r, c](ad::Node& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        const bool ga = wants(pa);
        const bool gb = wants(pb);
        for (std::size_t i = 0; i < r; ++i) {
            const double g = self.grad[i];
            for (std::size_t j = 0; j < c; ++j) {
                const std::size_t k = i * c + j;
                if (ga) {
                    pa.grad[k] += g * pb.value[k];
                }
                if (gb) {
                    pb.grad[k] += g * pa.value[k];
                }
            }
        }
    });
}

Tensor scale_rows(const Tensor& x, const Tensor& col) {
    if (col.rows() != x.rows() || col.cols() != 1) {
        throw DimensionError("scale_rows: factor " + col.shape().str() + " for " + x.shape().str());
    }
    const std::size_t r = x.rows();
    const std::size_t c = x.cols();
    std::vector<double> out(x.size());
    const auto xv = x.values();
    const auto cv = col.values();
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            out[i * c + j] = xv[i * c + j] * cv[i];
        }
    }
    return make(x.shape(), std::move(out), {x, col}, [r, c](ad::Node& self) {
        auto& px = *self.parents[0];
        auto& pc = *self.parents[1];
        const bool gx = wants(px);
        const bool gc = wants(pc);
        for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                const std::size_t k = i * c + j;
                if (gx) {
                    px.grad[k] += self.grad[k] * pc.value[i];
                }
                if (gc) {
                    pc.grad[i] += self.grad[k] * px.value[k];
                }
            }
        }
    });
}

Tensor dropout(const Tensor& x, double rate, bool training, std::mt19937_64& rng) {
    if (rate < 0.0 || rate >= 1.0) {
        throw std::invalid_argument("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
    }
    if (!training || rate == 0.0) {
        return x;
    }
    std::bernoulli_distribution keep(1.0 - rate);
    const double s = 1.0 / (1.0 - rate);
    std::vector<double> factor(x.size());
    for (double& f : factor) {
        f = keep(rng) ? s : 0.0;
    }
    return mul(x, Tensor::from(x.rows(), x.cols(), std::move(factor)));
}

}  // namespace ops
}  // namespace a2gnn
