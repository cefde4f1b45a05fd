#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace a2gnn {

// Raised for every shape contract violation in the tensor layer.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Raised when a numeric precondition fails (degenerate rows, non-finite values, ...).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Shape {
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::size_t size() const { return rows * cols; }
    bool operator==(const Shape&) const = default;
    std::string str() const;
};

namespace ad {

// One vertex of the computation graph. Values are row-major fp64.
struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;
    bool consumed = false;  // set on the root once backward() ran on it
    std::vector<std::shared_ptr<Node>> parents;
    // Accumulates this->grad into the parents' grad buffers.
    std::function<void(Node&)> backward_fn;
};

// While alive, ops on this thread record no tape (evaluation passes).
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_enabled();

}  // namespace ad

// Handle to a dense 2-D fp64 array with optional gradient tape linkage.
// Copies share the underlying node; use clone() for a deep copy.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<ad::Node> node) : node_(std::move(node)) {}

    static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false);
    static Tensor full(std::size_t rows, std::size_t cols, double v, bool requires_grad = false);
    static Tensor from(std::size_t rows, std::size_t cols, std::vector<double> values,
                       bool requires_grad = false);
    static Tensor from_rows(const std::vector<std::vector<double>>& rows, bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);
    static Tensor eye(std::size_t n);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t rows() const { return node_->shape.rows; }
    std::size_t cols() const { return node_->shape.cols; }
    std::size_t size() const { return node_->shape.size(); }

    std::span<const double> values() const { return node_->value; }
    std::span<double> mutable_values() { return node_->value; }
    double at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }
    double& at(std::size_t r, std::size_t c) { return node_->value[r * cols() + c]; }
    double item() const;

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool on) { node_->requires_grad = on; }
    bool has_grad() const { return !node_->grad.empty(); }
    std::span<const double> grad() const { return node_->grad; }
    std::span<double> mutable_grad() { return node_->grad; }
    void zero_grad();

    // Deep copy of the values only, detached from any graph.
    Tensor detach() const;
    Tensor clone() const { return detach(); }

    const std::shared_ptr<ad::Node>& node() const { return node_; }

private:
    std::shared_ptr<ad::Node> node_;
};

// Ordered record of the operations reachable from a root, parents before children.
class Tape {
public:
    explicit Tape(const Tensor& root);
    const std::vector<ad::Node*>& order() const { return order_; }
    std::size_t size() const { return order_.size(); }

private:
    std::vector<ad::Node*> order_;
};

// Reverse-mode sweep from a scalar loss. Leaf gradients accumulate; the tape
// is released afterwards, so a second call on the same loss throws.
void backward(const Tensor& loss);

namespace ops {

// Boolean mask where true marks an entry that takes part in the computation.
using Mask = std::vector<bool>;

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// Elementwise; b may also be a 1 x cols row vector broadcast over rows.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);

Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor square(const Tensor& a);

// Row-wise softmax restricted to unmasked entries; masked outputs are exactly 0.
Tensor softmax_rows(const Tensor& x, const Mask* mask = nullptr);
// Row-wise log-softmax; masked outputs are 0 and carry no gradient.
Tensor log_softmax_rows(const Tensor& x, const Mask* mask = nullptr);
// Divides each row by its sum.
Tensor normalize_rows(const Tensor& x);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// Weighted mean sum(w*a)/sum(w) with constant weights.
Tensor weighted_mean(const Tensor& a, std::span<const double> weights);

Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end);

// Applies an n x n operator to each consecutive n-row block of x.
Tensor block_left_matmul(const Tensor& adj, const Tensor& x);
// Stacks `reps` copies of a vertically.
Tensor tile_rows(const Tensor& a, std::size_t reps);
// Row-wise dot product, result is rows x 1.
Tensor rowwise_dot(const Tensor& a, const Tensor& b);
// Multiplies row r of x by col(r, 0).
Tensor scale_rows(const Tensor& x, const Tensor& col);

// Inverted dropout. Identity when !training or rate == 0.
Tensor dropout(const Tensor& x, double rate, bool training, std::mt19937_64& rng);

}  // namespace ops
}  // namespace a2gnn
