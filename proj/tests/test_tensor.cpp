#include <doctest.h>

#include "a2gnn/grad_check.hpp"
#include "a2gnn/tensor.hpp"

#include <cmath>
#include <random>

using namespace a2gnn;

namespace {

Tensor random_tensor(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    std::vector<double> v(r * c);
    for (double& x : v) {
        x = dist(rng);
    }
    return Tensor::from(r, c, std::move(v));
}

void check_close(const Tensor& t, const std::vector<std::vector<double>>& expected, double tol = 1e-12) {
    REQUIRE(t.rows() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
        REQUIRE(t.cols() == expected[i].size());
        for (std::size_t j = 0; j < expected[i].size(); ++j) {
            CHECK(t.at(i, j) == doctest::Approx(expected[i][j]).epsilon(tol));
        }
    }
}

// Random composition of unary primitives; depth in [1, 6].
Tensor random_chain(const Tensor& x, std::uint64_t seed, const std::vector<Tensor>& constants) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, 11);
    const int depth = 1 + static_cast<int>(seed % 6);
    Tensor h = x;
    for (int d = 0; d < depth; ++d) {
        switch (pick(rng)) {
            case 0: h = ops::matmul(h, constants[0]); break;
            case 1: h = ops::tanh(h); break;
            case 2: h = ops::sigmoid(h); break;
            case 3: h = ops::softmax_rows(h); break;
            case 4: h = ops::exp(ops::scale(h, 0.3)); break;
            case 5: h = ops::mul(h, ops::tanh(h)); break;
            case 6: h = ops::add(h, constants[1]); break;
            case 7: h = ops::log(ops::add_scalar(ops::square(h), 1.0)); break;
            case 8: h = ops::concat_cols({h, ops::scale(h, -0.5)}); h = ops::slice_cols(h, 1, 4); break;
            case 9: h = ops::rowwise_dot(h, ops::sigmoid(h)); h = ops::tile_rows(ops::transpose(h), 3); break;
            case 10: h = ops::normalize_rows(ops::exp(h)); break;
            default: h = ops::scale_rows(h, ops::slice_cols(ops::tanh(h), 0, 1)); break;
        }
    }
    return ops::sum(h);
}

}  // namespace

TEST_CASE("matmul identity and projector") {
    const auto m = Tensor::from_rows({{1, 2}, {3, 4}});
    check_close(ops::matmul(Tensor::eye(2), m), {{1, 2}, {3, 4}});
    const auto p = Tensor::from_rows({{1, 0}, {0, 0}});
    check_close(ops::matmul(p, Tensor::from_rows({{5, 6}, {7, 8}})), {{5, 6}, {0, 0}});
}

TEST_CASE("matmul shape mismatch names both shapes") {
    const auto a = Tensor::zeros(2, 3);
    const auto b = Tensor::zeros(2, 3);
    try {
        ops::matmul(a, b);
        FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("[2x3]") != std::string::npos);
        CHECK(msg.find("[2x3] x [2x3]") != std::string::npos);
    }
}

TEST_CASE("matmul gradient matches central differences") {
    std::mt19937_64 rng(3);
    const auto a = random_tensor(3, 4, rng);
    const auto b = random_tensor(4, 2, rng);
    CHECK(grad_check([&](const Tensor& x) { return ops::sum(ops::matmul(x, b)); }, a) <= 1e-5);
    CHECK(grad_check([&](const Tensor& x) { return ops::sum(ops::matmul(a, x)); }, b) <= 1e-5);
}

TEST_CASE("softmax rows examples") {
    const auto y = ops::softmax_rows(Tensor::from_rows({{0, 0, std::log(2.0)}}));
    check_close(y, {{0.25, 0.25, 0.5}});
    const auto u = ops::softmax_rows(Tensor::full(1, 4, 7.5));
    check_close(u, {{0.25, 0.25, 0.25, 0.25}});
}

TEST_CASE("softmax masked entries are exactly zero") {
    const ops::Mask mask{false, true, true, true, false, true};
    const auto y = ops::softmax_rows(Tensor::from_rows({{9, 1, 2}, {3, 100, 4}}), &mask);
    CHECK(y.at(0, 0) == 0.0);
    CHECK(y.at(1, 1) == 0.0);
    CHECK(y.at(0, 1) + y.at(0, 2) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("softmax fully masked row is degenerate") {
    const ops::Mask mask{false, false, true, true};
    CHECK_THROWS_AS(ops::softmax_rows(Tensor::zeros(2, 2), &mask), NumericError);
}

TEST_CASE("softmax jacobian matches finite differences") {
    std::mt19937_64 rng(11);
    const auto x = random_tensor(3, 5, rng, 2.0);
    const auto w = random_tensor(3, 5, rng);
    const ops::Mask mask{true, false, true, true, true, true, true, false, true, true,
                         true, true, true, true, false};
    CHECK(grad_check([&](const Tensor& t) { return ops::sum(ops::mul(ops::softmax_rows(t), w)); },
                     x) <= 1e-5);
    CHECK(grad_check([&](const Tensor& t) { return ops::sum(ops::mul(ops::softmax_rows(t, &mask), w)); },
                     x) <= 1e-5);
    CHECK(grad_check(
              [&](const Tensor& t) { return ops::sum(ops::mul(ops::log_softmax_rows(t, &mask), w)); },
              x) <= 1e-5);
}

TEST_CASE("softmax rows sum to one for extreme inputs") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto x = random_tensor(4, 7, rng, 300.0);
        const auto y = ops::softmax_rows(x);
        for (std::size_t i = 0; i < y.rows(); ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < y.cols(); ++j) {
                CHECK(std::isfinite(y.at(i, j)));
                s += y.at(i, j);
            }
            CHECK(std::abs(s - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("backward of sum gives ones") {
    auto x = Tensor::from(2, 3, {1, 2, 3, 4, 5, 6}, true);
    backward(ops::sum(x));
    for (double g : x.grad()) {
        CHECK(g == 1.0);
    }
}

TEST_CASE("backward of squared sum") {
    auto x = Tensor::from(1, 2, {1, -2}, true);
    backward(ops::sum(ops::mul(x, x)));
    CHECK(x.grad()[0] == 2.0);
    CHECK(x.grad()[1] == -4.0);
}

TEST_CASE("backward error paths") {
    auto x = Tensor::from(1, 2, {1, 2}, true);
    CHECK_THROWS_AS(backward(ops::tanh(x)), DimensionError);
    CHECK_THROWS_AS(backward(ops::sum(Tensor::zeros(2, 2))), std::logic_error);
    const auto loss = ops::sum(ops::square(x));
    backward(loss);
    CHECK_THROWS_AS(backward(loss), std::logic_error);
}

TEST_CASE("backward visits shared subexpressions once per use") {
    auto x = Tensor::from(1, 1, {3.0}, true);
    const auto y = ops::square(x);           // 9
    const auto z = ops::add(y, ops::mul(y, x));  // x^2 + x^3
    backward(ops::sum(z));
    CHECK(x.grad()[0] == doctest::Approx(2 * 3.0 + 3 * 9.0));
}

TEST_CASE("leaf gradients accumulate until reset") {
    auto x = Tensor::from(1, 1, {2.0}, true);
    backward(ops::sum(ops::scale(x, 3.0)));
    backward(ops::sum(ops::scale(x, 3.0)));
    CHECK(x.grad()[0] == 6.0);
    x.zero_grad();
    CHECK(x.grad()[0] == 0.0);
}

TEST_CASE("grad_check identity and tanh") {
    std::mt19937_64 rng(2);
    const auto x = random_tensor(3, 3, rng);
    CHECK(grad_check([](const Tensor& t) { return t; }, x) <= 1e-8);

    auto p = Tensor::scalar(0.5, true);
    backward(ops::tanh(p));
    const double closed = 1.0 - std::tanh(0.5) * std::tanh(0.5);
    CHECK(std::abs(p.grad()[0] - closed) <= 1e-15);
    CHECK(grad_check([](const Tensor& t) { return ops::tanh(t); }, Tensor::scalar(0.5)) <= 1e-7);
}

TEST_CASE("grad_check rejects nondeterministic functions and bad steps") {
    int calls = 0;
    const auto f = [&](const Tensor& t) { return ops::scale(ops::sum(t), 1.0 + 1e-3 * ++calls); };
    CHECK_THROWS_AS(grad_check(f, Tensor::scalar(1.0)), ReproducibilityError);
    CHECK_THROWS_AS(grad_check([](const Tensor& t) { return t; }, Tensor::scalar(1.0), 1e-2),
                    std::invalid_argument);
}

TEST_CASE("primitive gradients") {
    std::mt19937_64 rng(17);
    const auto x = random_tensor(4, 3, rng);
    const auto bias = random_tensor(1, 3, rng);
    const auto adj = random_tensor(2, 2, rng);
    const auto col = random_tensor(4, 1, rng);
    const std::vector<double> weights{1, 0, 2, 1, 1, 0.5, 0, 3, 1, 1, 2, 1};
    CHECK(grad_check([&](const Tensor& t) { return ops::add(t, bias); }, x) <= 1e-6);
    CHECK(grad_check([&](const Tensor& t) { return ops::sum(ops::mul(ops::sub(x, t), x)); }, bias) <= 1e-6);
    CHECK(grad_check([&](const Tensor& t) { return ops::sum(ops::square(ops::add(x, t))); }, bias) <= 1e-6);
    CHECK(grad_check([](const Tensor& t) { return ops::sigmoid(t); }, x) <= 1e-6);
    CHECK(grad_check([](const Tensor& t) { return ops::relu(ops::add_scalar(t, 0.1)); }, x) <= 1e-6);
    CHECK(grad_check([](const Tensor& t) { return ops::sqrt(ops::add_scalar(ops::square(t), 0.5)); }, x) <=
          1e-6);
    CHECK(grad_check([&](const Tensor& t) { return ops::weighted_mean(ops::square(t), weights); }, x) <=
          1e-6);
    CHECK(grad_check([](const Tensor& t) { return ops::normalize_rows(ops::exp(t)); }, x) <= 1e-6);
    CHECK(grad_check([&](const Tensor& t) { return ops::square(ops::block_left_matmul(adj, t)); }, x) <=
          1e-6);
    CHECK(grad_check([&](const Tensor& t) { return ops::square(ops::block_left_matmul(t, x)); }, adj) <=
          1e-6);
    CHECK(grad_check([&](const Tensor& t) { return ops::square(ops::scale_rows(t, col)); }, x) <= 1e-6);
    CHECK(grad_check([&](const Tensor& t) { return ops::square(ops::scale_rows(x, t)); }, col) <= 1e-6);
    CHECK(grad_check([&](const Tensor& t) { return ops::square(ops::rowwise_dot(t, x)); }, x) <= 1e-6);
    CHECK(grad_check([](const Tensor& t) { return ops::square(ops::tile_rows(t, 3)); }, x) <= 1e-6);
    CHECK(grad_check([](const Tensor& t) { return ops::square(ops::transpose(t)); }, x) <= 1e-6);
}

TEST_CASE("block_left_matmul equals per-block products") {
    const auto adj = Tensor::from_rows({{0, 1}, {0.5, 0.5}});
    const auto x = Tensor::from_rows({{1, 2}, {3, 4}, {5, 6}, {7, 8}});
    check_close(ops::block_left_matmul(adj, x), {{3, 4}, {2, 3}, {7, 8}, {6, 7}});
    CHECK_THROWS_AS(ops::block_left_matmul(adj, Tensor::zeros(3, 2)), DimensionError);
}

TEST_CASE("dropout is identity in evaluation and scales kept entries") {
    std::mt19937_64 rng(1);
    const auto x = Tensor::full(50, 20, 1.0);
    const auto eval = ops::dropout(x, 0.3, false, rng);
    CHECK(eval.node() == x.node());
    const auto train = ops::dropout(x, 0.3, true, rng);
    std::size_t zeros = 0;
    for (double v : train.values()) {
        if (v == 0.0) {
            ++zeros;
        } else {
            CHECK(v == doctest::Approx(1.0 / 0.7));
        }
    }
    CHECK(zeros > 200);
    CHECK(zeros < 400);
    CHECK_THROWS_AS(ops::dropout(x, 1.0, true, rng), std::invalid_argument);
}

TEST_CASE("property: random composed graphs pass gradient check") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(seed * 7919 + 1);
        const auto x = random_tensor(3, 3, rng);
        const std::vector<Tensor> constants{random_tensor(3, 3, rng), random_tensor(3, 3, rng)};
        CAPTURE(seed);
        CHECK(grad_check([&](const Tensor& t) { return random_chain(t, seed, constants); }, x) <= 1e-4);
    }
}

TEST_CASE("property: backward is linear") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        const auto base = random_tensor(3, 4, rng);
        const double alpha = 1.7;
        const double beta = -0.4;
        const auto f = [](const Tensor& t) { return ops::sum(ops::tanh(ops::mul(t, t))); };
        const auto g = [](const Tensor& t) { return ops::sum(ops::softmax_rows(ops::scale(t, 3.0))); };

        auto x1 = base.clone();
        x1.set_requires_grad(true);
        backward(ops::add(ops::scale(f(x1), alpha), ops::scale(g(x1), beta)));

        auto xf = base.clone();
        xf.set_requires_grad(true);
        backward(f(xf));
        auto xg = base.clone();
        xg.set_requires_grad(true);
        backward(g(xg));
        for (std::size_t i = 0; i < base.size(); ++i) {
            CHECK(std::abs(x1.grad()[i] - (alpha * xf.grad()[i] + beta * xg.grad()[i])) <= 1e-10);
        }
    }
}

TEST_CASE("property: forward and backward are deterministic") {
    const auto run = [] {
        std::mt19937_64 rng(99);
        auto x = random_tensor(5, 5, rng);
        x.set_requires_grad(true);
        const auto w = random_tensor(5, 5, rng);
        auto noise_rng = std::mt19937_64(4);
        const auto h = ops::dropout(ops::tanh(ops::matmul(x, w)), 0.3, true, noise_rng);
        const auto loss = ops::sum(ops::softmax_rows(h));
        backward(loss);
        std::vector<double> out(x.grad().begin(), x.grad().end());
        out.push_back(loss.item());
        return out;
    };
    const auto a = run();
    const auto b = run();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(std::bit_cast<std::uint64_t>(a[i]) == std::bit_cast<std::uint64_t>(b[i]));
    }
}

TEST_CASE("no-grad guard records no tape") {
    auto x = Tensor::from(1, 1, {1.0}, true);
    {
        ad::NoGradGuard guard;
        const auto y = ops::tanh(x);
        CHECK_FALSE(y.requires_grad());
    }
    CHECK(ops::tanh(x).requires_grad());
}
