#include "a2gnn/gnn.hpp"
#include "a2gnn/grad_check.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace a2gnn;

namespace {

Tensor random_tensor(std::size_t r, std::size_t c, std::mt19937_64& rng, bool grad = false) {
    std::normal_distribution<double> nd;
    std::vector<double> v(r * c);
    for (double& x : v) x = nd(rng);
    return Tensor::from(r, c, std::move(v), grad);
}

Tensor random_stochastic(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += v[i * n + j] = u(rng);
        for (std::size_t j = 0; j < n; ++j) v[i * n + j] /= s;
    }
    return Tensor::from(n, n, std::move(v));
}

using Mat = std::vector<std::vector<double>>;

Mat to_mat(const Tensor& t) {
    Mat m(t.rows(), std::vector<double>(t.cols()));
    for (std::size_t i = 0; i < t.rows(); ++i)
        for (std::size_t j = 0; j < t.cols(); ++j) m[i][j] = t.at(i, j);
    return m;
}

Mat naive_mul(const Mat& a, const Mat& b) {
    Mat c(a.size(), std::vector<double>(b[0].size(), 0.0));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b[0].size(); ++j)
            for (std::size_t k = 0; k < b.size(); ++k) c[i][j] += a[i][k] * b[k][j];
    return c;
}

std::vector<double> flat(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

}  // namespace

TEST_CASE("own MLP: zero weights give zero") {
    std::mt19937_64 rng(1);
    OwnMlp m{Tensor::zeros(4, 3), Tensor::zeros(1, 3), Tensor::zeros(3, 3), Tensor::zeros(1, 3)};
    const auto h = own_mlp(m, random_tensor(5, 4, rng));
    for (double v : h.values()) CHECK(v == 0.0);
}

TEST_CASE("own MLP: identity weights give relu(S)") {
    std::mt19937_64 rng(2);
    OwnMlp m{Tensor::eye(4), Tensor::zeros(1, 4), Tensor::eye(4), Tensor::zeros(1, 4)};
    const auto s = random_tensor(6, 4, rng);
    const auto h = own_mlp(m, s);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(h.values()[i] == std::max(0.0, s.values()[i]));
}

TEST_CASE("own MLP gradient") {
    std::mt19937_64 rng(3);
    OwnMlp m{random_tensor(4, 5, rng, true), random_tensor(1, 5, rng, true), random_tensor(5, 3, rng, true),
             random_tensor(1, 3, rng, true)};
    auto s = random_tensor(6, 4, rng, true);
    const auto w = random_tensor(6, 3, rng);
    const auto r = grad_check([&] { return ops::sum(ops::mul(own_mlp(m, s), w)); },
                              {{"w1", m.w1}, {"b1", m.b1}, {"w2", m.w2}, {"b2", m.b2}, {"s", s}});
    CHECK(r.max_rel_error <= 1e-5);
    std::mt19937_64 bad(0);
    CHECK_THROWS_AS(own_mlp(m, random_tensor(6, 3, bad)), DimensionError);
}

TEST_CASE("propagate: identity adjacency is a per-node transform") {
    std::mt19937_64 rng(4);
    const auto s = random_tensor(5, 3, rng);
    const auto w = random_tensor(3, 2, rng);
    const auto h = propagate(s, Tensor::eye(5), {w});
    const auto expect = ops::matmul(s, w);
    for (std::size_t i = 0; i < h.size(); ++i) CHECK(h.values()[i] == doctest::Approx(expect.values()[i]).epsilon(1e-14));
}

TEST_CASE("propagate: one-hot row copies the neighbour") {
    std::mt19937_64 rng(5);
    const auto s = random_tensor(4, 3, rng);
    const auto w = random_tensor(3, 2, rng);
    auto adj = Tensor::eye(4);
    adj.mutable_values()[0] = 0.0;
    adj.mutable_values()[2] = 1.0;  // row 0 reads node 2
    const auto h = propagate(s, adj, {w});
    const auto sw = ops::matmul(s, w);
    for (std::size_t k = 0; k < 2; ++k) CHECK(h.at(0, k) == sw.at(2, k));
}

TEST_CASE("propagate: hand-computed 3-node chain") {
    // 0 <- 1 <- 2 with half weight on self.
    const auto adj = Tensor::from_rows({{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.0, 0.0, 1.0}});
    const auto s = Tensor::from_rows({{1.0, 0.0}, {0.0, 2.0}, {-1.0, 1.0}});
    const auto w1 = Tensor::from_rows({{1.0, -1.0}, {1.0, 1.0}});
    const auto w2 = Tensor::from_rows({{2.0}, {1.0}});
    // adj S = [[0.5,1],[-0.5,1.5],[-1,1]]; times w1 = [[1.5,0.5],[1,2],[0,2]] (all positive).
    // adj H = [[1.25,1.25],[0.5,2],[0,2]]; times w2 = [3.75, 3, 2].
    const auto h = propagate(s, adj, {w1, w2});
    CHECK(h.at(0, 0) == doctest::Approx(3.75));
    CHECK(h.at(1, 0) == doctest::Approx(3.0));
    CHECK(h.at(2, 0) == doctest::Approx(2.0));
    // A negative pre-activation is clipped by the hidden ReLU.
    const auto w1n = Tensor::from_rows({{-1.0, 0.0}, {0.0, 1.0}});
    const auto hn = propagate(s, adj, {w1n, w2});
    // adj S w1n = [[-0.5,1],[0.5,1.5],[1,1]] -> relu [[0,1],[0.5,1.5],[1,1]]
    // adj H = [[0.25,1.25],[0.75,1.25],[1,1]] -> w2 = [1.75, 2.75, 3]
    CHECK(hn.at(0, 0) == doctest::Approx(1.75));
    CHECK(hn.at(1, 0) == doctest::Approx(2.75));
    CHECK(hn.at(2, 0) == doctest::Approx(3.0));
}

TEST_CASE("propagate rejects non-finite adjacency and bad shapes") {
    std::mt19937_64 rng(6);
    const auto s = random_tensor(3, 2, rng);
    auto adj = Tensor::eye(3);
    adj.mutable_values()[1] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(propagate(s, adj, {random_tensor(2, 2, rng)}), NumericError);
    CHECK_THROWS_AS(propagate(s, Tensor::eye(4), {random_tensor(2, 2, rng)}), DimensionError);
    CHECK_THROWS(propagate(s, Tensor::eye(3), {}));
}

TEST_CASE("property: propagate equals naive triple loops") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 2 + trial % 4;
        const std::size_t layers = 1 + trial % 2;
        const auto s = random_tensor(n, 3, rng);
        const auto adj = random_stochastic(n, rng);
        std::vector<Tensor> ws{random_tensor(3, 4, rng)};
        if (layers == 2) ws.push_back(random_tensor(4, 4, rng));
        const auto h = propagate(s, adj, ws);
        Mat cur = to_mat(s);
        for (std::size_t l = 0; l < layers; ++l) {
            cur = naive_mul(naive_mul(to_mat(adj), cur), to_mat(ws[l]));
            if (l + 1 < layers)
                for (auto& row : cur)
                    for (double& v : row) v = std::max(0.0, v);
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(h.at(i, j) - cur[i][j]) <= 1e-12);
    }
}

TEST_CASE("property: single linear layer output lies in the convex hull of S W rows") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + trial % 6;
        const auto s = random_tensor(n, 3, rng);
        const auto w = random_tensor(3, 2, rng);
        const auto adj = random_stochastic(n, rng);
        const auto h = propagate(s, adj, {w});
        const auto sw = ops::matmul(s, w);
        // Hull membership: the weights adj[i, :] reproduce h[i] and are a valid convex combination.
        for (std::size_t i = 0; i < n; ++i) {
            double total = 0.0;
            for (std::size_t k = 0; k < 2; ++k) {
                double lo = std::numeric_limits<double>::infinity(), hi = -lo, comb = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    lo = std::min(lo, sw.at(j, k));
                    hi = std::max(hi, sw.at(j, k));
                    comb += adj.at(i, j) * sw.at(j, k);
                }
                CHECK(h.at(i, k) >= lo - 1e-12);
                CHECK(h.at(i, k) <= hi + 1e-12);
                CHECK(h.at(i, k) == doctest::Approx(comb).epsilon(1e-12));
            }
            for (std::size_t j = 0; j < n; ++j) total += adj.at(i, j);
            CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("propagate acts on each stacked window separately") {
    std::mt19937_64 rng(9);
    const auto adj = random_stochastic(3, rng);
    const auto w = random_tensor(2, 2, rng);
    const auto a = random_tensor(3, 2, rng);
    const auto b = random_tensor(3, 2, rng);
    std::vector<double> stacked(a.values().begin(), a.values().end());
    stacked.insert(stacked.end(), b.values().begin(), b.values().end());
    const auto both = propagate(Tensor::from(6, 2, stacked), adj, {w});
    const auto ha = propagate(a, adj, {w});
    const auto hb = propagate(b, adj, {w});
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t k = 0; k < 2; ++k) {
            CHECK(both.at(i, k) == doctest::Approx(ha.at(i, k)).epsilon(1e-14));
            CHECK(both.at(3 + i, k) == doctest::Approx(hb.at(i, k)).epsilon(1e-14));
        }
}

TEST_CASE("dropout only in training mode and needs a stream") {
    std::mt19937_64 rng(10);
    const auto s = random_tensor(4, 3, rng);
    const auto adj = random_stochastic(4, rng);
    const std::vector<Tensor> ws{random_tensor(3, 8, rng), random_tensor(8, 2, rng)};
    const auto plain = propagate(s, adj, ws);
    const auto eval = propagate(s, adj, ws, {0.3, false, nullptr});
    CHECK(flat(plain) == flat(eval));
    CHECK_THROWS(propagate(s, adj, ws, {0.3, true, nullptr}));
    std::mt19937_64 d(1);
    const auto dropped = propagate(s, adj, ws, {0.3, true, &d});
    CHECK(flat(dropped) != flat(plain));
    // A single linear layer has no hidden activation, so nothing is dropped.
    std::mt19937_64 d2(1);
    CHECK(flat(propagate(s, adj, {ws[0]}, {0.3, true, &d2})) == flat(propagate(s, adj, {ws[0]})));
}

TEST_CASE("bundle channels") {
    std::mt19937_64 rng(11);
    const auto params = GnnParams::init(6, 4, 2, true, true, rng);
    const auto s = random_tensor(5, 6, rng);
    const auto learned = random_stochastic(5, rng);
    const auto pre = random_stochastic(5, rng);

    const auto two = build_bundle(params, s, learned, std::nullopt);
    CHECK(two.channels().size() == 2);
    CHECK_FALSE(two.predefined.has_value());
    CHECK(two.channel_names() == std::vector<std::string>{"own", "implicit"});

    const auto three = build_bundle(params, s, learned, pre);
    CHECK(three.channels().size() == 3);
    CHECK(three.channel_names() == std::vector<std::string>{"own", "implicit", "predefined"});
    for (const auto& h : three.channels()) CHECK(h.shape() == Shape{5, 4});

    const auto zero = build_bundle(params, Tensor::zeros(5, 6), learned, pre);
    for (const auto& h : zero.channels())
        for (double v : h.values()) CHECK(v == 0.0);
}

TEST_CASE("property: perturbing the implicit stack leaves other channels untouched") {
    std::mt19937_64 rng(12);
    auto params = GnnParams::init(6, 4, 2, true, true, rng);
    const auto s = random_tensor(5, 6, rng);
    const auto learned = random_stochastic(5, rng);
    const auto pre = random_stochastic(5, rng);
    const auto before = build_bundle(params, s, learned, pre);
    for (auto& w : params.implicit_layers)
        for (double& v : w.mutable_values()) v += 0.1;
    const auto after = build_bundle(params, s, learned, pre);
    CHECK(flat(after.own) == flat(before.own));
    CHECK(flat(*after.predefined) == flat(*before.predefined));
    CHECK(flat(*after.implicit) != flat(*before.implicit));
}

TEST_CASE("layer widths stay constant after the first layer") {
    std::mt19937_64 rng(13);
    const auto p = GnnParams::init(192, 128, 2, true, false, rng);
    REQUIRE(p.implicit_layers.size() == 2);
    CHECK(p.implicit_layers[0].shape() == Shape{192, 128});
    CHECK(p.implicit_layers[1].shape() == Shape{128, 128});
    CHECK(p.predefined_layers.empty());
    CHECK(p.own.w1.shape() == Shape{192, 128});
    CHECK(p.own.w2.shape() == Shape{128, 128});
}
