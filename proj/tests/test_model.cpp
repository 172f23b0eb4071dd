#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mgan/error.hpp"
#include "mgan/model.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace mgan;
using namespace mgan::testing;

namespace {

Matrix from_rows(std::vector<std::vector<double>> rows) {
    Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) m(i, j) = rows[i][j];
    return m;
}

Matrix identity(std::size_t n) {
    Matrix m(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix eval_gcn(const Matrix& x, const Matrix& p, const Matrix& w) {
    Tape tape(Tape::Mode::inference);
    return gcn_layer(tape, Tensor::constant(x), Tensor::constant(p), Tensor::constant(w)).to_matrix();
}

std::vector<double> eval_attend(const Matrix& q, const std::vector<bool>& mask, std::vector<double> v,
                                bool use_attention = true) {
    Tape tape(Tape::Mode::inference);
    const Tensor out = attend(tape, Tensor::constant(q), mask, Tensor::constant({1, v.size()}, v), use_attention);
    return {out.values().begin(), out.values().end()};
}

}  // namespace

TEST_CASE("config defaults") {
    const ModelConfig c;
    CHECK(c.lambda == 1.0);
    CHECK(c.pool_size == 20);
    CHECK(c.num_layers == 2);
    CHECK(c.hidden_size == 100);
    CHECK(c.conv_kernel_width == 3);
    CHECK(c.use_gcn);
    CHECK(c.use_attention);
    CHECK(c.use_query_encoder);
    CHECK(c.match_length() == 41);
    ModelConfig bad = c;
    bad.conv_kernel_width = 2;
    CHECK_THROWS_AS(bad.validate(), DataError);
    bad = c;
    bad.lambda = -1;
    CHECK_THROWS_AS(bad.validate(), DataError);
}

TEST_CASE("parameter shapes") {
    ModelConfig c = small_config(5, 4);
    const auto p = ModelParams::init(c, 1);
    CHECK(p.gcn_weights.size() == 2);
    CHECK(p.gcn_weights[0].shape() == Shape{5, 5});
    CHECK(p.conv_kernel.shape() == Shape{3, 5, 5});
    CHECK(p.conv_bias.shape() == Shape{1, 5});
    CHECK(p.hidden_weight.shape() == Shape{9, 6});
    CHECK(p.hidden_bias.shape() == Shape{1, 6});
    CHECK(p.output_weight.shape() == Shape{6, 1});
    CHECK(p.output_bias.shape() == Shape{1, 1});
    for (const auto& t : p.all())
        for (double v : t.values()) CHECK(std::isfinite(v));
}

TEST_CASE("propagation_matrix examples") {
    const Matrix a = from_rows({{0, 1}, {1, 0}});
    CHECK(propagation_matrix(a, 1.0) == from_rows({{0.5, 0.5}, {0.5, 0.5}}));
    const Matrix p0 = propagation_matrix(a, 0.0);
    CHECK(p0(0, 0) == 0.0);
    CHECK(p0(1, 1) == 0.0);

    std::mt19937_64 rng(1);
    const Matrix big = propagation_matrix(random_adjacency(6, rng, 0.8), 1e9);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j) CHECK(std::abs(big(i, j) - (i == j ? 1.0 : 0.0)) < 1e-6);

    const Matrix isolated = from_rows({{0, 0, 0}, {0, 0, 2}, {0, 2, 0}});
    CHECK_THROWS_AS(propagation_matrix(isolated, 0.0), DataError);
    CHECK_NOTHROW(propagation_matrix(isolated, 0.5));
    CHECK_THROWS_AS(propagation_matrix(a, -0.1), DataError);
}

TEST_CASE("propagation_matrix is row-stochastic and nonnegative") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        std::mt19937_64 rng(seed);
        const Matrix a = random_adjacency(1 + seed % 10, rng);
        for (double lambda : {0.1, 1.0, 10.0}) {
            const Matrix p = propagation_matrix(a, lambda);
            for (std::size_t i = 0; i < p.rows; ++i) {
                double row = 0.0;
                for (std::size_t j = 0; j < p.cols; ++j) {
                    CHECK(p(i, j) >= 0.0);
                    row += p(i, j);
                }
                CHECK(std::abs(row - 1.0) <= 1e-12);
            }
        }
    }
}

TEST_CASE("production propagation is a per-vertex rescaling of the reference spectral filter") {
    // (P x)_i = deg_i / (lambda + deg_i) * [(lambda / deg_i) x + D^{-1} A x]_i
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        std::mt19937_64 rng(seed);
        const std::size_t n = 2 + seed % 8;
        Matrix a = random_adjacency(n, rng, 0.6);
        for (std::size_t i = 0; i + 1 < n; ++i)
            if (a(i, i + 1) == 0.0) a(i, i + 1) = a(i + 1, i) = 0.3;
        const auto x = uniform_values(n, rng);
        const double lambda = 0.5 + static_cast<double>(seed % 4);
        const Matrix p = propagation_matrix(a, lambda);
        for (std::size_t i = 0; i < n; ++i) {
            double deg = 0.0, px = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                deg += a(i, j);
                px += p(i, j) * x[j];
            }
            const auto ref = reference_spectral_filter(x, a, lambda / deg, deg / (lambda + deg));
            CHECK(std::abs(ref[i] - px) <= 1e-12);
        }
    }
}

TEST_CASE("reference_spectral_filter examples") {
    const Matrix a = from_rows({{0, 1}, {1, 0}});
    const std::vector<double> x = {1, 0};
    CHECK(reference_spectral_filter(x, a, 1.0, 1.0) == std::vector<double>{1, 1});
    CHECK(reference_spectral_filter(x, a, 1.0, 0.0) == std::vector<double>{0, 0});
    std::mt19937_64 rng(4);
    Matrix conn = random_adjacency(5, rng, 1.0);
    const std::vector<double> c(5, 2.5);
    for (double y : reference_spectral_filter(c, conn, 0.0, 0.7)) CHECK(y == doctest::Approx(0.7 * 2.5).epsilon(1e-14));
    CHECK_THROWS_AS(reference_spectral_filter(std::vector<double>{1, 2}, Matrix(2, 2, 0.0), 1.0, 1.0), DataError);
}

TEST_CASE("gcn_layer examples") {
    const Matrix p = propagation_matrix(Matrix(1, 1, 0.0), 1.0);
    CHECK(p(0, 0) == 1.0);
    CHECK(eval_gcn(from_rows({{2, -3}}), p, identity(2)) == from_rows({{2, 0}}));

    std::mt19937_64 rng(2);
    const Matrix x = random_matrix(4, 3, rng);
    const Matrix pa = propagation_matrix(random_adjacency(4, rng, 1.0), 1.0);
    CHECK(eval_gcn(x, pa, Matrix(3, 3, 0.0)) == Matrix(4, 3, 0.0));
}

TEST_CASE("gcn_layer: disconnected components do not interact") {
    std::mt19937_64 rng(9);
    Matrix a(6, 6, 0.0);
    const Matrix left = random_adjacency(3, rng, 1.0), right = random_adjacency(3, rng, 1.0);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            a(i, j) = left(i, j);
            a(i + 3, j + 3) = right(i, j);
        }
    const Matrix p = propagation_matrix(a, 1.0);
    const Matrix w = random_matrix(4, 4, rng);
    Matrix x = random_matrix(6, 4, rng);
    const Matrix before = eval_gcn(x, p, w);
    for (std::size_t i = 3; i < 6; ++i)
        for (std::size_t j = 0; j < 4; ++j) x(i, j) += 5.0;
    const Matrix after = eval_gcn(x, p, w);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 4; ++j) CHECK(after(i, j) == before(i, j));
}

TEST_CASE("lambda limits of the graph convolution") {
    std::mt19937_64 rng(12);
    const Matrix a = random_adjacency(5, rng, 1.0);
    const Matrix x = random_matrix(5, 3, rng), w = random_matrix(3, 3, rng);
    const Matrix self_only = eval_gcn(x, propagation_matrix(a, 1e12), w);
    const Matrix plain = eval_gcn(x, identity(5), w);
    for (std::size_t k = 0; k < self_only.data.size(); ++k) CHECK(std::abs(self_only.data[k] - plain.data[k]) < 1e-9);

    // At lambda = 0 each aggregated row is a convex combination of the neighbours.
    const Matrix p0 = propagation_matrix(a, 0.0);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(p0(i, i) == 0.0);
        double total = 0.0;
        for (std::size_t j = 0; j < 5; ++j) {
            CHECK((p0(i, j) > 0.0) == (a(i, j) > 0.0));
            total += p0(i, j);
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("vertex scores and rank_and_pool") {
    const Matrix same = from_rows({{1, 2}, {1, 2}, {1, 2}, {1, 2}});
    for (double t : vertex_scores(same)) CHECK(t == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(rank_and_pool(same, 2).indices == std::vector<std::size_t>{0, 1});

    const auto t = vertex_scores(from_rows({{1}, {0}}));
    const double e = std::exp(1.0);
    CHECK(t[0] == doctest::Approx(e / (e + 1)).epsilon(1e-15));
    CHECK(t[1] == doctest::Approx(1 / (e + 1)).epsilon(1e-15));
    CHECK(rank_and_pool(from_rows({{0}, {1}}), 2).indices == std::vector<std::size_t>{1, 0});

    const auto small = rank_and_pool(from_rows({{0.1}, {0.3}, {0.2}}), 5);
    CHECK(small.indices == std::vector<std::size_t>{1, 2, 0});
    CHECK(small.pad == 2);
    const auto trimmed = rank_and_pool(from_rows({{0.1}, {0.3}, {0.2}}), 2);
    CHECK(trimmed.indices == std::vector<std::size_t>{1, 2});
    CHECK(trimmed.pad == 0);
}

TEST_CASE("vertex scores match the oracle and conserve d_e") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        std::mt19937_64 rng(seed);
        const Matrix x = random_matrix(1 + seed % 9, 1 + seed % 7, rng, -20, 20);
        const auto t = vertex_scores(x);
        const auto ref = oracle::vertex_scores(x);
        double total = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            CHECK(t[i] == doctest::Approx(ref[i]).epsilon(1e-12));
            total += t[i];
        }
        CHECK(std::abs(total - static_cast<double>(x.cols)) <= 1e-9);
    }
    // Stable for large magnitudes.
    const auto big = vertex_scores(from_rows({{1000}, {999}}));
    CHECK(big[0] + big[1] == doctest::Approx(1.0));
}

TEST_CASE("attend examples") {
    const Matrix q = from_rows({{1, 2}, {3, -1}, {0, 0}});
    const std::vector<bool> mask = {true, true, false};
    CHECK(eval_attend(q, {true, false, false}, {0.3, 0.9}) == std::vector<double>{1, 2});

    const Matrix ortho = from_rows({{1, 0}, {2, 0}, {9, 9}});
    const auto mean = eval_attend(ortho, mask, {0, 1});
    CHECK(mean[0] == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(mean[1] == 0.0);

    CHECK(eval_attend(q, mask, {1, 1}, false) == std::vector<double>{3, 2});
    CHECK_THROWS_AS(eval_attend(q, {false, false, false}, {1, 1}), DataError);

    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 50; ++trial) {
        const Matrix r = random_matrix(5, 4, rng, -3, 3);
        const std::vector<bool> m = {true, true, true, false, false};
        const auto out = eval_attend(r, m, uniform_values(4, rng, -3, 3));
        for (std::size_t j = 0; j < 4; ++j) {
            double lo = INFINITY, hi = -INFINITY;
            for (std::size_t t = 0; t < 3; ++t) {
                lo = std::min(lo, r(t, j));
                hi = std::max(hi, r(t, j));
            }
            CHECK(out[j] >= lo - 1e-12);
            CHECK(out[j] <= hi + 1e-12);
        }
    }
}

TEST_CASE("attention weights: padded tokens get zero weight and zero gradient") {
    std::mt19937_64 rng(10);
    Tensor q = random_param({5, 3}, rng);
    const Tensor v = Tensor::constant({1, 3}, uniform_values(3, rng));
    const std::vector<bool> mask = {true, true, false, true, false};
    Tape tape;
    const Tensor weights = tape.masked_softmax(tape.matmul(v, tape.transpose(q)), mask);
    double total = 0.0;
    for (std::size_t t = 0; t < 5; ++t) {
        if (!mask[t]) CHECK(weights.values()[t] == 0.0);
        total += weights.values()[t];
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);

    const Tensor out = attend(tape, q, mask, v);
    tape.backward(project(tape, out, uniform_values(3, rng)));
    for (std::size_t t = 0; t < 5; ++t)
        if (!mask[t])
            for (std::size_t j = 0; j < 3; ++j) CHECK(q.grad()[t * 3 + j] == 0.0);
}

TEST_CASE("match_score examples") {
    Tape tape(Tape::Mode::inference);
    const Tensor v = Tensor::constant({1, 3}, {1, -2, 0.5});
    const Tensor neg = Tensor::constant({1, 3}, {-1, 2, -0.5});
    const Tensor ortho = Tensor::constant({1, 3}, {2, 1, 0});
    CHECK(match_score(tape, v, v).item() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(match_score(tape, v, neg).item() == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(match_score(tape, v, ortho).item() == 0.0);
}

TEST_CASE("encode_query") {
    std::mt19937_64 rng(3);
    ModelConfig c = small_config(4, 8);
    const auto params = ModelParams::init(c, 5);

    SUBCASE("shape is preserved and padding rows are zero") {
        for (std::size_t real : {1, 3, 8}) {
            const auto inst = random_instance(2, real, 8, 4, rng);
            Tape tape(Tape::Mode::inference);
            const Tensor out = encode_query(tape, Tensor::constant(inst.pair.query), inst.pair.mask, params, c);
            CHECK(out.shape() == Shape{8, 4});
            for (std::size_t t = real; t < 8; ++t)
                for (std::size_t j = 0; j < 4; ++j) CHECK(out.at(t, j) == 0.0);
        }
    }
    SUBCASE("identical interior rows give identical outputs") {
        Matrix q(8, 4, 0.0);
        const auto row = uniform_values(4, rng);
        for (std::size_t t = 0; t < 8; ++t)
            for (std::size_t j = 0; j < 4; ++j) q(t, j) = row[j];
        const std::vector<bool> mask(8, true);
        Tape tape(Tape::Mode::inference);
        const Matrix out = encode_query(tape, Tensor::constant(q), mask, params, c).to_matrix();
        for (std::size_t t = 2; t < 7; ++t)
            for (std::size_t j = 0; j < 4; ++j) CHECK(out(t, j) == out(1, j));
    }
    SUBCASE("disabled encoder returns the input unchanged") {
        c.use_query_encoder = false;
        const auto inst = random_instance(2, 5, 8, 4, rng);
        Tape tape(Tape::Mode::inference);
        const Tensor out = encode_query(tape, Tensor::constant(inst.pair.query), inst.pair.mask, params, c);
        CHECK(out.to_matrix() == inst.pair.query);
    }
}

TEST_CASE("forward: match vector layout and probability range") {
    std::mt19937_64 rng(21);
    ModelConfig c = small_config(6, 5);
    c.pool_size = 20;
    const auto params = ModelParams::init(c, 2);
    for (std::size_t d_g : {1, 3, 8, 25}) {
        const auto inst = random_instance(d_g, 3, 5, 6, rng);
        Tape tape(Tape::Mode::inference);
        const auto r = forward(tape, inst.pair, inst.graph, params, c);
        REQUIRE(r.match.size() == 41);
        CHECK(r.match.back() == inst.pair.oov);
        CHECK(r.probability > 0.0);
        CHECK(r.probability < 1.0);
        const std::size_t kept = std::min<std::size_t>(d_g, 20);
        for (std::size_t layer = 0; layer < 2; ++layer)
            for (std::size_t k = 0; k < 20; ++k) {
                const double s = r.match[layer * 20 + k];
                CHECK(s >= -1.0 - 1e-12);
                CHECK(s <= 1.0 + 1e-12);
                if (k >= kept) CHECK(s == 0.0);
            }
    }
    CHECK_THROWS_AS(
        [&] {
            auto inst = random_instance(0, 3, 5, 6, rng);
            Tape tape(Tape::Mode::inference);
            forward(tape, inst.pair, inst.graph, params, c);
        }(),
        DataError);
}

TEST_CASE("forward: no-GCN output ignores adjacency weights") {
    std::mt19937_64 rng(31);
    ModelConfig c = small_config(5, 4);
    c.use_gcn = false;
    const auto params = ModelParams::init(c, 3);
    auto inst = random_instance(7, 3, 4, 5, rng);
    const double base = predict(inst.pair, inst.graph, params, c);
    for (int trial = 0; trial < 5; ++trial) {
        inst.graph.adjacency = random_adjacency(7, rng, 0.7);
        CHECK(predict(inst.pair, inst.graph, params, c) == base);
    }
}

TEST_CASE("forward: permuting vertices leaves the probability unchanged") {
    std::mt19937_64 rng(41);
    const ModelConfig c = small_config(5, 4);
    const auto params = ModelParams::init(c, 4);
    for (int instance = 0; instance < 10; ++instance) {
        const auto inst = random_instance(6, 3, 4, 5, rng);
        const double base = predict(inst.pair, inst.graph, params, c);
        std::vector<std::size_t> perm(6);
        std::iota(perm.begin(), perm.end(), 0);
        for (int k = 0; k < 5; ++k) {
            std::shuffle(perm.begin(), perm.end(), rng);
            const auto p = permute(inst, perm);
            CHECK(std::abs(predict(p.pair, p.graph, params, c) - base) <= 1e-9);
        }
    }
}

TEST_CASE("full model gradient check on every parameter group") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(seed);
        ModelConfig c = small_config(4, 4);
        c.use_attention = seed % 3 != 0;
        auto params = ModelParams::init(c, seed);
        randomize_biases(params, rng);
        const auto inst = random_instance(1 + seed % 6, 1 + seed % 4, 4, 4, rng);
        const auto f = [&](Tape& t) {
            const auto r = forward(t, inst.pair, inst.graph, params, c);
            const std::vector<double> label = {static_cast<double>(seed % 2)};
            return t.bce_with_logits(r.logit, label);
        };
        for (const auto& [name, tensor] : params.named()) {
            INFO("seed " << seed << " " << name);
            CHECK(finite_diff_check(f, {tensor}) < 1e-4);
        }
    }
}
