#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "mgan/error.hpp"
#include "mgan/trainer.hpp"
#include "test_util.hpp"

using namespace mgan;
using namespace mgan::testing;

namespace {

// Positives carry a strong OOV-overlap feature; negatives none.
std::vector<Sample> separable_set(std::size_t n, std::uint64_t seed, std::size_t dim) {
    std::mt19937_64 rng(seed);
    std::vector<Sample> out;
    for (std::size_t i = 0; i < n; ++i) {
        auto inst = random_instance(2 + i % 4, 2, 4, dim, rng);
        Sample s{inst.pair, inst.graph, static_cast<int>(i % 2)};
        s.input.oov = s.label ? 2.0 : 0.0;
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

TEST_CASE("adam_step examples") {
    TrainConfig cfg;
    SUBCASE("zero gradient leaves parameters unchanged") {
        std::vector<Tensor> p = {Tensor::parameter({1, 3}, {1, -2, 3})};
        AdamState st;
        adam_step(p, {{0, 0, 0}}, st, cfg);
        CHECK(std::vector<double>(p[0].values().begin(), p[0].values().end()) == std::vector<double>{1, -2, 3});
        CHECK(st.step == 1);
    }
    SUBCASE("first step moves each coordinate by about lr against the gradient sign") {
        std::vector<Tensor> p = {Tensor::parameter({1, 3}, {0, 0, 0})};
        AdamState st;
        const std::vector<double> g = {0.5, -3.0, 1e-3};
        adam_step(p, {g}, st, cfg);
        for (std::size_t i = 0; i < 3; ++i) {
            const double expected = -cfg.learning_rate * g[i] / (std::abs(g[i]) + cfg.adam_epsilon);
            CHECK(p[0].values()[i] == doctest::Approx(expected).epsilon(1e-12));
            CHECK(std::abs(std::abs(p[0].values()[i]) - cfg.learning_rate) < 1e-7);
        }
    }
    SUBCASE("lr 0 keeps parameters but advances moments") {
        cfg.learning_rate = 0.0;
        std::vector<Tensor> p = {Tensor::parameter({1, 2}, {1, 1})};
        AdamState st;
        adam_step(p, {{1, 2}}, st, cfg);
        CHECK(p[0].values()[0] == 1.0);
        CHECK(st.first_moment[0][1] == doctest::Approx(0.2));
        CHECK(st.second_moment[0][1] == doctest::Approx(0.004));
    }
    SUBCASE("shape mismatch") {
        std::vector<Tensor> p = {Tensor::parameter({1, 2}, {1, 1})};
        AdamState st;
        CHECK_THROWS_AS(adam_step(p, {{1, 2, 3}}, st, cfg), DataError);
        CHECK_THROWS_AS(adam_step(p, {}, st, cfg), DataError);
    }
}

TEST_CASE("one Adam step strictly reduces a quadratic loss") {
    const TrainConfig cfg;
    for (double a : {-3.0, 0.0, 2.5}) {
        for (double sign : {-1.0, 1.0}) {
            const double p0 = a + sign;  // |p - a| = 1
            std::vector<Tensor> p = {Tensor::parameter({1, 1}, {p0})};
            AdamState st;
            adam_step(p, {{p0 - a}}, st, cfg);
            const double before = 0.5 * (p0 - a) * (p0 - a);
            const double after = 0.5 * (p[0].item() - a) * (p[0].item() - a);
            CHECK(after < before);
        }
    }
}

TEST_CASE("training on a separable toy set lowers the loss and is deterministic") {
    const ModelConfig mc = small_config(4, 4);
    TrainConfig tc;
    tc.batch_size = 4;
    tc.learning_rate = 0.01;
    tc.seed = 7;
    const auto train_set = separable_set(20, 1, 4);
    const auto dev_set = separable_set(8, 2, 4);
    const auto init = ModelParams::init(mc, 3);
    const auto r = train(init, train_set, dev_set, tc, mc);
    REQUIRE(r.log.size() == 5);
    CHECK(r.log.back().train_loss < r.log.front().train_loss);
    CHECK(r.best_epoch >= 1);
    for (const auto& e : r.log) CHECK(e.dev_accuracy <= r.log[r.best_epoch - 1].dev_accuracy);
    for (std::size_t e = 0; e + 1 < r.best_epoch; ++e) CHECK(r.log[e].dev_accuracy < r.log[r.best_epoch - 1].dev_accuracy);

    const auto again = train(init, train_set, dev_set, tc, mc);
    CHECK(epoch_log_csv(again.log) == epoch_log_csv(r.log));
    const auto a = r.best.all(), b = again.best.all();
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(std::vector<double>(a[i].values().begin(), a[i].values().end()) ==
              std::vector<double>(b[i].values().begin(), b[i].values().end()));

    // The initial parameters are not mutated.
    const auto fresh = ModelParams::init(mc, 3);
    CHECK(std::vector<double>(init.hidden_weight.values().begin(), init.hidden_weight.values().end()) ==
          std::vector<double>(fresh.hidden_weight.values().begin(), fresh.hidden_weight.values().end()));
}

TEST_CASE("train contract errors") {
    const ModelConfig mc = small_config(4, 4);
    const auto set = separable_set(4, 1, 4);
    const auto init = ModelParams::init(mc, 3);
    CHECK_THROWS_AS(train(init, set, std::vector<Sample>{}, TrainConfig{}, mc), DataError);
    CHECK_THROWS_AS(train(init, std::vector<Sample>{}, set, TrainConfig{}, mc), DataError);

    auto broken = set;
    broken[0].input.oov = std::numeric_limits<double>::infinity();
    TrainConfig tc;
    tc.batch_size = 2;
    CHECK_THROWS_WITH_AS(train(init, broken, set, tc, mc), doctest::Contains("batch"), DataError);
}

TEST_CASE("epoch log CSV") {
    const std::vector<EpochLog> log = {{1, 0.5, 0.75, 0.8}, {2, 0.25, 1.0, 1.0}};
    CHECK(epoch_log_csv(log) == "epoch,train_loss,dev_accuracy,dev_f1\n1,0.5,0.75,0.80000000000000004\n2,0.25,1,1\n");
}
