#include <doctest.h>

#include <random>

#include "mgan/error.hpp"
#include "mgan/eval.hpp"

using namespace mgan;

TEST_CASE("metrics examples") {
    const std::vector<int> labels = {1, 0, 1, 0};
    const auto perfect = metrics(std::vector<double>{0.9, 0.1, 0.6, 0.4}, labels);
    CHECK(perfect.accuracy == 1.0);
    CHECK(perfect.f1 == 1.0);

    const auto all_pos = metrics(std::vector<double>{0.9, 0.9, 0.9, 0.9}, labels);
    CHECK(all_pos.accuracy == 0.5);
    CHECK(all_pos.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(all_pos.tp == 2);
    CHECK(all_pos.fp == 2);
    CHECK(all_pos.n() == 4);

    const auto none = metrics(std::vector<double>{0.1, 0.1}, std::vector<int>{0, 0});
    CHECK(none.f1 == 0.0);
    CHECK(none.accuracy == 1.0);

    CHECK(metrics(std::vector<double>{0.5}, std::vector<int>{1}).tp == 1);
    CHECK_THROWS_AS(metrics(std::vector<double>{}, std::vector<int>{}), DataError);
    CHECK_THROWS_AS(metrics(std::vector<double>{0.5}, std::vector<int>{1, 0}), DataError);
}

TEST_CASE("accuracy is invariant under the joint label/prediction swap") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> p, q;
        std::vector<int> y, z;
        for (int i = 0; i < 30; ++i) {
            // Avoid exactly 0.5 so "p >= 0.5" and "1 - p >= 0.5" never coincide.
            double v = u(rng);
            if (v == 0.5) v = 0.25;
            p.push_back(v);
            q.push_back(1.0 - v);
            y.push_back(static_cast<int>(rng() % 2));
            z.push_back(1 - y.back());
        }
        CHECK(metrics(p, y).accuracy == metrics(q, z).accuracy);
        const auto m = metrics(p, y);
        CHECK(m.n() == 30);
        CHECK(m.accuracy == static_cast<double>(m.tp + m.tn) / 30.0);
    }
}

TEST_CASE("metrics JSON") {
    const auto m = metrics(std::vector<double>{0.9, 0.2}, std::vector<int>{1, 1});
    const auto j = metrics_json(m);
    for (const char* key : {"\"accuracy\"", "\"f1\"", "\"tp\"", "\"fp\"", "\"tn\"", "\"fn\"", "\"n\""})
        CHECK(j.find(key) != std::string::npos);
}

TEST_CASE("tfidf cosine baseline") {
    const std::vector<TokenizedDoc> docs = {tokenize("heart attack risk"), tokenize("export ban zte"),
                                            tokenize("heart rate")};
    const auto idf = build_idf(docs);
    CHECK(tfidf_cosine_baseline({"heart attack risk", "heart attack risk", 1}, idf) == doctest::Approx(1.0));
    CHECK(tfidf_cosine_baseline({"zte export", "heart attack", 0}, idf) == 0.0);
    CHECK(tfidf_cosine_baseline({"heart attack", "heart attack risk study", 1}, idf) > 0.0);
    CHECK(tfidf_cosine_baseline({"", "heart", 0}, idf) == 0.0);

    const LabeledPair ab{"heart attack heart", "heart rate export ban", 1};
    const LabeledPair ba{"heart rate export ban", "heart attack heart", 1};
    CHECK(tfidf_cosine_baseline(ab, idf) == doctest::Approx(tfidf_cosine_baseline(ba, idf)).epsilon(1e-15));
    const LabeledPair doubled{"heart attack heart heart attack heart", "heart rate export ban heart rate export ban", 1};
    CHECK(tfidf_cosine_baseline(doubled, idf) == doctest::Approx(tfidf_cosine_baseline(ab, idf)).epsilon(1e-14));
}

TEST_CASE("tune_threshold maximizes accuracy") {
    const std::vector<double> scores = {0.1, 0.2, 0.35, 0.4, 0.8};
    const std::vector<int> labels = {0, 0, 1, 1, 1};
    const double t = tune_threshold(scores, labels);
    CHECK(t == 0.35);
    CHECK(metrics(scores, labels, t).accuracy == 1.0);
    const std::vector<int> all_neg = {0, 0, 0, 0, 0};
    CHECK(metrics(scores, all_neg, tune_threshold(scores, all_neg)).accuracy == 1.0);
}
