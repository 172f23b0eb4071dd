#include "mgan/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <random>
#include <string>

#include "mgan/error.hpp"

namespace mgan {

namespace {

std::string word_name(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "w%04zu", i);
    return buf;
}

}  // namespace

SyntheticCorpus make_synthetic_corpus(const SyntheticConfig& c) {
    const std::size_t topic_words = c.topics * (c.query_words_per_topic + c.keywords_per_topic);
    if (c.topics < 2) throw DataError("synthetic corpus needs at least 2 topics");
    if (topic_words >= c.vocabulary) throw DataError("synthetic vocabulary too small for the topic words");
    if (c.pairs < 2 || c.pairs % 2 != 0) throw DataError("synthetic pair count must be even");
    if (c.doc_length < 10) throw DataError("synthetic documents must have at least 10 tokens");

    std::mt19937_64 rng(c.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto random_vector = [&] {
        std::vector<double> v(c.dim);
        for (auto& x : v) x = gauss(rng);
        return v;
    };

    // Word ids: per topic [query words..., keywords...], then background.
    SyntheticCorpus out{{}, EmbeddingTable(c.dim)};
    const std::size_t per_topic = c.query_words_per_topic + c.keywords_per_topic;
    for (std::size_t t = 0; t < c.topics; ++t) {
        const auto centroid = random_vector();
        for (std::size_t k = 0; k < per_topic; ++k) {
            auto v = random_vector();
            for (std::size_t d = 0; d < c.dim; ++d) v[d] = centroid[d] + c.cluster_noise * v[d];
            out.embeddings.insert(word_name(t * per_topic + k), std::move(v));
        }
    }
    for (std::size_t w = topic_words; w < c.vocabulary; ++w) out.embeddings.insert(word_name(w), random_vector());

    const auto query_word = [&](std::size_t t, std::size_t k) { return word_name(t * per_topic + k); };
    const auto keyword = [&](std::size_t t, std::size_t k) { return word_name(t * per_topic + c.query_words_per_topic + k); };

    std::vector<std::string> topic_names;
    for (std::size_t t = 0; t < c.topics; ++t) {
        std::string q;
        for (std::size_t k = 0; k < c.query_words_per_topic; ++k) q += (k ? " " : "") + query_word(t, k);
        topic_names.push_back(q);
    }

    std::uniform_int_distribution<std::size_t> pick_topic(0, c.topics - 1);
    std::uniform_int_distribution<std::size_t> pick_background(topic_words, c.vocabulary - 1);
    std::uniform_int_distribution<std::size_t> pick_keyword(0, c.keywords_per_topic - 1);
    std::uniform_int_distribution<std::size_t> pick_query(0, c.query_words_per_topic - 1);
    std::uniform_int_distribution<std::size_t> pick_pos(0, c.doc_length - 6);
    std::uniform_int_distribution<std::size_t> pick_offset(0, 5);
    std::bernoulli_distribution literal(c.literal_query_rate);

    std::vector<TopicDocument> docs;
    const std::size_t n_docs = c.pairs / 2;
    for (std::size_t d = 0; d < n_docs; ++d) {
        const std::size_t topic = pick_topic(rng);
        std::size_t other = pick_topic(rng);
        while (other == topic) other = pick_topic(rng);

        std::vector<std::string> tokens(c.doc_length);
        for (auto& tok : tokens) tok = word_name(pick_background(rng));

        // A handful of focus keywords per document so they repeat.
        std::vector<std::size_t> focus(6);
        for (auto& f : focus) f = pick_keyword(rng);
        std::uniform_int_distribution<std::size_t> pick_focus(0, focus.size() - 1);
        const auto burst = [&](std::size_t t, std::size_t count, bool use_focus) {
            const std::size_t base = pick_pos(rng);
            for (std::size_t i = 0; i < count; ++i)
                tokens[base + pick_offset(rng)] = keyword(t, use_focus ? focus[pick_focus(rng)] : pick_keyword(rng));
        };
        for (std::size_t b = 0; b < c.bursts_per_doc; ++b) burst(topic, 3, true);
        burst(other, 2, false);
        if (literal(rng)) tokens[pick_pos(rng)] = query_word(topic, pick_query(rng));
        if (literal(rng)) tokens[pick_pos(rng)] = query_word(other, pick_query(rng));

        std::string text;
        for (std::size_t i = 0; i < tokens.size(); ++i) text += (i ? " " : "") + tokens[i];
        docs.push_back({std::move(text), topic_names[topic]});
    }
    out.pairs = generate_negatives(docs, topic_names, 1.0, rng());
    return out;
}

}  // namespace mgan
