#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mgan/corpus.hpp"
#include "mgan/embed.hpp"

namespace mgan {

// Topic-document corpus with a planted signal: each topic owns a few query
// words and a pool of keywords whose embeddings cluster around a topic
// centroid. Documents are background words with bursts of co-occurring topic
// keywords. Query words rarely appear in documents, so term overlap alone is
// a weak signal.
struct SyntheticConfig {
    std::size_t pairs = 500;
    std::size_t vocabulary = 600;
    std::size_t dim = 40;
    std::size_t topics = 10;
    std::size_t query_words_per_topic = 3;
    std::size_t keywords_per_topic = 20;
    std::size_t doc_length = 120;
    std::size_t bursts_per_doc = 6;
    double cluster_noise = 0.6;      // spread of topic words around the centroid
    double literal_query_rate = 0.3; // chance a document contains its topic's query word
    std::uint64_t seed = 1;
};

struct SyntheticCorpus {
    std::vector<LabeledPair> pairs;  // balanced: one positive, one negative per document
    EmbeddingTable embeddings;
};

SyntheticCorpus make_synthetic_corpus(const SyntheticConfig& config);

}  // namespace mgan
