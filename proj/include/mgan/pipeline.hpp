#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mgan/corpus.hpp"
#include "mgan/embed.hpp"
#include "mgan/keygraph.hpp"
#include "mgan/textpipe.hpp"

namespace mgan {

struct PreprocessConfig {
    std::size_t distance_threshold = default_distance_threshold;
    double keyword_fraction = 0.2;
    std::size_t max_query_len = default_max_query_len;
};

// A pair turned into model inputs.
struct Sample {
    EmbeddedPair input;
    KeywordGraph graph;
    int label = 0;
};

// idf over the distinct documents of a pair list, in first-seen order.
IdfTable document_idf(std::span<const LabeledPair> pairs);

// Document -> keyword graph, optionally backed by an on-disk cache of
// <key>.json files (see graph_cache_key).
class Preprocessor {
public:
    Preprocessor(IdfTable idf, StopwordSet stopwords, PreprocessConfig config,
                 std::optional<std::filesystem::path> cache_dir = std::nullopt);

    std::vector<std::string> keywords(const TokenizedDoc& doc) const;
    std::string cache_key(const std::string& document) const;
    KeywordGraph graph(const std::string& document) const;
    Sample prepare(const LabeledPair& pair, const EmbeddingTable& table) const;
    std::vector<Sample> prepare_all(std::span<const LabeledPair> pairs, const EmbeddingTable& table) const;

    const IdfTable& idf() const { return idf_; }
    const PreprocessConfig& config() const { return config_; }

private:
    IdfTable idf_;
    StopwordSet stopwords_;
    PreprocessConfig config_;
    std::optional<std::filesystem::path> cache_dir_;
};

}  // namespace mgan
