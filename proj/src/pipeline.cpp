#include "mgan/pipeline.hpp"

#include <unordered_set>

#include "mgan/error.hpp"

namespace mgan {

IdfTable document_idf(std::span<const LabeledPair> pairs) {
    std::vector<TokenizedDoc> docs;
    std::unordered_set<std::string_view> seen;
    for (const auto& p : pairs)
        if (seen.insert(p.document).second) docs.push_back(tokenize(p.document));
    return build_idf(docs);
}

Preprocessor::Preprocessor(IdfTable idf, StopwordSet stopwords, PreprocessConfig config,
                           std::optional<std::filesystem::path> cache_dir)
    : idf_(std::move(idf)), stopwords_(std::move(stopwords)), config_(config), cache_dir_(std::move(cache_dir)) {}

std::vector<std::string> Preprocessor::keywords(const TokenizedDoc& doc) const {
    return tfidf_keywords(doc, idf_, config_.keyword_fraction, stopwords_);
}

std::string Preprocessor::cache_key(const std::string& document) const {
    return graph_cache_key(document, keywords(tokenize(document)), config_.distance_threshold);
}

KeywordGraph Preprocessor::graph(const std::string& document) const {
    const auto doc = tokenize(document);
    const auto kws = keywords(doc);
    if (!cache_dir_) return build_graph(doc, kws, config_.distance_threshold);
    const auto path = *cache_dir_ / (graph_cache_key(document, kws, config_.distance_threshold) + ".json");
    if (std::filesystem::exists(path)) return load_graph(path);
    auto g = build_graph(doc, kws, config_.distance_threshold);
    std::filesystem::create_directories(*cache_dir_);
    save_graph(path, g);
    return g;
}

Sample Preprocessor::prepare(const LabeledPair& pair, const EmbeddingTable& table) const {
    Sample s;
    s.graph = graph(pair.document);
    if (s.graph.size() == 0) throw DataError("document yields no keywords: \"" + pair.document.substr(0, 60) + "\"");
    s.input = embed_pair(tokenize(pair.query).tokens, s.graph, table, config_.max_query_len);
    s.label = pair.label;
    return s;
}

std::vector<Sample> Preprocessor::prepare_all(std::span<const LabeledPair> pairs, const EmbeddingTable& table) const {
    std::vector<Sample> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(prepare(p, table));
    return out;
}

}  // namespace mgan
