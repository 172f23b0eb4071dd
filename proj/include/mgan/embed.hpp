#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "mgan/keygraph.hpp"
#include "mgan/matrix.hpp"

namespace mgan {

class EmbeddingTable {
public:
    explicit EmbeddingTable(std::size_t dim = 300);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return vectors_.size(); }
    // Number of duplicate tokens overwritten while loading.
    std::size_t duplicates() const { return duplicates_; }

    // Returns true when an existing entry was replaced.
    bool insert(const std::string& token, std::vector<double> vec);
    // Case-folded lookup; nullptr for out-of-vocabulary tokens.
    const std::vector<double>* find(const std::string& token) const;
    bool contains(const std::string& token) const { return find(token) != nullptr; }

private:
    std::size_t dim_;
    std::unordered_map<std::string, std::vector<double>> vectors_;
    std::size_t duplicates_ = 0;

    friend EmbeddingTable load_embeddings(const std::filesystem::path&, std::size_t);
};

// GloVe text layout: token followed by expected_dim space-separated reals per
// line. Later duplicates replace earlier ones and are counted.
EmbeddingTable load_embeddings(const std::filesystem::path& path, std::size_t expected_dim);

inline constexpr std::size_t default_max_query_len = 16;

struct EmbeddedPair {
    Matrix query;            // max_query_len x d_e; padded rows are zero
    std::vector<bool> mask;  // true for real tokens, all leading
    Matrix vertices;         // d_g x d_e
    double oov = 0.0;        // distinct OOV query tokens that are also vertices
};

EmbeddedPair embed_pair(const std::vector<std::string>& query_tokens, const KeywordGraph& graph,
                        const EmbeddingTable& table, std::size_t max_query_len = default_max_query_len);

}  // namespace mgan
