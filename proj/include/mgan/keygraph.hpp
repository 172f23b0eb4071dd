#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mgan/matrix.hpp"
#include "mgan/textpipe.hpp"

namespace mgan {

// Weighted undirected keyword graph of one document. adjacency is symmetric
// with a zero diagonal.
struct KeywordGraph {
    std::vector<std::string> vertices;
    Matrix adjacency;

    std::size_t size() const { return vertices.size(); }
    bool operator==(const KeywordGraph&) const = default;
};

inline constexpr std::size_t default_distance_threshold = 20;

// For each keyword pair, the keyword with fewer occurrences (the earlier
// vertex on ties) is matched occurrence-by-occurrence to the nearest
// occurrence of the other. With m matched occurrences and total distance S,
// the mean distance is S / m; an edge exists iff S / m < threshold, with
// weight m / S. Distances are token positions in the full sequence.
KeywordGraph build_graph(const TokenizedDoc& doc, std::span<const std::string> keywords,
                         std::size_t threshold = default_distance_threshold);

struct AdjacencyStats {
    std::size_t vertex_count = 0;
    std::size_t edge_count = 0;
    double weight_min = 0.0;
    double weight_max = 0.0;
    double mean_degree = 0.0;
};

AdjacencyStats adjacency_stats(const KeywordGraph& graph);

// {"vertices": [...], "edges": [[i, j, w], ...]} with i < j and weights at
// 17 significant digits.
std::string graph_to_json(const KeywordGraph& graph);
KeywordGraph graph_from_json(const std::string& text);
void save_graph(const std::filesystem::path& path, const KeywordGraph& graph);
KeywordGraph load_graph(const std::filesystem::path& path);

// Stable 64-bit FNV-1a content key over (document, keywords, threshold),
// rendered as 16 hex digits.
std::string graph_cache_key(const std::string& document, std::span<const std::string> keywords,
                            std::size_t threshold);

}  // namespace mgan
