#include "mgan/keygraph.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "mgan/error.hpp"

namespace mgan {

namespace {

std::uint64_t nearest_distance(std::uint64_t pos, const std::vector<std::uint64_t>& sorted) {
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), pos);
    std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
    if (it != sorted.end()) best = *it - pos;
    if (it != sorted.begin()) best = std::min(best, pos - *std::prev(it));
    return best;
}

}  // namespace

KeywordGraph build_graph(const TokenizedDoc& doc, std::span<const std::string> keywords, std::size_t threshold) {
    if (threshold == 0) throw DataError("distance threshold must be positive");
    KeywordGraph g;
    std::unordered_set<std::string_view> unique;
    for (const auto& k : keywords) {
        if (!unique.insert(k).second) throw DataError("duplicate keyword \"" + k + "\"");
        g.vertices.push_back(k);
    }
    const std::size_t n = g.vertices.size();

    std::unordered_map<std::string_view, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) index.emplace(g.vertices[i], i);
    std::vector<std::vector<std::uint64_t>> occurrences(n);
    for (std::size_t t = 0; t < doc.tokens.size(); ++t)
        if (const auto it = index.find(doc.tokens[t]); it != index.end()) occurrences[it->second].push_back(doc.positions[t]);
    for (std::size_t i = 0; i < n; ++i)
        if (occurrences[i].empty()) throw DataError("keyword \"" + g.vertices[i] + "\" does not occur in the document");

    g.adjacency = Matrix(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            // The rarer keyword is matched against the other; i wins ties.
            const bool i_leads = occurrences[i].size() <= occurrences[j].size();
            const auto& lead = i_leads ? occurrences[i] : occurrences[j];
            const auto& other = i_leads ? occurrences[j] : occurrences[i];
            std::uint64_t total = 0;
            for (auto p : lead) total += nearest_distance(p, other);
            const std::uint64_t m = lead.size();
            // S / m < threshold, kept in integers.
            if (total >= threshold * m) continue;
            const double w = static_cast<double>(m) / static_cast<double>(total);
            g.adjacency(i, j) = w;
            g.adjacency(j, i) = w;
        }
    return g;
}

AdjacencyStats adjacency_stats(const KeywordGraph& graph) {
    AdjacencyStats s;
    s.vertex_count = graph.size();
    bool first = true;
    for (std::size_t i = 0; i < graph.size(); ++i)
        for (std::size_t j = i + 1; j < graph.size(); ++j) {
            const double w = graph.adjacency(i, j);
            if (w == 0.0) continue;
            ++s.edge_count;
            s.weight_min = first ? w : std::min(s.weight_min, w);
            s.weight_max = first ? w : std::max(s.weight_max, w);
            first = false;
        }
    if (s.vertex_count > 0)
        s.mean_degree = 2.0 * static_cast<double>(s.edge_count) / static_cast<double>(s.vertex_count);
    return s;
}

std::string graph_to_json(const KeywordGraph& graph) {
    std::string out = "{\"vertices\": ";
    out += nlohmann::json(graph.vertices).dump();
    out += ", \"edges\": [";
    bool first = true;
    char buf[64];
    for (std::size_t i = 0; i < graph.size(); ++i)
        for (std::size_t j = i + 1; j < graph.size(); ++j) {
            const double w = graph.adjacency(i, j);
            if (w == 0.0) continue;
            std::snprintf(buf, sizeof buf, "[%zu, %zu, %.17g]", i, j, w);
            if (!first) out += ", ";
            out += buf;
            first = false;
        }
    out += "]}\n";
    return out;
}

KeywordGraph graph_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("malformed graph JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("vertices") || !j.contains("edges"))
        throw DataError("graph JSON needs \"vertices\" and \"edges\"");
    KeywordGraph g;
    for (const auto& v : j["vertices"]) {
        if (!v.is_string()) throw DataError("graph vertices must be strings");
        g.vertices.push_back(v.get<std::string>());
    }
    const std::size_t n = g.vertices.size();
    g.adjacency = Matrix(n, n, 0.0);
    for (const auto& e : j["edges"]) {
        if (!e.is_array() || e.size() != 3 || !e[0].is_number_unsigned() || !e[1].is_number_unsigned() ||
            !e[2].is_number())
            throw DataError("graph edges must be [i, j, w] triples");
        const auto i = e[0].get<std::size_t>(), k = e[1].get<std::size_t>();
        const double w = e[2].get<double>();
        if (i >= k || k >= n) throw DataError("graph edge indices must satisfy i < j < vertex count");
        if (!(w > 0.0)) throw DataError("graph edge weights must be positive");
        g.adjacency(i, k) = w;
        g.adjacency(k, i) = w;
    }
    return g;
}

void save_graph(const std::filesystem::path& path, const KeywordGraph& graph) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write graph cache " + path.string());
    out << graph_to_json(graph);
}

KeywordGraph load_graph(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read graph cache " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return graph_from_json(buf.str());
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::string graph_cache_key(const std::string& document, std::span<const std::string> keywords,
                            std::size_t threshold) {
    std::uint64_t h = 14695981039346656037ULL;
    const auto feed = [&h](std::string_view bytes) {
        for (unsigned char c : bytes) {
            h ^= c;
            h *= 1099511628211ULL;
        }
    };
    const auto separator = std::string_view("\0", 1);
    feed(document);
    feed(separator);
    for (const auto& k : keywords) {
        feed(k);
        feed(separator);
    }
    feed(std::to_string(threshold));
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

}  // namespace mgan
