#include "mgan/embed.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>

#include "mgan/error.hpp"

namespace mgan {

namespace {

std::string fold(const std::string& s) {
    std::string out = s;
    for (auto& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

}  // namespace

EmbeddingTable::EmbeddingTable(std::size_t dim) : dim_(dim) {
    if (dim_ == 0) throw DataError("embedding dimension must be positive");
}

bool EmbeddingTable::insert(const std::string& token, std::vector<double> vec) {
    if (vec.size() != dim_)
        throw DataError("embedding for \"" + token + "\" has " + std::to_string(vec.size()) +
                        " values, expected " + std::to_string(dim_));
    auto [it, inserted] = vectors_.insert_or_assign(fold(token), std::move(vec));
    if (!inserted) ++duplicates_;
    return !inserted;
}

const std::vector<double>* EmbeddingTable::find(const std::string& token) const {
    const auto it = vectors_.find(fold(token));
    return it == vectors_.end() ? nullptr : &it->second;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path, std::size_t expected_dim) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read embeddings " + path.string());
    EmbeddingTable table(expected_dim);
    std::string line;
    std::size_t number = 0;
    std::vector<double> vec;
    const auto fail = [&](const std::string& what) {
        throw DataError(path.string() + ": line " + std::to_string(number) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto space = line.find(' ');
        if (space == std::string::npos || space == 0) fail("expected a token followed by values");
        const std::string token = line.substr(0, space);
        vec.clear();
        const char* p = line.data() + space;
        const char* end = line.data() + line.size();
        while (true) {
            while (p < end && *p == ' ') ++p;
            if (p == end) break;
            double v = 0.0;
            const auto [next, ec] = std::from_chars(p, end, v);
            if (ec != std::errc() || (next < end && *next != ' ')) fail("malformed number");
            if (!std::isfinite(v)) fail("non-finite value");
            vec.push_back(v);
            p = next;
        }
        if (vec.size() != expected_dim)
            fail("found " + std::to_string(vec.size()) + " values, expected dimension " + std::to_string(expected_dim));
        table.insert(token, vec);
    }
    return table;
}

EmbeddedPair embed_pair(const std::vector<std::string>& query_tokens, const KeywordGraph& graph,
                        const EmbeddingTable& table, std::size_t max_query_len) {
    if (max_query_len == 0) throw DataError("max query length must be positive");
    const std::size_t dim = table.dim();
    EmbeddedPair out;
    out.query = Matrix(max_query_len, dim, 0.0);
    out.mask.assign(max_query_len, false);
    const std::size_t used = std::min(query_tokens.size(), max_query_len);
    for (std::size_t t = 0; t < used; ++t) {
        out.mask[t] = true;
        if (const auto* v = table.find(query_tokens[t])) std::copy(v->begin(), v->end(), out.query.row(t).begin());
    }

    out.vertices = Matrix(graph.size(), dim, 0.0);
    for (std::size_t i = 0; i < graph.size(); ++i)
        if (const auto* v = table.find(graph.vertices[i])) std::copy(v->begin(), v->end(), out.vertices.row(i).begin());

    // Counted over the full query, not the truncated prefix.
    std::set<std::string> oov;
    for (const auto& t : query_tokens)
        if (!table.contains(t)) oov.insert(t);
    std::size_t common = 0;
    for (const auto& v : graph.vertices)
        if (oov.contains(v)) ++common;
    out.oov = static_cast<double>(common);
    return out;
}

}  // namespace mgan
