#include "mgan/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "mgan/error.hpp"

namespace mgan {

namespace {

std::string trim(const std::string& s) {
    const auto ws = " \t\r\n\f\v";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail_line(std::size_t line, const std::string& what) {
    throw DataError("line " + std::to_string(line) + ": " + what);
}

LabeledPair checked_pair(std::string query, std::string document, long long label, std::size_t line) {
    if (label != 0 && label != 1) fail_line(line, "label must be 0 or 1, got " + std::to_string(label));
    LabeledPair p{trim(query), trim(document), static_cast<int>(label)};
    if (p.query.empty()) fail_line(line, "empty query");
    if (p.document.empty()) fail_line(line, "empty document");
    return p;
}

LabeledPair parse_jsonl_record(const std::string& text, std::size_t line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail_line(line, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) fail_line(line, "record is not a JSON object");
    for (const char* key : {"query", "document", "label"})
        if (!j.contains(key)) fail_line(line, std::string("missing field \"") + key + "\"");
    if (!j["query"].is_string()) fail_line(line, "\"query\" must be a string");
    if (!j["document"].is_string()) fail_line(line, "\"document\" must be a string");
    const auto& label = j["label"];
    if (!label.is_number_integer()) fail_line(line, "\"label\" must be an integer 0 or 1");
    return checked_pair(j["query"].get<std::string>(), j["document"].get<std::string>(),
                        label.get<long long>(), line);
}

LabeledPair parse_tsv_record(const std::string& text, std::size_t line) {
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
        const auto tab = text.find('\t', start);
        cols.push_back(text.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
        if (tab == std::string::npos) break;
        start = tab + 1;
    }
    if (cols.size() != 3) fail_line(line, "expected 3 tab-separated fields, got " + std::to_string(cols.size()));
    const std::string label = trim(cols[2]);
    if (label != "0" && label != "1") fail_line(line, "label must be 0 or 1, got \"" + label + "\"");
    return checked_pair(cols[0], cols[1], label == "1" ? 1 : 0, line);
}

}  // namespace

PairFormat parse_pair_format(const std::string& name) {
    if (name == "jsonl") return PairFormat::jsonl;
    if (name == "tsv") return PairFormat::tsv;
    throw DataError("unknown pair format \"" + name + "\" (expected jsonl or tsv)");
}

std::vector<LabeledPair> parse_pairs(const std::string& text, PairFormat format) {
    std::vector<LabeledPair> out;
    std::istringstream in(text);
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (trim(line).empty()) continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        out.push_back(format == PairFormat::jsonl ? parse_jsonl_record(line, number)
                                                  : parse_tsv_record(line, number));
    }
    return out;
}

std::vector<LabeledPair> load_pairs(const std::filesystem::path& path, PairFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read pair file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_pairs(buf.str(), format);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void write_pairs_jsonl(const std::filesystem::path& path, const std::vector<LabeledPair>& pairs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    for (const auto& p : pairs) {
        nlohmann::ordered_json j;
        j["query"] = p.query;
        j["document"] = p.document;
        j["label"] = p.label;
        out << j.dump() << '\n';
    }
}

std::vector<LabeledPair> generate_negatives(const std::vector<TopicDocument>& docs,
                                            const std::vector<std::string>& topics, double ratio,
                                            std::uint64_t seed) {
    if (!(ratio > 0.0) || !std::isfinite(ratio)) throw DataError("negative ratio must be a positive real");
    std::vector<std::string> universe;
    for (const auto& t : topics)
        if (std::find(universe.begin(), universe.end(), t) == universe.end()) universe.push_back(t);
    if (universe.size() < 2) throw DataError("topic universe needs at least 2 distinct topics to draw negatives");
    const auto per_doc = static_cast<std::size_t>(std::ceil(ratio));
    if (per_doc > universe.size() - 1)
        throw DataError("cannot draw " + std::to_string(per_doc) + " distinct negatives from " +
                        std::to_string(universe.size() - 1) + " other topics");

    std::mt19937_64 rng(seed);
    std::vector<LabeledPair> out;
    out.reserve(docs.size() * (per_doc + 1));
    std::vector<std::string> others;
    for (std::size_t d = 0; d < docs.size(); ++d) {
        const auto& doc = docs[d];
        if (std::find(universe.begin(), universe.end(), doc.topic) == universe.end())
            throw DataError("document " + std::to_string(d) + " has topic \"" + doc.topic + "\" outside the universe");
        out.push_back({doc.topic, doc.document, 1});
        others.clear();
        for (const auto& t : universe)
            if (t != doc.topic) others.push_back(t);
        // Partial Fisher-Yates: the first per_doc slots become the sample.
        for (std::size_t i = 0; i < per_doc; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, others.size() - 1);
            std::swap(others[i], others[pick(rng)]);
            out.push_back({others[i], doc.document, 0});
        }
    }
    return out;
}

SplitSet split(const std::vector<LabeledPair>& pairs, SplitRatios ratios, std::uint64_t seed) {
    if (!(ratios.train > 0 && ratios.dev > 0 && ratios.test > 0))
        throw DataError("split ratios must all be positive");
    if (std::abs(ratios.train + ratios.dev + ratios.test - 1.0) > 1e-9)
        throw DataError("split ratios must sum to 1");
    const std::size_t n = pairs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    // The small epsilon keeps products like 10 * 0.2 = 2.0000000000000004 or
    // 1.9999999999999998 on the intended integer.
    const auto portion = [n](double r) { return static_cast<std::size_t>(std::floor(static_cast<double>(n) * r + 1e-9)); };
    const std::size_t n_dev = portion(ratios.dev);
    const std::size_t n_test = portion(ratios.test);
    const std::size_t n_train = n - n_dev - n_test;

    SplitSet s;
    s.seed = seed;
    s.ratios = ratios;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = pairs[order[i]];
        if (i < n_train)
            s.train.push_back(p);
        else if (i < n_train + n_dev)
            s.dev.push_back(p);
        else
            s.test.push_back(p);
    }
    return s;
}

void write_split(const std::filesystem::path& dir, const SplitSet& splits) {
    std::filesystem::create_directories(dir);
    write_pairs_jsonl(dir / "train.jsonl", splits.train);
    write_pairs_jsonl(dir / "dev.jsonl", splits.dev);
    write_pairs_jsonl(dir / "test.jsonl", splits.test);
    nlohmann::ordered_json m;
    m["seed"] = splits.seed;
    m["ratios"] = {{"train", splits.ratios.train}, {"dev", splits.ratios.dev}, {"test", splits.ratios.test}};
    m["sizes"] = {{"train", splits.train.size()}, {"dev", splits.dev.size()}, {"test", splits.test.size()}};
    std::ofstream out(dir / "split_manifest.json", std::ios::binary);
    if (!out) throw DataError("cannot write split manifest in " + dir.string());
    out << m.dump(2) << '\n';
}

}  // namespace mgan
