#include "mgan/textpipe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "mgan/error.hpp"

namespace mgan {

namespace {

bool is_word_byte(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

char lower(unsigned char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c); }

}  // namespace

TokenizedDoc tokenize(const std::string& text) {
    TokenizedDoc doc;
    std::string current;
    const auto flush = [&] {
        if (current.empty()) return;
        doc.positions.push_back(doc.tokens.size());
        doc.tokens.push_back(std::move(current));
        current.clear();
    };
    for (unsigned char c : text) {
        if (is_word_byte(c))
            current.push_back(lower(c));
        else
            flush();
    }
    flush();
    return doc;
}

IdfTable::IdfTable(std::unordered_map<std::string, std::size_t> doc_freq, std::size_t corpus_size)
    : doc_freq_(std::move(doc_freq)), corpus_size_(corpus_size) {
    if (corpus_size_ == 0) throw DataError("idf table needs a nonempty corpus");
}

std::size_t IdfTable::doc_freq(const std::string& token) const {
    const auto it = doc_freq_.find(token);
    return it == doc_freq_.end() ? 0 : it->second;
}

double IdfTable::idf(const std::string& token) const {
    const double n = static_cast<double>(corpus_size_);
    const double df = static_cast<double>(doc_freq(token));
    return std::log((1.0 + n) / (1.0 + df)) + 1.0;
}

IdfTable build_idf(std::span<const TokenizedDoc> corpus) {
    if (corpus.empty()) throw DataError("cannot build an idf table from an empty corpus");
    std::unordered_map<std::string, std::size_t> df;
    for (const auto& doc : corpus) {
        std::unordered_set<std::string_view> seen;
        for (const auto& t : doc.tokens)
            if (seen.insert(t).second) ++df[t];
    }
    return IdfTable(std::move(df), corpus.size());
}

void save_idf(const std::filesystem::path& path, const IdfTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write idf table " + path.string());
    out << "#corpus_size\t" << table.corpus_size() << '\n';
    const std::map<std::string, std::size_t> sorted(table.doc_freqs().begin(), table.doc_freqs().end());
    for (const auto& [token, df] : sorted) out << token << '\t' << df << '\n';
}

IdfTable load_idf(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read idf table " + path.string());
    std::string line;
    std::size_t number = 0, corpus_size = 0;
    std::unordered_map<std::string, std::size_t> df;
    while (std::getline(in, line)) {
        ++number;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw DataError(path.string() + ": line " + std::to_string(number) + ": expected token<TAB>count");
        const std::string key = line.substr(0, tab);
        std::size_t value = 0;
        try {
            value = std::stoull(line.substr(tab + 1));
        } catch (const std::exception&) {
            throw DataError(path.string() + ": line " + std::to_string(number) + ": bad count");
        }
        if (key == "#corpus_size")
            corpus_size = value;
        else
            df[key] = value;
    }
    return IdfTable(std::move(df), corpus_size);
}

const StopwordSet& default_stopwords() {
    static const StopwordSet words = {
        "a",       "about",   "above",   "after",   "again",   "against", "all",     "am",      "an",
        "and",     "any",     "are",     "as",      "at",      "be",      "because", "been",    "before",
        "being",   "below",   "between", "both",    "but",     "by",      "can",     "could",   "did",
        "do",      "does",    "doing",   "down",    "during",  "each",    "either",  "else",    "ever",
        "few",     "for",     "from",    "further", "had",     "has",     "have",    "having",  "he",
        "her",     "here",    "hers",    "herself", "him",     "himself", "his",     "how",     "however",
        "i",       "if",      "in",      "into",    "is",      "it",      "its",     "itself",  "just",
        "may",     "me",      "might",   "more",    "most",    "must",    "my",      "myself",  "no",
        "nor",     "not",     "now",     "of",      "off",     "on",      "once",    "only",    "or",
        "other",   "our",     "ours",    "ourselves", "out",   "over",    "own",     "per",     "same",
        "shall",   "she",     "should",  "so",      "some",    "such",    "than",    "that",    "the",
        "their",   "theirs",  "them",    "themselves", "then", "there",   "these",   "they",    "this",
        "those",   "through", "thus",    "to",      "too",     "under",   "until",   "up",      "upon",
        "us",      "very",    "via",     "was",     "we",      "were",    "what",    "when",    "where",
        "whether", "which",   "while",   "who",     "whom",    "whose",   "why",     "will",    "with",
        "within",  "without", "would",   "yet",     "you",     "your",    "yours",   "yourself", "also",
        "although", "among",  "another", "around",  "became",  "become",  "cannot",  "every",   "many",
        "much",    "neither", "often",   "onto",    "since",   "still",   "therefore", "toward", "whereas",
    };
    return words;
}

StopwordSet load_stopwords(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read stopword list " + path.string());
    StopwordSet words;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        for (auto& t : tokenize(line).tokens) words.insert(std::move(t));
    }
    return words;
}

std::vector<std::string> tfidf_keywords(const TokenizedDoc& doc, const IdfTable& idf, double fraction,
                                        const StopwordSet& stopwords, std::span<const std::string> extra) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw DataError("keyword fraction must lie in (0, 1]");

    struct Candidate {
        std::string token;
        std::size_t first = 0;
        std::size_t count = 0;
        double score = 0.0;
    };
    std::vector<Candidate> candidates;
    std::unordered_map<std::string_view, std::size_t> slot;
    for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
        const auto& t = doc.tokens[i];
        if (stopwords.contains(t)) continue;
        const auto [it, inserted] = slot.try_emplace(t, candidates.size());
        if (inserted) candidates.push_back({t, i, 0, 0.0});
        ++candidates[it->second].count;
    }
    for (auto& c : candidates) c.score = static_cast<double>(c.count) * idf.idf(c.token);

    // candidates are already in first-occurrence order, so a stable sort on
    // score alone breaks ties by earliest occurrence.
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.score > b.score; });

    const std::size_t unique = candidates.size();
    std::size_t keep = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(unique) - 1e-12));
    keep = std::max(keep, std::min<std::size_t>(2, unique));
    keep = std::min(keep, unique);

    std::vector<std::string> out;
    out.reserve(keep + extra.size());
    for (std::size_t i = 0; i < keep; ++i) out.push_back(candidates[i].token);

    if (!extra.empty()) {
        const std::unordered_set<std::string_view> present(doc.tokens.begin(), doc.tokens.end());
        for (const auto& e : extra) {
            if (!present.contains(e)) continue;
            if (std::find(out.begin(), out.end(), e) == out.end()) out.push_back(e);
        }
    }
    return out;
}

}  // namespace mgan
