#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace mgan {

struct TokenizedDoc {
    std::vector<std::string> tokens;
    std::vector<std::size_t> positions;  // index of each token in `tokens`
};

// Lowercases ASCII letters and splits on every maximal run of
// non-alphanumeric bytes. Bytes >= 0x80 count as alphanumeric so UTF-8
// words stay intact.
TokenizedDoc tokenize(const std::string& text);

class IdfTable {
public:
    IdfTable() = default;
    IdfTable(std::unordered_map<std::string, std::size_t> doc_freq, std::size_t corpus_size);

    // ln((1 + N) / (1 + df)) + 1; unseen tokens use df = 0.
    double idf(const std::string& token) const;
    std::size_t doc_freq(const std::string& token) const;
    std::size_t corpus_size() const { return corpus_size_; }
    const std::unordered_map<std::string, std::size_t>& doc_freqs() const { return doc_freq_; }

private:
    std::unordered_map<std::string, std::size_t> doc_freq_;
    std::size_t corpus_size_ = 0;
};

IdfTable build_idf(std::span<const TokenizedDoc> corpus);

// Sorted "token<TAB>df" lines preceded by "#corpus_size<TAB>N".
void save_idf(const std::filesystem::path& path, const IdfTable& table);
IdfTable load_idf(const std::filesystem::path& path);

using StopwordSet = std::unordered_set<std::string>;

const StopwordSet& default_stopwords();
// One token per line; blank lines and lines starting with '#' are ignored.
StopwordSet load_stopwords(const std::filesystem::path& path);

// Ranks unique non-stopword tokens by raw count times idf, keeping the top
// ceil(fraction * U) (at least min(2, U)), best first, ties by first
// occurrence. `extra` keywords that occur in the document and are not yet
// selected are appended in the given order.
std::vector<std::string> tfidf_keywords(const TokenizedDoc& doc, const IdfTable& idf, double fraction,
                                        const StopwordSet& stopwords,
                                        std::span<const std::string> extra = {});

}  // namespace mgan
