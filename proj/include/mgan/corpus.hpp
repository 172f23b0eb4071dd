#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mgan {

struct LabeledPair {
    std::string query;
    std::string document;
    int label = 0;

    bool operator==(const LabeledPair&) const = default;
};

enum class PairFormat { jsonl, tsv };

PairFormat parse_pair_format(const std::string& name);

// One pair per record in file order. JSONL records are
// {"query": str, "document": str, "label": 0|1}; TSV rows are
// query<TAB>document<TAB>label. Blank lines are skipped. Throws DataError
// naming the offending line.
std::vector<LabeledPair> load_pairs(const std::filesystem::path& path, PairFormat format);
std::vector<LabeledPair> parse_pairs(const std::string& text, PairFormat format);

void write_pairs_jsonl(const std::filesystem::path& path, const std::vector<LabeledPair>& pairs);

struct TopicDocument {
    std::string document;
    std::string topic;
};

// For every document emits the positive (true topic, 1) pair followed by
// ceil(ratio) negatives drawn without replacement from the other topics.
// The topic string becomes the query text.
std::vector<LabeledPair> generate_negatives(const std::vector<TopicDocument>& docs,
                                            const std::vector<std::string>& topics, double ratio,
                                            std::uint64_t seed);

struct SplitRatios {
    double train = 0.6;
    double dev = 0.2;
    double test = 0.2;
};

struct SplitSet {
    std::vector<LabeledPair> train;
    std::vector<LabeledPair> dev;
    std::vector<LabeledPair> test;
    std::uint64_t seed = 0;
    SplitRatios ratios;
};

// Seeded shuffle followed by a contiguous partition. Dev and test receive
// floor(n * ratio) elements; the remainder goes to train.
SplitSet split(const std::vector<LabeledPair>& pairs, SplitRatios ratios, std::uint64_t seed);

// Writes train.jsonl, dev.jsonl, test.jsonl and split_manifest.json.
void write_split(const std::filesystem::path& dir, const SplitSet& splits);

}  // namespace mgan
