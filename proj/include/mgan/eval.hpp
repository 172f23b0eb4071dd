#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "mgan/corpus.hpp"
#include "mgan/textpipe.hpp"

namespace mgan {

struct Metrics {
    double accuracy = 0.0;
    double f1 = 0.0;  // positive-class F1; 0 when precision + recall is 0
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

    std::size_t n() const { return tp + fp + tn + fn; }
};

// Positive iff probability >= threshold.
Metrics metrics(std::span<const double> predictions, std::span<const int> labels, double threshold = 0.5);

// {"accuracy", "f1", "tp", "fp", "tn", "fn", "n"}
std::string metrics_json(const Metrics& m);

// Cosine of the raw-count tf * idf vectors of the query and the document.
// Either vector being zero gives 0.
double tfidf_cosine_baseline(const LabeledPair& pair, const IdfTable& idf);

// Threshold maximizing accuracy on (scores, labels). Candidates are the
// distinct scores plus one above the maximum; the smallest best one wins.
double tune_threshold(std::span<const double> scores, std::span<const int> labels);

}  // namespace mgan
