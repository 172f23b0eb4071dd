#include "mgan/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include <json.hpp>

#include "mgan/error.hpp"

namespace mgan {

Metrics metrics(std::span<const double> predictions, std::span<const int> labels, double threshold) {
    if (predictions.empty()) throw DataError("metrics of an empty prediction list");
    if (predictions.size() != labels.size())
        throw DataError("metrics: " + std::to_string(predictions.size()) + " predictions for " +
                        std::to_string(labels.size()) + " labels");
    Metrics m;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const bool predicted = predictions[i] >= threshold;
        const bool actual = labels[i] == 1;
        if (predicted && actual) ++m.tp;
        else if (predicted) ++m.fp;
        else if (actual) ++m.fn;
        else ++m.tn;
    }
    m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(m.n());
    const double precision = m.tp + m.fp ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp) : 0.0;
    const double recall = m.tp + m.fn ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn) : 0.0;
    m.f1 = precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    return m;
}

std::string metrics_json(const Metrics& m) {
    nlohmann::ordered_json j;
    j["accuracy"] = m.accuracy;
    j["f1"] = m.f1;
    j["tp"] = m.tp;
    j["fp"] = m.fp;
    j["tn"] = m.tn;
    j["fn"] = m.fn;
    j["n"] = m.n();
    return j.dump(2) + "\n";
}

namespace {

std::map<std::string, double> tfidf_vector(const std::string& text, const IdfTable& idf) {
    std::map<std::string, double> counts;
    for (const auto& t : tokenize(text).tokens) counts[t] += 1.0;
    for (auto& [token, weight] : counts) weight *= idf.idf(token);
    return counts;
}

}  // namespace

double tfidf_cosine_baseline(const LabeledPair& pair, const IdfTable& idf) {
    const auto q = tfidf_vector(pair.query, idf);
    const auto d = tfidf_vector(pair.document, idf);
    double dot = 0.0, nq = 0.0, nd = 0.0;
    for (const auto& [t, w] : q) {
        nq += w * w;
        if (const auto it = d.find(t); it != d.end()) dot += w * it->second;
    }
    for (const auto& [t, w] : d) nd += w * w;
    if (nq == 0.0 || nd == 0.0) return 0.0;
    // Clamp rounding overshoot so identical texts give exactly 1.
    return std::clamp(dot / (std::sqrt(nq) * std::sqrt(nd)), 0.0, 1.0);
}

double tune_threshold(std::span<const double> scores, std::span<const int> labels) {
    if (scores.empty() || scores.size() != labels.size()) throw DataError("threshold tuning needs matching nonempty inputs");
    std::vector<double> candidates(scores.begin(), scores.end());
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    candidates.push_back(std::nextafter(candidates.back(), INFINITY));
    double best = candidates.front();
    double best_acc = -1.0;
    for (double c : candidates) {
        const double acc = metrics(scores, labels, c).accuracy;
        if (acc > best_acc) {
            best_acc = acc;
            best = c;
        }
    }
    return best;
}

}  // namespace mgan
