#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mgan/embed.hpp"
#include "mgan/keygraph.hpp"
#include "mgan/matrix.hpp"
#include "mgan/tensor.hpp"

namespace mgan {

struct ModelConfig {
    double lambda = 1.0;             // self-loop weight in the propagation matrix
    std::size_t pool_size = 20;      // K: vertices kept by rank-and-pool
    std::size_t num_layers = 2;      // L: graph convolution layers
    std::size_t embed_dim = 300;     // d_e
    std::size_t hidden_size = 100;   // aggregation MLP width
    std::size_t conv_kernel_width = 3;
    std::size_t max_query_len = default_max_query_len;
    bool use_gcn = true;
    bool use_attention = true;
    bool use_query_encoder = true;

    // K * L scores plus the OOV feature.
    std::size_t match_length() const { return pool_size * num_layers + 1; }
    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

struct ModelParams {
    std::vector<Tensor> gcn_weights;  // L matrices, each [d_e, d_e]
    Tensor conv_kernel;               // [width, d_e, d_e]
    Tensor conv_bias;                 // [1, d_e]
    Tensor hidden_weight;             // [K*L+1, hidden]
    Tensor hidden_bias;               // [1, hidden]
    Tensor output_weight;             // [hidden, 1]
    Tensor output_bias;               // [1, 1]

    // Uniform in +/- sqrt(6 / (fan_in + fan_out)) per weight, zero biases.
    static ModelParams init(const ModelConfig& config, std::uint64_t seed);

    // Stable names in checkpoint order.
    std::vector<std::pair<std::string, Tensor>> named() const;
    std::vector<Tensor> all() const;
    ModelParams clone() const;
    void zero_grad();
};

// D~^{-1} (A + lambda I) with D~_ii = lambda + sum_j A_ij. Row-stochastic.
Matrix propagation_matrix(const Matrix& adjacency, double lambda);

// Same-length convolution over tokens, ReLU, then padded rows re-zeroed.
// Identity when the query encoder is disabled.
Tensor encode_query(Tape& tape, const Tensor& query_emb, const std::vector<bool>& mask, const ModelParams& params,
                    const ModelConfig& config);

// ReLU(P X W)
Tensor gcn_layer(Tape& tape, const Tensor& features, const Tensor& propagation, const Tensor& weight);

// theta (lambda I + D^{-1} A) x: the first-order random-walk spectral filter
// the production layer generalizes. Kept as a test oracle.
std::vector<double> reference_spectral_filter(std::span<const double> x, const Matrix& adjacency, double lambda,
                                              double theta);

// T_i = sum_j softmax over vertices of column j, evaluated at vertex i.
std::vector<double> vertex_scores(const Matrix& features);

struct PoolSelection {
    std::vector<std::size_t> indices;  // best first, ties by lower index
    std::size_t pad = 0;               // K - d_g when the graph is small
};

PoolSelection rank_and_pool(const Matrix& features, std::size_t k);

// Vertex-aware query: softmax over real tokens of Q v, then the weighted sum
// of query rows. Without attention, the per-dimension max over real rows.
Tensor attend(Tape& tape, const Tensor& query, const std::vector<bool>& mask, const Tensor& vertex,
              bool use_attention = true);

inline Tensor match_score(Tape& tape, const Tensor& vertex, const Tensor& query_repr) {
    return tape.cosine(vertex, query_repr);
}

struct ForwardResult {
    Tensor logit;                // [1, 1]
    double probability = 0.0;
    std::vector<double> match;   // K*L layer-major scores, then x_oov
    PoolSelection selection;
};

ForwardResult forward(Tape& tape, const EmbeddedPair& pair, const KeywordGraph& graph, const ModelParams& params,
                      const ModelConfig& config);

// Inference-only forward returning the probability.
double predict(const EmbeddedPair& pair, const KeywordGraph& graph, const ModelParams& params,
               const ModelConfig& config);

}  // namespace mgan
