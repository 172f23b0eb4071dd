#include "mgan/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "mgan/error.hpp"

namespace mgan {

void ModelConfig::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DataError("lambda must be a finite nonnegative real");
    if (pool_size == 0) throw DataError("pool size K must be positive");
    if (num_layers == 0) throw DataError("layer count L must be positive");
    if (embed_dim == 0) throw DataError("embedding dimension must be positive");
    if (hidden_size == 0) throw DataError("hidden size must be positive");
    if (conv_kernel_width == 0 || conv_kernel_width % 2 == 0)
        throw DataError("query encoder kernel width must be odd and positive");
    if (max_query_len == 0) throw DataError("max query length must be positive");
}

namespace {

Tensor glorot(Shape shape, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    std::vector<double> v(shape_size(shape));
    for (auto& x : v) x = dist(rng);
    return Tensor::parameter(std::move(shape), std::move(v));
}

}  // namespace

ModelParams ModelParams::init(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    std::mt19937_64 rng(seed);
    const std::size_t d = config.embed_dim;
    const std::size_t width = config.conv_kernel_width;
    ModelParams p;
    for (std::size_t l = 0; l < config.num_layers; ++l) p.gcn_weights.push_back(glorot({d, d}, d, d, rng));
    p.conv_kernel = glorot({width, d, d}, width * d, width * d, rng);
    p.conv_bias = Tensor::zeros({1, d}, true);
    p.hidden_weight = glorot({config.match_length(), config.hidden_size}, config.match_length(), config.hidden_size, rng);
    p.hidden_bias = Tensor::zeros({1, config.hidden_size}, true);
    p.output_weight = glorot({config.hidden_size, 1}, config.hidden_size, 1, rng);
    p.output_bias = Tensor::zeros({1, 1}, true);
    return p;
}

std::vector<std::pair<std::string, Tensor>> ModelParams::named() const {
    std::vector<std::pair<std::string, Tensor>> out;
    for (std::size_t l = 0; l < gcn_weights.size(); ++l) out.emplace_back("gcn." + std::to_string(l) + ".weight", gcn_weights[l]);
    out.emplace_back("query_conv.kernel", conv_kernel);
    out.emplace_back("query_conv.bias", conv_bias);
    out.emplace_back("mlp.hidden.weight", hidden_weight);
    out.emplace_back("mlp.hidden.bias", hidden_bias);
    out.emplace_back("mlp.output.weight", output_weight);
    out.emplace_back("mlp.output.bias", output_bias);
    return out;
}

std::vector<Tensor> ModelParams::all() const {
    std::vector<Tensor> out;
    for (auto& [name, t] : named()) out.push_back(t);
    return out;
}

ModelParams ModelParams::clone() const {
    ModelParams p;
    for (const auto& w : gcn_weights) p.gcn_weights.push_back(w.clone());
    p.conv_kernel = conv_kernel.clone();
    p.conv_bias = conv_bias.clone();
    p.hidden_weight = hidden_weight.clone();
    p.hidden_bias = hidden_bias.clone();
    p.output_weight = output_weight.clone();
    p.output_bias = output_bias.clone();
    return p;
}

void ModelParams::zero_grad() {
    for (auto t : all()) t.zero_grad();
}

Matrix propagation_matrix(const Matrix& adjacency, double lambda) {
    if (adjacency.rows != adjacency.cols) throw DataError("adjacency must be square");
    if (lambda < 0.0 || !std::isfinite(lambda)) throw DataError("lambda must be a finite nonnegative real");
    const std::size_t n = adjacency.rows;
    Matrix p(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double degree = lambda;
        for (std::size_t j = 0; j < n; ++j) degree += adjacency(i, j);
        if (!(degree > 0.0))
            throw DataError("vertex " + std::to_string(i) + " has zero degree with lambda = 0; propagation undefined");
        for (std::size_t j = 0; j < n; ++j) p(i, j) = (adjacency(i, j) + (i == j ? lambda : 0.0)) / degree;
    }
    return p;
}

Tensor encode_query(Tape& tape, const Tensor& query_emb, const std::vector<bool>& mask, const ModelParams& params,
                    const ModelConfig& config) {
    if (!config.use_query_encoder) return query_emb;
    if (mask.size() != query_emb.rows()) throw std::invalid_argument("encode_query: mask length differs from query rows");
    const Tensor conv = tape.relu(tape.conv1d(query_emb, params.conv_kernel, params.conv_bias));
    std::vector<double> keep(conv.size(), 0.0);
    const std::size_t d = conv.cols();
    for (std::size_t t = 0; t < mask.size(); ++t)
        if (mask[t]) std::fill_n(keep.begin() + static_cast<std::ptrdiff_t>(t * d), d, 1.0);
    return tape.mul(conv, Tensor::constant(conv.shape(), std::move(keep)));
}

Tensor gcn_layer(Tape& tape, const Tensor& features, const Tensor& propagation, const Tensor& weight) {
    return tape.relu(tape.matmul(tape.matmul(propagation, features), weight));
}

std::vector<double> reference_spectral_filter(std::span<const double> x, const Matrix& adjacency, double lambda,
                                              double theta) {
    const std::size_t n = adjacency.rows;
    if (adjacency.cols != n || x.size() != n) throw DataError("spectral filter: dimension mismatch");
    std::vector<double> y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double degree = 0.0, neighbours = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            degree += adjacency(i, j);
            neighbours += adjacency(i, j) * x[j];
        }
        if (!(degree > 0.0)) throw DataError("spectral filter: vertex " + std::to_string(i) + " is isolated");
        y[i] = theta * (lambda * x[i] + neighbours / degree);
    }
    return y;
}

std::vector<double> vertex_scores(const Matrix& features) {
    const std::size_t n = features.rows, d = features.cols;
    std::vector<double> t(n, 0.0);
    std::vector<double> column(n);
    for (std::size_t j = 0; j < d; ++j) {
        double mx = -INFINITY;
        for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, features(i, j));
        double z = 0.0;
        for (std::size_t i = 0; i < n; ++i) z += column[i] = std::exp(features(i, j) - mx);
        for (std::size_t i = 0; i < n; ++i) t[i] += column[i] / z;
    }
    return t;
}

PoolSelection rank_and_pool(const Matrix& features, std::size_t k) {
    const auto scores = vertex_scores(features);
    std::vector<std::size_t> order(features.rows);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    PoolSelection sel;
    const std::size_t keep = std::min(k, order.size());
    sel.indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep));
    sel.pad = k - keep;
    return sel;
}

namespace {

Tensor attend_with_transposed(Tape& tape, const Tensor& query, const Tensor& query_t, const std::vector<bool>& mask,
                              const Tensor& vertex, bool use_attention) {
    if (std::none_of(mask.begin(), mask.end(), [](bool b) { return b; }))
        throw DataError("attention over a query with no real tokens");
    if (!use_attention) return tape.masked_max_rows(query, mask);
    const Tensor weights = tape.masked_softmax(tape.matmul(vertex, query_t), mask);
    return tape.matmul(weights, query);
}

}  // namespace

Tensor attend(Tape& tape, const Tensor& query, const std::vector<bool>& mask, const Tensor& vertex,
              bool use_attention) {
    if (mask.size() != query.rows()) throw std::invalid_argument("attend: mask length differs from query rows");
    return attend_with_transposed(tape, query, tape.transpose(query), mask, vertex, use_attention);
}

ForwardResult forward(Tape& tape, const EmbeddedPair& pair, const KeywordGraph& graph, const ModelParams& params,
                      const ModelConfig& config) {
    const std::size_t n = graph.size();
    if (n == 0) throw DataError("forward on an empty keyword graph");
    if (pair.vertices.rows != n || pair.vertices.cols != config.embed_dim)
        throw DataError("vertex embeddings do not match the graph and embedding dimension");
    if (pair.query.cols != config.embed_dim || pair.mask.size() != pair.query.rows)
        throw DataError("query embeddings do not match the embedding dimension");
    if (params.gcn_weights.size() != config.num_layers) throw DataError("parameter layer count differs from config");

    const Tensor query = encode_query(tape, Tensor::constant(pair.query), pair.mask, params, config);
    const Tensor query_t = tape.transpose(query);

    const Tensor raw = Tensor::constant(pair.vertices);
    std::vector<Tensor> layers;
    if (config.use_gcn) {
        const Tensor propagation = Tensor::constant(propagation_matrix(graph.adjacency, config.lambda));
        Tensor x = raw;
        for (const auto& w : params.gcn_weights) layers.push_back(x = gcn_layer(tape, x, propagation, w));
    } else {
        layers.assign(config.num_layers, raw);
    }

    ForwardResult out;
    out.selection = rank_and_pool(layers.back().to_matrix(), config.pool_size);

    std::vector<Tensor> parts;
    parts.reserve(config.match_length());
    const Tensor padding = Tensor::scalar(0.0);
    for (const auto& layer : layers) {
        for (const auto idx : out.selection.indices) {
            const Tensor v = tape.row(layer, idx);
            const Tensor q = attend_with_transposed(tape, query, query_t, pair.mask, v, config.use_attention);
            parts.push_back(match_score(tape, v, q));
        }
        for (std::size_t k = 0; k < out.selection.pad; ++k) parts.push_back(padding);
    }
    parts.push_back(Tensor::scalar(pair.oov));
    const Tensor match = tape.concat(parts);
    out.match.assign(match.values().begin(), match.values().end());

    const Tensor hidden = tape.relu(tape.add(tape.matmul(match, params.hidden_weight), params.hidden_bias));
    out.logit = tape.add(tape.matmul(hidden, params.output_weight), params.output_bias);
    const double z = out.logit.item();
    out.probability = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    return out;
}

double predict(const EmbeddedPair& pair, const KeywordGraph& graph, const ModelParams& params,
               const ModelConfig& config) {
    Tape tape(Tape::Mode::inference);
    return forward(tape, pair, graph, params, config).probability;
}

}  // namespace mgan
