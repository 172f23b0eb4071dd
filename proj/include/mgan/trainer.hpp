#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mgan/eval.hpp"
#include "mgan/model.hpp"
#include "mgan/pipeline.hpp"

namespace mgan {

struct TrainConfig {
    double learning_rate = 0.001;
    std::size_t epochs = 5;
    std::size_t batch_size = 32;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::uint64_t seed = 0;

    void validate() const;
};

struct AdamState {
    std::vector<std::vector<double>> first_moment;
    std::vector<std::vector<double>> second_moment;
    std::uint64_t step = 0;
};

// One bias-corrected Adam update. An empty state is sized on first use.
void adam_step(std::vector<Tensor>& params, const std::vector<std::vector<double>>& grads, AdamState& state,
               const TrainConfig& config);

struct EpochLog {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double dev_accuracy = 0.0;
    double dev_f1 = 0.0;
};

struct TrainResult {
    ModelParams best;
    std::size_t best_epoch = 0;
    std::vector<EpochLog> log;
};

// Mini-batch Adam on mean BCE. Keeps the parameters from the epoch with the
// highest dev accuracy (earliest on ties).
TrainResult train(const ModelParams& initial, std::span<const Sample> train_set, std::span<const Sample> dev_set,
                  const TrainConfig& t_config, const ModelConfig& m_config);

std::vector<double> predict_all(std::span<const Sample> samples, const ModelParams& params, const ModelConfig& config);
Metrics evaluate(std::span<const Sample> samples, const ModelParams& params, const ModelConfig& config);

// CSV with header epoch,train_loss,dev_accuracy,dev_f1.
std::string epoch_log_csv(const std::vector<EpochLog>& log);
void write_epoch_log(const std::filesystem::path& path, const std::vector<EpochLog>& log);

}  // namespace mgan
