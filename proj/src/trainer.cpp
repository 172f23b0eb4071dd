#include "mgan/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "mgan/error.hpp"

namespace mgan {

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw DataError("learning rate must be finite and nonnegative");
    if (epochs == 0) throw DataError("epochs must be positive");
    if (batch_size == 0) throw DataError("batch size must be positive");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
        throw DataError("Adam betas must lie in [0, 1)");
    if (!(adam_epsilon > 0.0)) throw DataError("Adam epsilon must be positive");
}

void adam_step(std::vector<Tensor>& params, const std::vector<std::vector<double>>& grads, AdamState& state,
               const TrainConfig& config) {
    if (grads.size() != params.size()) throw DataError("adam_step: gradient count differs from parameter count");
    if (state.first_moment.empty() && state.step == 0) {
        for (const auto& p : params) {
            state.first_moment.emplace_back(p.size(), 0.0);
            state.second_moment.emplace_back(p.size(), 0.0);
        }
    }
    if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size())
        throw DataError("adam_step: optimizer state does not match the parameters");
    for (std::size_t i = 0; i < params.size(); ++i)
        if (grads[i].size() != params[i].size() || state.first_moment[i].size() != params[i].size() ||
            state.second_moment[i].size() != params[i].size())
            throw DataError("adam_step: shape mismatch for parameter " + std::to_string(i));

    ++state.step;
    const double b1 = config.adam_beta1, b2 = config.adam_beta2;
    const double correction1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double correction2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto values = params[i].mutable_values();
        auto& m = state.first_moment[i];
        auto& v = state.second_moment[i];
        const auto& g = grads[i];
        for (std::size_t k = 0; k < values.size(); ++k) {
            m[k] = b1 * m[k] + (1.0 - b1) * g[k];
            v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
            const double m_hat = m[k] / correction1;
            const double v_hat = v[k] / correction2;
            values[k] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_epsilon);
        }
    }
}

std::vector<double> predict_all(std::span<const Sample> samples, const ModelParams& params, const ModelConfig& config) {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(predict(s.input, s.graph, params, config));
    return out;
}

Metrics evaluate(std::span<const Sample> samples, const ModelParams& params, const ModelConfig& config) {
    std::vector<int> labels;
    for (const auto& s : samples) labels.push_back(s.label);
    return metrics(predict_all(samples, params, config), labels);
}

TrainResult train(const ModelParams& initial, std::span<const Sample> train_set, std::span<const Sample> dev_set,
                  const TrainConfig& t_config, const ModelConfig& m_config) {
    t_config.validate();
    m_config.validate();
    if (train_set.empty()) throw DataError("training set is empty");
    if (dev_set.empty()) throw DataError("dev set is empty");

    ModelParams params = initial.clone();
    std::vector<Tensor> tensors = params.all();
    AdamState state;
    std::mt19937_64 rng(t_config.seed);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    double best_accuracy = -1.0;
    std::size_t batch_index = 0;
    for (std::size_t epoch = 1; epoch <= t_config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_total = 0.0;
        for (std::size_t start = 0; start < order.size(); start += t_config.batch_size, ++batch_index) {
            const std::size_t end = std::min(order.size(), start + t_config.batch_size);
            params.zero_grad();
            Tape tape;
            std::vector<Tensor> logits;
            std::vector<double> labels;
            for (std::size_t i = start; i < end; ++i) {
                const auto& s = train_set[order[i]];
                logits.push_back(forward(tape, s.input, s.graph, params, m_config).logit);
                labels.push_back(static_cast<double>(s.label));
            }
            const Tensor loss = tape.bce_with_logits(tape.concat(logits), labels);
            if (!std::isfinite(loss.item()))
                throw DataError("non-finite training loss in epoch " + std::to_string(epoch) + ", batch " +
                                std::to_string(batch_index) + " (samples " + std::to_string(start) + ".." +
                                std::to_string(end - 1) + " of the shuffled order)");
            tape.backward(loss);
            std::vector<std::vector<double>> grads;
            grads.reserve(tensors.size());
            for (const auto& t : tensors)
                grads.push_back(t.has_grad() ? std::vector<double>(t.grad().begin(), t.grad().end())
                                             : std::vector<double>(t.size(), 0.0));
            adam_step(tensors, grads, state, t_config);
            loss_total += loss.item() * static_cast<double>(end - start);
        }

        const Metrics dev = evaluate(dev_set, params, m_config);
        result.log.push_back({epoch, loss_total / static_cast<double>(order.size()), dev.accuracy, dev.f1});
        if (dev.accuracy > best_accuracy) {
            best_accuracy = dev.accuracy;
            result.best = params.clone();
            result.best_epoch = epoch;
        }
    }
    return result;
}

std::string epoch_log_csv(const std::vector<EpochLog>& log) {
    std::string out = "epoch,train_loss,dev_accuracy,dev_f1\n";
    char buf[128];
    for (const auto& e : log) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", e.epoch, e.train_loss, e.dev_accuracy, e.dev_f1);
        out += buf;
    }
    return out;
}

void write_epoch_log(const std::filesystem::path& path, const std::vector<EpochLog>& log) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write epoch log " + path.string());
    out << epoch_log_csv(log);
}

}  // namespace mgan
