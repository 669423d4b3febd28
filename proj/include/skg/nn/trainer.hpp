#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <sstream>
#include <vector>

#include "skg/errors.hpp"
#include "skg/metrics.hpp"
#include "skg/random.hpp"
#include "skg/nn/infusion_net.hpp"

namespace skg::nn {

/// Decoupled weight decay: p <- p * (1 - lr * wd), then the bias-corrected Adam step.
template <typename T>
class AdamW {
  public:
    explicit AdamW(Parameters<T>& params, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : m_params(params), m_beta1(beta1), m_beta2(beta2), m_eps(eps)
    {
        for (auto* t : params.all()) {
            m_first.push_back(Matrix<T>::Zero(t->value.rows(), t->value.cols()));
            m_second.push_back(Matrix<T>::Zero(t->value.rows(), t->value.cols()));
        }
    }

    void step(double lr, double weight_decay)
    {
        ++m_step;
        T const b1 = static_cast<T>(m_beta1);
        T const b2 = static_cast<T>(m_beta2);
        T const c1 = T(1) - std::pow(b1, static_cast<T>(m_step));
        T const c2 = T(1) - std::pow(b2, static_cast<T>(m_step));
        T const rate = static_cast<T>(lr);
        T const decay = T(1) - rate * static_cast<T>(weight_decay);
        auto tensors = m_params.all();
        for (std::size_t i = 0; i < tensors.size(); ++i) {
            auto& p = tensors[i]->value;
            auto const& g = tensors[i]->grad;
            auto& m = m_first[i];
            auto& v = m_second[i];
            m = b1 * m + (T(1) - b1) * g;
            v = b2 * v + (T(1) - b2) * g.cwiseProduct(g);
            p *= decay;
            p.array() -= rate * (m.array() / c1) / ((v.array() / c2).sqrt() + static_cast<T>(m_eps));
        }
    }

    [[nodiscard]] std::uint64_t steps() const noexcept { return m_step; }

  private:
    Parameters<T>& m_params;
    double m_beta1, m_beta2, m_eps;
    std::vector<Matrix<T>> m_first, m_second;
    std::uint64_t m_step = 0;
};

/// Linear warmup to `base` over `warmup` steps (step is 1-based), constant afterwards.
inline double scheduled_rate(double base, std::uint64_t step, std::uint64_t warmup)
{
    if (warmup == 0 || step >= warmup) {
        return base;
    }
    return base * static_cast<double>(step) / static_cast<double>(warmup);
}

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double last_rate = 0.0;
    std::optional<EvalReport> dev;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    bool stopped_early = false;
};

template <typename T>
EvalReport evaluate_model(InfusionNet<T>& net, std::span<EncodedExample const> data)
{
    std::vector<Label> preds;
    std::vector<Label> golds;
    for (auto const& ex : data) {
        preds.push_back(static_cast<Label>(net.predict(ex)));
        golds.push_back(static_cast<Label>(ex.label));
    }
    return evaluate(preds, golds);
}

/// Mini-batch AdamW over `train_set` for the configured epochs. With a dev set, training
/// stops once dev macro-F1 fails to improve for `patience` epochs and the best parameters are
/// restored. Dropout is active only inside optimization steps.
template <typename T>
TrainHistory train(InfusionNet<T>& net, std::span<EncodedExample const> train_set,
                   std::span<EncodedExample const> dev_set, std::uint64_t seed)
{
    auto const& cfg = net.config();
    if (train_set.empty()) {
        throw ArgumentError("training set is empty");
    }
    Rng rng(seed);
    Dropout dropout{&rng, cfg.dropout};
    AdamW<T> opt(net.params());
    TrainHistory history;
    std::optional<Parameters<T>> best;
    double best_f1 = -1.0;
    std::size_t since_best = 0;

    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(order.begin(), order.end());
        EpochRecord rec;
        rec.epoch = epoch;
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            std::vector<EncodedExample> batch;
            for (std::size_t i = start; i < order.size() && i < start + cfg.batch_size; ++i) {
                batch.push_back(train_set[order[i]]);
            }
            net.params().zero_grad();
            T loss = net.loss_and_grad(batch, cfg.mode, &dropout);
            if (!std::isfinite(static_cast<double>(loss))) {
                std::ostringstream os;
                os << "non-finite loss " << static_cast<double>(loss) << " at epoch " << epoch << ", step "
                   << opt.steps() + 1 << "; parameter norms:";
                for (auto const* t : net.params().all()) {
                    os << ' ' << t->name << '=' << static_cast<double>(t->value.norm());
                }
                throw TrainingError(os.str());
            }
            rec.last_rate = scheduled_rate(cfg.learning_rate, opt.steps() + 1, cfg.warmup_steps);
            opt.step(rec.last_rate, cfg.weight_decay);
            if (!net.params().finite()) {
                throw TrainingError("parameters became non-finite at epoch " + std::to_string(epoch));
            }
            loss_sum += static_cast<double>(loss);
            ++batches;
        }
        rec.train_loss = loss_sum / static_cast<double>(batches);
        if (!dev_set.empty()) {
            rec.dev = evaluate_model(net, dev_set);
            if (rec.dev->macro_f1 > best_f1) {
                best_f1 = rec.dev->macro_f1;
                best = net.params();
                history.best_epoch = epoch;
                since_best = 0;
            } else {
                ++since_best;
            }
        } else {
            history.best_epoch = epoch;
        }
        history.epochs.push_back(std::move(rec));
        if (!dev_set.empty() && since_best >= cfg.patience) {
            history.stopped_early = true;
            break;
        }
    }
    if (best) {
        net.params() = *best;
    }
    return history;
}

}  // namespace skg::nn
