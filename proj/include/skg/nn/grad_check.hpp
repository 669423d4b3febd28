#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "skg/random.hpp"
#include "skg/nn/autograd.hpp"
#include "skg/nn/infusion_net.hpp"

namespace skg::nn {

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::string worst_tensor;
    std::size_t entries_checked = 0;
    bool all_finite = true;
};

struct GradCheckOptions {
    double epsilon = 1e-5;
    /// Tensors with more entries than this are sampled instead of checked exhaustively.
    std::size_t exhaustive_limit = 4096;
    double sample_fraction = 0.01;
    /// |a - n| / max(|a|, |n|, floor); keeps entries whose true gradient is ~0 from
    /// dividing truncation noise by nothing.
    double denominator_floor = 1e-6;
    std::uint64_t seed = 1;
};

/// Compares the analytic gradient left in each tensor's `grad` by `loss(true)` against central
/// differences of `loss(false)`. `loss(backprop)` must return the scalar loss and, when
/// `backprop` is set, leave d(loss)/d(tensor) in the tensors' grad fields.
template <typename T>
GradCheckResult grad_check(std::vector<Tensor<T>*> const& tensors, std::function<T(bool)> const& loss,
                           GradCheckOptions const& opt = {})
{
    for (auto* t : tensors) {
        t->zero_grad();
    }
    loss(true);
    std::vector<Matrix<T>> analytic;
    for (auto* t : tensors) {
        analytic.push_back(t->grad);
    }

    GradCheckResult res;
    Rng rng(opt.seed);
    T const eps = static_cast<T>(opt.epsilon);
    for (std::size_t ti = 0; ti < tensors.size(); ++ti) {
        auto& value = tensors[ti]->value;
        auto const n = static_cast<std::size_t>(value.size());
        std::vector<std::size_t> entries;
        if (n <= opt.exhaustive_limit) {
            for (std::size_t i = 0; i < n; ++i) {
                entries.push_back(i);
            }
        } else {
            auto count = std::max<std::size_t>(1, static_cast<std::size_t>(opt.sample_fraction * static_cast<double>(n)));
            for (std::size_t i = 0; i < count; ++i) {
                entries.push_back(rng.below(n));
            }
        }
        for (auto i : entries) {
            T const saved = value.data()[i];
            value.data()[i] = saved + eps;
            T const up = loss(false);
            value.data()[i] = saved - eps;
            T const down = loss(false);
            value.data()[i] = saved;
            double const numeric = static_cast<double>((up - down) / (T(2) * eps));
            double const exact = static_cast<double>(analytic[ti].data()[i]);
            if (!std::isfinite(numeric) || !std::isfinite(exact)) {
                res.all_finite = false;
                continue;
            }
            double const denom = std::max({std::abs(exact), std::abs(numeric), opt.denominator_floor});
            double const rel = std::abs(exact - numeric) / denom;
            if (rel > res.max_relative_error) {
                res.max_relative_error = rel;
                res.worst_tensor = tensors[ti]->name + "[" + std::to_string(i) + "]";
            }
            ++res.entries_checked;
        }
    }
    return res;
}

/// Gradient check of the cross-entropy of `net` on one example, dropout off.
template <typename T>
GradCheckResult grad_check(InfusionNet<T>& net, EncodedExample const& ex, FusionMode mode,
                           GradCheckOptions const& opt = {})
{
    std::function<T(bool)> loss = [&](bool backprop) {
        Tape<T> tape;
        auto logits = net.forward(tape, ex, mode);
        auto l = tape.cross_entropy(logits, ex.label);
        if (backprop) {
            tape.backward(l);
        }
        return tape.value(l)(0, 0);
    };
    return grad_check<T>(net.params().all(), loss, opt);
}

}  // namespace skg::nn
