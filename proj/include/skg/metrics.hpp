#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "skg/errors.hpp"
#include "skg/labeled_pairs.hpp"

namespace skg {

struct ClassScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    /// Class never occurs in golds nor predictions, so its F1 is 0 by convention.
    bool absent = false;
};

struct EvalReport {
    std::size_t total = 0;
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    std::array<ClassScores, num_labels> per_class{};
    /// confusion[gold][predicted]
    std::array<std::array<std::size_t, num_labels>, num_labels> confusion{};
};

/// Accuracy, per-class P/R/F1 (0/0 taken as 0) and their unweighted mean.
inline EvalReport evaluate(std::span<Label const> predictions, std::span<Label const> golds)
{
    if (predictions.size() != golds.size()) {
        throw ArgumentError("predictions and golds differ in length");
    }
    if (golds.empty()) {
        throw ArgumentError("cannot evaluate an empty label sequence");
    }
    EvalReport r;
    r.total = golds.size();
    for (std::size_t i = 0; i < golds.size(); ++i) {
        ++r.confusion[static_cast<std::size_t>(golds[i])][static_cast<std::size_t>(predictions[i])];
    }
    std::size_t correct = 0;
    double f1_sum = 0.0;
    for (std::size_t c = 0; c < num_labels; ++c) {
        std::size_t tp = r.confusion[c][c];
        std::size_t gold_c = 0;
        std::size_t pred_c = 0;
        for (std::size_t o = 0; o < num_labels; ++o) {
            gold_c += r.confusion[c][o];
            pred_c += r.confusion[o][c];
        }
        correct += tp;
        auto& s = r.per_class[c];
        s.absent = gold_c == 0 && pred_c == 0;
        s.precision = pred_c == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(pred_c);
        s.recall = gold_c == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(gold_c);
        s.f1 = s.precision + s.recall == 0.0
                   ? 0.0
                   : 2.0 * s.precision * s.recall / (s.precision + s.recall);
        f1_sum += s.f1;
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(r.total);
    r.macro_f1 = f1_sum / static_cast<double>(num_labels);
    return r;
}

inline nlohmann::json report_to_json(EvalReport const& r)
{
    nlohmann::json per_class = nlohmann::json::object();
    for (auto l : all_labels) {
        auto const& s = r.per_class[static_cast<std::size_t>(l)];
        per_class[std::string(label_name(l))] = {
            {"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}, {"absent", s.absent}};
    }
    return {{"examples", r.total},
            {"accuracy", r.accuracy},
            {"macro_f1", r.macro_f1},
            {"per_class", per_class},
            {"confusion", r.confusion}};
}

}  // namespace skg
