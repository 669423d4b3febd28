#pragma once

#include <array>
#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "skg/errors.hpp"
#include "skg/text.hpp"

namespace skg {

enum class Label : int { Contrasting = 0, Reasoning = 1, Entailment = 2, Neutral = 3 };

inline constexpr std::size_t num_labels = 4;
inline constexpr std::array<Label, num_labels> all_labels = {
    Label::Contrasting, Label::Reasoning, Label::Entailment, Label::Neutral};

inline std::string_view label_name(Label l)
{
    constexpr std::array<std::string_view, num_labels> names = {
        "contrasting", "reasoning", "entailment", "neutral"};
    return names[static_cast<std::size_t>(l)];
}

/// Case-insensitive; nullopt for anything outside the four classes.
inline std::optional<Label> parse_label(std::string_view s)
{
    auto lower = to_lower(s);
    for (auto l : all_labels) {
        if (lower == label_name(l)) {
            return l;
        }
    }
    return std::nullopt;
}

struct LabeledPair {
    std::string id;
    std::vector<std::string> premise;
    std::vector<std::string> hypothesis;
    Label label = Label::Neutral;

    friend bool operator==(LabeledPair const&, LabeledPair const&) = default;
};

/// Reads labeled-pair JSON Lines. A record without an "id" gets its 0-based record ordinal.
inline std::vector<LabeledPair> load_labeled_pairs(std::istream& in)
{
    std::vector<LabeledPair> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (nlohmann::json::exception const& e) {
            throw FormatError(e.what(), line_no);
        }
        if (!j.is_object()) {
            throw FormatError("record is not a JSON object", line_no);
        }
        for (auto const* field : {"premise", "hypothesis", "label"}) {
            if (!j.contains(field) || !j[field].is_string()) {
                throw FormatError(std::string("missing or non-string field '") + field + "'", line_no);
            }
        }
        LabeledPair pair;
        auto label = parse_label(j["label"].get<std::string>());
        if (!label) {
            throw ValidationError("line " + std::to_string(line_no) + ": unknown label '"
                                  + j["label"].get<std::string>() + "'");
        }
        pair.label = *label;
        pair.premise = split_whitespace(j["premise"].get<std::string>());
        pair.hypothesis = split_whitespace(j["hypothesis"].get<std::string>());
        if (pair.premise.empty() || pair.hypothesis.empty()) {
            throw ValidationError("line " + std::to_string(line_no) + ": empty premise or hypothesis");
        }
        if (j.contains("id")) {
            pair.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
        } else {
            pair.id = std::to_string(out.size());
        }
        out.push_back(std::move(pair));
    }
    return out;
}

}  // namespace skg
