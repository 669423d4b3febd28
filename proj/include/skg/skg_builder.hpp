#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "skg/errors.hpp"
#include "skg/random.hpp"
#include "skg/stopwords.hpp"
#include "skg/text.hpp"
#include "skg/triplet_extractor.hpp"

namespace skg {

/// How the low-frequency threshold compares. Strict drops frequency <= lambda, so
/// lambda = 1 removes entities seen once; Lenient drops frequency < lambda.
enum class ThresholdMode { Strict, Lenient };

inline std::string_view threshold_mode_name(ThresholdMode m)
{
    return m == ThresholdMode::Strict ? "strict" : "lenient";
}

inline ThresholdMode parse_threshold_mode(std::string_view s)
{
    if (s == "strict") {
        return ThresholdMode::Strict;
    }
    if (s == "lenient") {
        return ThresholdMode::Lenient;
    }
    throw ArgumentError("unknown threshold mode '" + std::string(s) + "'");
}

struct KgTriplet {
    std::string subject;
    std::string predicate;
    std::string object;
    std::size_t frequency = 0;
    std::vector<std::string> sources;

    friend bool operator==(KgTriplet const&, KgTriplet const&) = default;
};

struct KnowledgeGraph {
    std::vector<KgTriplet> triplets;
    std::map<std::string, std::size_t> entity_freq;
    std::size_t lambda_used = 0;
    ThresholdMode mode = ThresholdMode::Strict;

    friend bool operator==(KnowledgeGraph const&, KnowledgeGraph const&) = default;
};

// ---- word classes -------------------------------------------------------

inline bool is_numeric_word(std::string_view w)
{
    bool digit = false;
    for (char c : w) {
        if (std::isdigit(static_cast<unsigned char>(c))) {
            digit = true;
        } else if (std::string_view(".,-+%/").find(c) == std::string_view::npos) {
            return false;
        }
    }
    return digit;
}

inline bool is_punctuation_word(std::string_view w)
{
    return !w.empty() && std::all_of(w.begin(), w.end(), [](char c) {
        return std::ispunct(static_cast<unsigned char>(c)) != 0;
    });
}

inline bool is_single_letter(std::string_view w)
{
    return utf8_length(w) == 1 && !is_numeric_word(w) && !is_punctuation_word(w);
}

/// Letters, numbers and punctuation carry no concept of their own.
inline bool is_meaningless_word(std::string_view w)
{
    return w.empty() || is_numeric_word(w) || is_punctuation_word(w) || is_single_letter(w);
}

inline bool is_all_stopwords(std::string_view text)
{
    auto words = split_whitespace(text);
    return std::all_of(words.begin(), words.end(), [](auto const& w) { return is_stopword(w); });
}

// ---- filters ----------------------------------------------------------------

namespace detail {

template <typename Pred>
void remove_words_if(Chunk& c, Pred drop)
{
    Chunk kept;
    for (std::size_t i = 0; i < c.words.size(); ++i) {
        if (!drop(c.words[i])) {
            kept.token_indices.push_back(c.token_indices[i]);
            kept.words.push_back(std::move(c.words[i]));
        }
    }
    c = std::move(kept);
}

}  // namespace detail

/// Strips letters, numerals and punctuation from both argument chunks. Candidates left with
/// an empty argument, or whose predicate is itself meaningless, are dropped.
inline std::vector<TripletCandidate> filter_meaningless(std::vector<TripletCandidate> candidates)
{
    std::vector<TripletCandidate> out;
    out.reserve(candidates.size());
    for (auto& c : candidates) {
        if (is_meaningless_word(c.predicate)) {
            continue;
        }
        detail::remove_words_if(c.subject, is_meaningless_word);
        detail::remove_words_if(c.object, is_meaningless_word);
        if (!c.subject.empty() && !c.object.empty()) {
            out.push_back(std::move(c));
        }
    }
    return out;
}

/// Removes shipped stopwords from arguments. Predicates are left alone.
inline std::vector<TripletCandidate> strip_stopwords(std::vector<TripletCandidate> candidates)
{
    std::vector<TripletCandidate> out;
    out.reserve(candidates.size());
    for (auto& c : candidates) {
        detail::remove_words_if(c.subject, [](std::string const& w) { return is_stopword(w); });
        detail::remove_words_if(c.object, [](std::string const& w) { return is_stopword(w); });
        if (!c.subject.empty() && !c.object.empty()) {
            out.push_back(std::move(c));
        }
    }
    return out;
}

/// Subject and object mentions per entity string.
inline std::map<std::string, std::size_t>
count_entities(std::vector<TripletCandidate> const& candidates)
{
    std::map<std::string, std::size_t> freq;
    for (auto const& c : candidates) {
        ++freq[c.subject.text()];
        ++freq[c.object.text()];
    }
    return freq;
}

inline bool frequency_survives(std::size_t freq, std::size_t lambda, ThresholdMode mode)
{
    return mode == ThresholdMode::Strict ? freq > lambda : freq >= lambda;
}

/// Drops candidates mentioning a rare entity. Dropping a candidate lowers the counts of its
/// other entity, so count-then-filter repeats until nothing changes; every survivor then
/// passes the threshold against the surviving counts.
inline std::vector<TripletCandidate> filter_low_frequency(std::vector<TripletCandidate> candidates,
                                                          std::size_t lambda,
                                                          ThresholdMode mode = ThresholdMode::Strict)
{
    for (;;) {
        auto freq = count_entities(candidates);
        std::vector<TripletCandidate> kept;
        kept.reserve(candidates.size());
        for (auto& c : candidates) {
            if (frequency_survives(freq[c.subject.text()], lambda, mode)
                && frequency_survives(freq[c.object.text()], lambda, mode)) {
                kept.push_back(std::move(c));
            }
        }
        if (kept.size() == candidates.size()) {
            return kept;
        }
        candidates = std::move(kept);
    }
}

struct BuildStats {
    std::size_t input = 0;
    std::size_t after_meaningless = 0;
    std::size_t after_stopwords = 0;
    std::size_t after_frequency = 0;
};

/// meaningless -> stopwords -> frequency, then dedupe on (s, p, o) in lexicographic order.
inline KnowledgeGraph build_skg(std::vector<TripletCandidate> candidates, std::size_t lambda,
                                ThresholdMode mode = ThresholdMode::Strict,
                                BuildStats* stats = nullptr)
{
    BuildStats st;
    st.input = candidates.size();
    auto cleaned = filter_meaningless(std::move(candidates));
    st.after_meaningless = cleaned.size();
    cleaned = strip_stopwords(std::move(cleaned));
    st.after_stopwords = cleaned.size();
    cleaned = filter_low_frequency(std::move(cleaned), lambda, mode);
    st.after_frequency = cleaned.size();
    if (stats != nullptr) {
        *stats = st;
    }

    KnowledgeGraph kg;
    kg.lambda_used = lambda;
    kg.mode = mode;
    kg.entity_freq = count_entities(cleaned);

    std::map<std::tuple<std::string, std::string, std::string>, KgTriplet> merged;
    for (auto const& c : cleaned) {
        auto key = std::make_tuple(c.subject.text(), c.predicate, c.object.text());
        auto& t = merged[key];
        if (t.frequency == 0) {
            std::tie(t.subject, t.predicate, t.object) = key;
        }
        ++t.frequency;
        t.sources.push_back(c.sent_id);
    }
    kg.triplets.reserve(merged.size());
    for (auto& [key, t] : merged) {
        kg.triplets.push_back(std::move(t));
    }
    if (kg.triplets.empty()) {
        warn("knowledge graph is empty after filtering (lambda = " + std::to_string(lambda) + ")");
    }
    return kg;
}

/// Expands each triplet back into `frequency` candidates, one per source.
inline std::vector<TripletCandidate> to_candidates(KnowledgeGraph const& kg)
{
    std::vector<TripletCandidate> out;
    for (auto const& t : kg.triplets) {
        for (std::size_t i = 0; i < t.frequency; ++i) {
            nlohmann::json j{{"s", t.subject},
                             {"p", t.predicate},
                             {"o", t.object},
                             {"sent_id", i < t.sources.size() ? t.sources[i] : std::string()}};
            out.push_back(candidate_from_json(j));
        }
    }
    return out;
}

/// Full scan of the graph invariants. Returns one message per violation.
inline std::vector<std::string> check_invariants(KnowledgeGraph const& kg)
{
    std::vector<std::string> problems;
    std::map<std::tuple<std::string, std::string, std::string>, int> seen;
    std::map<std::string, std::size_t> recount;
    auto check_entity = [&](std::string const& e, std::size_t row) {
        auto where = " (triplet " + std::to_string(row) + ")";
        if (e.empty()) {
            problems.push_back("empty entity" + where);
            return;
        }
        for (auto const& w : split_whitespace(e)) {
            if (is_meaningless_word(w)) {
                problems.push_back("meaningless token '" + w + "' in entity '" + e + "'" + where);
            }
            if (is_stopword(w)) {
                problems.push_back("stopword '" + w + "' in entity '" + e + "'" + where);
            }
        }
        auto it = kg.entity_freq.find(e);
        if (it == kg.entity_freq.end()) {
            problems.push_back("entity '" + e + "' missing from entity_freq" + where);
        } else if (!frequency_survives(it->second, kg.lambda_used, kg.mode)) {
            problems.push_back("entity '" + e + "' has frequency " + std::to_string(it->second)
                               + " at lambda " + std::to_string(kg.lambda_used) + where);
        }
    };
    std::size_t row = 0;
    for (auto const& t : kg.triplets) {
        if (++seen[{t.subject, t.predicate, t.object}] > 1) {
            problems.push_back("duplicate triplet (" + t.subject + ", " + t.predicate + ", " + t.object
                               + ")");
        }
        if (t.frequency == 0 || t.frequency != t.sources.size()) {
            problems.push_back("frequency does not match source count (triplet " + std::to_string(row)
                               + ")");
        }
        if (t.predicate.empty() || is_meaningless_word(t.predicate)) {
            problems.push_back("bad predicate '" + t.predicate + "' (triplet " + std::to_string(row)
                               + ")");
        }
        check_entity(t.subject, row);
        check_entity(t.object, row);
        recount[t.subject] += t.frequency;
        recount[t.object] += t.frequency;
        ++row;
    }
    if (recount != kg.entity_freq) {
        problems.push_back("entity_freq disagrees with a recount over the triplets");
    }
    return problems;
}

/// Uniform sample of n triplet positions without replacement (partial Fisher-Yates).
inline std::vector<std::size_t> sample_audit(KnowledgeGraph const& kg, std::size_t n, std::uint64_t seed)
{
    if (n > kg.triplets.size()) {
        throw ArgumentError("audit sample of " + std::to_string(n) + " exceeds "
                            + std::to_string(kg.triplets.size()) + " triplets");
    }
    std::vector<std::size_t> ids(kg.triplets.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        ids[i] = i;
    }
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        auto j = i + rng.below(ids.size() - i);
        std::swap(ids[i], ids[j]);
    }
    ids.resize(n);
    return ids;
}

// ---- persistence ------------------------------------------------------------

inline void write_skg(std::ostream& os, KnowledgeGraph const& kg)
{
    for (auto const& t : kg.triplets) {
        nlohmann::json j{{"s", t.subject},
                         {"p", t.predicate},
                         {"o", t.object},
                         {"freq", t.frequency},
                         {"sources", t.sources}};
        os << j.dump() << '\n';
    }
}

/// Reads the triplet lines; entity frequencies are recounted from them.
inline KnowledgeGraph read_skg(std::istream& in, std::size_t lambda = 0,
                               ThresholdMode mode = ThresholdMode::Strict)
{
    KnowledgeGraph kg;
    kg.lambda_used = lambda;
    kg.mode = mode;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            auto j = nlohmann::json::parse(line);
            KgTriplet t;
            j.at("s").get_to(t.subject);
            j.at("p").get_to(t.predicate);
            j.at("o").get_to(t.object);
            j.at("freq").get_to(t.frequency);
            j.at("sources").get_to(t.sources);
            kg.entity_freq[t.subject] += t.frequency;
            kg.entity_freq[t.object] += t.frequency;
            kg.triplets.push_back(std::move(t));
        } catch (nlohmann::json::exception const& e) {
            throw FormatError(e.what(), line_no);
        }
    }
    return kg;
}

inline nlohmann::json audit_record(KnowledgeGraph const& kg, std::size_t id)
{
    auto const& t = kg.triplets.at(id);
    return {{"triplet_id", id},          {"s", t.subject},     {"p", t.predicate},
            {"o", t.object},             {"freq", t.frequency}, {"sources", t.sources},
            {"entity_correct", nullptr}, {"relation_correct", nullptr}};
}

}  // namespace skg
