#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "skg/conllu.hpp"
#include "skg/text.hpp"

namespace skg {

/// A contiguous-or-not span of tokens standing for one argument. `words` holds the
/// normalized lemma of each index, in surface order.
struct Chunk {
    std::vector<std::size_t> token_indices;
    std::vector<std::string> words;

    [[nodiscard]] std::string text() const { return join(words); }
    [[nodiscard]] bool empty() const noexcept { return words.empty(); }

    friend bool operator==(Chunk const&, Chunk const&) = default;
};

struct TripletCandidate {
    Chunk subject;
    std::string predicate;
    Chunk object;
    std::string sent_id;

    friend bool operator==(TripletCandidate const&, TripletCandidate const&) = default;
};

inline bool is_predicate(Token const& t)
{
    auto rel = t.base_relation();
    return t.upos == "VERB" && rel != "aux" && rel != "cop";
}

/// Indices of lexical verbs, ascending; auxiliaries and copulas are never predicates.
inline std::vector<std::size_t> locate_predicates(ParsedSentence const& sentence)
{
    std::vector<std::size_t> out;
    for (auto const& t : sentence.tokens) {
        if (is_predicate(t)) {
            out.push_back(t.index);
        }
    }
    return out;
}

namespace detail {

inline bool is_chunk_modifier(std::string_view rel)
{
    return rel == "compound" || rel == "amod" || rel == "flat" || rel == "nummod";
}

}  // namespace detail

/// Head token plus the modifier closure over {compound, amod, flat, nummod, nmod+case}.
/// Clausal and coordination relations are never crossed.
inline Chunk extract_argument_chunk(ParsedSentence const& sentence, std::size_t head_index)
{
    std::vector<std::size_t> members{head_index};
    std::vector<std::size_t> stack{head_index};
    while (!stack.empty()) {
        auto node = stack.back();
        stack.pop_back();
        for (auto child : sentence.children(node)) {
            auto rel = sentence.at(child).base_relation();
            if (detail::is_chunk_modifier(rel)) {
                members.push_back(child);
                stack.push_back(child);
            } else if (rel == "nmod") {
                members.push_back(child);
                stack.push_back(child);
                for (auto grand : sentence.children(child)) {
                    if (sentence.at(grand).base_relation() == "case") {
                        members.push_back(grand);
                    }
                }
            }
        }
    }
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());

    Chunk chunk;
    for (auto idx : members) {
        auto word = sentence.at(idx).normalized_lemma();
        if (!word.empty()) {
            chunk.token_indices.push_back(idx);
            chunk.words.push_back(std::move(word));
        }
    }
    return chunk;
}

namespace detail {

struct SubjectSet {
    std::vector<std::size_t> active;
    std::vector<std::size_t> passive;
};

// Own subjects of `pred`; a coordinated verb without one borrows from its conjunct head.
inline SubjectSet resolve_subjects(ParsedSentence const& s, std::size_t pred)
{
    SubjectSet out;
    for (std::size_t cur = pred;;) {
        for (auto child : s.children(cur)) {
            auto const& t = s.at(child);
            if (t.deprel == "nsubj:pass") {
                out.passive.push_back(child);
            } else if (t.base_relation() == "nsubj") {
                out.active.push_back(child);
            }
        }
        if (!out.active.empty() || !out.passive.empty()) {
            return out;
        }
        auto const& tok = s.at(cur);
        if (tok.base_relation() != "conj" || tok.head == 0 || !is_predicate(s.at(tok.head))) {
            return out;
        }
        cur = tok.head;
    }
}

inline std::string case_suffix(ParsedSentence const& s, std::size_t obl)
{
    std::string suffix;
    for (auto child : s.children(obl)) {
        if (s.at(child).base_relation() == "case") {
            suffix += "_" + s.at(child).normalized_lemma();
        }
    }
    return suffix;
}

inline bool disjoint(Chunk const& a, Chunk const& b)
{
    for (auto i : a.token_indices) {
        if (std::binary_search(b.token_indices.begin(), b.token_indices.end(), i)) {
            return false;
        }
    }
    return true;
}

}  // namespace detail

/// Subject-predicate-object candidates of one sentence, in predicate then object order.
inline std::vector<TripletCandidate> extract_triplets(ParsedSentence const& sentence)
{
    std::vector<TripletCandidate> out;
    for (auto pred : locate_predicates(sentence)) {
        auto lemma = sentence.at(pred).normalized_lemma();
        if (lemma.empty()) {
            continue;
        }
        auto subjects = detail::resolve_subjects(sentence, pred);

        std::vector<std::size_t> agents;
        struct Object {
            std::size_t head;
            std::string predicate;
        };
        std::vector<Object> objects;
        for (auto child : sentence.children(pred)) {
            auto const& t = sentence.at(child);
            auto rel = t.base_relation();
            if (t.deprel == "obl:agent") {
                agents.push_back(child);
            } else if (rel == "obj" || rel == "iobj") {
                objects.push_back({child, lemma});
            } else if (rel == "obl") {
                objects.push_back({child, lemma + detail::case_suffix(sentence, child)});
            }
        }

        std::vector<std::size_t> subject_heads;
        if (!subjects.active.empty()) {
            subject_heads = subjects.active;
        } else if (!subjects.passive.empty()) {
            if (agents.empty()) {
                continue;  // passive subject has no swap partner
            }
            subject_heads = agents;
            for (auto ps : subjects.passive) {
                objects.push_back({ps, lemma});
            }
            std::stable_sort(objects.begin(), objects.end(),
                             [](Object const& a, Object const& b) { return a.head < b.head; });
        }

        for (auto sh : subject_heads) {
            auto subject = extract_argument_chunk(sentence, sh);
            for (auto const& o : objects) {
                auto object = extract_argument_chunk(sentence, o.head);
                if (subject.empty() || object.empty() || !detail::disjoint(subject, object)) {
                    continue;
                }
                out.push_back({subject, o.predicate, std::move(object), sentence.sent_id});
            }
        }
    }
    return out;
}

/// Wire form: {"s", "p", "o", "sent_id"}.
inline nlohmann::json candidate_to_json(TripletCandidate const& c)
{
    return {{"s", c.subject.text()}, {"p", c.predicate}, {"o", c.object.text()}, {"sent_id", c.sent_id}};
}

/// Rebuilds a candidate from its wire form. Token indices are not carried on the wire, so the
/// chunks get synthetic positions 1..n (subject) and n+1.. (object).
inline TripletCandidate candidate_from_json(nlohmann::json const& j)
{
    TripletCandidate c;
    c.subject.words = split_whitespace(j.at("s").get<std::string>());
    c.object.words = split_whitespace(j.at("o").get<std::string>());
    c.predicate = j.at("p").get<std::string>();
    c.sent_id = j.value("sent_id", std::string());
    std::size_t pos = 1;
    for (std::size_t i = 0; i < c.subject.words.size(); ++i) {
        c.subject.token_indices.push_back(pos++);
    }
    for (std::size_t i = 0; i < c.object.words.size(); ++i) {
        c.object.token_indices.push_back(pos++);
    }
    return c;
}

}  // namespace skg
