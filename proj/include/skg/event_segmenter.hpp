#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "skg/conllu.hpp"
#include "skg/text.hpp"
#include "skg/triplet_extractor.hpp"

namespace skg {

/// Verb-anchored group of tokens within one sentence.
struct Event {
    std::size_t anchor = 0;
    std::vector<std::size_t> members;  // sorted, includes anchor
    std::string text;

    friend bool operator==(Event const&, Event const&) = default;
};

inline bool is_clausal_relation(std::string_view rel)
{
    return rel == "csubj" || rel == "ccomp" || rel == "xcomp" || rel == "advcl" || rel == "acl"
           || rel == "parataxis";
}

namespace detail {

inline std::string event_text(ParsedSentence const& s, std::vector<std::size_t> const& members)
{
    std::vector<std::string> words;
    words.reserve(members.size());
    for (auto i : members) {
        words.push_back(s.at(i).surface);
    }
    return join(words);
}

}  // namespace detail

/// One event per predicate: the anchor plus the subtrees of its non-clausal dependents,
/// cut at any other anchor. Punctuation is left out. A sentence without a predicate yields a
/// single event covering every token, anchored at the root.
inline std::vector<Event> segment_events(ParsedSentence const& sentence, std::size_t max_events)
{
    if (max_events == 0) {
        throw ArgumentError("max_events must be at least 1");
    }
    std::vector<Event> out;
    auto anchors = locate_predicates(sentence);
    if (anchors.empty()) {
        Event e;
        for (auto const& t : sentence.tokens) {
            e.members.push_back(t.index);
            if (t.head == 0 && e.anchor == 0) {
                e.anchor = t.index;
            }
        }
        e.text = detail::event_text(sentence, e.members);
        out.push_back(std::move(e));
        return out;
    }

    std::vector<char> is_anchor(sentence.size() + 1, 0);
    for (auto a : anchors) {
        is_anchor[a] = 1;
    }
    for (auto a : anchors) {
        if (out.size() == max_events) {
            break;
        }
        Event e;
        e.anchor = a;
        e.members.push_back(a);
        std::vector<std::size_t> stack;
        for (auto child : sentence.children(a)) {
            auto rel = sentence.at(child).base_relation();
            if (!is_clausal_relation(rel)) {
                stack.push_back(child);
            }
        }
        while (!stack.empty()) {
            auto node = stack.back();
            stack.pop_back();
            if (is_anchor[node] || sentence.at(node).base_relation() == "punct") {
                continue;
            }
            e.members.push_back(node);
            for (auto child : sentence.children(node)) {
                stack.push_back(child);
            }
        }
        std::sort(e.members.begin(), e.members.end());
        e.text = detail::event_text(sentence, e.members);
        out.push_back(std::move(e));
    }
    return out;
}

/// Lowercased member surface forms in index order; stopwords are kept.
inline std::string render_event_query(Event const& event) { return to_lower(event.text); }

inline nlohmann::json event_to_json(Event const& e)
{
    return {{"anchor", e.anchor}, {"members", e.members}, {"text", e.text}, {"query", render_event_query(e)}};
}

inline Event event_from_json(nlohmann::json const& j)
{
    Event e;
    j.at("anchor").get_to(e.anchor);
    j.at("members").get_to(e.members);
    j.at("text").get_to(e.text);
    return e;
}

}  // namespace skg
