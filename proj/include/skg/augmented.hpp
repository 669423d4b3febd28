#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skg/bm25.hpp"
#include "skg/errors.hpp"
#include "skg/event_segmenter.hpp"
#include "skg/labeled_pairs.hpp"
#include "skg/skg_builder.hpp"

namespace skg {

enum class Side { Premise, Hypothesis };

/// An event located in one side of a pair; members are 1-based indices into that side.
struct EventSpan {
    Side side = Side::Premise;
    std::size_t anchor = 0;
    std::vector<std::size_t> members;

    friend bool operator==(EventSpan const&, EventSpan const&) = default;
};

/// One training record: the pair, its pooled events, and the verbalized triplets
/// retrieved for each event.
struct AugmentedExample {
    std::string id;
    std::vector<std::string> premise;
    std::vector<std::string> hypothesis;
    Label label = Label::Neutral;
    std::vector<EventSpan> events;
    std::vector<std::vector<std::string>> knowledge;

    friend bool operator==(AugmentedExample const&, AugmentedExample const&) = default;
};

/// Pools premise events then hypothesis events, caps the list at `max_events`, and attaches
/// the verbalized hits of each surviving event. `premise_hits[i]` belongs to `premise_events[i]`.
inline AugmentedExample augment_pair(LabeledPair const& pair, std::vector<Event> const& premise_events,
                                     std::vector<Event> const& hypothesis_events,
                                     RetrievedSet const& premise_hits, RetrievedSet const& hypothesis_hits,
                                     KnowledgeGraph const& kg, std::size_t max_events)
{
    if (premise_hits.size() != premise_events.size() || hypothesis_hits.size() != hypothesis_events.size()) {
        throw ArgumentError("pair '" + pair.id + "': retrieval count does not match event count");
    }
    AugmentedExample ex{pair.id, pair.premise, pair.hypothesis, pair.label, {}, {}};
    auto take = [&](Side side, std::vector<Event> const& events, RetrievedSet const& hits) {
        for (std::size_t i = 0; i < events.size() && ex.events.size() < max_events; ++i) {
            ex.events.push_back({side, events[i].anchor, events[i].members});
            std::vector<std::string> texts;
            for (auto const& h : hits[i]) {
                texts.push_back(verbalize_triplet(kg.triplets.at(h.doc_id)));
            }
            ex.knowledge.push_back(std::move(texts));
        }
    };
    take(Side::Premise, premise_events, premise_hits);
    take(Side::Hypothesis, hypothesis_events, hypothesis_hits);
    return ex;
}

inline nlohmann::json to_json(AugmentedExample const& ex)
{
    nlohmann::json events = nlohmann::json::array();
    for (auto const& e : ex.events) {
        events.push_back({{"side", e.side == Side::Premise ? "p" : "h"},
                          {"anchor", e.anchor},
                          {"members", e.members}});
    }
    return {{"id", ex.id},
            {"premise", ex.premise},
            {"hypothesis", ex.hypothesis},
            {"label", std::string(label_name(ex.label))},
            {"events", events},
            {"knowledge", ex.knowledge}};
}

inline AugmentedExample augmented_from_json(nlohmann::json const& j)
{
    AugmentedExample ex;
    j.at("id").get_to(ex.id);
    j.at("premise").get_to(ex.premise);
    j.at("hypothesis").get_to(ex.hypothesis);
    auto label = parse_label(j.at("label").get<std::string>());
    if (!label) {
        throw ValidationError("unknown label '" + j.at("label").get<std::string>() + "'");
    }
    ex.label = *label;
    for (auto const& e : j.at("events")) {
        EventSpan span;
        auto side = e.at("side").get<std::string>();
        if (side != "p" && side != "h") {
            throw ValidationError("event side must be 'p' or 'h'");
        }
        span.side = side == "p" ? Side::Premise : Side::Hypothesis;
        e.at("anchor").get_to(span.anchor);
        e.at("members").get_to(span.members);
        auto limit = span.side == Side::Premise ? ex.premise.size() : ex.hypothesis.size();
        for (auto m : span.members) {
            if (m == 0 || m > limit) {
                throw ValidationError("event member " + std::to_string(m) + " outside its sentence");
            }
        }
        ex.events.push_back(std::move(span));
    }
    j.at("knowledge").get_to(ex.knowledge);
    if (ex.knowledge.size() != ex.events.size()) {
        throw ValidationError("knowledge list count differs from event count");
    }
    return ex;
}

inline std::vector<AugmentedExample> read_augmented(std::istream& in)
{
    std::vector<AugmentedExample> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            out.push_back(augmented_from_json(nlohmann::json::parse(line)));
        } catch (nlohmann::json::exception const& e) {
            throw FormatError(e.what(), line_no);
        } catch (ValidationError const& e) {
            throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

inline void write_augmented(std::ostream& os, std::vector<AugmentedExample> const& data)
{
    for (auto const& ex : data) {
        os << to_json(ex).dump() << '\n';
    }
}

}  // namespace skg
