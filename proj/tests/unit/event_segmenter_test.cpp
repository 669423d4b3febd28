#include "skg/event_segmenter.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace skg;
using test::sentence;

namespace {

ParsedSentence corpus_sentence(std::string const& id)
{
    for (auto& s : test::mini_corpus()) {
        if (s.sent_id == id) {
            return s;
        }
    }
    throw std::runtime_error("no sentence " + id);
}

using Members = std::vector<std::size_t>;

}  // namespace

TEST(SegmentEvents, SingleClause)
{
    auto ev = segment_events(test::bert_improves_accuracy(), 10);
    ASSERT_EQ(ev.size(), 1u);
    EXPECT_EQ(ev[0].anchor, 2u);
    EXPECT_EQ(ev[0].members, (Members{1, 2, 3}));
    EXPECT_EQ(ev[0].text, "BERT improves accuracy");
}

TEST(SegmentEvents, VerblessFallbackCoversSentence)
{
    auto s = sentence("f", {{"great", "great", "ADJ", 2, "amod"},
                            {"results", "result", "NOUN", 0, "root"},
                            {"overall", "overall", "ADV", 2, "advmod"}});
    auto ev = segment_events(s, 10);
    ASSERT_EQ(ev.size(), 1u);
    EXPECT_EQ(ev[0].members, (Members{1, 2, 3}));
    EXPECT_EQ(ev[0].anchor, 2u);
}

TEST(SegmentEvents, CoordinatedVerbsSplit)
{
    auto ev = segment_events(corpus_sentence("5:p"), 10);
    ASSERT_EQ(ev.size(), 2u);
    EXPECT_EQ(ev[0].anchor, 3u);
    EXPECT_EQ(ev[0].members, (Members{1, 2, 3, 4, 5}));
    EXPECT_EQ(ev[1].anchor, 7u);
    EXPECT_EQ(ev[1].members, (Members{6, 7, 8, 9}));
    EXPECT_EQ(ev[1].text, "and reduces training time");
}

TEST(SegmentEvents, TruncatedAtMaxEvents)
{
    auto ev = segment_events(corpus_sentence("5:p"), 1);
    ASSERT_EQ(ev.size(), 1u);
    EXPECT_EQ(ev[0].anchor, 3u);
}

TEST(SegmentEvents, ClausalDependentsNotCrossed)
{
    auto ev = segment_events(corpus_sentence("22:p"), 10);
    ASSERT_EQ(ev.size(), 2u);
    EXPECT_EQ(ev[0].members, (Members{1, 2, 3, 4, 5}));
    EXPECT_EQ(ev[1].members, (Members{6, 7, 8, 9}));

    auto rel = segment_events(corpus_sentence("11:p"), 10);
    ASSERT_EQ(rel.size(), 2u);
    EXPECT_EQ(rel[0].anchor, 4u);
    EXPECT_EQ(rel[0].members, (Members{3, 4, 5}));
    EXPECT_EQ(rel[1].anchor, 6u);
    EXPECT_EQ(rel[1].members, (Members{1, 2, 6, 7, 8}));
}

TEST(SegmentEvents, ZeroMaxEventsRejected)
{
    EXPECT_THROW(segment_events(test::bert_improves_accuracy(), 0), ArgumentError);
}

TEST(SegmentEvents, MiniCorpusProperties)
{
    for (auto const& s : test::mini_corpus()) {
        auto preds = locate_predicates(s);
        for (std::size_t cap : {1u, 5u, 10u}) {
            auto ev = segment_events(s, cap);
            EXPECT_GE(ev.size(), 1u);
            EXPECT_LE(ev.size(), cap);
            std::set<std::size_t> anchors;
            for (auto const& e : ev) {
                EXPECT_TRUE(anchors.insert(e.anchor).second) << s.sent_id;
                EXPECT_TRUE(std::binary_search(e.members.begin(), e.members.end(), e.anchor));
                EXPECT_TRUE(std::is_sorted(e.members.begin(), e.members.end()));
                std::size_t anchors_inside = 0;
                for (auto m : e.members) {
                    EXPECT_GE(m, 1u);
                    EXPECT_LE(m, s.size());
                    anchors_inside += std::count(preds.begin(), preds.end(), m);
                }
                EXPECT_EQ(anchors_inside, 1u) << s.sent_id;
            }
            EXPECT_EQ(ev, segment_events(s, cap));
        }
    }
}

TEST(RenderEventQuery, LowercasedJoin)
{
    auto ev = segment_events(test::bert_improves_accuracy(), 10);
    EXPECT_EQ(render_event_query(ev[0]), "bert improves accuracy");

    auto s = sentence("w", {{"We", "we", "PRON", 2, "nsubj"}, {"Train", "train", "VERB", 0, "root"}});
    EXPECT_EQ(render_event_query(segment_events(s, 1)[0]), "we train");
}

TEST(RenderEventQuery, IndexOrder)
{
    auto s = sentence("o", {{"A", "a", "DET", 2, "det"},
                            {"B", "b", "NOUN", 5, "nsubj"},
                            {"C", "c", "PUNCT", 5, "punct"},
                            {"D", "d", "ADV", 5, "advmod"},
                            {"E", "e", "VERB", 0, "root"},
                            {"F", "f", "NOUN", 5, "obj"}});
    Event e{5, {2, 5, 6}, detail::event_text(s, {2, 5, 6})};
    EXPECT_EQ(render_event_query(e), "b e f");
}

TEST(EventJson, RoundTrip)
{
    auto ev = segment_events(corpus_sentence("8:p"), 10);
    for (auto const& e : ev) {
        auto j = event_to_json(e);
        EXPECT_EQ(j["query"], render_event_query(e));
        EXPECT_EQ(event_from_json(j), e);
    }
}
