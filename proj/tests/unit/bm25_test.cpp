#include "skg/bm25.hpp"
#include "skg/random.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

using namespace skg;

namespace {

using Docs = std::vector<std::vector<std::string>>;

// Direct transcription of the Okapi formula, scanning every document.
double brute_score(Docs const& docs, std::vector<std::string> const& query, std::size_t d, double k1 = 1.2,
                   double b = 0.75)
{
    double avg = 0;
    for (auto const& doc : docs) {
        avg += static_cast<double>(doc.size());
    }
    avg /= static_cast<double>(docs.size());
    double n = static_cast<double>(docs.size());
    double total = 0;
    for (auto const& t : query) {
        double df = 0;
        for (auto const& doc : docs) {
            df += std::find(doc.begin(), doc.end(), t) != doc.end() ? 1 : 0;
        }
        double tf = static_cast<double>(std::count(docs[d].begin(), docs[d].end(), t));
        if (tf == 0) {
            continue;
        }
        double idf = std::log(1 + (n - df + 0.5) / (df + 0.5));
        double dl = static_cast<double>(docs[d].size());
        total += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avg));
    }
    return total;
}

std::vector<ScoredDoc> brute_topk(Docs const& docs, std::vector<std::string> const& query, std::size_t k)
{
    std::vector<ScoredDoc> all;
    for (std::size_t d = 0; d < docs.size(); ++d) {
        double s = brute_score(docs, query, d);
        if (s > 0) {
            all.push_back({static_cast<std::uint32_t>(d), s});
        }
    }
    std::stable_sort(all.begin(), all.end(), [](auto const& a, auto const& b) { return a.score > b.score; });
    if (all.size() > k) {
        all.resize(k);
    }
    return all;
}

Docs random_docs(Rng& rng, std::size_t n, std::size_t vocab)
{
    Docs docs(n);
    for (auto& d : docs) {
        auto len = 3 + rng.below(5);
        for (std::size_t i = 0; i < len; ++i) {
            d.push_back("w" + std::to_string(rng.below(vocab)));
        }
    }
    return docs;
}

}  // namespace

TEST(Verbalize, JoinsSlots)
{
    EXPECT_EQ(verbalize_triplet({"bert", "improve", "accuracy", 1, {}}), "bert improve accuracy");
    EXPECT_EQ(split_whitespace(verbalize_triplet({"author", "train_on", "treebank", 1, {}})),
              (std::vector<std::string>{"author", "train_on", "treebank"}));
    EXPECT_EQ(split_whitespace(verbalize_triplet({"neural machine translation", "use", "attention", 1, {}})).size(),
              5u);
}

TEST(BuildIndex, AverageLength)
{
    Bm25Index idx(Docs{{"a", "b", "c"}, {"a", "d", "e", "f", "g"}});
    EXPECT_DOUBLE_EQ(idx.avg_doc_len(), 4.0);
    auto list = idx.postings("a");
    ASSERT_EQ(list.size(), 2u);
    EXPECT_EQ(list[0].doc_id, 0u);
    EXPECT_EQ(list[1].doc_id, 1u);
}

TEST(BuildIndex, EmptyGraphRejected)
{
    EXPECT_THROW(build_index(KnowledgeGraph{}), ArgumentError);
}

TEST(BuildIndex, MiniGraphStatisticsMatchRecount)
{
    std::ifstream in(test::data_path("mini_gold_skg.jsonl"));
    auto kg = read_skg(in, 1);
    auto idx = build_index(kg);
    ASSERT_EQ(idx.doc_count(), kg.triplets.size());

    std::map<std::string, std::map<std::size_t, std::uint32_t>> recount;
    double total = 0;
    for (std::size_t d = 0; d < kg.triplets.size(); ++d) {
        auto words = split_whitespace(kg.triplets[d].subject + " " + kg.triplets[d].predicate + " "
                                      + kg.triplets[d].object);
        EXPECT_EQ(idx.doc_lengths()[d], words.size());
        total += static_cast<double>(words.size());
        for (auto const& w : words) {
            ++recount[w][d];
        }
    }
    EXPECT_NEAR(idx.avg_doc_len(), total / static_cast<double>(kg.triplets.size()), 1e-9);
    EXPECT_EQ(idx.term_count(), recount.size());
    for (auto const& [term, byDoc] : recount) {
        auto list = idx.postings(term);
        ASSERT_EQ(list.size(), byDoc.size()) << term;
        std::size_t i = 0;
        for (auto const& [d, tf] : byDoc) {
            EXPECT_EQ(list[i].doc_id, d);
            EXPECT_EQ(list[i].tf, tf);
            ++i;
        }
    }
    // Rebuilding from the same graph gives the same statistics.
    auto again = build_index(kg);
    EXPECT_EQ(again.doc_lengths(), idx.doc_lengths());
    EXPECT_EQ(again.avg_doc_len(), idx.avg_doc_len());
}

TEST(Score, NoOverlapIsZero)
{
    Bm25Index idx(Docs{{"a", "b"}, {"c"}});
    std::vector<std::string> q{"z", "y"};
    EXPECT_EQ(idx.score(q, 0), 0.0);
    EXPECT_TRUE(idx.top_k(q, 5).empty());
}

TEST(Score, SingleDocumentClosedForm)
{
    // N = 1, df = 1, tf = 1, dl = avgdl: each term contributes ln(4/3) * 2.2 / 2.2.
    Bm25Index idx(Docs{{"bert", "improve", "accuracy"}});
    std::vector<std::string> q{"bert", "improve", "accuracy"};
    EXPECT_NEAR(idx.score(q, 0), 0.86304621735534, 1e-12);
    EXPECT_NEAR(idx.score(q, 0), 3.0 * std::log(4.0 / 3.0), 1e-15);
}

TEST(Score, LongerDocumentScoresLower)
{
    Docs docs{{"bert", "x"}, {"bert", "y", "z", "w"}};
    Bm25Index idx(docs);
    std::vector<std::string> q{"bert"};
    EXPECT_GT(idx.score(q, 0), idx.score(q, 1));
    EXPECT_NEAR(idx.score(q, 0), brute_score(docs, q, 0), 1e-12);
    EXPECT_NEAR(idx.score(q, 1), brute_score(docs, q, 1), 1e-12);
}

TEST(Score, UnknownDocRejected)
{
    Bm25Index idx(Docs{{"a"}});
    std::vector<std::string> q{"a"};
    EXPECT_THROW((void)idx.score(q, 1), ArgumentError);
}

TEST(Score, RepeatedTermsAndNonNegativity)
{
    Rng rng(3);
    auto docs = random_docs(rng, 50, 20);
    Bm25Index idx(docs);
    for (int i = 0; i < 50; ++i) {
        std::vector<std::string> q;
        for (int j = 0; j < 4; ++j) {
            q.push_back("w" + std::to_string(rng.below(25)));
        }
        for (std::size_t d = 0; d < docs.size(); ++d) {
            auto s = idx.score(q, d);
            EXPECT_GE(s, 0.0);
            EXPECT_NEAR(s, brute_score(docs, q, d), 1e-12);
        }
    }
}

TEST(TopK, ExhaustiveWhenKCoversIndex)
{
    Docs docs{{"a", "b"}, {"a"}, {"a", "b", "c"}};
    Bm25Index idx(docs);
    std::vector<std::string> q{"a", "b"};
    auto hits = idx.top_k(q, 10);
    ASSERT_EQ(hits.size(), 3u);
    for (std::size_t i = 1; i < hits.size(); ++i) {
        EXPECT_GE(hits[i - 1].score, hits[i].score);
    }
    EXPECT_EQ(hits[0].doc_id, 0u);
}

TEST(TopK, TiesGoToLowerId)
{
    Bm25Index idx(Docs{{"x", "a"}, {"y", "b"}, {"x", "a"}, {"a", "x"}});
    std::vector<std::string> q{"a"};
    auto hits = idx.top_k(q, 2);
    ASSERT_EQ(hits.size(), 2u);
    EXPECT_EQ(hits[0].doc_id, 0u);
    EXPECT_EQ(hits[1].doc_id, 2u);
    EXPECT_EQ(hits[0].score, hits[1].score);
}

TEST(TopK, ZeroKRejected)
{
    Bm25Index idx(Docs{{"a"}});
    std::vector<std::string> q{"a"};
    EXPECT_THROW((void)idx.top_k(q, 0), ArgumentError);
}

TEST(TopK, MatchesBruteForce)
{
    Rng rng(11);
    auto docs = random_docs(rng, 300, 40);
    Bm25Index idx(docs);
    for (int i = 0; i < 60; ++i) {
        std::vector<std::string> q;
        auto len = 1 + rng.below(6);
        for (std::size_t j = 0; j < len; ++j) {
            q.push_back("w" + std::to_string(rng.below(45)));
        }
        for (std::size_t k : {1u, 3u, 10u, 500u}) {
            auto got = idx.top_k(q, k);
            auto want = brute_topk(docs, q, k);
            ASSERT_EQ(got.size(), want.size());
            for (std::size_t r = 0; r < got.size(); ++r) {
                EXPECT_EQ(got[r].doc_id, want[r].doc_id);
                EXPECT_NEAR(got[r].score, want[r].score, 1e-9);
            }
        }
    }
}

TEST(TopK, AddingDocumentKeepsOrderWhenDfUnchanged)
{
    Docs docs{{"a", "a", "p"}, {"a", "q", "r"}, {"a", "a", "a"}, {"s", "t", "u"}};
    std::vector<std::string> q{"a"};
    auto before = Bm25Index(docs).top_k(q, 10);
    docs.push_back({"v", "w", "x"});
    auto after = Bm25Index(docs).top_k(q, 10);
    ASSERT_EQ(before.size(), after.size());
    for (std::size_t i = 0; i < before.size(); ++i) {
        EXPECT_EQ(before[i].doc_id, after[i].doc_id);
    }
}

TEST(RetrieveTopk, SetInvariants)
{
    std::ifstream in(test::data_path("mini_gold_skg.jsonl"));
    auto kg = read_skg(in, 1);
    auto idx = build_index(kg);
    std::vector<std::string> queries{"bert improves accuracy", "the transformer outperforms the baseline",
                                     "nothing matches here"};
    auto set = retrieve_topk(idx, queries, 4);
    ASSERT_EQ(set.size(), 3u);
    EXPECT_TRUE(set[2].empty());
    for (auto const& hits : set) {
        EXPECT_LE(hits.size(), 4u);
        std::set<std::uint32_t> seen;
        for (std::size_t i = 0; i < hits.size(); ++i) {
            EXPECT_TRUE(seen.insert(hits[i].doc_id).second);
            EXPECT_GT(hits[i].score, 0.0);
            if (i > 0) {
                EXPECT_TRUE(hits[i - 1].score > hits[i].score
                            || (hits[i - 1].score == hits[i].score && hits[i - 1].doc_id < hits[i].doc_id));
            }
        }
    }
    // "transformer outperform baseline" shares two terms with the second query.
    EXPECT_EQ(kg.triplets[set[1][0].doc_id].subject, "transformer");
}
