#include "skg/triplet_extractor.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace skg;
using test::sentence;

namespace {

std::vector<std::tuple<std::string, std::string, std::string>> spo(std::vector<TripletCandidate> const& cs)
{
    std::vector<std::tuple<std::string, std::string, std::string>> out;
    for (auto const& c : cs) {
        out.emplace_back(c.subject.text(), c.predicate, c.object.text());
    }
    return out;
}

using Spo = std::vector<std::tuple<std::string, std::string, std::string>>;

}  // namespace

TEST(LocatePredicates, SimpleVerb)
{
    EXPECT_EQ(locate_predicates(test::bert_improves_accuracy()), std::vector<std::size_t>{2});
}

TEST(LocatePredicates, NounsOnly)
{
    auto s = sentence("n", {{"great", "great", "ADJ", 2, "amod"}, {"results", "result", "NOUN", 0, "root"}});
    EXPECT_TRUE(locate_predicates(s).empty());
}

TEST(LocatePredicates, AuxiliaryExcluded)
{
    auto s = sentence("c", {{"models", "model", "NOUN", 3, "nsubj:pass"},
                            {"are", "be", "AUX", 3, "aux:pass"},
                            {"trained", "train", "VERB", 0, "root"},
                            {"and", "and", "CCONJ", 5, "cc"},
                            {"evaluated", "evaluate", "VERB", 3, "conj"}});
    EXPECT_EQ(locate_predicates(s), (std::vector<std::size_t>{3, 5}));
}

TEST(LocatePredicates, VerbTaggedAsCopulaOrAuxExcluded)
{
    auto s = sentence("v", {{"it", "it", "PRON", 3, "nsubj"},
                            {"has", "have", "VERB", 3, "aux"},
                            {"worked", "work", "VERB", 0, "root"}});
    EXPECT_EQ(locate_predicates(s), std::vector<std::size_t>{3});
}

TEST(ExtractArgumentChunk, BareNoun)
{
    auto c = extract_argument_chunk(test::bert_improves_accuracy(), 3);
    EXPECT_EQ(c.token_indices, std::vector<std::size_t>{3});
    EXPECT_EQ(c.text(), "accuracy");
}

TEST(ExtractArgumentChunk, CompoundClosure)
{
    auto s = sentence("n", {{"neural", "neural", "NOUN", 3, "compound"},
                            {"machine", "machine", "NOUN", 3, "compound"},
                            {"translation", "translation", "NOUN", 4, "nsubj"},
                            {"works", "work", "VERB", 0, "root"}});
    auto c = extract_argument_chunk(s, 3);
    EXPECT_EQ(c.token_indices, (std::vector<std::size_t>{1, 2, 3}));
    EXPECT_EQ(c.text(), "neural machine translation");
}

TEST(ExtractArgumentChunk, ClausalDependentExcluded)
{
    // "the model trained on news wins"
    auto s = sentence("acl", {{"the", "the", "DET", 2, "det"},
                              {"model", "model", "NOUN", 6, "nsubj"},
                              {"trained", "train", "VERB", 2, "acl"},
                              {"on", "on", "ADP", 5, "case"},
                              {"news", "news", "NOUN", 3, "obl"},
                              {"wins", "win", "VERB", 0, "root"}});
    auto c = extract_argument_chunk(s, 2);
    EXPECT_EQ(c.token_indices, std::vector<std::size_t>{2});
    EXPECT_EQ(c.text(), "model");
}

TEST(ExtractArgumentChunk, NmodTakesItsCaseMarker)
{
    auto corpus = test::mini_corpus();
    auto const& s = corpus[10];  // 6:p "The accuracy of the parser improves with more training data ."
    ASSERT_EQ(s.sent_id, "6:p");
    auto c = extract_argument_chunk(s, 2);
    EXPECT_EQ(c.token_indices, (std::vector<std::size_t>{2, 3, 5}));
    EXPECT_EQ(c.text(), "accuracy of parser");
}

TEST(ExtractArgumentChunk, ConjunctNotCrossed)
{
    auto s = sentence("cj", {{"cats", "cat", "NOUN", 4, "nsubj"},
                             {"and", "and", "CCONJ", 3, "cc"},
                             {"dogs", "dog", "NOUN", 1, "conj"},
                             {"sleep", "sleep", "VERB", 0, "root"}});
    EXPECT_EQ(extract_argument_chunk(s, 1).text(), "cat");
}

TEST(ExtractTriplets, SimpleClause)
{
    auto got = extract_triplets(test::bert_improves_accuracy());
    EXPECT_EQ(spo(got), (Spo{{"bert", "improve", "accuracy"}}));
    EXPECT_EQ(got[0].sent_id, "s1");
}

TEST(ExtractTriplets, SubjectWithoutObject)
{
    auto s = sentence("i", {{"BERT", "BERT", "PROPN", 2, "nsubj"}, {"converges", "converge", "VERB", 0, "root"}});
    EXPECT_TRUE(extract_triplets(s).empty());
}

TEST(ExtractTriplets, PassiveWithAgentSwaps)
{
    auto s = sentence("pa", {{"the", "the", "DET", 2, "det"},
                             {"model", "model", "NOUN", 4, "nsubj:pass"},
                             {"is", "be", "AUX", 4, "aux:pass"},
                             {"trained", "train", "VERB", 0, "root"},
                             {"by", "by", "ADP", 7, "case"},
                             {"the", "the", "DET", 7, "det"},
                             {"authors", "author", "NOUN", 4, "obl:agent"}});
    EXPECT_EQ(spo(extract_triplets(s)), (Spo{{"author", "train", "model"}}));
}

TEST(ExtractTriplets, PassiveWithoutAgentDropped)
{
    auto s = sentence("pn", {{"models", "model", "NOUN", 3, "nsubj:pass"},
                             {"are", "be", "AUX", 3, "aux:pass"},
                             {"trained", "train", "VERB", 0, "root"},
                             {"on", "on", "ADP", 5, "case"},
                             {"data", "data", "NOUN", 3, "obl"}});
    EXPECT_TRUE(extract_triplets(s).empty());
}

TEST(ExtractTriplets, OblFoldsCaseIntoPredicate)
{
    auto s = sentence("o", {{"we", "we", "PRON", 2, "nsubj"},
                            {"evaluate", "evaluate", "VERB", 0, "root"},
                            {"on", "on", "ADP", 4, "case"},
                            {"GLUE", "GLUE", "PROPN", 2, "obl"}});
    EXPECT_EQ(spo(extract_triplets(s)), (Spo{{"we", "evaluate_on", "glue"}}));
}

TEST(ExtractTriplets, OblWithoutCaseKeepsBareLemma)
{
    auto s = sentence("o2", {{"we", "we", "PRON", 2, "nsubj"},
                             {"train", "train", "VERB", 0, "root"},
                             {"yesterday", "yesterday", "NOUN", 2, "obl:tmod"}});
    EXPECT_EQ(spo(extract_triplets(s)), (Spo{{"we", "train", "yesterday"}}));
}

TEST(ExtractTriplets, CoordinatedVerbInheritsSubject)
{
    auto corpus = test::mini_corpus();
    auto const& s = corpus[8];  // 5:p
    ASSERT_EQ(s.sent_id, "5:p");
    EXPECT_EQ(spo(extract_triplets(s)),
              (Spo{{"transformer", "improve", "translation quality"}, {"transformer", "reduce", "training time"}}));
}

TEST(ExtractTriplets, CoordinatedPassiveUsesOwnAgent)
{
    auto corpus = test::mini_corpus();
    auto const& s = corpus[35];  // 18:h
    ASSERT_EQ(s.sent_id, "18:h");
    EXPECT_EQ(spo(extract_triplets(s)), (Spo{{"researcher", "fine-tune", "bert"}}));
}

TEST(ExtractTriplets, AdverbialClauseHasNoSubject)
{
    auto corpus = test::mini_corpus();
    auto const& s = corpus[42];  // 22:p
    ASSERT_EQ(s.sent_id, "22:p");
    EXPECT_EQ(spo(extract_triplets(s)), (Spo{{"parser", "analyze", "sentence"}}));
}

TEST(ExtractTriplets, OneCandidatePerSubjectObjectPairing)
{
    auto s = sentence("m", {{"A", "a", "PROPN", 4, "nsubj"},
                            {"and", "and", "CCONJ", 3, "cc"},
                            {"B", "b", "PROPN", 4, "nsubj"},
                            {"share", "share", "VERB", 0, "root"},
                            {"weights", "weight", "NOUN", 4, "obj"},
                            {"with", "with", "ADP", 7, "case"},
                            {"C", "c", "PROPN", 4, "obl"}});
    EXPECT_EQ(spo(extract_triplets(s)), (Spo{{"a", "share", "weight"},
                                             {"a", "share_with", "c"},
                                             {"b", "share", "weight"},
                                             {"b", "share_with", "c"}}));
}

TEST(ExtractTriplets, MiniCorpusMatchesGold)
{
    std::vector<nlohmann::json> got;
    for (auto const& s : test::mini_corpus()) {
        for (auto const& c : extract_triplets(s)) {
            got.push_back(candidate_to_json(c));
        }
    }
    std::vector<nlohmann::json> gold;
    std::ifstream in(test::data_path("mini_gold_candidates.jsonl"));
    for (std::string line; std::getline(in, line);) {
        gold.push_back(nlohmann::json::parse(line));
    }
    ASSERT_EQ(got.size(), gold.size());
    for (std::size_t i = 0; i < gold.size(); ++i) {
        EXPECT_EQ(got[i], gold[i]) << "candidate " << i;
    }
}

TEST(ExtractTriplets, StructuralProperties)
{
    for (auto const& s : test::mini_corpus()) {
        auto got = extract_triplets(s);
        EXPECT_EQ(got, extract_triplets(s));
        std::size_t bound = 0;
        for (auto p : locate_predicates(s)) {
            std::size_t subj = 0;
            std::size_t obj = 0;
            for (auto c : s.children(p)) {
                auto rel = s.at(c).base_relation();
                subj += rel == "nsubj" || s.at(c).deprel == "obl:agent";
                obj += rel == "obj" || rel == "iobj" || rel == "obl" || s.at(c).deprel == "nsubj:pass";
            }
            bound += std::max<std::size_t>(subj, 1) * obj;
        }
        EXPECT_LE(got.size(), bound) << s.sent_id;
        for (auto const& c : got) {
            EXPECT_FALSE(c.predicate.empty());
            for (auto const* chunk : {&c.subject, &c.object}) {
                ASSERT_FALSE(chunk->empty());
                EXPECT_TRUE(std::is_sorted(chunk->token_indices.begin(), chunk->token_indices.end()));
                EXPECT_GE(chunk->token_indices.front(), 1u);
                EXPECT_LE(chunk->token_indices.back(), s.size());
            }
            for (auto i : c.subject.token_indices) {
                EXPECT_EQ(std::count(c.object.token_indices.begin(), c.object.token_indices.end(), i), 0);
            }
        }
    }
}

TEST(CandidateJson, RoundTripsText)
{
    auto c = extract_triplets(test::bert_improves_accuracy()).at(0);
    auto back = candidate_from_json(candidate_to_json(c));
    EXPECT_EQ(back.subject.text(), "bert");
    EXPECT_EQ(back.predicate, "improve");
    EXPECT_EQ(back.object.text(), "accuracy");
    EXPECT_EQ(back.sent_id, "s1");
}
