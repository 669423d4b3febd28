#include "skg/conllu.hpp"
#include "skg/errors.hpp"
#include "skg/labeled_pairs.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace skg;

namespace {

std::string line(std::string const& cols) { return cols + "\n"; }

std::string tabbed(std::initializer_list<char const*> cols)
{
    std::string out;
    for (auto const* c : cols) {
        if (!out.empty()) {
            out += '\t';
        }
        out += c;
    }
    return out + "\n";
}

}  // namespace

TEST(ParseConllu, SingleTokenSentence)
{
    auto out = parse_conllu(tabbed({"1", "BERT", "BERT", "PROPN", "_", "_", "0", "root", "_", "_"}));
    ASSERT_EQ(out.size(), 1u);
    ASSERT_EQ(out[0].size(), 1u);
    EXPECT_EQ(out[0].at(1).head, 0u);
    EXPECT_EQ(out[0].at(1).surface, "BERT");
    EXPECT_EQ(out[0].sent_id, "s1");
}

TEST(ParseConllu, ThreeTokenSentence)
{
    std::string text = "# sent_id = a\n" + tabbed({"1", "BERT", "BERT", "PROPN", "_", "_", "2", "nsubj", "_", "_"})
                       + tabbed({"2", "improves", "improve", "VERB", "_", "_", "0", "root", "_", "_"})
                       + tabbed({"3", "accuracy", "accuracy", "NOUN", "_", "_", "2", "obj", "_", "_"});
    auto out = parse_conllu(text);
    ASSERT_EQ(out.size(), 1u);
    auto const& s = out[0];
    EXPECT_EQ(s.sent_id, "a");
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s.at(1).head, 2u);
    EXPECT_EQ(s.at(2).head, 0u);
    EXPECT_EQ(s.at(3).head, 2u);
    EXPECT_EQ(s.at(1).deprel, "nsubj");
    EXPECT_EQ(s.at(2).deprel, "root");
    EXPECT_EQ(s.at(3).deprel, "obj");
    EXPECT_EQ(s.children(0), std::vector<std::size_t>{2});
}

TEST(ParseConllu, HeadOutOfRangeNamesSentence)
{
    std::string text = "# sent_id = bad-head\n" + tabbed({"1", "a", "a", "NOUN", "_", "_", "2", "nsubj", "_", "_"})
                       + tabbed({"2", "b", "b", "VERB", "_", "_", "0", "root", "_", "_"})
                       + tabbed({"3", "c", "c", "NOUN", "_", "_", "5", "obj", "_", "_"});
    try {
        parse_conllu(text);
        FAIL() << "expected ValidationError";
    } catch (ValidationError const& e) {
        EXPECT_NE(std::string(e.what()).find("bad-head"), std::string::npos);
    }
}

TEST(ParseConllu, CycleRejected)
{
    std::string text = "# sent_id = cyc\n" + tabbed({"1", "a", "a", "NOUN", "_", "_", "2", "dep", "_", "_"})
                       + tabbed({"2", "b", "b", "NOUN", "_", "_", "1", "dep", "_", "_"})
                       + tabbed({"3", "c", "c", "VERB", "_", "_", "0", "root", "_", "_"});
    EXPECT_THROW(parse_conllu(text), ValidationError);
}

TEST(ParseConllu, SelfHeadAndMissingRootRejected)
{
    EXPECT_THROW(parse_conllu(tabbed({"1", "a", "a", "NOUN", "_", "_", "1", "dep", "_", "_"})), ValidationError);
    std::string two = tabbed({"1", "a", "a", "NOUN", "_", "_", "2", "dep", "_", "_"})
                      + tabbed({"2", "b", "b", "NOUN", "_", "_", "1", "dep", "_", "_"});
    EXPECT_THROW(parse_conllu(two), ValidationError);
}

TEST(ParseConllu, UnknownUposAndGapRejected)
{
    EXPECT_THROW(parse_conllu(tabbed({"1", "a", "a", "NN", "_", "_", "0", "root", "_", "_"})), ValidationError);
    std::string gap = tabbed({"1", "a", "a", "NOUN", "_", "_", "0", "root", "_", "_"})
                      + tabbed({"3", "b", "b", "NOUN", "_", "_", "1", "dep", "_", "_"});
    EXPECT_THROW(parse_conllu(gap), ValidationError);
}

TEST(ParseConllu, ColumnCountErrorCarriesLineNumber)
{
    std::string text = "# sent_id = x\n" + tabbed({"1", "a", "a", "NOUN", "_", "_", "0", "root", "_", "_"})
                       + line("2\tb\tb\tNOUN\t_\t_\t1");
    try {
        parse_conllu(text);
        FAIL() << "expected FormatError";
    } catch (FormatError const& e) {
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST(ParseConllu, InvalidUtf8)
{
    std::string text = tabbed({"1", "caf\xC3", "a", "NOUN", "_", "_", "0", "root", "_", "_"});
    EXPECT_THROW(parse_conllu(text), EncodingError);
}

TEST(ParseConllu, SkipsMultiwordTokensAndEmptyNodes)
{
    std::string text = tabbed({"1-2", "vámonos", "_", "_", "_", "_", "_", "_", "_", "_"})
                       + tabbed({"1", "vamos", "ir", "VERB", "_", "_", "0", "root", "_", "_"})
                       + tabbed({"1.1", "x", "x", "PRON", "_", "_", "_", "_", "_", "_"})
                       + tabbed({"2", "nos", "nosotros", "PRON", "_", "_", "1", "obj", "_", "_"});
    auto out = parse_conllu(text);
    ASSERT_EQ(out.size(), 1u);
    ASSERT_EQ(out[0].size(), 2u);
    EXPECT_EQ(out[0].at(1).surface, "vamos");
    EXPECT_EQ(out[0].at(2).surface, "nos");
}

TEST(ParseConllu, UnderscoreBecomesEmptyLemma)
{
    auto out = parse_conllu(tabbed({"1", "Models", "_", "NOUN", "_", "_", "0", "root", "_", "_"}));
    EXPECT_EQ(out[0].at(1).lemma, "");
    EXPECT_EQ(out[0].at(1).normalized_lemma(), "models");
}

TEST(ParseConllu, SentenceSeparationAndCrlf)
{
    std::string text = "1\ta\ta\tNOUN\t_\t_\t0\troot\t_\t_\r\n\r\n\n1\tb\tb\tNOUN\t_\t_\t0\troot\t_\t_\r\n";
    auto out = parse_conllu(text);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].sent_id, "s1");
    EXPECT_EQ(out[1].sent_id, "s2");
    EXPECT_EQ(out[1].at(1).deprel, "root");
}

TEST(ParseConllu, MiniCorpusIsTotal)
{
    auto corpus = test::mini_corpus();
    EXPECT_EQ(corpus.size(), 50u);
    for (auto const& s : corpus) {
        EXPECT_NO_THROW(validate(s));
    }
}

TEST(ParseConllu, RoundTripIsFieldEqual)
{
    auto corpus = test::mini_corpus();
    std::ostringstream os;
    write_conllu(os, corpus);
    auto again = parse_conllu(os.str());
    EXPECT_EQ(again, corpus);

    std::ostringstream js;
    for (auto const& s : corpus) {
        js << nlohmann::json(s).dump() << '\n';
    }
    std::istringstream jin(js.str());
    EXPECT_EQ(parse_sentence_jsonl(jin), corpus);
}

TEST(ParseConllu, Deterministic)
{
    auto bytes = test::slurp(test::data_path("mini_corpus.conllu"));
    EXPECT_EQ(parse_conllu(bytes), parse_conllu(bytes));
}

TEST(LoadLabeledPairs, SingleRecord)
{
    std::istringstream in(R"({"premise":"a","hypothesis":"b","label":"reasoning"})");
    auto pairs = load_labeled_pairs(in);
    ASSERT_EQ(pairs.size(), 1u);
    EXPECT_EQ(pairs[0].label, Label::Reasoning);
    EXPECT_EQ(pairs[0].premise, std::vector<std::string>{"a"});
    EXPECT_EQ(pairs[0].hypothesis, std::vector<std::string>{"b"});
    EXPECT_EQ(pairs[0].id, "0");
}

TEST(LoadLabeledPairs, UnknownLabelHasLineNumber)
{
    std::istringstream in("{\"premise\":\"a\",\"hypothesis\":\"b\",\"label\":\"entailment\"}\n"
                          "{\"premise\":\"a\",\"hypothesis\":\"b\",\"label\":\"cause\"}\n");
    try {
        load_labeled_pairs(in);
        FAIL() << "expected ValidationError";
    } catch (ValidationError const& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}

TEST(LoadLabeledPairs, BlankLinesSkipped)
{
    std::istringstream in("{\"premise\":\"x y\",\"hypothesis\":\"z\",\"label\":\"neutral\"}\n"
                          "\n"
                          "{\"premise\":\"p\",\"hypothesis\":\"q  r\",\"label\":\"Contrasting\"}\n");
    auto pairs = load_labeled_pairs(in);
    ASSERT_EQ(pairs.size(), 2u);
    EXPECT_EQ(pairs[0].premise, (std::vector<std::string>{"x", "y"}));
    EXPECT_EQ(pairs[0].label, Label::Neutral);
    EXPECT_EQ(pairs[1].hypothesis, (std::vector<std::string>{"q", "r"}));
    EXPECT_EQ(pairs[1].label, Label::Contrasting);
    EXPECT_EQ(pairs[1].id, "1");
}

TEST(LoadLabeledPairs, MissingFieldIsFormatError)
{
    std::istringstream in(R"({"premise":"a","label":"reasoning"})");
    EXPECT_THROW(load_labeled_pairs(in), FormatError);
}

TEST(LoadLabeledPairs, EmptySideRejected)
{
    std::istringstream in(R"({"premise":"  ","hypothesis":"b","label":"reasoning"})");
    EXPECT_THROW(load_labeled_pairs(in), ValidationError);
}

TEST(LoadLabeledPairs, MiniPairsOrderPreserved)
{
    std::ifstream in(test::data_path("mini_pairs.jsonl"));
    auto pairs = load_labeled_pairs(in);
    ASSERT_EQ(pairs.size(), 25u);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        EXPECT_EQ(pairs[i].id, std::to_string(i + 1));
        EXPECT_EQ(pairs[i].label, all_labels[i % 4]);
    }
}
