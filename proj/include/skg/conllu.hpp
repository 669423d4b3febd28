#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cstddef>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "skg/errors.hpp"
#include "skg/text.hpp"

namespace skg {

inline constexpr std::array<std::string_view, 17> universal_pos_tags = {
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X"};

inline bool is_universal_pos(std::string_view tag)
{
    return std::find(universal_pos_tags.begin(), universal_pos_tags.end(), tag)
           != universal_pos_tags.end();
}

struct Token {
    std::size_t index = 0;  // 1-based
    std::string surface;
    std::string lemma;
    std::string upos;
    std::size_t head = 0;  // 0 = root
    std::string deprel;

    /// Relation without its subtype: "nsubj:pass" -> "nsubj".
    [[nodiscard]] std::string_view base_relation() const
    {
        std::string_view rel(deprel);
        return rel.substr(0, rel.find(':'));
    }

    /// Lowercased lemma, falling back to the surface form when the lemma column was "_".
    [[nodiscard]] std::string normalized_lemma() const
    {
        return to_lower(lemma.empty() ? surface : lemma);
    }

    friend bool operator==(Token const&, Token const&) = default;
};

struct ParsedSentence {
    std::string sent_id;
    std::vector<Token> tokens;

    [[nodiscard]] std::size_t size() const noexcept { return tokens.size(); }

    /// 1-based access.
    [[nodiscard]] Token const& at(std::size_t index) const { return tokens.at(index - 1); }

    /// Dependents of `index` (0 addresses the virtual root), ascending.
    [[nodiscard]] std::vector<std::size_t> children(std::size_t index) const
    {
        std::vector<std::size_t> out;
        for (auto const& t : tokens) {
            if (t.head == index) {
                out.push_back(t.index);
            }
        }
        return out;
    }

    friend bool operator==(ParsedSentence const&, ParsedSentence const&) = default;
};

/// Throws ValidationError naming the sentence when an invariant fails.
inline void validate(ParsedSentence const& s)
{
    auto fail = [&](std::string const& why) {
        throw ValidationError("sentence '" + s.sent_id + "': " + why);
    };
    if (s.tokens.empty()) {
        fail("no tokens");
    }
    std::size_t const n = s.tokens.size();
    bool has_root = false;
    for (std::size_t i = 0; i < n; ++i) {
        auto const& t = s.tokens[i];
        if (t.index != i + 1) {
            fail("token indices are not consecutive at position " + std::to_string(i + 1));
        }
        if (t.head > n) {
            fail("token " + std::to_string(t.index) + " has head " + std::to_string(t.head)
                 + " outside [0, " + std::to_string(n) + "]");
        }
        if (t.head == t.index) {
            fail("token " + std::to_string(t.index) + " is its own head");
        }
        if (t.deprel.empty()) {
            fail("token " + std::to_string(t.index) + " has an empty deprel");
        }
        if (!is_universal_pos(t.upos)) {
            fail("token " + std::to_string(t.index) + " has unknown UPOS '" + t.upos + "'");
        }
        has_root = has_root || t.head == 0;
    }
    if (!has_root) {
        fail("no token attaches to the root");
    }
    // Every walk towards the root must terminate within n steps.
    for (auto const& t : s.tokens) {
        std::size_t cur = t.index;
        for (std::size_t steps = 0; cur != 0; ++steps) {
            if (steps > n) {
                fail("head graph contains a cycle through token " + std::to_string(t.index));
            }
            cur = s.tokens[cur - 1].head;
        }
    }
}

namespace detail {

inline std::string conllu_field(std::string_view col)
{
    return col == "_" ? std::string() : std::string(col);
}

inline bool parse_index(std::string_view text, std::size_t& out)
{
    if (text.empty()) {
        return false;
    }
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size();
}

}  // namespace detail

/// Parses CoNLL-U text. Multiword-token ranges and empty nodes are skipped.
inline std::vector<ParsedSentence> parse_conllu(std::string_view text)
{
    if (auto bad = find_invalid_utf8(text); bad != std::string_view::npos) {
        auto line = static_cast<std::size_t>(std::count(text.begin(), text.begin() + bad, '\n')) + 1;
        throw EncodingError("invalid UTF-8 at line " + std::to_string(line) + ", byte offset "
                            + std::to_string(bad));
    }

    std::vector<ParsedSentence> out;
    ParsedSentence current;
    bool open = false;
    auto flush = [&] {
        if (open && !current.tokens.empty()) {
            if (current.sent_id.empty()) {
                current.sent_id = "s" + std::to_string(out.size() + 1);
            }
            validate(current);
            out.push_back(std::move(current));
        }
        current = ParsedSentence{};
        open = false;
    };

    std::size_t line_no = 0;
    for (auto raw : split_char(text, '\n')) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') {
            raw.remove_suffix(1);
        }
        if (raw.find_first_not_of(" \t") == std::string_view::npos) {
            flush();
            continue;
        }
        open = true;
        if (raw.front() == '#') {
            auto body = raw.substr(1);
            auto eq = body.find('=');
            if (eq != std::string_view::npos) {
                auto key = body.substr(0, eq);
                auto val = body.substr(eq + 1);
                key.remove_prefix(std::min(key.find_first_not_of(' '), key.size()));
                key.remove_suffix(key.size() - std::min(key.find_last_not_of(' ') + 1, key.size()));
                val.remove_prefix(std::min(val.find_first_not_of(' '), val.size()));
                if (key == "sent_id") {
                    current.sent_id = std::string(val);
                }
            }
            continue;
        }
        auto cols = split_char(raw, '\t');
        if (cols.size() != 10) {
            throw FormatError("expected 10 tab-separated columns, found " + std::to_string(cols.size()),
                              line_no);
        }
        if (cols[0].find('-') != std::string_view::npos || cols[0].find('.') != std::string_view::npos) {
            continue;
        }
        Token tok;
        if (!detail::parse_index(cols[0], tok.index)) {
            throw FormatError("bad token index '" + std::string(cols[0]) + "'", line_no);
        }
        if (!detail::parse_index(cols[6], tok.head)) {
            throw FormatError("bad head '" + std::string(cols[6]) + "'", line_no);
        }
        tok.surface = detail::conllu_field(cols[1]);
        tok.lemma = detail::conllu_field(cols[2]);
        tok.upos = detail::conllu_field(cols[3]);
        tok.deprel = detail::conllu_field(cols[7]);
        current.tokens.push_back(std::move(tok));
    }
    flush();
    return out;
}

inline std::vector<ParsedSentence> parse_conllu(std::istream& in)
{
    std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return parse_conllu(std::string_view(text));
}

inline void write_conllu(std::ostream& os, std::vector<ParsedSentence> const& sentences)
{
    auto col = [](std::string const& s) -> std::string const& {
        static std::string const underscore = "_";
        return s.empty() ? underscore : s;
    };
    for (auto const& s : sentences) {
        os << "# sent_id = " << s.sent_id << '\n';
        for (auto const& t : s.tokens) {
            os << t.index << '\t' << col(t.surface) << '\t' << col(t.lemma) << '\t' << col(t.upos)
               << "\t_\t_\t" << t.head << '\t' << col(t.deprel) << "\t_\t_\n";
        }
        os << '\n';
    }
}

// JSON Lines form used for parsed.jsonl.

inline void to_json(nlohmann::json& j, Token const& t)
{
    j = nlohmann::json{{"id", t.index},     {"form", t.surface}, {"lemma", t.lemma},
                       {"upos", t.upos},    {"head", t.head},    {"deprel", t.deprel}};
}

inline void from_json(nlohmann::json const& j, Token& t)
{
    j.at("id").get_to(t.index);
    j.at("form").get_to(t.surface);
    j.at("lemma").get_to(t.lemma);
    j.at("upos").get_to(t.upos);
    j.at("head").get_to(t.head);
    j.at("deprel").get_to(t.deprel);
}

inline void to_json(nlohmann::json& j, ParsedSentence const& s)
{
    j = nlohmann::json{{"sent_id", s.sent_id}, {"tokens", s.tokens}};
}

inline void from_json(nlohmann::json const& j, ParsedSentence& s)
{
    j.at("sent_id").get_to(s.sent_id);
    j.at("tokens").get_to(s.tokens);
}

/// Reads parsed.jsonl; each sentence is validated.
inline std::vector<ParsedSentence> parse_sentence_jsonl(std::istream& in)
{
    std::vector<ParsedSentence> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            out.push_back(nlohmann::json::parse(line).get<ParsedSentence>());
        } catch (nlohmann::json::exception const& e) {
            throw FormatError(e.what(), line_no);
        }
        validate(out.back());
    }
    return out;
}

}  // namespace skg
