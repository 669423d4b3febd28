#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "skg/text.hpp"

namespace skg::nn {

/// Whitespace-token vocabulary. Ids 0..2 are reserved for [UNK], [CLS], [SEP]; words get
/// ids in first-seen order and are matched lowercased.
class Vocabulary {
  public:
    static constexpr std::size_t unk = 0;
    static constexpr std::size_t cls = 1;
    static constexpr std::size_t sep = 2;

    Vocabulary() : m_words{"[UNK]", "[CLS]", "[SEP]"}
    {
        for (std::size_t i = 0; i < m_words.size(); ++i) {
            m_ids.emplace(m_words[i], i);
        }
    }

    std::size_t add(std::string const& word)
    {
        auto key = to_lower(word);
        auto [it, inserted] = m_ids.emplace(key, m_words.size());
        if (inserted) {
            m_words.push_back(key);
        }
        return it->second;
    }

    [[nodiscard]] std::size_t id(std::string const& word) const
    {
        auto it = m_ids.find(to_lower(word));
        return it == m_ids.end() ? unk : it->second;
    }

    [[nodiscard]] std::vector<std::size_t> encode(std::vector<std::string> const& words) const
    {
        std::vector<std::size_t> out;
        out.reserve(words.size());
        for (auto const& w : words) {
            out.push_back(id(w));
        }
        return out;
    }

    [[nodiscard]] std::size_t size() const noexcept { return m_words.size(); }
    [[nodiscard]] std::vector<std::string> const& words() const noexcept { return m_words; }

  private:
    std::vector<std::string> m_words;
    std::unordered_map<std::string, std::size_t> m_ids;
};

}  // namespace skg::nn
