#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "skg/errors.hpp"
#include "skg/skg_builder.hpp"
#include "skg/text.hpp"

namespace skg {

/// "subject predicate object"; predicate tokens such as "train_on" stay whole.
inline std::string verbalize_triplet(KgTriplet const& t)
{
    return t.subject + " " + t.predicate + " " + t.object;
}

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

struct Posting {
    std::uint32_t doc_id;
    std::uint32_t tf;

    friend bool operator==(Posting const&, Posting const&) = default;
};

struct ScoredDoc {
    std::size_t doc_id;
    double score;

    friend bool operator==(ScoredDoc const&, ScoredDoc const&) = default;
};

/// Ranking order: higher score first, ties to the lower id.
inline bool ranks_before(ScoredDoc const& a, ScoredDoc const& b)
{
    return a.score > b.score || (a.score == b.score && a.doc_id < b.doc_id);
}

/// In-memory Okapi BM25 inverted index with the non-negative idf
/// ln(1 + (N - df + 0.5) / (df + 0.5)).
class Bm25Index {
  public:
    Bm25Index(std::vector<std::vector<std::string>> const& docs, Bm25Params params = {})
        : m_params(params)
    {
        if (docs.empty()) {
            throw ArgumentError("cannot index an empty document collection");
        }
        m_doc_len.reserve(docs.size());
        double total = 0.0;
        for (std::size_t d = 0; d < docs.size(); ++d) {
            m_doc_len.push_back(docs[d].size());
            total += static_cast<double>(docs[d].size());
            std::unordered_map<std::string, std::uint32_t> tf;
            for (auto const& term : docs[d]) {
                ++tf[term];
            }
            for (auto const& [term, count] : tf) {
                m_postings[term].push_back({static_cast<std::uint32_t>(d), count});
            }
        }
        // Documents are visited in id order, so every postings list is already sorted.
        m_avg_doc_len = total / static_cast<double>(docs.size());
    }

    [[nodiscard]] std::size_t doc_count() const noexcept { return m_doc_len.size(); }
    [[nodiscard]] std::size_t term_count() const noexcept { return m_postings.size(); }
    [[nodiscard]] double avg_doc_len() const noexcept { return m_avg_doc_len; }
    [[nodiscard]] Bm25Params params() const noexcept { return m_params; }
    [[nodiscard]] std::vector<std::size_t> const& doc_lengths() const noexcept { return m_doc_len; }
    [[nodiscard]] std::unordered_map<std::string, std::vector<Posting>> const& postings() const noexcept
    {
        return m_postings;
    }

    [[nodiscard]] std::span<Posting const> postings(std::string const& term) const
    {
        auto it = m_postings.find(term);
        if (it == m_postings.end()) {
            return {};
        }
        return it->second;
    }

    [[nodiscard]] double idf(std::string const& term) const
    {
        auto df = static_cast<double>(postings(term).size());
        auto n = static_cast<double>(doc_count());
        return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
    }

    /// Contribution of one term occurring `tf` times in a document of length `doc_len`.
    [[nodiscard]] double term_weight(double idf, std::uint32_t tf, std::size_t doc_len) const
    {
        auto f = static_cast<double>(tf);
        auto norm = 1.0 - m_params.b + m_params.b * static_cast<double>(doc_len) / m_avg_doc_len;
        return idf * f * (m_params.k1 + 1.0) / (f + m_params.k1 * norm);
    }

    /// BM25 of one document; query terms repeat-count, absent terms add 0.
    [[nodiscard]] double score(std::span<std::string const> query, std::size_t doc_id) const
    {
        if (doc_id >= doc_count()) {
            throw ArgumentError("unknown doc_id " + std::to_string(doc_id));
        }
        double total = 0.0;
        for (auto const& term : query) {
            auto list = postings(term);
            auto it = std::lower_bound(list.begin(), list.end(), doc_id,
                                       [](Posting const& p, std::size_t d) { return p.doc_id < d; });
            if (it != list.end() && it->doc_id == doc_id) {
                total += term_weight(idf(term), it->tf, m_doc_len[doc_id]);
            }
        }
        return total;
    }

    /// Term-at-a-time accumulation over the query's postings, then a bounded heap.
    /// Documents sharing no term with the query (score 0) are never returned.
    [[nodiscard]] std::vector<ScoredDoc> top_k(std::span<std::string const> query, std::size_t k) const
    {
        if (k == 0) {
            throw ArgumentError("k must be at least 1");
        }
        std::vector<double> acc(doc_count(), 0.0);
        std::vector<std::uint32_t> touched;
        for (auto const& term : query) {
            auto list = postings(term);
            if (list.empty()) {
                continue;
            }
            auto w_idf = idf(term);
            for (auto const& p : list) {
                if (acc[p.doc_id] == 0.0) {
                    touched.push_back(p.doc_id);
                }
                acc[p.doc_id] += term_weight(w_idf, p.tf, m_doc_len[p.doc_id]);
            }
        }

        // Min-heap on rank: the worst kept entry sits at the front.
        std::vector<ScoredDoc> heap;
        heap.reserve(k + 1);
        for (auto d : touched) {
            ScoredDoc cand{d, acc[d]};
            if (cand.score <= 0.0) {
                continue;
            }
            if (heap.size() < k) {
                heap.push_back(cand);
                std::push_heap(heap.begin(), heap.end(), ranks_before);
            } else if (ranks_before(cand, heap.front())) {
                std::pop_heap(heap.begin(), heap.end(), ranks_before);
                heap.back() = cand;
                std::push_heap(heap.begin(), heap.end(), ranks_before);
            }
        }
        std::sort_heap(heap.begin(), heap.end(), ranks_before);
        return heap;
    }

  private:
    Bm25Params m_params;
    std::unordered_map<std::string, std::vector<Posting>> m_postings;
    std::vector<std::size_t> m_doc_len;
    double m_avg_doc_len = 0.0;
};

/// Index over the verbalized triplets; doc_id is the triplet's position in the graph.
inline Bm25Index build_index(KnowledgeGraph const& kg, Bm25Params params = {})
{
    if (kg.triplets.empty()) {
        throw ArgumentError("cannot index an empty knowledge graph");
    }
    std::vector<std::vector<std::string>> docs;
    docs.reserve(kg.triplets.size());
    for (auto const& t : kg.triplets) {
        docs.push_back(split_whitespace(verbalize_triplet(t)));
    }
    return Bm25Index(docs, params);
}

/// Per-query top-k hits. Queries are whitespace-tokenized.
using RetrievedSet = std::vector<std::vector<ScoredDoc>>;

inline RetrievedSet retrieve_topk(Bm25Index const& index, std::vector<std::string> const& queries,
                                  std::size_t k = 10)
{
    RetrievedSet out;
    out.reserve(queries.size());
    for (auto const& q : queries) {
        auto terms = split_whitespace(q);
        out.push_back(index.top_k(terms, k));
    }
    return out;
}

}  // namespace skg
