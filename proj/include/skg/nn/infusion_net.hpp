#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "skg/augmented.hpp"
#include "skg/errors.hpp"
#include "skg/random.hpp"
#include "skg/text.hpp"
#include "skg/nn/autograd.hpp"
#include "skg/nn/config.hpp"
#include "skg/nn/vocabulary.hpp"

namespace skg::nn {

/// An AugmentedExample mapped onto vocabulary ids.
struct EncodedExample {
    std::vector<std::size_t> premise;
    std::vector<std::size_t> hypothesis;
    std::vector<EventSpan> events;
    /// knowledge[event][triplet] = token ids of one verbalized triplet
    std::vector<std::vector<std::vector<std::size_t>>> knowledge;
    std::size_t label = 0;
};

inline Vocabulary build_vocabulary(std::span<AugmentedExample const> data)
{
    Vocabulary v;
    for (auto const& ex : data) {
        for (auto const& w : ex.premise) {
            v.add(w);
        }
        for (auto const& w : ex.hypothesis) {
            v.add(w);
        }
        for (auto const& list : ex.knowledge) {
            for (auto const& t : list) {
                for (auto const& w : split_whitespace(t)) {
                    v.add(w);
                }
            }
        }
    }
    return v;
}

inline EncodedExample encode_example(Vocabulary const& vocab, AugmentedExample const& ex)
{
    EncodedExample out;
    out.premise = vocab.encode(ex.premise);
    out.hypothesis = vocab.encode(ex.hypothesis);
    out.events = ex.events;
    for (auto const& list : ex.knowledge) {
        std::vector<std::vector<std::size_t>> triplets;
        for (auto const& t : list) {
            triplets.push_back(vocab.encode(split_whitespace(t)));
        }
        out.knowledge.push_back(std::move(triplets));
    }
    out.label = static_cast<std::size_t>(ex.label);
    return out;
}

// ---- input sequences --------------------------------------------------------

/// [CLS] premise [SEP] hypothesis, cut to `max_len`.
inline std::vector<std::size_t> pair_sequence(EncodedExample const& ex, std::size_t max_len)
{
    std::vector<std::size_t> seq{Vocabulary::cls};
    seq.insert(seq.end(), ex.premise.begin(), ex.premise.end());
    seq.push_back(Vocabulary::sep);
    seq.insert(seq.end(), ex.hypothesis.begin(), ex.hypothesis.end());
    if (seq.size() > max_len) {
        seq.resize(max_len);
    }
    return seq;
}

/// Position of an event member inside the pair sequence; may exceed the truncated length.
inline std::size_t pair_position(EncodedExample const& ex, Side side, std::size_t member)
{
    return side == Side::Premise ? member : ex.premise.size() + 1 + member;
}

/// [CLS] t1 [SEP] t2 [SEP] ... tk [SEP], using at most `k` triplets and `max_len` tokens.
inline std::vector<std::size_t> knowledge_sequence(std::vector<std::vector<std::size_t>> const& triplets,
                                                   std::size_t k, std::size_t max_len)
{
    std::vector<std::size_t> seq{Vocabulary::cls};
    for (std::size_t i = 0; i < triplets.size() && i < k; ++i) {
        seq.insert(seq.end(), triplets[i].begin(), triplets[i].end());
        seq.push_back(Vocabulary::sep);
    }
    if (seq.size() > max_len) {
        seq.resize(max_len);
    }
    return seq;
}

/// Pair sequence followed by every retrieved triplet, [SEP]-separated, cut to `max_len`.
inline std::vector<std::size_t> sentence_concat_sequence(EncodedExample const& ex, std::size_t k,
                                                         std::size_t max_events, std::size_t max_len)
{
    auto seq = pair_sequence(ex, std::numeric_limits<std::size_t>::max());
    for (std::size_t e = 0; e < ex.knowledge.size() && e < max_events; ++e) {
        for (std::size_t i = 0; i < ex.knowledge[e].size() && i < k; ++i) {
            seq.push_back(Vocabulary::sep);
            seq.insert(seq.end(), ex.knowledge[e][i].begin(), ex.knowledge[e][i].end());
        }
    }
    if (seq.size() > max_len) {
        seq.resize(max_len);
    }
    return seq;
}

// ---- parameters --------------------------------------------------------------

template <typename T>
struct Parameters {
    Tensor<T> token_embedding;
    Tensor<T> position_embedding;
    // encoder block
    Tensor<T> attn_query_w, attn_query_b, attn_key_w, attn_key_b, attn_value_w, attn_value_b;
    Tensor<T> attn_out_w, attn_out_b;
    Tensor<T> ff_in_w, ff_in_b, ff_out_w, ff_out_b;
    // knowledge
    Tensor<T> no_knowledge;
    // event-level attention projections, 2d -> d
    Tensor<T> event_query_w, event_query_b, event_key_w, event_key_b, event_value_w, event_value_b;
    // classifier heads
    Tensor<T> base_hidden_w, base_hidden_b, base_out_w, base_out_b;
    Tensor<T> fused_hidden_w, fused_hidden_b, fused_out_w, fused_out_b;

    explicit Parameters(ModelConfig const& c)
    {
        auto d = static_cast<Eigen::Index>(c.embed_dim);
        auto f = static_cast<Eigen::Index>(c.hidden_ff());
        auto v = static_cast<Eigen::Index>(c.vocab_size);
        auto p = static_cast<Eigen::Index>(c.position_count());
        auto k = static_cast<Eigen::Index>(c.num_classes);
        token_embedding = {"token_embedding", v, d};
        position_embedding = {"position_embedding", p, d};
        attn_query_w = {"attn_query_w", d, d};
        attn_query_b = {"attn_query_b", 1, d};
        attn_key_w = {"attn_key_w", d, d};
        attn_key_b = {"attn_key_b", 1, d};
        attn_value_w = {"attn_value_w", d, d};
        attn_value_b = {"attn_value_b", 1, d};
        attn_out_w = {"attn_out_w", d, d};
        attn_out_b = {"attn_out_b", 1, d};
        ff_in_w = {"ff_in_w", d, f};
        ff_in_b = {"ff_in_b", 1, f};
        ff_out_w = {"ff_out_w", f, d};
        ff_out_b = {"ff_out_b", 1, d};
        no_knowledge = {"no_knowledge", 1, d};
        event_query_w = {"event_query_w", 2 * d, d};
        event_query_b = {"event_query_b", 1, d};
        event_key_w = {"event_key_w", 2 * d, d};
        event_key_b = {"event_key_b", 1, d};
        event_value_w = {"event_value_w", 2 * d, d};
        event_value_b = {"event_value_b", 1, d};
        base_hidden_w = {"base_hidden_w", d, d};
        base_hidden_b = {"base_hidden_b", 1, d};
        base_out_w = {"base_out_w", d, k};
        base_out_b = {"base_out_b", 1, k};
        fused_hidden_w = {"fused_hidden_w", 2 * d, d};
        fused_hidden_b = {"fused_hidden_b", 1, d};
        fused_out_w = {"fused_out_w", d, k};
        fused_out_b = {"fused_out_b", 1, k};
    }

    Parameters(Parameters const&) = default;
    Parameters& operator=(Parameters const&) = default;

    std::vector<Tensor<T>*> all()
    {
        return {&token_embedding, &position_embedding, &attn_query_w,  &attn_query_b,  &attn_key_w,
                &attn_key_b,      &attn_value_w,       &attn_value_b,  &attn_out_w,    &attn_out_b,
                &ff_in_w,         &ff_in_b,            &ff_out_w,      &ff_out_b,      &no_knowledge,
                &event_query_w,   &event_query_b,      &event_key_w,   &event_key_b,   &event_value_w,
                &event_value_b,   &base_hidden_w,      &base_hidden_b, &base_out_w,    &base_out_b,
                &fused_hidden_w,  &fused_hidden_b,     &fused_out_w,   &fused_out_b};
    }

    std::vector<Tensor<T> const*> all() const
    {
        auto ptrs = const_cast<Parameters*>(this)->all();
        return {ptrs.begin(), ptrs.end()};
    }

    void zero_grad()
    {
        for (auto* t : all()) {
            t->zero_grad();
        }
    }

    [[nodiscard]] bool finite() const
    {
        for (auto const* t : all()) {
            if (!t->value.allFinite()) {
                return false;
            }
        }
        return true;
    }
};

struct Dropout {
    Rng* rng = nullptr;
    double rate = 0.0;
};

/// Everything a forward pass produced, as plain matrices.
template <typename T>
struct ForwardTrace {
    using Mat = Matrix<T>;
    FusionMode mode = FusionMode::None;  // the path actually taken
    Mat h;                               // pair representation, 1 x d
    Mat tokens;                          // H, l x d
    Mat knowledge;                       // one knowledge encoding per event, h x d
    Mat events;                          // pooled event representations, h x d
    Mat augmented;                       // [events ; knowledge], h x 2d
    Mat attended;                        // event self-attention output, h x d
    Mat fused;                           // mean of `attended`, 1 x d
    Mat logits;
    std::optional<Mat> p;       // base classifier distribution
    std::optional<Mat> p_star;  // fused classifier distribution
    std::vector<Mat> token_attention;
    std::vector<Mat> event_attention;
};

/// Event-centric knowledge infusion classifier on a one-block transformer encoder.
template <typename T>
class InfusionNet {
  public:
    using Mat = Matrix<T>;
    using TapeT = Tape<T>;
    using Var = typename TapeT::Var;

    explicit InfusionNet(ModelConfig const& config) : m_config(config), m_params(config)
    {
        m_config.validate();
    }

    [[nodiscard]] ModelConfig const& config() const noexcept { return m_config; }
    [[nodiscard]] Parameters<T>& params() noexcept { return m_params; }
    [[nodiscard]] Parameters<T> const& params() const noexcept { return m_params; }

    /// Glorot-uniform weights, zero biases, embeddings with per-component variance 1/d,
    /// zero no-knowledge vector.
    void initialize(Rng& rng)
    {
        auto d = static_cast<double>(m_config.embed_dim);
        fill_uniform(m_params.token_embedding.value, rng, std::sqrt(3.0 / d));
        fill_uniform(m_params.position_embedding.value, rng, std::sqrt(3.0 / d));
        for (auto* t : m_params.all()) {
            if (t == &m_params.token_embedding || t == &m_params.position_embedding
                || t == &m_params.no_knowledge) {
                continue;
            }
            if (t->value.rows() == 1) {
                t->value.setZero();
            } else {
                auto fan = static_cast<double>(t->value.rows() + t->value.cols());
                fill_uniform(t->value, rng, std::sqrt(6.0 / fan));
            }
        }
        m_params.no_knowledge.value.setZero();
        m_params.zero_grad();
    }

    /// Every entry, biases included, uniform in [-scale, scale].
    void randomize(Rng& rng, double scale)
    {
        for (auto* t : m_params.all()) {
            fill_uniform(t->value, rng, scale);
        }
        m_params.zero_grad();
    }

    // ---- building blocks ------------------------------------------------------

    struct Encoding {
        Var h;
        Var tokens;
    };

    /// One encoder block over `ids`; h is the output row at position 0.
    Encoding encode_sequence(TapeT& tape, std::span<std::size_t const> ids, Dropout const* dropout,
                             std::vector<Var>* attention = nullptr)
    {
        if (ids.empty() || ids.size() > m_config.position_count()) {
            throw ArgumentError("sequence length " + std::to_string(ids.size()) + " outside [1, "
                                + std::to_string(m_config.position_count()) + "]");
        }
        auto& P = m_params;
        Var x = tape.add(tape.gather_rows(P.token_embedding, ids), tape.leading_rows(P.position_embedding, ids.size()));
        Var q = linear(tape, x, P.attn_query_w, P.attn_query_b);
        Var k = linear(tape, x, P.attn_key_w, P.attn_key_b);
        Var v = linear(tape, x, P.attn_value_w, P.attn_value_b);
        Var att = linear(tape, multi_head(tape, q, k, v, attention), P.attn_out_w, P.attn_out_b);
        bool drop = m_config.encoder_dropout;
        Var x1 = tape.add(x, apply_dropout(tape, att, drop ? dropout : nullptr));
        Var ff = linear(tape, tape.relu(linear(tape, x1, P.ff_in_w, P.ff_in_b)), P.ff_out_w, P.ff_out_b);
        Var out = tape.add(x1, apply_dropout(tape, ff, drop ? dropout : nullptr));
        return {tape.row(out, 0), out};
    }

    /// Logits of softmax(MLP(h)).
    Var classify_base(TapeT& tape, Var h)
    {
        auto& P = m_params;
        return linear(tape, tape.relu(linear(tape, h, P.base_hidden_w, P.base_hidden_b)), P.base_out_w, P.base_out_b);
    }

    /// [CLS]-position encoding of the concatenated triplets; the learned no-knowledge vector
    /// when nothing was retrieved.
    Var encode_knowledge(TapeT& tape, std::vector<std::vector<std::size_t>> const& triplets,
                         Dropout const* dropout, std::vector<Var>* attention = nullptr)
    {
        if (triplets.empty()) {
            return tape.parameter(m_params.no_knowledge);
        }
        auto seq = knowledge_sequence(triplets, m_config.retrieval_k, m_config.max_knowledge_len);
        return encode_sequence(tape, seq, dropout, attention).h;
    }

    /// Mean of the token rows at each event's positions (or of its two endpoint rows).
    Var pool_events(TapeT& tape, Var tokens, std::vector<std::vector<std::size_t>> const& positions)
    {
        std::vector<Var> rows;
        for (auto const& pos : positions) {
            if (m_config.pooling == EventPooling::Endpoints) {
                std::vector<std::size_t> ends{pos.front(), pos.back()};
                rows.push_back(tape.mean_rows(tokens, ends));
            } else {
                rows.push_back(tape.mean_rows(tokens, pos));
            }
        }
        return tape.stack_rows(rows);
    }

    Var augment_events(TapeT& tape, Var events, Var knowledge)
    {
        if (tape.value(events).rows() != tape.value(knowledge).rows()) {
            throw std::logic_error("augment_events: event and knowledge counts differ");
        }
        std::vector<Var> parts{events, knowledge};
        return tape.concat_cols(parts);
    }

    struct Reasoning {
        Var fused;
        Var attended;
    };

    /// Q/K/V projections of the augmented events, multi-head attention without positions,
    /// then a mean over events.
    Reasoning joint_reason(TapeT& tape, Var augmented, Dropout const* dropout,
                           std::vector<Var>* attention = nullptr)
    {
        if (tape.value(augmented).rows() == 0) {
            throw ArgumentError("joint_reason needs at least one event");
        }
        auto& P = m_params;
        Var q = linear(tape, augmented, P.event_query_w, P.event_query_b);
        Var k = linear(tape, augmented, P.event_key_w, P.event_key_b);
        Var v = linear(tape, augmented, P.event_value_w, P.event_value_b);
        Var attended = multi_head(tape, q, k, v, attention);
        attended = apply_dropout(tape, attended, m_config.event_dropout ? dropout : nullptr);
        return {tape.mean_all_rows(attended), attended};
    }

    /// Logits of softmax(MLP([h ; fused])).
    Var classify_fused(TapeT& tape, Var h, Var fused)
    {
        auto& P = m_params;
        std::vector<Var> parts{h, fused};
        Var cat = tape.concat_cols(parts);
        return linear(tape, tape.relu(linear(tape, cat, P.fused_hidden_w, P.fused_hidden_b)), P.fused_out_w,
                      P.fused_out_b);
    }

    // ---- full forward ---------------------------------------------------------

    struct Record {
        FusionMode mode = FusionMode::None;
        std::optional<Var> h, tokens, knowledge, events, augmented, attended, fused;
        std::vector<Var> token_attention, event_attention;
    };

    /// Logits (1 x C) for one example under `mode`. `record` receives the intermediate nodes.
    Var forward(TapeT& tape, EncodedExample const& ex, FusionMode mode, Dropout const* dropout = nullptr,
                Record* record = nullptr)
    {
        Record local;
        Record& rec = record != nullptr ? *record : local;
        rec.mode = mode;

        if (mode == FusionMode::SentConcat) {
            auto seq = sentence_concat_sequence(ex, m_config.retrieval_k, m_config.max_events, m_config.max_seq_len);
            auto enc = encode_sequence(tape, seq, dropout, &rec.token_attention);
            rec.h = enc.h;
            rec.tokens = enc.tokens;
            return classify_base(tape, enc.h);
        }

        auto seq = pair_sequence(ex, m_config.max_seq_len);
        auto enc = encode_sequence(tape, seq, dropout, &rec.token_attention);
        rec.h = enc.h;
        rec.tokens = enc.tokens;
        if (mode == FusionMode::None) {
            return classify_base(tape, enc.h);
        }

        // Events whose members were all truncated away take their knowledge with them.
        std::vector<std::vector<std::size_t>> positions;
        std::vector<std::size_t> kept;
        for (std::size_t e = 0; e < ex.events.size() && e < m_config.max_events; ++e) {
            std::vector<std::size_t> pos;
            for (auto m : ex.events[e].members) {
                auto p = pair_position(ex, ex.events[e].side, m);
                if (p < seq.size()) {
                    pos.push_back(p);
                }
            }
            if (pos.empty()) {
                warn("event " + std::to_string(e) + " lies entirely past the sequence limit; dropped");
                continue;
            }
            positions.push_back(std::move(pos));
            kept.push_back(e);
        }

        if (mode == FusionMode::ClsConcat) {
            std::vector<Var> encodings;
            for (auto e : kept) {
                encodings.push_back(encode_knowledge(tape, knowledge_of(ex, e), dropout, &rec.token_attention));
            }
            if (encodings.empty()) {
                encodings.push_back(tape.parameter(m_params.no_knowledge));
            }
            Var know = tape.stack_rows(encodings);
            rec.knowledge = know;
            return classify_fused(tape, enc.h, tape.mean_all_rows(know));
        }

        if (kept.empty()) {
            warn("example has no usable events; using the base path");
            rec.mode = FusionMode::None;
            return classify_base(tape, enc.h);
        }
        std::vector<Var> encodings;
        for (auto e : kept) {
            encodings.push_back(encode_knowledge(tape, knowledge_of(ex, e), dropout, &rec.token_attention));
        }
        Var know = tape.stack_rows(encodings);
        Var events = pool_events(tape, enc.tokens, positions);
        Var augmented = augment_events(tape, events, know);
        auto reasoning = joint_reason(tape, augmented, dropout, &rec.event_attention);
        rec.knowledge = know;
        rec.events = events;
        rec.augmented = augmented;
        rec.attended = reasoning.attended;
        rec.fused = reasoning.fused;
        return classify_fused(tape, enc.h, reasoning.fused);
    }

    /// Dropout-free forward returning every intermediate value.
    ForwardTrace<T> trace(EncodedExample const& ex, FusionMode mode)
    {
        TapeT tape;
        Record rec;
        Var logits = forward(tape, ex, mode, nullptr, &rec);
        ForwardTrace<T> tr;
        tr.mode = rec.mode;
        auto grab = [&](std::optional<Var> const& v, Mat& dst) {
            if (v) {
                dst = tape.value(*v);
            }
        };
        grab(rec.h, tr.h);
        grab(rec.tokens, tr.tokens);
        grab(rec.knowledge, tr.knowledge);
        grab(rec.events, tr.events);
        grab(rec.augmented, tr.augmented);
        grab(rec.attended, tr.attended);
        grab(rec.fused, tr.fused);
        tr.logits = tape.value(logits);
        Mat dist = softmax_rows<T>(tr.logits);
        if (rec.mode == FusionMode::None || rec.mode == FusionMode::SentConcat) {
            tr.p = dist;
        } else {
            tr.p_star = dist;
        }
        for (auto v : rec.token_attention) {
            tr.token_attention.push_back(tape.value(v));
        }
        for (auto v : rec.event_attention) {
            tr.event_attention.push_back(tape.value(v));
        }
        return tr;
    }

    /// Class distribution under the configured mode, dropout off.
    Mat predict_proba(EncodedExample const& ex, std::optional<FusionMode> mode = std::nullopt)
    {
        TapeT tape;
        Var logits = forward(tape, ex, mode.value_or(m_config.mode));
        return softmax_rows<T>(tape.value(logits));
    }

    std::size_t predict(EncodedExample const& ex, std::optional<FusionMode> mode = std::nullopt)
    {
        Mat p = predict_proba(ex, mode);
        Eigen::Index best = 0;
        p.row(0).maxCoeff(&best);
        return static_cast<std::size_t>(best);
    }

    /// Mean cross-entropy over `batch` with gradients accumulated into the parameters.
    T loss_and_grad(std::span<EncodedExample const> batch, FusionMode mode, Dropout const* dropout)
    {
        T total = 0;
        T const weight = T(1) / static_cast<T>(batch.size());
        for (auto const& ex : batch) {
            TapeT tape;
            Var logits = forward(tape, ex, mode, dropout);
            Var loss = tape.cross_entropy(logits, ex.label);
            total += tape.value(loss)(0, 0);
            tape.backward(loss, weight);
        }
        return total * weight;
    }

    /// Mean cross-entropy without gradients, dropout off.
    T loss(std::span<EncodedExample const> batch, FusionMode mode)
    {
        T total = 0;
        for (auto const& ex : batch) {
            TapeT tape;
            Var logits = forward(tape, ex, mode);
            total += tape.value(tape.cross_entropy(logits, ex.label))(0, 0);
        }
        return total / static_cast<T>(batch.size());
    }

  private:
    static void fill_uniform(Mat& m, Rng& rng, double scale)
    {
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            m.data()[i] = static_cast<T>(rng.uniform(-scale, scale));
        }
    }

    Var linear(TapeT& tape, Var x, Tensor<T>& w, Tensor<T>& b)
    {
        return tape.add_row(tape.matmul(x, tape.parameter(w)), tape.parameter(b));
    }

    /// Scaled dot-product attention split over the configured heads; head outputs are
    /// concatenated without an output projection.
    Var multi_head(TapeT& tape, Var q, Var k, Var v, std::vector<Var>* attention)
    {
        std::size_t const heads = m_config.heads;
        std::size_t const width = static_cast<std::size_t>(tape.value(q).cols()) / heads;
        T const scale = T(1) / std::sqrt(static_cast<T>(width));
        std::vector<Var> outs;
        for (std::size_t hd = 0; hd < heads; ++hd) {
            Var qh = tape.slice_cols(q, hd * width, width);
            Var kh = tape.slice_cols(k, hd * width, width);
            Var vh = tape.slice_cols(v, hd * width, width);
            Var weights = tape.softmax(tape.scale(tape.matmul_transposed(qh, kh), scale));
            if (attention != nullptr) {
                attention->push_back(weights);
            }
            outs.push_back(tape.matmul(weights, vh));
        }
        return heads == 1 ? outs.front() : tape.concat_cols(outs);
    }

    Var apply_dropout(TapeT& tape, Var x, Dropout const* dropout)
    {
        if (dropout == nullptr || dropout->rng == nullptr || dropout->rate <= 0.0) {
            return x;
        }
        Mat const& val = tape.value(x);
        Mat m(val.rows(), val.cols());
        T keep = T(1) / static_cast<T>(1.0 - dropout->rate);
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            m.data()[i] = dropout->rng->uniform() < dropout->rate ? T(0) : keep;
        }
        return tape.mask(x, std::move(m));
    }

    static std::vector<std::vector<std::size_t>> const& knowledge_of(EncodedExample const& ex, std::size_t e)
    {
        static std::vector<std::vector<std::size_t>> const none;
        return e < ex.knowledge.size() ? ex.knowledge[e] : none;
    }

    ModelConfig m_config;
    Parameters<T> m_params;
};

/// -log p[c] for an explicit distribution, with p[c] clamped at 1e-12.
template <typename T>
T compute_loss(Matrix<T> const& p, std::size_t gold)
{
    constexpr T floor = T(1e-12);
    T pc = p(0, static_cast<Eigen::Index>(gold));
    if (pc < floor) {
        warn("probability of the gold class below 1e-12; clamped");
        pc = floor;
    }
    return -std::log(pc);
}

template <typename T>
T batch_loss(std::span<Matrix<T> const> dists, std::span<std::size_t const> golds)
{
    if (dists.size() != golds.size() || dists.empty()) {
        throw ArgumentError("batch_loss: need equal, non-zero numbers of distributions and labels");
    }
    T total = 0;
    for (std::size_t i = 0; i < dists.size(); ++i) {
        total += compute_loss(dists[i], golds[i]);
    }
    return total / static_cast<T>(dists.size());
}

}  // namespace skg::nn
