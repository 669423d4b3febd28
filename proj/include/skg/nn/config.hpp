#pragma once

#include <cstddef>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "skg/errors.hpp"

namespace skg::nn {

/// How retrieved knowledge reaches the classifier.
///   Eki        event pooling + knowledge concat + event self-attention (full model)
///   ClsConcat  classify on [h ; mean of knowledge encodings]
///   SentConcat append the triplet text to the input sequence, then the base path
///   None       base encoder + classifier only
enum class FusionMode { Eki, ClsConcat, SentConcat, None };
enum class PrecisionMode { Standard, High };
enum class EventPooling { Mean, Endpoints };

inline std::string_view to_string(FusionMode m)
{
    switch (m) {
    case FusionMode::Eki: return "eki";
    case FusionMode::ClsConcat: return "cls_concat";
    case FusionMode::SentConcat: return "sent_concat";
    case FusionMode::None: return "none";
    }
    return "?";
}

inline FusionMode parse_fusion_mode(std::string_view s)
{
    for (auto m : {FusionMode::Eki, FusionMode::ClsConcat, FusionMode::SentConcat, FusionMode::None}) {
        if (s == to_string(m)) {
            return m;
        }
    }
    throw ArgumentError("unknown fusion mode '" + std::string(s) + "'");
}

struct ModelConfig {
    std::size_t vocab_size = 3;
    std::size_t embed_dim = 768;
    std::size_t ff_dim = 0;  // 0 means 2 * embed_dim
    std::size_t heads = 2;
    double dropout = 0.3;
    bool encoder_dropout = true;
    bool event_dropout = true;
    std::size_t max_events = 10;
    std::size_t retrieval_k = 10;
    std::size_t max_knowledge_len = 50;
    std::size_t max_seq_len = 196;
    std::size_t num_classes = 4;
    double learning_rate = 5e-5;
    double weight_decay = 1.0;
    std::size_t warmup_steps = 1000;
    std::size_t epochs = 5;
    std::size_t batch_size = 64;
    std::size_t patience = 2;
    FusionMode mode = FusionMode::Eki;
    PrecisionMode precision = PrecisionMode::Standard;
    EventPooling pooling = EventPooling::Mean;

    [[nodiscard]] std::size_t hidden_ff() const { return ff_dim == 0 ? 2 * embed_dim : ff_dim; }
    [[nodiscard]] std::size_t position_count() const
    {
        return max_seq_len > max_knowledge_len ? max_seq_len : max_knowledge_len;
    }

    void validate() const
    {
        auto need = [](bool ok, char const* what) {
            if (!ok) {
                throw ArgumentError(std::string("invalid model config: ") + what);
            }
        };
        need(embed_dim >= 1 && heads >= 1 && embed_dim % heads == 0, "embed_dim must be divisible by heads");
        need(dropout >= 0.0 && dropout < 1.0, "dropout must lie in [0, 1)");
        need(vocab_size >= 3, "vocab_size must cover the special tokens");
        need(max_events >= 1 && retrieval_k >= 1 && max_knowledge_len >= 2 && max_seq_len >= 3,
             "length limits must be positive");
        need(num_classes >= 1 && epochs >= 1 && batch_size >= 1 && patience >= 1, "counts must be >= 1");
        need(learning_rate >= 0.0 && weight_decay >= 0.0, "rates must be non-negative");
    }

    /// Flat key/value form shared by config files and the model header.
    [[nodiscard]] std::map<std::string, std::string> to_map() const
    {
        auto num = [](double v) {
            std::ostringstream os;
            os.precision(17);
            os << v;
            return os.str();
        };
        return {
            {"vocab_size", std::to_string(vocab_size)},
            {"embed_dim", std::to_string(embed_dim)},
            {"ff_dim", std::to_string(ff_dim)},
            {"heads", std::to_string(heads)},
            {"dropout", num(dropout)},
            {"encoder_dropout", encoder_dropout ? "1" : "0"},
            {"event_dropout", event_dropout ? "1" : "0"},
            {"max_events", std::to_string(max_events)},
            {"k", std::to_string(retrieval_k)},
            {"max_knowledge_len", std::to_string(max_knowledge_len)},
            {"max_seq_len", std::to_string(max_seq_len)},
            {"num_classes", std::to_string(num_classes)},
            {"learning_rate", num(learning_rate)},
            {"weight_decay", num(weight_decay)},
            {"warmup_steps", std::to_string(warmup_steps)},
            {"epochs", std::to_string(epochs)},
            {"batch_size", std::to_string(batch_size)},
            {"patience", std::to_string(patience)},
            {"mode", std::string(to_string(mode))},
            {"precision", precision == PrecisionMode::High ? "high" : "standard"},
            {"pooling", pooling == EventPooling::Mean ? "mean" : "endpoints"},
        };
    }

    /// Overrides the fields named in `kv`; keys this struct does not own are ignored.
    void apply(std::map<std::string, std::string> const& kv)
    {
        auto size = [&](char const* key, std::size_t& field) {
            if (auto it = kv.find(key); it != kv.end()) {
                field = parse_size(key, it->second);
            }
        };
        auto real = [&](char const* key, double& field) {
            if (auto it = kv.find(key); it != kv.end()) {
                try {
                    field = std::stod(it->second);
                } catch (std::exception const&) {
                    throw ArgumentError(std::string("config key '") + key + "' is not a number");
                }
            }
        };
        auto flag = [&](char const* key, bool& field) {
            if (auto it = kv.find(key); it != kv.end()) {
                field = it->second == "1" || it->second == "true";
            }
        };
        size("vocab_size", vocab_size);
        size("embed_dim", embed_dim);
        size("ff_dim", ff_dim);
        size("heads", heads);
        real("dropout", dropout);
        flag("encoder_dropout", encoder_dropout);
        flag("event_dropout", event_dropout);
        size("max_events", max_events);
        size("k", retrieval_k);
        size("max_knowledge_len", max_knowledge_len);
        size("max_seq_len", max_seq_len);
        size("num_classes", num_classes);
        real("learning_rate", learning_rate);
        real("weight_decay", weight_decay);
        size("warmup_steps", warmup_steps);
        size("epochs", epochs);
        size("batch_size", batch_size);
        size("patience", patience);
        if (auto it = kv.find("mode"); it != kv.end()) {
            mode = parse_fusion_mode(it->second);
        }
        if (auto it = kv.find("precision"); it != kv.end()) {
            if (it->second != "standard" && it->second != "high") {
                throw ArgumentError("precision must be 'standard' or 'high'");
            }
            precision = it->second == "high" ? PrecisionMode::High : PrecisionMode::Standard;
        }
        if (auto it = kv.find("pooling"); it != kv.end()) {
            if (it->second != "mean" && it->second != "endpoints") {
                throw ArgumentError("pooling must be 'mean' or 'endpoints'");
            }
            pooling = it->second == "mean" ? EventPooling::Mean : EventPooling::Endpoints;
        }
    }

  private:
    static std::size_t parse_size(char const* key, std::string const& v)
    {
        try {
            std::size_t pos = 0;
            auto n = std::stoull(v, &pos);
            if (pos != v.size()) {
                throw std::invalid_argument(v);
            }
            return static_cast<std::size_t>(n);
        } catch (std::exception const&) {
            throw ArgumentError(std::string("config key '") + key + "' is not a non-negative integer");
        }
    }
};

}  // namespace skg::nn
