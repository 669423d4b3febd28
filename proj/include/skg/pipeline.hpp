#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "skg/augmented.hpp"
#include "skg/bm25.hpp"
#include "skg/conllu.hpp"
#include "skg/errors.hpp"
#include "skg/event_segmenter.hpp"
#include "skg/labeled_pairs.hpp"
#include "skg/metrics.hpp"
#include "skg/skg_builder.hpp"
#include "skg/stopwords.hpp"
#include "skg/triplet_extractor.hpp"
#include "skg/nn/config.hpp"
#include "skg/nn/infusion_net.hpp"
#include "skg/nn/model_io.hpp"
#include "skg/nn/trainer.hpp"

namespace skg::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

/// A stage failed; `stage()` names it.
class StageError : public std::runtime_error {
  public:
    StageError(std::string stage, std::string const& what)
        : std::runtime_error(stage + ": " + what), m_stage(std::move(stage))
    {}
    [[nodiscard]] std::string const& stage() const noexcept { return m_stage; }

  private:
    std::string m_stage;
};

// ---- files ----------------------------------------------------------------

inline std::ifstream open_in(fs::path const& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        throw ArgumentError("cannot open '" + p.string() + "' for reading");
    }
    return in;
}

inline std::ofstream open_out(fs::path const& p)
{
    if (p.has_parent_path()) {
        fs::create_directories(p.parent_path());
    }
    std::ofstream out(p, std::ios::binary);
    if (!out) {
        throw ArgumentError("cannot open '" + p.string() + "' for writing");
    }
    return out;
}

inline std::string sha256_file(fs::path const& p)
{
    auto in = open_in(p);
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), digest, &len);
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) {
        os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    }
    return os.str();
}

/// `key = value` lines; `#` starts a comment; later keys override earlier ones.
inline std::map<std::string, std::string> parse_key_values(std::istream& in)
{
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t line_no = 0;
    auto trim = [](std::string s) {
        auto b = s.find_first_not_of(" \t\r");
        auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw FormatError("expected key = value", line_no);
        }
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

inline std::map<std::string, std::string> read_key_values(fs::path const& p)
{
    auto in = open_in(p);
    return parse_key_values(in);
}

/// CoNLL-U for *.conllu, parsed.jsonl otherwise.
inline std::vector<ParsedSentence> read_sentences(fs::path const& p)
{
    auto in = open_in(p);
    if (p.extension() == ".conllu") {
        return parse_conllu(in);
    }
    return parse_sentence_jsonl(in);
}

inline std::vector<LabeledPair> read_pairs(fs::path const& p)
{
    auto in = open_in(p);
    return load_labeled_pairs(in);
}

inline KnowledgeGraph read_kg(fs::path const& p)
{
    auto in = open_in(p);
    return read_skg(in);
}

inline std::vector<AugmentedExample> read_augmented_file(fs::path const& p)
{
    auto in = open_in(p);
    return read_augmented(in);
}

// ---- stages -----------------------------------------------------------------

inline std::size_t run_ingest(fs::path const& conllu, fs::path const& out_path)
{
    auto sentences = read_sentences(conllu);
    auto out = open_out(out_path);
    for (auto const& s : sentences) {
        out << json(s).dump() << '\n';
    }
    return sentences.size();
}

inline std::size_t run_extract(fs::path const& in_path, fs::path const& out_path)
{
    auto sentences = read_sentences(in_path);
    auto out = open_out(out_path);
    std::size_t n = 0;
    for (auto const& s : sentences) {
        for (auto const& c : extract_triplets(s)) {
            out << candidate_to_json(c).dump() << '\n';
            ++n;
        }
    }
    return n;
}

inline std::vector<TripletCandidate> read_candidates(fs::path const& p)
{
    auto in = open_in(p);
    std::vector<TripletCandidate> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            out.push_back(candidate_from_json(json::parse(line)));
        } catch (json::exception const& e) {
            throw FormatError(e.what(), line_no);
        }
    }
    return out;
}

inline fs::path meta_path(fs::path const& skg_path)
{
    auto p = skg_path;
    p += ".meta.json";
    return p;
}

/// Writes the graph and its metadata sidecar.
inline KnowledgeGraph run_build_kg(fs::path const& triplets, std::size_t lambda, ThresholdMode mode,
                                   fs::path const& out_path)
{
    BuildStats stats;
    auto kg = build_skg(read_candidates(triplets), lambda, mode, &stats);
    {
        auto out = open_out(out_path);
        write_skg(out, kg);
    }
    json meta{{"format", "skg-jsonl"},
              {"version", 1},
              {"lambda", lambda},
              {"threshold_mode", std::string(threshold_mode_name(mode))},
              {"stopword_list_version", stopword_list_version},
              {"input_sha256", sha256_file(triplets)},
              {"candidates_in", stats.input},
              {"after_meaningless_filter", stats.after_meaningless},
              {"after_stopword_filter", stats.after_stopwords},
              {"after_frequency_filter", stats.after_frequency},
              {"triplets", kg.triplets.size()},
              {"entities", kg.entity_freq.size()}};
    auto out = open_out(meta_path(out_path));
    out << meta.dump(2) << '\n';
    return kg;
}

inline std::size_t run_audit_sample(fs::path const& kg_path, std::size_t n, std::uint64_t seed,
                                    fs::path const& out_path)
{
    auto kg = read_kg(kg_path);
    auto ids = sample_audit(kg, n, seed);
    auto out = open_out(out_path);
    for (auto id : ids) {
        out << audit_record(kg, id).dump() << '\n';
    }
    return ids.size();
}

inline std::size_t run_segment(fs::path const& in_path, std::size_t max_events, fs::path const& out_path)
{
    auto sentences = read_sentences(in_path);
    auto out = open_out(out_path);
    std::size_t total = 0;
    for (auto const& s : sentences) {
        json events = json::array();
        for (auto const& e : segment_events(s, max_events)) {
            events.push_back(event_to_json(e));
            ++total;
        }
        out << json{{"sent_id", s.sent_id}, {"events", events}}.dump() << '\n';
    }
    return total;
}

struct SentenceEvents {
    std::string sent_id;
    std::vector<Event> events;
    std::size_t first_global = 0;  // index of events[0] in the flattened event list
};

inline std::vector<SentenceEvents> read_events(fs::path const& p)
{
    auto in = open_in(p);
    std::vector<SentenceEvents> out;
    std::string line;
    std::size_t line_no = 0;
    std::size_t global = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            auto j = json::parse(line);
            SentenceEvents se;
            se.sent_id = j.at("sent_id").get<std::string>();
            se.first_global = global;
            for (auto const& e : j.at("events")) {
                se.events.push_back(event_from_json(e));
            }
            global += se.events.size();
            out.push_back(std::move(se));
        } catch (json::exception const& e) {
            throw FormatError(e.what(), line_no);
        }
    }
    return out;
}

inline json index_statistics(Bm25Index const& index)
{
    std::size_t postings = 0;
    for (auto const& [term, list] : index.postings()) {
        postings += list.size();
    }
    return {{"documents", index.doc_count()},
            {"terms", index.term_count()},
            {"postings", postings},
            {"avg_doc_len", index.avg_doc_len()},
            {"k1", index.params().k1},
            {"b", index.params().b}};
}

/// One line per event in flattened order: {"event": i, "hits": [[id, score], ...]}.
inline std::size_t run_retrieve(fs::path const& kg_path, fs::path const& events_path, std::size_t k,
                                Bm25Params params, fs::path const& out_path)
{
    auto kg = read_kg(kg_path);
    auto index = build_index(kg, params);
    auto out = open_out(out_path);
    std::size_t i = 0;
    for (auto const& se : read_events(events_path)) {
        for (auto const& e : se.events) {
            auto terms = split_whitespace(render_event_query(e));
            json hits = json::array();
            for (auto const& h : index.top_k(terms, k)) {
                hits.push_back(json::array({h.doc_id, h.score}));
            }
            out << json{{"event", i}, {"hits", hits}}.dump() << '\n';
            ++i;
        }
    }
    return i;
}

inline std::vector<std::vector<ScoredDoc>> read_retrieved(fs::path const& p)
{
    auto in = open_in(p);
    std::vector<std::vector<ScoredDoc>> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            auto j = json::parse(line);
            auto idx = j.at("event").get<std::size_t>();
            if (idx != out.size()) {
                throw FormatError("retrieval records must be in event order", line_no);
            }
            std::vector<ScoredDoc> hits;
            for (auto const& h : j.at("hits")) {
                hits.push_back({h.at(0).get<std::size_t>(), h.at(1).get<double>()});
            }
            out.push_back(std::move(hits));
        } catch (json::exception const& e) {
            throw FormatError(e.what(), line_no);
        }
    }
    return out;
}

/// Joins pairs with their sentences' events (sent_ids "<pair id>:p" and "<pair id>:h") and
/// the hits retrieved for those events.
inline std::size_t run_augment(fs::path const& pairs_path, fs::path const& events_path,
                               fs::path const& retrieved_path, fs::path const& kg_path, std::size_t max_events,
                               fs::path const& out_path)
{
    auto pairs = read_pairs(pairs_path);
    auto sentence_events = read_events(events_path);
    auto retrieved = read_retrieved(retrieved_path);
    auto kg = read_kg(kg_path);
    std::unordered_map<std::string, SentenceEvents const*> by_id;
    for (auto const& se : sentence_events) {
        by_id[se.sent_id] = &se;
    }
    auto lookup = [&](std::string const& id, std::size_t length, std::vector<Event>& events, RetrievedSet& hits) {
        auto it = by_id.find(id);
        if (it == by_id.end()) {
            throw ValidationError("no events for sentence '" + id + "'");
        }
        events = it->second->events;
        for (std::size_t i = 0; i < events.size(); ++i) {
            for (auto m : events[i].members) {
                if (m == 0 || m > length) {
                    throw ValidationError("sentence '" + id + "' does not match its pair text");
                }
            }
            auto g = it->second->first_global + i;
            if (g >= retrieved.size()) {
                throw ValidationError("retrieval file has no record for event " + std::to_string(g));
            }
            for (auto const& h : retrieved[g]) {
                if (h.doc_id >= kg.triplets.size()) {
                    throw ValidationError("hit refers to triplet " + std::to_string(h.doc_id) + " beyond the graph");
                }
            }
            hits.push_back(retrieved[g]);
        }
    };
    auto out = open_out(out_path);
    for (auto const& pair : pairs) {
        std::vector<Event> pe, he;
        RetrievedSet ph, hh;
        lookup(pair.id + ":p", pair.premise.size(), pe, ph);
        lookup(pair.id + ":h", pair.hypothesis.size(), he, hh);
        out << to_json(augment_pair(pair, pe, he, ph, hh, kg, max_events)).dump() << '\n';
    }
    return pairs.size();
}

inline json history_to_json(nn::TrainHistory const& h)
{
    json epochs = json::array();
    for (auto const& e : h.epochs) {
        json rec{{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"learning_rate", e.last_rate}};
        if (e.dev) {
            rec["dev_accuracy"] = e.dev->accuracy;
            rec["dev_macro_f1"] = e.dev->macro_f1;
        }
        epochs.push_back(rec);
    }
    return {{"epochs", epochs}, {"best_epoch", h.best_epoch}, {"stopped_early", h.stopped_early}};
}

namespace detail {

template <typename T>
json train_impl(nn::ModelConfig cfg, std::vector<AugmentedExample> const& train_raw,
                std::vector<AugmentedExample> const& dev_raw, std::uint64_t seed, fs::path const& model_out)
{
    auto vocab = nn::build_vocabulary(train_raw);
    cfg.vocab_size = vocab.size();
    std::vector<nn::EncodedExample> train_set, dev_set;
    for (auto const& ex : train_raw) {
        train_set.push_back(nn::encode_example(vocab, ex));
    }
    for (auto const& ex : dev_raw) {
        dev_set.push_back(nn::encode_example(vocab, ex));
    }
    nn::InfusionNet<T> net(cfg);
    Rng rng(seed);
    net.initialize(rng);
    auto history = nn::train<T>(net, train_set, dev_set, seed ^ 0x9E3779B97F4A7C15ULL);
    auto out = open_out(model_out);
    nn::save_model(out, net, vocab);
    return history_to_json(history);
}

template <typename T>
EvalReport eval_impl(fs::path const& model_path, std::vector<AugmentedExample> const& data)
{
    auto in = open_in(model_path);
    auto model = nn::load_model<T>(in);
    std::vector<nn::EncodedExample> encoded;
    for (auto const& ex : data) {
        encoded.push_back(nn::encode_example(model.vocab, ex));
    }
    return nn::evaluate_model(model.net, encoded);
}

}  // namespace detail

/// Trains in the configured precision and writes the model file; returns the history.
inline json run_train(fs::path const& data, fs::path const& dev, std::map<std::string, std::string> const& cfg_kv,
                      std::uint64_t seed, fs::path const& model_out)
{
    nn::ModelConfig cfg;
    cfg.apply(cfg_kv);
    auto train_raw = read_augmented_file(data);
    std::vector<AugmentedExample> dev_raw;
    if (!dev.empty()) {
        dev_raw = read_augmented_file(dev);
    }
    if (cfg.precision == nn::PrecisionMode::High) {
        return detail::train_impl<long double>(cfg, train_raw, dev_raw, seed, model_out);
    }
    return detail::train_impl<double>(cfg, train_raw, dev_raw, seed, model_out);
}

inline EvalReport run_eval(fs::path const& model_path, fs::path const& data, bool high_precision = false)
{
    auto raw = read_augmented_file(data);
    if (high_precision) {
        return detail::eval_impl<long double>(model_path, raw);
    }
    return detail::eval_impl<double>(model_path, raw);
}

// ---- end-to-end -------------------------------------------------------------

struct PipelineConfig {
    fs::path corpus;       // CoNLL-U the graph is built from
    fs::path pairs;        // labeled training pairs (JSON Lines)
    fs::path pair_parses;  // CoNLL-U of the pair sentences; defaults to `corpus`
    fs::path dev_pairs;    // optional
    fs::path out_dir = "run";
    std::size_t lambda = 1;
    ThresholdMode threshold = ThresholdMode::Strict;
    std::size_t k = 10;
    std::size_t max_events = 10;
    Bm25Params bm25;
    std::uint64_t seed = 7;
    std::size_t audit_n = 500;
    std::map<std::string, std::string> model;  // ModelConfig overrides
    std::map<std::string, std::string> resolved;

    /// Relative paths resolve against `base`.
    static PipelineConfig from_map(std::map<std::string, std::string> const& kv, fs::path const& base = {})
    {
        PipelineConfig c;
        auto path = [&](char const* key, fs::path& field) {
            if (auto it = kv.find(key); it != kv.end() && !it->second.empty()) {
                fs::path p = it->second;
                field = p.is_absolute() || base.empty() ? p : base / p;
            }
        };
        auto size = [&](char const* key, std::size_t& field) {
            if (auto it = kv.find(key); it != kv.end()) {
                field = static_cast<std::size_t>(std::stoull(it->second));
            }
        };
        path("corpus", c.corpus);
        path("pairs", c.pairs);
        path("pair_parses", c.pair_parses);
        path("dev_pairs", c.dev_pairs);
        path("out_dir", c.out_dir);
        size("lambda", c.lambda);
        size("k", c.k);
        size("max_events", c.max_events);
        size("audit_n", c.audit_n);
        if (auto it = kv.find("threshold_mode"); it != kv.end()) {
            c.threshold = parse_threshold_mode(it->second);
        }
        if (auto it = kv.find("bm25_k1"); it != kv.end()) {
            c.bm25.k1 = std::stod(it->second);
        }
        if (auto it = kv.find("bm25_b"); it != kv.end()) {
            c.bm25.b = std::stod(it->second);
        }
        if (auto it = kv.find("seed"); it != kv.end()) {
            c.seed = std::stoull(it->second);
        }
        if (c.pair_parses.empty()) {
            c.pair_parses = c.corpus;
        }
        c.model = kv;
        c.model["k"] = std::to_string(c.k);
        c.model["max_events"] = std::to_string(c.max_events);
        c.resolved = kv;
        return c;
    }
};

/// ingest -> extract -> build-kg -> segment -> index -> retrieve -> augment -> train -> eval.
/// Every stage's inputs and outputs are hashed into out_dir/manifest.json; on failure the
/// partial manifest names the failing stage and StageError is thrown.
inline json run_pipeline(PipelineConfig const& cfg)
{
    auto const& dir = cfg.out_dir;
    json manifest{{"seed", cfg.seed}, {"config", cfg.resolved}, {"stages", json::array()}};
    auto write_manifest = [&] {
        fs::create_directories(dir);
        std::ofstream out(dir / "manifest.json", std::ios::binary);
        out << manifest.dump(2) << '\n';
    };
    auto hashes = [](std::vector<fs::path> const& paths) {
        json h = json::object();
        for (auto const& p : paths) {
            h[p.filename().string()] = sha256_file(p);
        }
        return h;
    };
    auto stage = [&](std::string const& name, std::vector<fs::path> const& inputs, auto&& body) {
        try {
            for (auto const& p : inputs) {
                if (!fs::exists(p)) {
                    throw ArgumentError("input path '" + p.string() + "' does not exist");
                }
            }
            json entry{{"stage", name}, {"inputs", hashes(inputs)}};
            std::vector<fs::path> outputs;
            json extra = body(outputs);
            entry["outputs"] = hashes(outputs);
            if (!extra.is_null()) {
                entry["result"] = extra;
            }
            manifest["stages"].push_back(entry);
        } catch (std::exception const& e) {
            manifest["failed_stage"] = name;
            manifest["error"] = e.what();
            write_manifest();
            throw StageError(name, e.what());
        }
    };

    bool const has_dev = !cfg.dev_pairs.empty();
    auto const parsed = dir / "parsed.jsonl";
    auto const pairs_parsed = dir / "pairs_parsed.jsonl";
    auto const triplets = dir / "triplets.jsonl";
    auto const skg = dir / "skg.jsonl";
    auto const audit = dir / "audit.jsonl";
    auto const events = dir / "events.jsonl";
    auto const index_json = dir / "index.json";
    auto const retrieved = dir / "retrieved.jsonl";
    auto const augmented = dir / "augmented.jsonl";
    auto const dev_augmented = dir / "dev_augmented.jsonl";
    auto const model = dir / "model.bin";
    auto const history = dir / "history.json";
    auto const report = dir / "eval.json";

    stage("ingest", {cfg.corpus, cfg.pair_parses}, [&](std::vector<fs::path>& outs) {
        auto n = run_ingest(cfg.corpus, parsed);
        auto m = run_ingest(cfg.pair_parses, pairs_parsed);
        outs = {parsed, pairs_parsed};
        return json{{"corpus_sentences", n}, {"pair_sentences", m}};
    });
    stage("extract", {parsed}, [&](std::vector<fs::path>& outs) {
        auto n = run_extract(parsed, triplets);
        outs = {triplets};
        return json{{"candidates", n}};
    });
    stage("build-kg", {triplets}, [&](std::vector<fs::path>& outs) {
        auto kg = run_build_kg(triplets, cfg.lambda, cfg.threshold, skg);
        auto n = std::min(cfg.audit_n, kg.triplets.size());
        run_audit_sample(skg, n, cfg.seed, audit);
        outs = {skg, meta_path(skg), audit};
        return json{{"triplets", kg.triplets.size()}, {"audit_records", n}};
    });
    stage("segment", {pairs_parsed}, [&](std::vector<fs::path>& outs) {
        auto n = run_segment(pairs_parsed, cfg.max_events, events);
        outs = {events};
        return json{{"events", n}};
    });
    stage("index", {skg}, [&](std::vector<fs::path>& outs) {
        auto stats = index_statistics(build_index(read_kg(skg), cfg.bm25));
        auto out = open_out(index_json);
        out << stats.dump(2) << '\n';
        out.close();
        outs = {index_json};
        return stats;
    });
    stage("retrieve", {skg, events}, [&](std::vector<fs::path>& outs) {
        auto n = run_retrieve(skg, events, cfg.k, cfg.bm25, retrieved);
        outs = {retrieved};
        return json{{"queries", n}};
    });
    std::vector<fs::path> augment_inputs{cfg.pairs, events, retrieved, skg};
    if (has_dev) {
        augment_inputs.push_back(cfg.dev_pairs);
    }
    stage("augment", augment_inputs, [&](std::vector<fs::path>& outs) {
        auto n = run_augment(cfg.pairs, events, retrieved, skg, cfg.max_events, augmented);
        outs = {augmented};
        if (has_dev) {
            run_augment(cfg.dev_pairs, events, retrieved, skg, cfg.max_events, dev_augmented);
            outs.push_back(dev_augmented);
        }
        return json{{"examples", n}};
    });
    std::vector<fs::path> train_inputs{augmented};
    if (has_dev) {
        train_inputs.push_back(dev_augmented);
    }
    stage("train", train_inputs, [&](std::vector<fs::path>& outs) {
        auto h = run_train(augmented, has_dev ? dev_augmented : fs::path(), cfg.model, cfg.seed, model);
        auto out = open_out(history);
        out << h.dump(2) << '\n';
        out.close();
        outs = {model, history};
        return json{{"best_epoch", h["best_epoch"]}, {"epochs_run", h["epochs"].size()}};
    });
    stage("eval", {model, has_dev ? dev_augmented : augmented}, [&](std::vector<fs::path>& outs) {
        nn::ModelConfig mc;
        mc.apply(cfg.model);
        auto r = run_eval(model, has_dev ? dev_augmented : augmented, mc.precision == nn::PrecisionMode::High);
        auto j = report_to_json(r);
        auto out = open_out(report);
        out << j.dump(2) << '\n';
        out.close();
        outs = {report};
        return json{{"accuracy", r.accuracy}, {"macro_f1", r.macro_f1}};
    });
    write_manifest();
    return manifest;
}

}  // namespace skg::pipeline
