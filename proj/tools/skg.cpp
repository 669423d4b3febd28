#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "skg/pipeline.hpp"

namespace fs = std::filesystem;
namespace pl = skg::pipeline;

namespace {

std::map<std::string, std::string> parse_overrides(std::vector<std::string> const& sets)
{
    std::map<std::string, std::string> kv;
    for (auto const& s : sets) {
        auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw skg::ArgumentError("--set expects key=value, got '" + s + "'");
        }
        kv[s.substr(0, eq)] = s.substr(eq + 1);
    }
    return kv;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Knowledge-graph construction, event retrieval and knowledge-infused classification"};
    app.require_subcommand(1);

    std::string in, out, kg, events, retrieved, pairs, data, dev, model, config, threshold = "strict";
    std::size_t lambda = 1, n = 500, max_events = 10, k = 10;
    std::uint64_t seed = 7;
    double k1 = 1.2, b = 0.75;
    std::vector<std::string> sets;

    auto* ingest = app.add_subcommand("ingest", "Validate CoNLL-U and write parsed.jsonl");
    ingest->add_option("--conllu", in, "CoNLL-U input")->required();
    ingest->add_option("--out", out, "parsed.jsonl output")->required();

    auto* extract = app.add_subcommand("extract", "Extract subject-predicate-object candidates");
    extract->add_option("--in", in, "parsed.jsonl or *.conllu")->required();
    extract->add_option("--out", out, "triplets.jsonl output")->required();

    auto* build = app.add_subcommand("build-kg", "Filter candidates into the knowledge graph");
    build->add_option("--in", in, "triplets.jsonl")->required();
    build->add_option("--lambda", lambda, "entity frequency threshold");
    build->add_option("--threshold-mode", threshold, "strict (drop freq <= lambda) or lenient (drop freq < lambda)");
    build->add_option("--out", out, "skg.jsonl output")->required();

    auto* audit = app.add_subcommand("audit-sample", "Draw a reproducible triplet sample for manual review");
    audit->add_option("--kg", kg, "skg.jsonl")->required();
    audit->add_option("--n", n, "sample size");
    audit->add_option("--seed", seed, "sampling seed");
    audit->add_option("--out", out, "audit.jsonl output")->required();

    auto* segment = app.add_subcommand("segment", "Split sentences into verb-anchored events");
    segment->add_option("--in", in, "parsed.jsonl or *.conllu")->required();
    segment->add_option("--max-events", max_events, "events kept per sentence");
    segment->add_option("--out", out, "events.jsonl output")->required();

    auto* index = app.add_subcommand("index", "Build the BM25 index and print its statistics");
    index->add_option("--kg", kg, "skg.jsonl")->required();
    index->add_option("--k1", k1, "BM25 k1");
    index->add_option("--b", b, "BM25 b");

    auto* retrieve = app.add_subcommand("retrieve", "Top-k BM25 triplets for every event");
    retrieve->add_option("--kg", kg, "skg.jsonl")->required();
    retrieve->add_option("--events", events, "events.jsonl")->required();
    retrieve->add_option("--k", k, "hits per event");
    retrieve->add_option("--k1", k1, "BM25 k1");
    retrieve->add_option("--b", b, "BM25 b");
    retrieve->add_option("--out", out, "retrieved.jsonl output")->required();

    auto* augment = app.add_subcommand("augment", "Attach pooled events and retrieved triplets to labeled pairs");
    augment->add_option("--pairs", pairs, "labeled pairs (JSON Lines)")->required();
    augment->add_option("--events", events, "events.jsonl of the pair sentences")->required();
    augment->add_option("--retrieved", retrieved, "retrieved.jsonl for those events")->required();
    augment->add_option("--kg", kg, "skg.jsonl the hits refer to")->required();
    augment->add_option("--max-events", max_events, "events kept per pair");
    augment->add_option("--out", out, "augmented.jsonl output")->required();

    auto* train = app.add_subcommand("train", "Train the classifier");
    train->add_option("--data", data, "augmented.jsonl")->required();
    train->add_option("--dev", dev, "augmented dev set for early stopping");
    train->add_option("--config", config, "key = value model config");
    train->add_option("--set", sets, "config override key=value");
    train->add_option("--seed", seed, "training seed");
    train->add_option("--out", out, "model file")->required();

    auto* eval = app.add_subcommand("eval", "Accuracy, per-class and macro F1 of a trained model");
    eval->add_option("--model", model, "model file")->required();
    eval->add_option("--data", data, "augmented.jsonl")->required();
    eval->add_option("--out", out, "also write the report here");

    auto* pipeline = app.add_subcommand("pipeline", "Run every stage end to end");
    pipeline->add_option("--config", config, "key = value pipeline config")->required();
    pipeline->add_option("--set", sets, "config override key=value");

    CLI11_PARSE(app, argc, argv);

    std::string const name = app.get_subcommands().front()->get_name();
    try {
        if (*ingest) {
            std::cout << pl::run_ingest(in, out) << " sentences\n";
        } else if (*extract) {
            std::cout << pl::run_extract(in, out) << " candidates\n";
        } else if (*build) {
            auto g = pl::run_build_kg(in, lambda, skg::parse_threshold_mode(threshold), out);
            std::cout << g.triplets.size() << " triplets, " << g.entity_freq.size() << " entities\n";
        } else if (*audit) {
            std::cout << pl::run_audit_sample(kg, n, seed, out) << " audit records\n";
        } else if (*segment) {
            std::cout << pl::run_segment(in, max_events, out) << " events\n";
        } else if (*index) {
            auto idx = skg::build_index(pl::read_kg(kg), {k1, b});
            std::cout << pl::index_statistics(idx).dump(2) << '\n';
        } else if (*retrieve) {
            std::cout << pl::run_retrieve(kg, events, k, {k1, b}, out) << " queries\n";
        } else if (*augment) {
            std::cout << pl::run_augment(pairs, events, retrieved, kg, max_events, out) << " examples\n";
        } else if (*train) {
            std::map<std::string, std::string> kv;
            if (!config.empty()) {
                kv = pl::read_key_values(config);
            }
            for (auto const& [key, val] : parse_overrides(sets)) {
                kv[key] = val;
            }
            std::cout << pl::run_train(data, dev, kv, seed, out).dump(2) << '\n';
        } else if (*eval) {
            std::ifstream probe(model, std::ios::binary);
            auto loaded = skg::nn::load_model<double>(probe);
            bool high = loaded.net.config().precision == skg::nn::PrecisionMode::High;
            auto report = skg::report_to_json(pl::run_eval(model, data, high)).dump(2);
            std::cout << report << '\n';
            if (!out.empty()) {
                pl::open_out(out) << report << '\n';
            }
        } else if (*pipeline) {
            auto kv = pl::read_key_values(config);
            for (auto const& [key, val] : parse_overrides(sets)) {
                kv[key] = val;
            }
            auto cfg = pl::PipelineConfig::from_map(kv, fs::path(config).parent_path());
            auto manifest = pl::run_pipeline(cfg);
            std::cout << "pipeline complete: " << manifest["stages"].size() << " stages, manifest at "
                      << (cfg.out_dir / "manifest.json").string() << '\n';
        }
    } catch (pl::StageError const& e) {
        std::cerr << "skg " << name << ": stage " << e.stage() << " failed: " << e.what() << '\n';
        return 2;
    } catch (std::exception const& e) {
        std::cerr << "skg " << name << ": error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
