#include "tk/cli.hpp"

#include "tk/bm25.hpp"
#include "tk/config.hpp"
#include "tk/metrics.hpp"
#include "tk/model.hpp"
#include "tk/pipeline.hpp"
#include "tk/report.hpp"
#include "tk/train.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <random>

namespace tk::cli {

namespace {

TrainConfig train_config_from(const KeyValueConfig& kv) {
    TrainConfig t;
    t.batch_size = kv.get_size("batch_size", t.batch_size);
    t.margin = kv.get_double("margin", t.margin);
    t.lr_embedding = kv.get_double("lr_embedding", t.lr_embedding);
    t.lr_other = kv.get_double("lr_other", t.lr_other);
    t.validation_interval = kv.get_size("validation_interval", t.validation_interval);
    t.patience = kv.get_size("patience", t.patience);
    t.max_steps = kv.get_size("max_steps", t.max_steps);
    t.seed = kv.get_u64("seed", t.seed);
    return t;
}

struct IndexArgs {
    std::string collection, output;
};

struct SearchArgs {
    std::string index, queries, output, tag = "bm25";
    std::size_t k = 1000;
    double k1 = 0.9, b = 0.4;
};

struct TrainArgs {
    std::string config, collection, queries, triples, validation_run, qrels, embeddings, output, log;
    std::size_t min_occurrence = 5;
    std::size_t validation_depth = 0; // 0 -> every provided candidate
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t max_steps = 0;
    bool max_steps_set = false;
    std::size_t batch_size = 0;
    bool batch_size_set = false;
    std::size_t patience = 0;
    bool patience_set = false;
    std::size_t validation_interval = 0;
    bool validation_interval_set = false;
};

struct RerankArgs {
    std::string checkpoint, config, collection, queries, index, run, output, tag = "tk";
    std::string mode = "rerank";
    std::size_t depth = 0;
    std::size_t k = 1000;
    double k1 = 0.9, b = 0.4;
};

struct EvaluateArgs {
    std::string run, qrels;
    std::size_t ndcg_k = 10;
    int binarize = 1;
};

struct TuneArgs {
    std::string run, checkpoint, collection, queries, qrels;
    std::vector<std::size_t> depths;
};

struct ExplainArgs {
    std::string checkpoint, collection, queries, run, query_id, output;
    std::vector<std::string> docs;
    std::vector<double> highlight{0.9, 0.7};
    std::string format = "text";
};

struct EnsembleArgs {
    std::vector<std::string> runs;
    std::string output, tag = "tk-ensemble";
};

int cmd_index(const IndexArgs& args) {
    const auto collection = load_tsv_pairs(args.collection);
    InvertedIndex::build(collection).save(args.output);
    std::cout << "indexed " << collection.size() << " documents -> " << args.output << "\n";
    return 0;
}

int cmd_search(const SearchArgs& args) {
    const InvertedIndex index = InvertedIndex::load(args.index);
    RunList run;
    run.tag = args.tag;
    for (const auto& [qid, text] : load_text_map(args.queries)) {
        auto hits = index.search(text, args.k, args.k1, args.b);
        if (hits.empty()) continue;
        run.set_query(qid, std::move(hits));
    }
    run.write(args.output);
    std::cout << "wrote " << run.query_count() << " ranked lists -> " << args.output << "\n";
    return 0;
}

ValidationSet build_validation_set(const RunList& candidates_run,
                                   const std::map<std::string, std::string>& queries,
                                   const std::map<std::string, std::string>& collection,
                                   const Vocabulary& vocab, const TKConfig& config,
                                   const Qrels& qrels, std::size_t depth) {
    ValidationSet validation;
    validation.qrels = qrels;
    for (const auto& qid : candidates_run.query_ids()) {
        auto qit = queries.find(qid);
        if (qit == queries.end()) {
            throw std::runtime_error("validation: query " + qid + " missing from the queries file");
        }
        ValidationQuery vq;
        vq.query_id = qid;
        try {
            vq.query = encode_sequence(qit->second, vocab, config.query_cap);
        } catch (const EmptyTextError&) {
            std::cerr << "warning: validation query " << qid << " tokenizes to nothing, skipped\n";
            continue;
        }
        const auto& entries = candidates_run.entries(qid);
        const std::size_t take = depth == 0 ? entries.size() : std::min(depth, entries.size());
        for (std::size_t i = 0; i < take; ++i) {
            auto dit = collection.find(entries[i].doc_id);
            if (dit == collection.end()) {
                throw std::runtime_error("validation: document " + entries[i].doc_id +
                                         " missing from the collection");
            }
            try {
                vq.candidates.emplace_back(entries[i].doc_id,
                                           encode_sequence(dit->second, vocab, config.doc_cap));
            } catch (const EmptyTextError&) {
                std::cerr << "warning: validation document " << entries[i].doc_id
                          << " tokenizes to nothing, skipped\n";
            }
        }
        validation.queries.push_back(std::move(vq));
    }
    return validation;
}

int cmd_train(const TrainArgs& args) {
    KeyValueConfig kv =
        args.config.empty() ? KeyValueConfig{} : KeyValueConfig::parse_file(args.config);
    TKConfig config = tk_config_from(kv);
    TrainConfig tconfig = train_config_from(kv);
    const std::size_t min_occurrence = kv.has("min_occurrence")
                                           ? kv.get_size("min_occurrence", args.min_occurrence)
                                           : args.min_occurrence;
    if (args.seed_set) tconfig.seed = args.seed;
    if (args.max_steps_set) tconfig.max_steps = args.max_steps;
    if (args.batch_size_set) tconfig.batch_size = args.batch_size;
    if (args.patience_set) tconfig.patience = args.patience;
    if (args.validation_interval_set) tconfig.validation_interval = args.validation_interval;

    const auto collection_pairs = load_tsv_pairs(args.collection);
    std::vector<std::string> corpus;
    corpus.reserve(collection_pairs.size());
    for (const auto& [id, text] : collection_pairs) corpus.push_back(text);
    const Vocabulary vocab = Vocabulary::build(corpus, min_occurrence);
    std::cout << "vocabulary: " << vocab.size() - 2 << " terms (min occurrence " << min_occurrence
              << ")\n";

    std::mt19937_64 embedding_rng(tconfig.seed);
    const EmbeddingTable table =
        args.embeddings.empty()
            ? random_embeddings(vocab, config.embedding_dim, embedding_rng)
            : load_embeddings(args.embeddings, vocab, config.embedding_dim, embedding_rng);

    std::vector<TrainingTriple> triples;
    for (const auto& row : load_triples_tsv(args.triples)) {
        TrainingTriple triple;
        triple.query = encode_sequence(row.query, vocab, config.query_cap);
        triple.positive = encode_sequence(row.positive, vocab, config.doc_cap);
        triple.negative = encode_sequence(row.negative, vocab, config.doc_cap);
        triples.push_back(std::move(triple));
    }
    std::cout << "loaded " << triples.size() << " training triples\n";

    std::map<std::string, std::string> collection;
    for (const auto& [id, text] : collection_pairs) {
        if (!collection.emplace(id, text).second) {
            throw std::runtime_error(args.collection + ": duplicate id " + id);
        }
    }
    const ValidationSet validation = build_validation_set(
        RunList::parse(args.validation_run), load_text_map(args.queries), collection, vocab, config,
        Qrels::parse(args.qrels), args.validation_depth);

    TKParameters params = TKParameters::initialize(config, table, tconfig.seed + 1);

    std::ofstream log_file;
    std::ostream* log = nullptr;
    if (!args.log.empty()) {
        log_file.open(args.log);
        if (!log_file) throw std::runtime_error("train: cannot open log file " + args.log);
        log = &log_file;
    }

    TrainResult result = train(triples, validation, config, tconfig, std::move(params), log);
    std::cout << "best validation MRR@10 " << format_double(result.best_mrr) << " at step "
              << result.best_step << " (" << result.steps_run << " steps run)\n";

    save_checkpoint(args.output, {config, vocab, std::move(result.best_params)});
    std::cout << "checkpoint -> " << args.output << "\n";
    return 0;
}

int cmd_rerank(const RerankArgs& args) {
    RunSpecification spec;
    spec.mode =
        args.mode == "full" ? RunSpecification::Mode::full : RunSpecification::Mode::rerank;
    spec.checkpoint_path = args.checkpoint;
    spec.config_path = args.config;
    spec.collection_path = args.collection;
    spec.queries_path = args.queries;
    spec.index_path = args.index;
    spec.input_run_path = args.run;
    spec.output_path = args.output;
    spec.depth = args.depth;
    spec.retrieval_k = args.k;
    spec.bm25_k1 = args.k1;
    spec.bm25_b = args.b;
    spec.tag = args.tag;
    const RunList out = rerank_pipeline(spec);
    std::cout << "wrote " << out.query_count() << " ranked lists -> " << args.output << "\n";
    return 0;
}

int cmd_evaluate(const EvaluateArgs& args) {
    const RunList run = RunList::parse(args.run);
    Qrels qrels = Qrels::parse(args.qrels);
    qrels.binarization_threshold = args.binarize;
    std::cout << "mrr@10\t" << format_double(mrr_at_k(run, qrels, 10)) << "\n";
    std::cout << "map\t" << format_double(mean_average_precision(run, qrels)) << "\n";
    std::cout << "ndcg@" << args.ndcg_k << "\t" << format_double(ndcg_at_k(run, qrels, args.ndcg_k))
              << "\n";
    std::cout << "p@10\t" << format_double(precision_at_k(run, qrels, 10)) << "\n";
    return 0;
}

int cmd_tune_depth(const TuneArgs& args) {
    const ModelCheckpoint checkpoint = load_checkpoint(args.checkpoint);
    const TKScorer scorer(checkpoint.params, checkpoint.config);
    const auto queries = load_text_map(args.queries);
    const auto collection = load_text_map(args.collection);
    const RunList candidates_run = RunList::parse(args.run);

    std::map<std::string, std::vector<std::pair<std::string, double>>> candidates;
    std::map<std::string, SequenceRepresentation> query_reps;
    for (const auto& qid : candidates_run.query_ids()) {
        auto qit = queries.find(qid);
        if (qit == queries.end()) {
            throw std::runtime_error("tune-depth: query " + qid + " missing from the queries file");
        }
        try {
            query_reps.emplace(qid, scorer.encode_query(encode_sequence(
                                        qit->second, checkpoint.vocab, checkpoint.config.query_cap)));
        } catch (const EmptyTextError&) {
            std::cerr << "warning: query " << qid << " tokenizes to nothing, skipped\n";
            continue;
        }
        for (const auto& entry : candidates_run.entries(qid)) {
            candidates[qid].emplace_back(entry.doc_id, entry.score);
        }
    }

    const PairScorer model = [&](const std::string& qid, const std::string& doc_id) {
        auto dit = collection.find(doc_id);
        if (dit == collection.end()) {
            throw std::runtime_error("tune-depth: document " + doc_id +
                                     " missing from the collection");
        }
        try {
            const TokenSequence doc =
                encode_sequence(dit->second, checkpoint.vocab, checkpoint.config.doc_cap);
            return scorer.score_with_query(query_reps.at(qid), doc).score;
        } catch (const EmptyTextError&) {
            return -1e300;
        }
    };

    const DepthTuningResult result =
        tune_rerank_depth(candidates, model, Qrels::parse(args.qrels), args.depths);
    for (const auto& [depth, mrr] : result.evaluated) {
        std::cout << depth << "\t" << format_double(mrr) << "\n";
    }
    std::cout << "best\t" << result.best_depth << "\n";
    return 0;
}

int cmd_explain(const ExplainArgs& args) {
    if (args.docs.size() != 2) {
        throw std::runtime_error("explain: exactly two --doc ids are required");
    }
    const ModelCheckpoint checkpoint = load_checkpoint(args.checkpoint);
    const TKScorer scorer(checkpoint.params, checkpoint.config);
    const auto queries = load_text_map(args.queries);
    const auto collection = load_text_map(args.collection);
    const RunList run = RunList::parse(args.run);

    auto qit = queries.find(args.query_id);
    if (qit == queries.end()) {
        throw std::runtime_error("explain: query " + args.query_id + " missing from the queries file");
    }
    const TokenSequence query =
        encode_sequence(qit->second, checkpoint.vocab, checkpoint.config.query_cap);

    std::vector<ExplainDocumentView> views;
    for (const auto& doc_id : args.docs) {
        auto dit = collection.find(doc_id);
        if (dit == collection.end()) {
            throw std::runtime_error("explain: document " + doc_id + " missing from the collection");
        }
        const TokenSequence doc =
            encode_sequence(dit->second, checkpoint.vocab, checkpoint.config.doc_cap);

        ExplainDocumentView view;
        view.doc_id = doc_id;
        if (run.has_query(args.query_id)) {
            for (const auto& entry : run.entries(args.query_id)) {
                if (entry.doc_id == doc_id) {
                    view.label = "input rank " + std::to_string(entry.rank);
                    break;
                }
            }
        }
        auto tokens = tokenize(dit->second);
        tokens.resize(std::min(tokens.size(), doc.true_length));
        view.tokens = std::move(tokens);
        view.report = scorer.explain(query, doc, args.highlight);
        views.push_back(std::move(view));
    }

    const std::string rendered =
        args.format == "html"
            ? render_explain_html(args.query_id, qit->second, checkpoint.config.kernel_mus, views)
            : render_explain_text(args.query_id, qit->second, checkpoint.config.kernel_mus, views);
    if (args.output.empty()) {
        std::cout << rendered;
    } else {
        std::ofstream out(args.output);
        if (!out) throw std::runtime_error("explain: cannot open " + args.output);
        out << rendered;
    }
    return 0;
}

int cmd_ensemble(const EnsembleArgs& args) {
    std::vector<RunList> runs;
    runs.reserve(args.runs.size());
    for (const auto& path : args.runs) runs.push_back(RunList::parse(path));
    ensemble_runs(runs, args.tag).write(args.output);
    std::cout << "averaged " << runs.size() << " runs -> " << args.output << "\n";
    return 0;
}

} // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"TK neural re-ranking pipeline"};
    app.require_subcommand(1);

    IndexArgs index_args;
    auto* index_cmd = app.add_subcommand("index", "build a BM25 inverted index");
    index_cmd->add_option("--collection", index_args.collection, "doc_id<TAB>text file")->required();
    index_cmd->add_option("--output", index_args.output, "index file")->required();

    SearchArgs search_args;
    auto* search_cmd = app.add_subcommand("search", "first-stage BM25 retrieval");
    search_cmd->add_option("--index", search_args.index)->required();
    search_cmd->add_option("--queries", search_args.queries, "query_id<TAB>text file")->required();
    search_cmd->add_option("--output", search_args.output, "TREC run file")->required();
    search_cmd->add_option("--k", search_args.k, "results per query");
    search_cmd->add_option("--k1", search_args.k1, "BM25 k1");
    search_cmd->add_option("--b", search_args.b, "BM25 b");
    search_cmd->add_option("--tag", search_args.tag, "run tag");

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "train the TK model");
    train_cmd->add_option("--config", train_args.config, "key = value configuration file");
    train_cmd->add_option("--collection", train_args.collection)->required();
    train_cmd->add_option("--queries", train_args.queries)->required();
    train_cmd->add_option("--triples", train_args.triples, "query<TAB>positive<TAB>negative file")
        ->required();
    train_cmd->add_option("--validation-run", train_args.validation_run, "candidate run file")
        ->required();
    train_cmd->add_option("--qrels", train_args.qrels)->required();
    train_cmd->add_option("--embeddings", train_args.embeddings, "pre-trained vector file");
    train_cmd->add_option("--output", train_args.output, "checkpoint file")->required();
    train_cmd->add_option("--log", train_args.log, "training log file");
    train_cmd->add_option("--min-occurrence", train_args.min_occurrence, "vocabulary threshold");
    train_cmd->add_option("--validation-depth", train_args.validation_depth,
                          "candidates per validation query (0 = all)");
    train_cmd->add_option("--seed", train_args.seed)->each([&](const std::string&) {
        train_args.seed_set = true;
    });
    train_cmd->add_option("--max-steps", train_args.max_steps)->each([&](const std::string&) {
        train_args.max_steps_set = true;
    });
    train_cmd->add_option("--batch-size", train_args.batch_size)->each([&](const std::string&) {
        train_args.batch_size_set = true;
    });
    train_cmd->add_option("--patience", train_args.patience)->each([&](const std::string&) {
        train_args.patience_set = true;
    });
    train_cmd->add_option("--validation-interval", train_args.validation_interval)
        ->each([&](const std::string&) { train_args.validation_interval_set = true; });

    RerankArgs rerank_args;
    auto* rerank_cmd = app.add_subcommand("rerank", "re-rank with a trained model");
    rerank_cmd->add_option("--checkpoint", rerank_args.checkpoint)->required();
    rerank_cmd->add_option("--config", rerank_args.config, "cross-check against the checkpoint");
    rerank_cmd->add_option("--collection", rerank_args.collection)->required();
    rerank_cmd->add_option("--queries", rerank_args.queries)->required();
    rerank_cmd->add_option("--mode", rerank_args.mode, "full | rerank")
        ->check(CLI::IsMember({"full", "rerank"}));
    rerank_cmd->add_option("--index", rerank_args.index, "index file (full mode)");
    rerank_cmd->add_option("--run", rerank_args.run, "input run file (rerank mode)");
    rerank_cmd->add_option("--depth", rerank_args.depth, "re-ranking depth (0 = all)");
    rerank_cmd->add_option("--k", rerank_args.k, "retrieval depth in full mode");
    rerank_cmd->add_option("--k1", rerank_args.k1, "BM25 k1");
    rerank_cmd->add_option("--b", rerank_args.b, "BM25 b");
    rerank_cmd->add_option("--output", rerank_args.output)->required();
    rerank_cmd->add_option("--tag", rerank_args.tag);

    EvaluateArgs evaluate_args;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "score a run against qrels");
    evaluate_cmd->add_option("--run", evaluate_args.run)->required();
    evaluate_cmd->add_option("--qrels", evaluate_args.qrels)->required();
    evaluate_cmd->add_option("--ndcg-k", evaluate_args.ndcg_k, "nDCG cutoff (0 = full depth)");
    evaluate_cmd->add_option("--binarize", evaluate_args.binarize,
                             "minimum grade counting as relevant");

    TuneArgs tune_args;
    auto* tune_cmd = app.add_subcommand("tune-depth", "pick the re-ranking depth by MRR@10");
    tune_cmd->add_option("--run", tune_args.run, "candidate run file")->required();
    tune_cmd->add_option("--checkpoint", tune_args.checkpoint)->required();
    tune_cmd->add_option("--collection", tune_args.collection)->required();
    tune_cmd->add_option("--queries", tune_args.queries)->required();
    tune_cmd->add_option("--qrels", tune_args.qrels)->required();
    tune_cmd->add_option("--depths", tune_args.depths, "candidate depths, e.g. 29,60,31")
        ->required()
        ->delimiter(',');

    ExplainArgs explain_args;
    auto* explain_cmd = app.add_subcommand("explain", "side-by-side kernel report for two documents");
    explain_cmd->add_option("--checkpoint", explain_args.checkpoint)->required();
    explain_cmd->add_option("--collection", explain_args.collection)->required();
    explain_cmd->add_option("--queries", explain_args.queries)->required();
    explain_cmd->add_option("--run", explain_args.run, "run file supplying input ranks")->required();
    explain_cmd->add_option("--query-id", explain_args.query_id)->required();
    explain_cmd->add_option("--doc", explain_args.docs, "document id (give twice)")->required();
    explain_cmd->add_option("--highlight", explain_args.highlight, "kernel centers to highlight")
        ->delimiter(',');
    explain_cmd->add_option("--format", explain_args.format)->check(CLI::IsMember({"text", "html"}));
    explain_cmd->add_option("--output", explain_args.output, "output file (default stdout)");

    EnsembleArgs ensemble_args;
    auto* ensemble_cmd = app.add_subcommand("ensemble", "score-average multiple run files");
    ensemble_cmd->add_option("--run", ensemble_args.runs, "run file (repeatable)")->required();
    ensemble_cmd->add_option("--output", ensemble_args.output)->required();
    ensemble_cmd->add_option("--tag", ensemble_args.tag);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (index_cmd->parsed()) return cmd_index(index_args);
        if (search_cmd->parsed()) return cmd_search(search_args);
        if (train_cmd->parsed()) return cmd_train(train_args);
        if (rerank_cmd->parsed()) return cmd_rerank(rerank_args);
        if (evaluate_cmd->parsed()) return cmd_evaluate(evaluate_args);
        if (tune_cmd->parsed()) return cmd_tune_depth(tune_args);
        if (explain_cmd->parsed()) return cmd_explain(explain_args);
        if (ensemble_cmd->parsed()) return cmd_ensemble(ensemble_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "error: no subcommand\n";
    return 1;
}

int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
}

} // namespace tk::cli
