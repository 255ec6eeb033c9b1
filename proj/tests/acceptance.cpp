// Acceptance suite: runs every top-level criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion.

#include "tk/bm25.hpp"
#include "tk/cli.hpp"
#include "tk/config.hpp"
#include "tk/metrics.hpp"
#include "tk/model.hpp"
#include "tk/pipeline.hpp"
#include "tk/report.hpp"
#include "tk/rng.hpp"
#include "tk/train.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace tk;

namespace {

struct CheckFailure {
    std::string message;
};

void require(bool condition, const std::string& message) {
    if (!condition) throw CheckFailure{message};
}

std::string num(double v) { return format_double(v); }

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---------------------------------------------------------------------------
// shared fixtures

struct TinyModel {
    TKConfig config;
    Vocabulary vocab;
    TKParameters params;
};

TinyModel make_tiny_model(TKConfig config, std::uint64_t seed) {
    TinyModel tiny;
    tiny.config = std::move(config);
    tiny.vocab = Vocabulary::build({"t0 t1 t2 t3 t4 t5 t6 t7"}, 1);
    std::mt19937_64 rng(seed);
    const EmbeddingTable table = random_embeddings(tiny.vocab, tiny.config.embedding_dim, rng);
    tiny.params = TKParameters::initialize(tiny.config, table, seed + 1);
    return tiny;
}

LossFn forward_loss(const TKConfig& config, const TokenSequence& query, const TokenSequence& doc) {
    return [&config, query, doc](std::vector<Parameter>& ps, bool with_grad) {
        TKParameters snapshot;
        for (const auto& p : ps) snapshot.add(p);
        BoundModel bound = bind_model(snapshot, config, with_grad);
        const ForwardResult result = forward(query, doc, bound);
        if (with_grad) {
            ag::backward(result.scores.score);
            accumulate_gradients(bound, snapshot, 1.0);
            for (std::size_t i = 0; i < ps.size(); ++i) {
                for (std::size_t j = 0; j < ps[i].gradient.size(); ++j) {
                    ps[i].gradient[j] += snapshot.all()[i].gradient[j];
                }
            }
        }
        return result.breakdown.score;
    };
}

// Marker-token corpus: 50 queries, one positive with the query marker and
// filler-only negatives.
struct SyntheticCorpus {
    TKConfig config;
    Vocabulary vocab;
    TKParameters params;
    std::vector<TrainingTriple> triples;
    ValidationSet validation;
    std::vector<std::pair<std::string, std::string>> collection;
};

SyntheticCorpus make_synthetic(std::uint64_t seed) {
    SyntheticCorpus fx;
    fx.config.embedding_dim = 24;
    fx.config.layers = 1;
    fx.config.heads = 2;
    fx.config.head_dim = 8;
    fx.config.ff_dim = 16;
    fx.config.query_cap = 4;
    fx.config.doc_cap = 16;

    std::mt19937_64 rng(seed);
    const auto filler = [&](std::size_t count) {
        std::string text;
        for (std::size_t i = 0; i < count; ++i) {
            text += "w" + std::to_string(rng() % 20) + " ";
        }
        return text;
    };

    std::vector<std::string> positive_text(50), negative_text(50);
    for (int i = 0; i < 50; ++i) {
        positive_text[i] = filler(4) + "m" + std::to_string(i) + " " + filler(4);
        negative_text[i] = filler(9);
        fx.collection.emplace_back("p" + std::to_string(i), positive_text[i]);
        fx.collection.emplace_back("n" + std::to_string(i), negative_text[i]);
    }

    std::vector<std::string> corpus;
    for (const auto& [id, text] : fx.collection) corpus.push_back(text);
    fx.vocab = Vocabulary::build(corpus, 1);

    std::mt19937_64 emb_rng(seed + 1);
    const EmbeddingTable table = random_embeddings(fx.vocab, fx.config.embedding_dim, emb_rng);
    fx.params = TKParameters::initialize(fx.config, table, seed + 2);

    const auto encode_query = [&](int i) {
        return encode_sequence("m" + std::to_string(i), fx.vocab, fx.config.query_cap);
    };
    for (int t = 0; t < 200; ++t) {
        const int q = t % 50;
        TrainingTriple triple;
        triple.query = encode_query(q);
        triple.positive = encode_sequence(positive_text[q], fx.vocab, fx.config.doc_cap);
        triple.negative =
            encode_sequence(negative_text[rng() % 50], fx.vocab, fx.config.doc_cap);
        fx.triples.push_back(std::move(triple));
    }

    for (int q = 0; q < 50; ++q) {
        ValidationQuery vq;
        vq.query_id = "q" + std::to_string(q);
        vq.query = encode_query(q);
        vq.candidates.emplace_back(
            "p" + std::to_string(q),
            encode_sequence(positive_text[q], fx.vocab, fx.config.doc_cap));
        for (int c = 0; c < 9; ++c) {
            const int n = static_cast<int>(rng() % 50);
            vq.candidates.emplace_back(
                "n" + std::to_string(q) + "_" + std::to_string(c),
                encode_sequence(negative_text[n], fx.vocab, fx.config.doc_cap));
        }
        fx.validation.qrels.add(vq.query_id, "p" + std::to_string(q), 1);
        fx.validation.queries.push_back(std::move(vq));
    }
    return fx;
}

// ---------------------------------------------------------------------------
// criteria

std::string criterion_gradient_fidelity() {
    const auto start = std::chrono::steady_clock::now();
    TKConfig config;
    config.embedding_dim = 8;
    config.layers = 1;
    config.heads = 2;
    config.head_dim = 4;
    config.ff_dim = 6;
    config.kernel_mus = {1.0, 0.5, -0.5};
    config.query_cap = 4;
    config.doc_cap = 6;
    TinyModel tiny = make_tiny_model(config, 2024);

    const TokenSequence query = encode_sequence("t0 t1 t2 t3", tiny.vocab, 4);
    const TokenSequence doc = encode_sequence("t4 t5 t0 t6 t7 t1", tiny.vocab, 6);

    const auto report =
        gradient_check(forward_loss(tiny.config, query, doc), tiny.params.all(), 1e-5);
    const double worst = max_gradient_error(report);
    const double elapsed = seconds_since(start);

    require(worst < 1e-4, "max relative error " + num(worst) + " >= 1e-4");
    for (const char* id : {"alpha_raw", "beta", "gamma", "kernel.w_log", "kernel.w_len"}) {
        const bool present = std::any_of(report.begin(), report.end(),
                                         [&](const GradCheckEntry& e) { return e.id == id; });
        require(present, std::string("parameter ") + id + " missing from the check");
    }
    require(elapsed < 60.0, "took " + num(elapsed) + "s, budget 60s");
    return "max rel error " + num(worst) + ", " + num(elapsed) + "s";
}

std::string criterion_kernel_units() {
    TKConfig config;
    config.embedding_dim = 4;
    config.layers = 1;
    config.heads = 1;
    config.head_dim = 2;
    config.ff_dim = 2;
    config.kernel_mus = {0.9};
    config.kernel_sigma = 0.1;
    config.query_cap = 2;
    config.doc_cap = 2;

    const auto kernel_of = [&](double m) {
        MatchResult match;
        match.matrix = ag::constant(Tensor(1, 1, {m}));
        match.outer_mask = Tensor(1, 1, {1});
        match.query_mask = Tensor(1, 1, {1});
        match.query_true_length = 1;
        match.doc_true_length = 1;
        return kernel_features(match, config).cells[0]->value[0];
    };

    require(kernel_of(0.9) == 1.0, "K at the center must be exactly 1");
    require(std::fabs(kernel_of(1.0) - std::exp(-0.5)) < 1e-9,
            "K(1.0; mu=0.9) != exp(-0.5): " + num(kernel_of(1.0)));
    require(std::fabs(kernel_of(0.7) - std::exp(-2.0)) < 1e-9,
            "K(0.7; mu=0.9) != exp(-2): " + num(kernel_of(0.7)));
    for (double delta : {0.01, 0.05, 0.1, 0.3}) {
        require(kernel_of(0.9 + delta) == kernel_of(0.9 - delta),
                "kernel not symmetric at delta " + num(delta));
    }
    return "center 1 exact, exp(-0.5) and exp(-2) to 1e-9, symmetric";
}

std::string criterion_equation_endpoints() {
    TKConfig config;
    config.embedding_dim = 6;
    config.layers = 2;
    config.heads = 2;
    config.head_dim = 3;
    config.ff_dim = 5;
    config.kernel_mus = {1.0, 0.5, -0.5};
    config.query_cap = 5;
    config.doc_cap = 10;
    TinyModel tiny = make_tiny_model(config, 77);

    const TokenSequence query = encode_sequence("t0 t1 t2", tiny.vocab, 5);
    const TokenSequence doc = encode_sequence("t3 t4 t0 t5 t6 t1 t7", tiny.vocab, 10);

    // alpha forced to 1 reproduces raw embeddings bit-exactly
    tiny.config.alpha_override = 1.0;
    {
        const BoundModel bound = bind_model(tiny.params, tiny.config, false);
        const SequenceRepresentation rep = contextualize(query, bound);
        for (std::size_t i = 0; i < rep.hybrid->value.size(); ++i) {
            require(rep.hybrid->value[i] == rep.raw->value[i],
                    "hybrid != raw at flat index " + std::to_string(i));
        }

        // document permutation invariance under alpha = 1
        TokenSequence shuffled = doc;
        std::mt19937_64 rng(5);
        for (std::size_t i = shuffled.ids.size(); i > 1; --i) {
            std::swap(shuffled.ids[i - 1], shuffled.ids[rng() % i]);
        }
        const double s = forward(query, doc, bound).breakdown.score;
        const double s_shuffled = forward(query, shuffled, bound).breakdown.score;
        require(std::fabs(s - s_shuffled) < 1e-6,
                "permutation moved the score by " + num(std::fabs(s - s_shuffled)));
    }

    // padding invariance at learned alpha
    tiny.config.alpha_override.reset();
    {
        const BoundModel bound = bind_model(tiny.params, tiny.config, false);
        const double s = forward(query, doc, bound).breakdown.score;
        const double s_padded =
            forward(pad_sequence(query, 5), pad_sequence(doc, 10), bound).breakdown.score;
        require(std::fabs(s - s_padded) < 1e-6,
                "padding moved the score by " + num(std::fabs(s - s_padded)));
    }

    // single whole-document window, R=1, lambda=1 matches the standard log path
    TKConfig wconfig = tiny.config;
    wconfig.windowed = true;
    wconfig.window.sizes = {wconfig.doc_cap};
    wconfig.window.strides = {wconfig.doc_cap / 2};
    wconfig.window.top_r = 1;
    std::mt19937_64 rng(78);
    const EmbeddingTable table = random_embeddings(tiny.vocab, wconfig.embedding_dim, rng);
    TKParameters wparams = TKParameters::initialize(wconfig, table, 79);
    wparams.by_id("window.lambda").tensor = Tensor(1, 1, {1.0});
    const BoundModel bound = bind_model(wparams, wconfig, false);
    const SequenceRepresentation query_rep = contextualize(query, bound);
    const SequenceRepresentation doc_rep = contextualize(doc, bound);
    const KernelFeatures features = kernel_features(match_matrix(query_rep, doc_rep), wconfig);
    const double windowed = windowed_score_features(features, doc.true_length, bound).s_log->value[0];
    const double standard = score_features(features, doc.true_length, bound).s_log->value[0];
    require(std::fabs(windowed - standard) < 1e-9,
            "windowed log path differs by " + num(std::fabs(windowed - standard)));

    return "alpha endpoint bit-exact, permutation/padding < 1e-6, window degenerate < 1e-9";
}

std::string criterion_overfit() {
    const auto start = std::chrono::steady_clock::now();
    SyntheticCorpus fx = make_synthetic(9001);

    TrainConfig tconfig;
    tconfig.batch_size = 64;
    tconfig.margin = 1.0;
    tconfig.validation_interval = 50;
    tconfig.patience = 10;
    tconfig.max_steps = 500;
    tconfig.seed = 13;

    const TrainResult result =
        train(fx.triples, fx.validation, fx.config, tconfig, fx.params);
    const double accuracy = pairwise_accuracy(result.best_params, fx.config, fx.triples);
    const double mrr = validation_mrr(result.best_params, fx.config, fx.validation);
    const double elapsed = seconds_since(start);

    require(result.steps_run <= 500, "ran more than 500 steps");
    require(accuracy >= 0.99, "pairwise accuracy " + num(accuracy) + " < 0.99");
    require(mrr >= 0.9, "validation MRR@10 " + num(mrr) + " < 0.9");
    require(elapsed < 300.0, "took " + num(elapsed) + "s, budget 300s");
    return "accuracy " + num(accuracy) + ", MRR@10 " + num(mrr) + ", " +
           std::to_string(result.steps_run) + " steps, " + num(elapsed) + "s";
}

// independent brute-force metric recomputation for criterion 5
namespace oracle {

std::size_t relevant_total(const Qrels& qrels, const std::string& qid) {
    std::size_t n = 0;
    for (int g : qrels.grades(qid)) {
        if (g >= qrels.binarization_threshold) ++n;
    }
    return n;
}

double mrr(const RunList& run, const Qrels& qrels, std::size_t k) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& qid : run.query_ids()) {
        if (relevant_total(qrels, qid) == 0) continue;
        ++n;
        const auto& entries = run.entries(qid);
        for (std::size_t i = 0; i < entries.size() && i < k; ++i) {
            if (qrels.grade(qid, entries[i].doc_id) >= qrels.binarization_threshold) {
                sum += 1.0 / static_cast<double>(i + 1);
                break;
            }
        }
    }
    return n ? sum / static_cast<double>(n) : 0.0;
}

double map(const RunList& run, const Qrels& qrels) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& qid : run.query_ids()) {
        const std::size_t total = relevant_total(qrels, qid);
        if (total == 0) continue;
        ++n;
        double ap = 0.0;
        std::size_t hits = 0;
        const auto& entries = run.entries(qid);
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (qrels.grade(qid, entries[i].doc_id) >= qrels.binarization_threshold) {
                ++hits;
                ap += static_cast<double>(hits) / static_cast<double>(i + 1);
            }
        }
        sum += ap / static_cast<double>(total);
    }
    return n ? sum / static_cast<double>(n) : 0.0;
}

double ndcg(const RunList& run, const Qrels& qrels, std::size_t k) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& qid : run.query_ids()) {
        std::vector<int> grades = qrels.grades(qid);
        std::sort(grades.rbegin(), grades.rend());
        if (grades.empty() || grades[0] == 0) continue;
        ++n;
        double dcg = 0.0;
        const auto& entries = run.entries(qid);
        for (std::size_t i = 0; i < entries.size() && i < k; ++i) {
            dcg += (std::pow(2.0, qrels.grade(qid, entries[i].doc_id)) - 1.0) /
                   std::log2(static_cast<double>(i + 2));
        }
        double ideal = 0.0;
        for (std::size_t i = 0; i < grades.size() && i < k; ++i) {
            ideal += (std::pow(2.0, grades[i]) - 1.0) / std::log2(static_cast<double>(i + 2));
        }
        sum += dcg / ideal;
    }
    return n ? sum / static_cast<double>(n) : 0.0;
}

double p_at(const RunList& run, const Qrels& qrels, std::size_t k) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& qid : run.query_ids()) {
        if (relevant_total(qrels, qid) == 0) continue;
        ++n;
        std::size_t hits = 0;
        const auto& entries = run.entries(qid);
        for (std::size_t i = 0; i < entries.size() && i < k; ++i) {
            if (qrels.grade(qid, entries[i].doc_id) >= qrels.binarization_threshold) ++hits;
        }
        sum += static_cast<double>(hits) / static_cast<double>(k);
    }
    return n ? sum / static_cast<double>(n) : 0.0;
}

} // namespace oracle

std::string criterion_metric_oracles() {
    // hand-derived fixture values
    Qrels qrels;
    qrels.add("q", "hit", 1);
    RunList rank3;
    rank3.set_query("q", {{"a", 3.0}, {"b", 2.0}, {"hit", 1.0}});
    require(std::fabs(mrr_at_k(rank3, qrels, 10) - 1.0 / 3.0) < 1e-6, "MRR rank-3 fixture");

    Qrels two;
    two.add("q", "r1", 1);
    two.add("q", "r2", 1);
    RunList gap;
    gap.set_query("q", {{"r1", 3.0}, {"x", 2.0}, {"r2", 1.0}});
    require(std::fabs(mean_average_precision(gap, two) - (1.0 + 2.0 / 3.0) / 2.0) < 1e-6,
            "MAP {1,3} fixture");

    RunList second;
    second.set_query("q", {{"x", 2.0}, {"hit", 1.0}});
    require(std::fabs(ndcg_at_k(second, qrels, 10) - 1.0 / std::log2(3.0)) < 1e-6,
            "nDCG rank-2 fixture");

    Qrels three;
    std::vector<std::pair<std::string, double>> ranked;
    for (int i = 0; i < 3; ++i) {
        three.add("q", "r" + std::to_string(i), 1);
        ranked.emplace_back("r" + std::to_string(i), 30.0 - i);
    }
    for (int i = 0; i < 7; ++i) ranked.emplace_back("x" + std::to_string(i), 20.0 - i);
    RunList p10;
    p10.set_query("q", ranked);
    require(std::fabs(precision_at_k(p10, three, 10) - 0.3) < 1e-6, "P@10 fixture");

    // 50 random fixtures, brute force agreement must be exact
    std::mt19937_64 rng(771);
    for (int fixture = 0; fixture < 50; ++fixture) {
        RunList run;
        Qrels q;
        const std::size_t queries = 1 + rng() % 5;
        for (std::size_t qi = 0; qi < queries; ++qi) {
            const std::string qid = "q" + std::to_string(qi);
            std::vector<std::string> pool;
            for (int d = 0; d < 20; ++d) pool.push_back("d" + std::to_string(d));
            for (std::size_t i = pool.size(); i > 1; --i) std::swap(pool[i - 1], pool[rng() % i]);
            const std::size_t depth = 5 + rng() % 11;
            std::vector<std::pair<std::string, double>> entries;
            double score = 40.0;
            for (std::size_t i = 0; i < depth; ++i) {
                score -= static_cast<double>(rng() % 100) / 30.0;
                entries.emplace_back(pool[i], score);
            }
            run.set_query(qid, entries);
            for (const auto& doc : pool) {
                if (rng() % 3 == 0) q.add(qid, doc, static_cast<int>(rng() % 4));
            }
        }
        require(mrr_at_k(run, q, 10) == oracle::mrr(run, q, 10), "MRR differs from brute force");
        require(mean_average_precision(run, q) == oracle::map(run, q),
                "MAP differs from brute force");
        require(ndcg_at_k(run, q, 10) == oracle::ndcg(run, q, 10), "nDCG differs from brute force");
        require(precision_at_k(run, q, 10) == oracle::p_at(run, q, 10),
                "P@10 differs from brute force");
    }
    return "fixtures to 1e-6, 50 random fixtures exact";
}

std::string criterion_bm25() {
    const InvertedIndex tiny = InvertedIndex::build({{"d1", "a b a"}, {"d2", "c"}});
    const double score = tiny.bm25_score({"a"}, "d1", 0.9, 0.4);
    const double expected = std::log(2.0) * (2.0 * 1.9) / (2.0 + 0.9 * (0.6 + 0.4 * 1.5));
    require(score == expected, "hand fixture mismatch: " + num(score));
    require(std::fabs(score - 0.8552) < 1e-4, "fixture not 0.8552: " + num(score));

    std::mt19937_64 rng(551);
    const std::vector<std::string> pool{"ash", "oak", "elm", "fir", "yew",
                                        "ivy", "imp", "owl", "fox", "bee"};
    std::vector<std::pair<std::string, std::string>> collection;
    for (int d = 0; d < 100; ++d) {
        std::string text;
        const std::size_t words = 2 + rng() % 25;
        for (std::size_t w = 0; w < words; ++w) text += pool[rng() % pool.size()] + " ";
        collection.emplace_back(std::to_string(1000 + d), text);
    }
    const InvertedIndex index = InvertedIndex::build(collection);
    const std::vector<std::string> query{"oak", "owl", "bee"};
    const auto hits = index.search("oak owl bee", collection.size());

    std::vector<std::pair<std::string, double>> brute;
    for (const auto& [doc_id, text] : collection) {
        const double s = index.bm25_score(query, doc_id);
        if (s != 0.0) brute.emplace_back(doc_id, s);
    }
    std::sort(brute.begin(), brute.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return doc_id_less(a.first, b.first);
    });
    require(hits.size() == brute.size(), "full scan found a different matching set");
    for (std::size_t i = 0; i < hits.size(); ++i) {
        require(hits[i].first == brute[i].first && hits[i].second == brute[i].second,
                "full scan disagrees at rank " + std::to_string(i + 1));
    }
    return "0.8552 fixture exact, 100-doc full scan exact";
}

std::string criterion_depth_tuning() {
    std::map<std::string, std::vector<std::pair<std::string, double>>> candidates;
    std::vector<std::pair<std::string, double>> list;
    for (int i = 1; i <= 80; ++i) list.emplace_back("d" + std::to_string(i), 200.0 - i);
    candidates["q"] = list;
    Qrels qrels;
    qrels.add("q", "d7", 1);
    const PairScorer model = [](const std::string&, const std::string& doc) {
        const int n = std::stoi(doc.substr(1));
        if (n == 7) return 50.0;
        if (n >= 11) return 100.0 + n;
        return static_cast<double>(-n);
    };
    const auto tuned = tune_rerank_depth(candidates, model, qrels, {3, 10, 20});
    require(tuned.best_depth == 10, "expected optimum 10, got " + std::to_string(tuned.best_depth));
    require(std::fabs(tuned.evaluated[0].second - 1.0 / 7.0) < 1e-12, "depth 3 MRR wrong");
    require(tuned.evaluated[1].second == 1.0, "depth 10 MRR wrong");
    require(tuned.evaluated[2].second == 0.0, "depth 20 MRR wrong");

    const auto presets = tune_rerank_depth(candidates, model, qrels, {29, 60, 31});
    require(presets.evaluated.size() == 3 && presets.evaluated[0].first == 29 &&
                presets.evaluated[1].first == 60 && presets.evaluated[2].first == 31,
            "preset depths 29/60/31 not evaluated verbatim");
    return "constructed optimum 10 found, presets 29/60/31 accepted";
}

std::string criterion_explain() {
    TKConfig config;
    config.embedding_dim = 8;
    config.layers = 1;
    config.heads = 2;
    config.head_dim = 4;
    config.ff_dim = 6;
    config.query_cap = 4;
    config.doc_cap = 10;
    TinyModel tiny = make_tiny_model(config, 31337);
    const BoundModel bound = bind_model(tiny.params, tiny.config, false);

    const TokenSequence query = encode_sequence("t0 t1 t2", tiny.vocab, 4);
    const TokenSequence doc_a = encode_sequence("t3 t4 t0 t5", tiny.vocab, 10);
    const TokenSequence doc_b = encode_sequence("t6 t7 t1", tiny.vocab, 10);

    const ForwardResult ranking = forward(query, doc_a, bound);
    const ExplainReport report = explain(query, doc_a, bound, {0.9, 0.7});

    require(report.breakdown.score == ranking.breakdown.score, "score differs from ranking");
    require(report.breakdown.s_log == ranking.breakdown.s_log, "s_log differs from ranking");
    require(report.breakdown.s_len == ranking.breakdown.s_len, "s_len differs from ranking");
    require(report.breakdown.kernel_log == ranking.breakdown.kernel_log,
            "kernel table differs from ranking");
    require(report.breakdown.kernel_len == ranking.breakdown.kernel_len,
            "kernel length table differs from ranking");

    for (std::size_t j = 0; j < report.best_match.size(); ++j) {
        double best = -2.0;
        for (std::size_t i = 0; i < query.true_length; ++i) {
            best = std::max(best, ranking.match.matrix->value.at(i, j));
        }
        require(report.best_match[j] == best, "best match differs at doc token " +
                                                  std::to_string(j));
        std::size_t nearest = 0;
        double nearest_dist = 1e18;
        for (std::size_t k = 0; k < tiny.config.kernel_mus.size(); ++k) {
            const double dist = std::fabs(best - tiny.config.kernel_mus[k]);
            if (dist < nearest_dist || (dist == nearest_dist && tiny.config.kernel_mus[k] >
                                                                    tiny.config.kernel_mus[nearest])) {
                nearest = k;
                nearest_dist = dist;
            }
        }
        require(report.affiliation[j] == nearest,
                "affiliation differs from brute force at doc token " + std::to_string(j));
    }

    ExplainDocumentView left, right;
    left.doc_id = "A";
    left.tokens = {"t3", "t4", "t0", "t5"};
    left.report = report;
    right.doc_id = "B";
    right.tokens = {"t6", "t7", "t1"};
    right.report = explain(query, doc_b, bound, {0.9, 0.7});
    const std::string text =
        render_explain_text("2", "t0 t1 t2", tiny.config.kernel_mus, {left, right});
    require(text.find("Query (Id:2)") != std::string::npos, "missing query header");
    require(text.find("=== Document A") != std::string::npos, "missing first document pane");
    require(text.find("=== Document B") != std::string::npos, "missing second document pane");
    std::size_t tables = 0;
    for (std::size_t pos = text.find("mu      s_log"); pos != std::string::npos;
         pos = text.find("mu      s_log", pos + 1)) {
        ++tables;
    }
    require(tables == 2, "expected two kernel tables, found " + std::to_string(tables));
    return "breakdown bit-exact, affiliations brute-force checked, two-pane layout";
}

std::string criterion_early_stopping() {
    SyntheticCorpus fx = make_synthetic(4242);
    TrainConfig tconfig;
    tconfig.batch_size = 16;
    tconfig.validation_interval = 2;
    tconfig.patience = 2;
    tconfig.max_steps = 40;
    tconfig.seed = 7;

    // scripted validation metric peaking on the second check
    const std::vector<double> script{0.4, 0.95, 0.6, 0.5, 0.3};
    std::size_t call = 0;
    TKParameters at_peak;
    const ValidationHook hook = [&](const TKParameters& params, std::size_t) {
        const double value = script[std::min(call, script.size() - 1)];
        if (call == 1) at_peak = params;
        ++call;
        return value;
    };
    const TrainResult result =
        train(fx.triples, fx.validation, fx.config, tconfig, fx.params, nullptr, hook);
    require(result.best_mrr == 0.95, "returned metric is not the peak");
    require(result.best_step == 4, "peak step should be 4, got " + std::to_string(result.best_step));
    require(result.steps_run == 8, "patience 2 should halt after 8 steps");
    require(result.best_params.all().size() == at_peak.all().size(), "missing peak snapshot");
    for (std::size_t i = 0; i < at_peak.all().size(); ++i) {
        const Tensor& a = result.best_params.all()[i].tensor;
        const Tensor& b = at_peak.all()[i].tensor;
        for (std::size_t j = 0; j < a.size(); ++j) {
            require(a[j] == b[j], "returned checkpoint is not the peak snapshot");
        }
    }

    // and with the real validation metric, the returned checkpoint dominates
    // every evaluated one
    TrainConfig real = tconfig;
    real.validation_interval = 4;
    real.patience = 3;
    real.max_steps = 24;
    const TrainResult real_result =
        train(fx.triples, fx.validation, fx.config, real, fx.params);
    for (const auto& [step, mrr] : real_result.validation_history) {
        require(real_result.best_mrr >= mrr, "a later checkpoint scored higher than the returned one");
    }
    return "peak checkpoint returned, patience honored";
}

std::string criterion_determinism() {
    testutil::TempDir dir;
    const std::string collection = dir.file("collection.tsv");
    const std::string queries = dir.file("queries.tsv");
    const std::string triples = dir.file("triples.tsv");
    const std::string qrels = dir.file("qrels.txt");
    const std::string config = dir.file("tk.conf");

    std::string coll, qs, tr, qr;
    for (int q = 0; q < 3; ++q) {
        const std::string marker = "m" + std::to_string(q);
        coll += "p" + std::to_string(q) + "\tfill " + marker + " text common\n";
        coll += "n" + std::to_string(q) + "\tfill other junk common\n";
        qs += "q" + std::to_string(q) + "\tfind " + marker + " common\n";
        qr += "q" + std::to_string(q) + " 0 p" + std::to_string(q) + " 1\n";
        for (int rep = 0; rep < 4; ++rep) {
            tr += "find " + marker + "\tfill " + marker + " text common\tfill other junk common\n";
        }
    }
    testutil::write_file(collection, coll);
    testutil::write_file(queries, qs);
    testutil::write_file(triples, tr);
    testutil::write_file(qrels, qr);
    testutil::write_file(config, "embedding_dim = 8\nlayers = 1\nheads = 2\nhead_dim = 4\n"
                                 "ff_dim = 6\nkernel_mus = 1,0.5,-0.5\nquery_cap = 4\n"
                                 "doc_cap = 8\nbatch_size = 4\nvalidation_interval = 2\n"
                                 "patience = 4\nmax_steps = 6\nseed = 11\nmin_occurrence = 1\n");

    const auto cli = [](std::vector<std::string> args) {
        args.insert(args.begin(), "tk");
        return tk::cli::run(args);
    };

    const std::string index = dir.file("test.idx");
    const std::string bm25_run = dir.file("bm25.trec");
    require(cli({"index", "--collection", collection, "--output", index}) == 0, "index failed");
    require(cli({"search", "--index", index, "--queries", queries, "--output", bm25_run}) == 0,
            "search failed");

    const std::string ckpt_a = dir.file("a.ckpt");
    const std::string ckpt_b = dir.file("b.ckpt");
    for (const auto& [ckpt, log] : {std::pair{ckpt_a, dir.file("a.log")},
                                    std::pair{ckpt_b, dir.file("b.log")}}) {
        require(cli({"train", "--config", config, "--collection", collection, "--queries", queries,
                     "--triples", triples, "--validation-run", bm25_run, "--qrels", qrels,
                     "--output", ckpt, "--log", log}) == 0,
                "train failed");
    }
    require(testutil::read_file(ckpt_a) == testutil::read_file(ckpt_b),
            "checkpoints differ between identically seeded runs");
    require(!testutil::read_file(ckpt_a).empty(), "checkpoint is empty");

    const std::string run_a = dir.file("a.trec");
    const std::string run_b = dir.file("b.trec");
    for (const auto& out : {run_a, run_b}) {
        require(cli({"rerank", "--checkpoint", ckpt_a, "--collection", collection, "--queries",
                     queries, "--mode", "rerank", "--run", bm25_run, "--output", out}) == 0,
                "rerank failed");
    }
    require(testutil::read_file(run_a) == testutil::read_file(run_b),
            "run files differ between identical reranks");
    require(!testutil::read_file(run_a).empty(), "run file is empty");
    return "byte-identical checkpoints and run files";
}

struct Criterion {
    int id;
    std::string name;
    std::function<std::string()> body;
};

} // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "gradient fidelity", criterion_gradient_fidelity},
        {2, "kernel unit suite", criterion_kernel_units},
        {3, "equation-endpoint equivalences", criterion_equation_endpoints},
        {4, "overfit check", criterion_overfit},
        {5, "metric oracles", criterion_metric_oracles},
        {6, "BM25 oracle", criterion_bm25},
        {7, "re-ranking depth tuning", criterion_depth_tuning},
        {8, "explain consistency", criterion_explain},
        {9, "early stopping", criterion_early_stopping},
        {10, "determinism", criterion_determinism},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        try {
            const std::string detail = criterion.body();
            std::printf("[PASS] %2d. %s: %s\n", criterion.id, criterion.name.c_str(),
                        detail.c_str());
        } catch (const CheckFailure& f) {
            ++failures;
            std::printf("[FAIL] %2d. %s: %s\n", criterion.id, criterion.name.c_str(),
                        f.message.c_str());
        } catch (const std::exception& e) {
            ++failures;
            std::printf("[FAIL] %2d. %s: unexpected error: %s\n", criterion.id,
                        criterion.name.c_str(), e.what());
        }
        std::fflush(stdout);
    }
    if (failures) {
        std::printf("%d of %zu criteria failed\n", failures, criteria.size());
        return 1;
    }
    std::printf("all %zu criteria passed\n", criteria.size());
    return 0;
}
