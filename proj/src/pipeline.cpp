#include "tk/pipeline.hpp"

#include "tk/config.hpp"
#include "tk/text.hpp"

#include <algorithm>
#include <iostream>
#include <stdexcept>

namespace tk {

namespace {

std::string join_sizes(const std::vector<std::size_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(v[i]);
    }
    return out;
}

std::string join_doubles(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += format_double(v[i]);
    }
    return out;
}

[[noreturn]] void config_mismatch(const std::string& field, const std::string& file_value,
                                  const std::string& checkpoint_value) {
    throw std::runtime_error("config/checkpoint mismatch on field '" + field + "': config file has " +
                             file_value + ", checkpoint has " + checkpoint_value);
}

} // namespace

void require_config_match(const TKConfig& from_file, const TKConfig& from_checkpoint) {
    const auto check_size = [](const std::string& field, std::size_t a, std::size_t b) {
        if (a != b) config_mismatch(field, std::to_string(a), std::to_string(b));
    };
    check_size("embedding_dim", from_file.embedding_dim, from_checkpoint.embedding_dim);
    check_size("layers", from_file.layers, from_checkpoint.layers);
    check_size("heads", from_file.heads, from_checkpoint.heads);
    check_size("head_dim", from_file.head_dim, from_checkpoint.head_dim);
    check_size("ff_dim", from_file.ff_dim, from_checkpoint.ff_dim);
    if (from_file.kernel_mus != from_checkpoint.kernel_mus) {
        config_mismatch("kernel_mus", join_doubles(from_file.kernel_mus),
                        join_doubles(from_checkpoint.kernel_mus));
    }
    if (from_file.kernel_sigma != from_checkpoint.kernel_sigma) {
        config_mismatch("kernel_sigma", format_double(from_file.kernel_sigma),
                        format_double(from_checkpoint.kernel_sigma));
    }
    if (from_file.log_base != from_checkpoint.log_base) {
        config_mismatch("log_base", format_double(from_file.log_base),
                        format_double(from_checkpoint.log_base));
    }
    check_size("query_cap", from_file.query_cap, from_checkpoint.query_cap);
    check_size("doc_cap", from_file.doc_cap, from_checkpoint.doc_cap);
    if (from_file.windowed != from_checkpoint.windowed) {
        config_mismatch("windowed", from_file.windowed ? "true" : "false",
                        from_checkpoint.windowed ? "true" : "false");
    }
    if (from_file.windowed) {
        if (from_file.window.sizes != from_checkpoint.window.sizes) {
            config_mismatch("window_sizes", join_sizes(from_file.window.sizes),
                            join_sizes(from_checkpoint.window.sizes));
        }
        if (from_file.window.strides != from_checkpoint.window.strides) {
            config_mismatch("window_strides", join_sizes(from_file.window.strides),
                            join_sizes(from_checkpoint.window.strides));
        }
        check_size("window_top_r", from_file.window.top_r, from_checkpoint.window.top_r);
    }
}

std::map<std::string, std::string> load_text_map(const std::string& path) {
    std::map<std::string, std::string> out;
    for (auto& [key, text] : load_tsv_pairs(path)) {
        if (!out.emplace(key, text).second) {
            throw std::runtime_error(path + ": duplicate id " + key);
        }
    }
    return out;
}

namespace {

// Score of a candidate document under an already-encoded query; documents
// that tokenize to nothing sink to the bottom with a warning.
double candidate_score(const TKScorer& scorer, const SequenceRepresentation& query_rep,
                       const std::map<std::string, std::string>& collection,
                       const Vocabulary& vocab, std::size_t doc_cap, const std::string& doc_id) {
    auto it = collection.find(doc_id);
    if (it == collection.end()) {
        throw std::runtime_error("rerank: document " + doc_id + " missing from the collection");
    }
    try {
        const TokenSequence doc = encode_sequence(it->second, vocab, doc_cap);
        return scorer.score_with_query(query_rep, doc).score;
    } catch (const EmptyTextError&) {
        std::cerr << "warning: document " << doc_id << " tokenizes to nothing, ranked last\n";
        return -1e300;
    }
}

} // namespace

RunList rerank_pipeline(const RunSpecification& spec) {
    ModelCheckpoint checkpoint = load_checkpoint(spec.checkpoint_path);
    if (!spec.config_path.empty()) {
        const TKConfig file_config =
            tk_config_from(KeyValueConfig::parse_file(spec.config_path));
        require_config_match(file_config, checkpoint.config);
    }
    const TKConfig& config = checkpoint.config;
    const TKScorer scorer(checkpoint.params, config);

    const auto queries = load_text_map(spec.queries_path);
    const auto collection = load_text_map(spec.collection_path);

    RunList output;
    output.tag = spec.tag;

    const auto rerank_query = [&](const std::string& qid,
                                  const std::vector<std::pair<std::string, double>>& candidates,
                                  std::size_t depth) {
        auto qit = queries.find(qid);
        if (qit == queries.end()) {
            throw std::runtime_error("rerank: query " + qid + " missing from the queries file");
        }
        TokenSequence query_seq;
        try {
            query_seq = encode_sequence(qit->second, checkpoint.vocab, config.query_cap);
        } catch (const EmptyTextError&) {
            std::cerr << "warning: query " << qid << " tokenizes to nothing, kept in first-stage order\n";
            output.set_query(qid, candidates);
            return;
        }
        const SequenceRepresentation query_rep = scorer.encode_query(query_seq);
        output.set_query(qid, rerank_top(candidates, depth, [&](const std::string& doc_id) {
                             return candidate_score(scorer, query_rep, collection, checkpoint.vocab,
                                                    config.doc_cap, doc_id);
                         }));
    };

    if (spec.mode == RunSpecification::Mode::full) {
        if (spec.index_path.empty()) {
            throw std::runtime_error("rerank: full mode requires an index");
        }
        const InvertedIndex index = InvertedIndex::load(spec.index_path);
        for (const auto& [qid, text] : queries) {
            const auto candidates = index.search(text, spec.retrieval_k, spec.bm25_k1, spec.bm25_b);
            if (candidates.empty()) continue;
            const std::size_t depth = spec.depth == 0 ? candidates.size() : spec.depth;
            rerank_query(qid, candidates, depth);
        }
    } else {
        if (spec.input_run_path.empty()) {
            throw std::runtime_error("rerank: rerank mode requires an input run file");
        }
        const RunList input = RunList::parse(spec.input_run_path);
        for (const auto& qid : input.query_ids()) {
            std::vector<std::pair<std::string, double>> candidates;
            for (const auto& entry : input.entries(qid)) {
                candidates.emplace_back(entry.doc_id, entry.score);
            }
            rerank_query(qid, candidates, candidates.size());
        }
    }

    if (!spec.output_path.empty()) output.write(spec.output_path);
    return output;
}

RunList ensemble_runs(const std::vector<RunList>& runs, const std::string& tag) {
    if (runs.empty()) throw std::invalid_argument("ensemble_runs: no runs");

    std::map<std::string, std::map<std::string, std::pair<double, std::size_t>>> sums;
    for (const auto& run : runs) {
        for (const auto& qid : run.query_ids()) {
            for (const auto& entry : run.entries(qid)) {
                auto& [sum, count] = sums[qid][entry.doc_id];
                sum += entry.score;
                ++count;
            }
        }
    }

    RunList out;
    out.tag = tag;
    for (const auto& [qid, docs] : sums) {
        std::vector<std::pair<std::string, double>> averaged;
        averaged.reserve(docs.size());
        for (const auto& [doc_id, acc] : docs) {
            averaged.emplace_back(doc_id, acc.first / static_cast<double>(acc.second));
        }
        std::sort(averaged.begin(), averaged.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return doc_id_less(a.first, b.first);
        });
        out.set_query(qid, std::move(averaged));
    }
    return out;
}

} // namespace tk
