#pragma once

#include "tk/bm25.hpp"
#include "tk/metrics.hpp"
#include "tk/model.hpp"

#include <map>
#include <string>
#include <vector>

namespace tk {

struct RunSpecification {
    enum class Mode { full, rerank };

    Mode mode = Mode::rerank;
    std::string checkpoint_path;
    std::string config_path; // optional; cross-checked against the checkpoint
    std::string collection_path;
    std::string queries_path;
    std::string index_path;     // full mode
    std::string input_run_path; // rerank mode
    std::string output_path;
    std::size_t depth = 0; // 0 -> re-rank every retrieved candidate
    std::size_t retrieval_k = 1000;
    double bm25_k1 = 0.9;
    double bm25_b = 0.4;
    std::string tag = "tk";
};

// Throws when the file config differs from the one embedded in the
// checkpoint, naming the differing field.
void require_config_match(const TKConfig& from_file, const TKConfig& from_checkpoint);

// Full mode: BM25 retrieval to `retrieval_k`, model re-scores the top
// `depth`, first-stage order kept below. Rerank mode: re-scores every
// candidate of the provided run. Writes the TREC run to `output_path`.
RunList rerank_pipeline(const RunSpecification& spec);

// Score-average of multiple runs: per (query, doc) the mean over the runs
// containing the pair, re-sorted per query.
RunList ensemble_runs(const std::vector<RunList>& runs, const std::string& tag);

// key -> text with duplicate detection
std::map<std::string, std::string> load_text_map(const std::string& path);

} // namespace tk
