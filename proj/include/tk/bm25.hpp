#pragma once

#include "tk/metrics.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace tk {

// Orders doc ids numerically when both are plain digit strings, otherwise
// lexicographically. Used for every doc-id tie-break.
bool doc_id_less(const std::string& a, const std::string& b);

struct Posting {
    std::uint32_t doc = 0; // ordinal into the id-ordered document table
    std::uint32_t tf = 0;
};

// Immutable BM25 index. Ordinals follow doc_id_less order, so posting
// lists are sorted by doc id by construction.
class InvertedIndex {
public:
    static InvertedIndex build(const std::vector<std::pair<std::string, std::string>>& collection);

    double bm25_score(const std::vector<std::string>& query_terms, const std::string& doc_id,
                      double k1 = 0.9, double b = 0.4) const;

    // Top-k by BM25, ties broken by ascending doc id. Documents matching no
    // query term are not returned.
    std::vector<std::pair<std::string, double>> search(const std::string& query_text, std::size_t k,
                                                       double k1 = 0.9, double b = 0.4) const;

    std::size_t doc_count() const { return doc_ids_.size(); }
    double avg_doc_length() const;
    bool has_doc(const std::string& doc_id) const;
    std::size_t doc_length(const std::string& doc_id) const;
    std::size_t document_frequency(const std::string& term) const;

    void save(const std::string& path) const;
    static InvertedIndex load(const std::string& path);

private:
    std::vector<std::string> doc_ids_;      // ordinal -> id, ordered by doc_id_less
    std::vector<std::uint32_t> doc_lengths_; // tokens per document
    std::uint64_t total_tokens_ = 0;
    std::map<std::string, std::vector<Posting>> postings_;

    std::size_t ordinal_of(const std::string& doc_id) const; // doc_count() if absent
    double score_one(const std::vector<std::string>& query_terms, std::size_t ordinal, double k1,
                     double b) const;
};

using PairScorer = std::function<double(const std::string& query_id, const std::string& doc_id)>;

// Model order above the cutoff, first-stage order below it. Tail scores are
// remapped below the re-ranked head so the merged list stays monotone.
std::vector<std::pair<std::string, double>> rerank_top(
    const std::vector<std::pair<std::string, double>>& candidates, std::size_t depth,
    const std::function<double(const std::string&)>& model_score);

struct DepthTuningResult {
    std::size_t best_depth = 0;
    std::vector<std::pair<std::size_t, double>> evaluated; // (depth, MRR@10) in input order
};

// Re-ranks the top D of every candidate list at each depth, evaluates
// MRR@10 against the qrels, and returns the best depth (ties -> smallest).
DepthTuningResult tune_rerank_depth(
    const std::map<std::string, std::vector<std::pair<std::string, double>>>& candidates,
    const PairScorer& model, const Qrels& qrels, const std::vector<std::size_t>& depths);

} // namespace tk
