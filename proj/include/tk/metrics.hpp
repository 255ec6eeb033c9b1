#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace tk {

// Relevance judgments keyed by (query id, doc id). Unjudged pairs read as
// grade 0. Grades at or above the binarization threshold count as relevant
// for MRR, MAP and P@k.
class Qrels {
public:
    void add(const std::string& query_id, const std::string& doc_id, int grade);
    int grade(const std::string& query_id, const std::string& doc_id) const;
    bool has_query(const std::string& query_id) const;
    std::size_t relevant_count(const std::string& query_id) const;
    std::vector<int> grades(const std::string& query_id) const; // all judged grades
    bool relevant(const std::string& query_id, const std::string& doc_id) const;

    int binarization_threshold = 1;

    // lines: qid 0 docid grade
    static Qrels parse(const std::string& path);
    std::size_t size() const;

private:
    std::map<std::string, std::map<std::string, int>> judgments_;
};

struct RunEntry {
    std::string doc_id;
    double score = 0.0;
    std::size_t rank = 0;
};

// One ranked result list per query. Ranks are 1..n, scores non-increasing,
// no duplicate document within a query.
class RunList {
public:
    std::string tag = "run";

    // entries must already be ordered; ranks are assigned 1..n
    void set_query(const std::string& query_id, std::vector<std::pair<std::string, double>> ranked);
    const std::vector<RunEntry>& entries(const std::string& query_id) const;
    bool has_query(const std::string& query_id) const;
    std::vector<std::string> query_ids() const;
    std::size_t query_count() const;
    void validate() const;

    // lines: qid Q0 docid rank score tag
    static RunList parse(const std::string& path);
    void write(const std::string& path) const;

private:
    std::map<std::string, std::vector<RunEntry>> queries_;
};

// Queries with no relevant judged documents are excluded from every mean,
// matching standard evaluation-tool behavior. All metrics throw on an
// empty run.
double mrr_at_k(const RunList& run, const Qrels& qrels, std::size_t k);
double mean_average_precision(const RunList& run, const Qrels& qrels);
// k == 0 evaluates at full run depth
double ndcg_at_k(const RunList& run, const Qrels& qrels, std::size_t k);
double precision_at_k(const RunList& run, const Qrels& qrels, std::size_t k);

// Round-trip-exact decimal rendering for scores and metric values.
std::string format_double(double v);

} // namespace tk
