#include "tk/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tk {

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, end);
}

void Qrels::add(const std::string& query_id, const std::string& doc_id, int grade) {
    if (grade < 0) {
        throw std::invalid_argument("Qrels: negative grade for " + query_id + "/" + doc_id);
    }
    judgments_[query_id][doc_id] = grade;
}

int Qrels::grade(const std::string& query_id, const std::string& doc_id) const {
    auto q = judgments_.find(query_id);
    if (q == judgments_.end()) return 0;
    auto d = q->second.find(doc_id);
    return d == q->second.end() ? 0 : d->second;
}

bool Qrels::has_query(const std::string& query_id) const {
    return judgments_.find(query_id) != judgments_.end();
}

std::size_t Qrels::relevant_count(const std::string& query_id) const {
    auto q = judgments_.find(query_id);
    if (q == judgments_.end()) return 0;
    std::size_t count = 0;
    for (const auto& [doc, grade] : q->second) {
        if (grade >= binarization_threshold) ++count;
    }
    return count;
}

std::vector<int> Qrels::grades(const std::string& query_id) const {
    std::vector<int> out;
    auto q = judgments_.find(query_id);
    if (q == judgments_.end()) return out;
    for (const auto& [doc, grade] : q->second) out.push_back(grade);
    return out;
}

bool Qrels::relevant(const std::string& query_id, const std::string& doc_id) const {
    return grade(query_id, doc_id) >= binarization_threshold;
}

std::size_t Qrels::size() const {
    std::size_t n = 0;
    for (const auto& [qid, docs] : judgments_) n += docs.size();
    return n;
}

Qrels Qrels::parse(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("qrels: cannot open " + path);
    Qrels qrels;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string qid, zero, docid;
        int grade = 0;
        if (!(fields >> qid >> zero >> docid >> grade)) {
            throw std::runtime_error(path + ":" + std::to_string(line_number) +
                                     ": expected `qid 0 docid grade`");
        }
        qrels.add(qid, docid, grade);
    }
    return qrels;
}

void RunList::set_query(const std::string& query_id,
                        std::vector<std::pair<std::string, double>> ranked) {
    std::vector<RunEntry> entries;
    entries.reserve(ranked.size());
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        entries.push_back({std::move(ranked[i].first), ranked[i].second, i + 1});
    }
    queries_[query_id] = std::move(entries);
}

const std::vector<RunEntry>& RunList::entries(const std::string& query_id) const {
    auto it = queries_.find(query_id);
    if (it == queries_.end()) {
        throw std::out_of_range("RunList: no query " + query_id);
    }
    return it->second;
}

bool RunList::has_query(const std::string& query_id) const {
    return queries_.find(query_id) != queries_.end();
}

std::vector<std::string> RunList::query_ids() const {
    std::vector<std::string> ids;
    ids.reserve(queries_.size());
    for (const auto& [qid, entries] : queries_) ids.push_back(qid);
    return ids;
}

std::size_t RunList::query_count() const { return queries_.size(); }

void RunList::validate() const {
    for (const auto& [qid, entries] : queries_) {
        double previous_score = 0.0;
        std::map<std::string, bool> seen;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (entries[i].rank != i + 1) {
                throw std::runtime_error("RunList: query " + qid + " has non-contiguous ranks");
            }
            if (i > 0 && entries[i].score > previous_score) {
                throw std::runtime_error("RunList: query " + qid + " scores increase at rank " +
                                         std::to_string(i + 1));
            }
            if (!seen.emplace(entries[i].doc_id, true).second) {
                throw std::runtime_error("RunList: query " + qid + " repeats document " +
                                         entries[i].doc_id);
            }
            previous_score = entries[i].score;
        }
    }
}

RunList RunList::parse(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("run: cannot open " + path);
    RunList run;
    std::map<std::string, std::vector<RunEntry>> collected;
    std::string line;
    std::size_t line_number = 0;
    std::string tag;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string qid, q0, docid, line_tag;
        std::size_t rank = 0;
        double score = 0.0;
        if (!(fields >> qid >> q0 >> docid >> rank >> score >> line_tag)) {
            throw std::runtime_error(path + ":" + std::to_string(line_number) +
                                     ": expected `qid Q0 docid rank score tag`");
        }
        collected[qid].push_back({docid, score, rank});
        tag = line_tag;
    }
    for (auto& [qid, entries] : collected) {
        std::stable_sort(entries.begin(), entries.end(),
                         [](const RunEntry& a, const RunEntry& b) { return a.rank < b.rank; });
        run.queries_[qid] = std::move(entries);
    }
    if (!tag.empty()) run.tag = tag;
    run.validate();
    return run;
}

void RunList::write(const std::string& path) const {
    validate();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("run: cannot open " + path + " for writing");
    for (const auto& [qid, entries] : queries_) {
        for (const auto& entry : entries) {
            out << qid << " Q0 " << entry.doc_id << " " << entry.rank << " "
                << format_double(entry.score) << " " << tag << "\n";
        }
    }
    if (!out) throw std::runtime_error("run: write failed for " + path);
}

namespace {

// Mean of per-query values over queries that have at least one relevant
// judged document; throws on an empty run.
template <typename PerQuery>
double metric_mean(const RunList& run, const Qrels& qrels, PerQuery&& per_query) {
    if (run.query_count() == 0) throw std::invalid_argument("metrics: empty run");
    double total = 0.0;
    std::size_t counted = 0;
    for (const auto& qid : run.query_ids()) {
        if (qrels.relevant_count(qid) == 0) continue;
        total += per_query(qid, run.entries(qid));
        ++counted;
    }
    return counted == 0 ? 0.0 : total / static_cast<double>(counted);
}

} // namespace

double mrr_at_k(const RunList& run, const Qrels& qrels, std::size_t k) {
    if (k < 1) throw std::invalid_argument("mrr_at_k: k must be >= 1");
    return metric_mean(run, qrels, [&](const std::string& qid, const std::vector<RunEntry>& entries) {
        const std::size_t depth = std::min(k, entries.size());
        for (std::size_t i = 0; i < depth; ++i) {
            if (qrels.relevant(qid, entries[i].doc_id)) {
                return 1.0 / static_cast<double>(i + 1);
            }
        }
        return 0.0;
    });
}

double mean_average_precision(const RunList& run, const Qrels& qrels) {
    return metric_mean(run, qrels, [&](const std::string& qid, const std::vector<RunEntry>& entries) {
        double precision_sum = 0.0;
        std::size_t hits = 0;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (qrels.relevant(qid, entries[i].doc_id)) {
                ++hits;
                precision_sum += static_cast<double>(hits) / static_cast<double>(i + 1);
            }
        }
        return precision_sum / static_cast<double>(qrels.relevant_count(qid));
    });
}

double ndcg_at_k(const RunList& run, const Qrels& qrels, std::size_t k) {
    if (run.query_count() == 0) throw std::invalid_argument("metrics: empty run");
    double total = 0.0;
    std::size_t counted = 0;
    for (const auto& qid : run.query_ids()) {
        std::vector<int> ideal = qrels.grades(qid);
        std::sort(ideal.begin(), ideal.end(), std::greater<int>());
        if (ideal.empty() || ideal.front() == 0) continue; // all-zero grades excluded

        const auto& entries = run.entries(qid);
        const std::size_t depth = k == 0 ? entries.size() : std::min(k, entries.size());
        double dcg = 0.0;
        for (std::size_t i = 0; i < depth; ++i) {
            const int g = qrels.grade(qid, entries[i].doc_id);
            dcg += (std::pow(2.0, g) - 1.0) / std::log2(static_cast<double>(i + 2));
        }
        const std::size_t ideal_depth = k == 0 ? ideal.size() : std::min(k, ideal.size());
        double ideal_dcg = 0.0;
        for (std::size_t i = 0; i < ideal_depth; ++i) {
            ideal_dcg += (std::pow(2.0, ideal[i]) - 1.0) / std::log2(static_cast<double>(i + 2));
        }
        total += dcg / ideal_dcg;
        ++counted;
    }
    return counted == 0 ? 0.0 : total / static_cast<double>(counted);
}

double precision_at_k(const RunList& run, const Qrels& qrels, std::size_t k) {
    if (k < 1) throw std::invalid_argument("precision_at_k: k must be >= 1");
    return metric_mean(run, qrels, [&](const std::string& qid, const std::vector<RunEntry>& entries) {
        // entries past the end of the run count as non-relevant
        std::size_t hits = 0;
        for (std::size_t i = 0; i < std::min(k, entries.size()); ++i) {
            if (qrels.relevant(qid, entries[i].doc_id)) ++hits;
        }
        return static_cast<double>(hits) / static_cast<double>(k);
    });
}

} // namespace tk
