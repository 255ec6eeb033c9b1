#include "tk/bm25.hpp"

#include "tk/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace tk {

bool doc_id_less(const std::string& a, const std::string& b) {
    const auto all_digits = [](const std::string& s) {
        if (s.empty()) return false;
        return std::all_of(s.begin(), s.end(),
                           [](unsigned char c) { return std::isdigit(c) != 0; });
    };
    if (all_digits(a) && all_digits(b)) {
        if (a.size() != b.size()) return a.size() < b.size();
    }
    return a < b;
}

InvertedIndex InvertedIndex::build(
    const std::vector<std::pair<std::string, std::string>>& collection) {
    if (collection.empty()) throw std::invalid_argument("InvertedIndex: empty collection");

    std::vector<std::size_t> order(collection.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return doc_id_less(collection[a].first, collection[b].first);
    });

    InvertedIndex index;
    index.doc_ids_.reserve(collection.size());
    index.doc_lengths_.reserve(collection.size());
    for (std::size_t ordinal = 0; ordinal < order.size(); ++ordinal) {
        const auto& [doc_id, text] = collection[order[ordinal]];
        if (!index.doc_ids_.empty() && index.doc_ids_.back() == doc_id) {
            throw std::invalid_argument("InvertedIndex: duplicate doc id " + doc_id);
        }
        const auto tokens = tokenize(text);
        index.doc_ids_.push_back(doc_id);
        index.doc_lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
        index.total_tokens_ += tokens.size();

        std::map<std::string, std::uint32_t> tf;
        for (const auto& term : tokens) ++tf[term];
        for (const auto& [term, count] : tf) {
            index.postings_[term].push_back({static_cast<std::uint32_t>(ordinal), count});
        }
    }
    return index;
}

double InvertedIndex::avg_doc_length() const {
    return static_cast<double>(total_tokens_) / static_cast<double>(doc_ids_.size());
}

std::size_t InvertedIndex::ordinal_of(const std::string& doc_id) const {
    auto it = std::lower_bound(doc_ids_.begin(), doc_ids_.end(), doc_id, doc_id_less);
    if (it == doc_ids_.end() || *it != doc_id) return doc_ids_.size();
    return static_cast<std::size_t>(it - doc_ids_.begin());
}

bool InvertedIndex::has_doc(const std::string& doc_id) const {
    return ordinal_of(doc_id) < doc_ids_.size();
}

std::size_t InvertedIndex::doc_length(const std::string& doc_id) const {
    const std::size_t ordinal = ordinal_of(doc_id);
    if (ordinal == doc_ids_.size()) {
        throw std::out_of_range("InvertedIndex: unknown doc id " + doc_id);
    }
    return doc_lengths_[ordinal];
}

std::size_t InvertedIndex::document_frequency(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? 0 : it->second.size();
}

double InvertedIndex::score_one(const std::vector<std::string>& query_terms, std::size_t ordinal,
                                double k1, double b) const {
    const double n = static_cast<double>(doc_ids_.size());
    const double avgdl = avg_doc_length();
    const double dl = static_cast<double>(doc_lengths_[ordinal]);
    double score = 0.0;
    for (const auto& term : query_terms) {
        auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        const auto& list = it->second;
        auto p = std::lower_bound(list.begin(), list.end(), ordinal,
                                  [](const Posting& posting, std::size_t ord) {
                                      return posting.doc < ord;
                                  });
        if (p == list.end() || p->doc != ordinal) continue;
        const double tf = static_cast<double>(p->tf);
        const double df = static_cast<double>(list.size());
        const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
    }
    return score;
}

double InvertedIndex::bm25_score(const std::vector<std::string>& query_terms,
                                 const std::string& doc_id, double k1, double b) const {
    const std::size_t ordinal = ordinal_of(doc_id);
    if (ordinal == doc_ids_.size()) {
        throw std::out_of_range("bm25_score: unknown doc id " + doc_id);
    }
    return score_one(query_terms, ordinal, k1, b);
}

std::vector<std::pair<std::string, double>> InvertedIndex::search(const std::string& query_text,
                                                                  std::size_t k, double k1,
                                                                  double b) const {
    if (k < 1) throw std::invalid_argument("search: k must be >= 1");
    const auto query_terms = tokenize(query_text);
    const double n = static_cast<double>(doc_ids_.size());
    const double avgdl = avg_doc_length();

    std::vector<double> scores(doc_ids_.size(), 0.0);
    std::vector<bool> touched(doc_ids_.size(), false);
    // term-at-a-time, so each document accumulates in query-term order
    for (const auto& term : query_terms) {
        auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        const double df = static_cast<double>(it->second.size());
        const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        for (const Posting& posting : it->second) {
            const double tf = static_cast<double>(posting.tf);
            const double dl = static_cast<double>(doc_lengths_[posting.doc]);
            scores[posting.doc] += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
            touched[posting.doc] = true;
        }
    }

    std::vector<std::size_t> matched;
    for (std::size_t ordinal = 0; ordinal < doc_ids_.size(); ++ordinal) {
        if (touched[ordinal]) matched.push_back(ordinal);
    }
    std::sort(matched.begin(), matched.end(), [&](std::size_t a, std::size_t b2) {
        if (scores[a] != scores[b2]) return scores[a] > scores[b2];
        return a < b2; // ordinals follow doc_id_less order
    });
    if (matched.size() > k) matched.resize(k);

    std::vector<std::pair<std::string, double>> results;
    results.reserve(matched.size());
    for (std::size_t ordinal : matched) results.emplace_back(doc_ids_[ordinal], scores[ordinal]);
    return results;
}

namespace {

constexpr char kIndexMagic[8] = {'T', 'K', 'I', 'D', 'X', '0', '0', '1'};

void write_u64(std::ostream& out, std::uint64_t v) {
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFFu);
    out.write(reinterpret_cast<const char*>(bytes), 8);
}

std::uint64_t read_u64(std::istream& in) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    if (!in) throw std::runtime_error("index: truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return v;
}

void write_string(std::ostream& out, const std::string& s) {
    write_u64(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
    const std::uint64_t len = read_u64(in);
    std::string s(len, '\0');
    in.read(s.data(), static_cast<std::streamsize>(len));
    if (!in) throw std::runtime_error("index: truncated string");
    return s;
}

} // namespace

void InvertedIndex::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("index: cannot open " + path + " for writing");
    out.write(kIndexMagic, sizeof(kIndexMagic));
    write_u64(out, doc_ids_.size());
    for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
        write_string(out, doc_ids_[i]);
        write_u64(out, doc_lengths_[i]);
    }
    write_u64(out, total_tokens_);
    write_u64(out, postings_.size());
    for (const auto& [term, list] : postings_) {
        write_string(out, term);
        write_u64(out, list.size());
        for (const Posting& posting : list) {
            write_u64(out, posting.doc);
            write_u64(out, posting.tf);
        }
    }
    if (!out) throw std::runtime_error("index: write failed for " + path);
}

InvertedIndex InvertedIndex::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("index: cannot open " + path);
    char magic[sizeof(kIndexMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kIndexMagic, sizeof(magic)) != 0) {
        throw std::runtime_error("index: " + path + " is not a TK index");
    }
    InvertedIndex index;
    const std::uint64_t docs = read_u64(in);
    index.doc_ids_.reserve(docs);
    index.doc_lengths_.reserve(docs);
    for (std::uint64_t i = 0; i < docs; ++i) {
        index.doc_ids_.push_back(read_string(in));
        index.doc_lengths_.push_back(static_cast<std::uint32_t>(read_u64(in)));
    }
    index.total_tokens_ = read_u64(in);
    const std::uint64_t terms = read_u64(in);
    for (std::uint64_t t = 0; t < terms; ++t) {
        std::string term = read_string(in);
        const std::uint64_t count = read_u64(in);
        std::vector<Posting> list;
        list.reserve(count);
        for (std::uint64_t i = 0; i < count; ++i) {
            Posting posting;
            posting.doc = static_cast<std::uint32_t>(read_u64(in));
            posting.tf = static_cast<std::uint32_t>(read_u64(in));
            list.push_back(posting);
        }
        index.postings_[std::move(term)] = std::move(list);
    }
    return index;
}

std::vector<std::pair<std::string, double>> rerank_top(
    const std::vector<std::pair<std::string, double>>& candidates, std::size_t depth,
    const std::function<double(const std::string&)>& model_score) {
    const std::size_t head_size = std::min(depth, candidates.size());
    std::vector<std::pair<std::string, double>> head(candidates.begin(),
                                                     candidates.begin() + head_size);
    for (auto& [doc_id, score] : head) score = model_score(doc_id);
    std::stable_sort(head.begin(), head.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });

    double floor = head.empty() ? 0.0 : head.back().second;
    std::vector<std::pair<std::string, double>> merged = std::move(head);
    for (std::size_t i = head_size; i < candidates.size(); ++i) {
        // original first-stage order, with scores stepped below the head
        floor -= 1.0;
        merged.emplace_back(candidates[i].first, floor);
    }
    return merged;
}

DepthTuningResult tune_rerank_depth(
    const std::map<std::string, std::vector<std::pair<std::string, double>>>& candidates,
    const PairScorer& model, const Qrels& qrels, const std::vector<std::size_t>& depths) {
    if (depths.empty()) throw std::invalid_argument("tune_rerank_depth: no depths given");
    if (candidates.empty()) throw std::invalid_argument("tune_rerank_depth: no candidates");

    DepthTuningResult result;
    double best_mrr = -1.0;
    for (std::size_t depth : depths) {
        RunList run;
        run.tag = "tune";
        for (const auto& [qid, docs] : candidates) {
            run.set_query(qid, rerank_top(docs, depth, [&](const std::string& doc_id) {
                              return model(qid, doc_id);
                          }));
        }
        const double mrr = mrr_at_k(run, qrels, 10);
        result.evaluated.emplace_back(depth, mrr);
        if (mrr > best_mrr || (mrr == best_mrr && depth < result.best_depth)) {
            best_mrr = mrr;
            result.best_depth = depth;
        }
    }
    return result;
}

} // namespace tk
