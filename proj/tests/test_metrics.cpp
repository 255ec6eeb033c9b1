#include "tk/metrics.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace tk;

namespace {

RunList single_query_run(const std::vector<std::pair<std::string, double>>& ranked) {
    RunList run;
    run.set_query("q", ranked);
    return run;
}

} // namespace

TEST_CASE("mrr fixtures") {
    Qrels qrels;
    qrels.add("q", "hit", 1);
    qrels.add("q", "miss", 0);

    CHECK(mrr_at_k(single_query_run({{"hit", 3.0}, {"miss", 2.0}}), qrels, 10) == 1.0);
    CHECK(mrr_at_k(single_query_run({{"a", 3.0}, {"b", 2.0}, {"hit", 1.0}}), qrels, 10) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    std::vector<std::pair<std::string, double>> deep;
    for (int i = 0; i < 10; ++i) deep.emplace_back("junk" + std::to_string(i), 100.0 - i);
    deep.emplace_back("hit", 1.0);
    CHECK(mrr_at_k(single_query_run(deep), qrels, 10) == 0.0); // not inside the cutoff

    CHECK_THROWS(mrr_at_k(RunList{}, qrels, 10));
}

TEST_CASE("map fixtures") {
    Qrels qrels;
    qrels.add("q", "r1", 1);
    qrels.add("q", "r2", 1);

    // both relevant docs at the top -> AP 1
    CHECK(mean_average_precision(single_query_run({{"r1", 3.0}, {"r2", 2.0}, {"x", 1.0}}), qrels) ==
          1.0);
    // relevant at ranks 1 and 3 of 2 total -> (1 + 2/3) / 2
    CHECK(mean_average_precision(single_query_run({{"r1", 3.0}, {"x", 2.0}, {"r2", 1.0}}), qrels) ==
          doctest::Approx((1.0 + 2.0 / 3.0) / 2.0).epsilon(1e-12));
    // nothing relevant retrieved -> 0
    CHECK(mean_average_precision(single_query_run({{"x", 2.0}, {"y", 1.0}}), qrels) == 0.0);
}

TEST_CASE("ndcg fixtures") {
    Qrels qrels;
    qrels.add("q", "d", 1);
    CHECK(ndcg_at_k(single_query_run({{"d", 1.0}}), qrels, 10) == 1.0);
    // single grade-1 doc at rank 2: 1/log2(3)
    CHECK(ndcg_at_k(single_query_run({{"x", 2.0}, {"d", 1.0}}), qrels, 10) ==
          doctest::Approx(1.0 / std::log2(3.0)).epsilon(1e-12));
    CHECK(ndcg_at_k(single_query_run({{"x", 2.0}, {"d", 1.0}}), qrels, 10) ==
          doctest::Approx(0.6309297535714574).epsilon(1e-9));

    // graded: {3, 1} played in the wrong order, checked against the
    // brute-force two-permutation computation
    Qrels graded;
    graded.add("g", "high", 3);
    graded.add("g", "low", 1);
    RunList wrong;
    wrong.set_query("g", {{"low", 2.0}, {"high", 1.0}});
    const double dcg = (std::pow(2.0, 1) - 1.0) / std::log2(2.0) +
                       (std::pow(2.0, 3) - 1.0) / std::log2(3.0);
    const double ideal = (std::pow(2.0, 3) - 1.0) / std::log2(2.0) +
                         (std::pow(2.0, 1) - 1.0) / std::log2(3.0);
    CHECK(ndcg_at_k(wrong, graded, 10) == doctest::Approx(dcg / ideal).epsilon(1e-12));
    CHECK(ndcg_at_k(wrong, graded, 10) < 1.0);

    // a run sorting grades non-increasingly reaches 1 exactly
    RunList right;
    right.set_query("g", {{"high", 2.0}, {"low", 1.0}});
    CHECK(ndcg_at_k(right, graded, 10) == 1.0);
}

TEST_CASE("precision fixtures") {
    Qrels qrels;
    for (int i = 0; i < 3; ++i) qrels.add("q", "r" + std::to_string(i), 1);
    std::vector<std::pair<std::string, double>> ranked;
    for (int i = 0; i < 3; ++i) ranked.emplace_back("r" + std::to_string(i), 30.0 - i);
    for (int i = 0; i < 7; ++i) ranked.emplace_back("x" + std::to_string(i), 20.0 - i);
    CHECK(precision_at_k(single_query_run(ranked), qrels, 10) == doctest::Approx(0.3));

    // run shorter than k: missing slots count as non-relevant
    CHECK(precision_at_k(single_query_run({{"r0", 1.0}}), qrels, 10) == doctest::Approx(0.1));

    Qrels all;
    all.add("q", "a", 1);
    all.add("q", "b", 1);
    CHECK(precision_at_k(single_query_run({{"a", 2.0}, {"b", 1.0}}), all, 2) == 1.0);
}

TEST_CASE("queries without relevant judgments are excluded from the mean") {
    Qrels qrels;
    qrels.add("q1", "hit", 1);
    qrels.add("q2", "seen", 0); // judged but nothing relevant
    RunList run;
    run.set_query("q1", {{"hit", 1.0}});
    run.set_query("q2", {{"seen", 1.0}});
    run.set_query("q3", {{"other", 1.0}}); // not judged at all
    CHECK(mrr_at_k(run, qrels, 10) == 1.0);
    CHECK(mean_average_precision(run, qrels) == 1.0);
    CHECK(precision_at_k(run, qrels, 1) == 1.0);
    CHECK(ndcg_at_k(run, qrels, 10) == 1.0);
}

TEST_CASE("metrics ignore score magnitudes and doc id labels") {
    Qrels qrels;
    qrels.add("q", "b", 1);
    const double reference = mrr_at_k(single_query_run({{"a", 5.0}, {"b", 4.0}}), qrels, 10);
    CHECK(mrr_at_k(single_query_run({{"a", 1e9}, {"b", -1e9}}), qrels, 10) == reference);

    Qrels relabeled;
    relabeled.add("q", "doc-two", 1);
    CHECK(mrr_at_k(single_query_run({{"doc-one", 5.0}, {"doc-two", 4.0}}), relabeled, 10) ==
          reference);
}

namespace {

// Brute-force recomputation written independently of the library path.
struct Oracle {
    static bool rel(const Qrels& qrels, const std::string& q, const std::string& d) {
        return qrels.grade(q, d) >= qrels.binarization_threshold;
    }
    static double mrr(const RunList& run, const Qrels& qrels, std::size_t k) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& qid : run.query_ids()) {
            std::size_t total_rel = 0;
            for (int g : qrels.grades(qid)) {
                if (g >= qrels.binarization_threshold) ++total_rel;
            }
            if (total_rel == 0) continue;
            ++n;
            const auto& entries = run.entries(qid);
            for (std::size_t i = 0; i < entries.size() && i < k; ++i) {
                if (rel(qrels, qid, entries[i].doc_id)) {
                    sum += 1.0 / static_cast<double>(i + 1);
                    break;
                }
            }
        }
        return n ? sum / static_cast<double>(n) : 0.0;
    }
    static double map(const RunList& run, const Qrels& qrels) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& qid : run.query_ids()) {
            std::size_t total_rel = 0;
            for (int g : qrels.grades(qid)) {
                if (g >= qrels.binarization_threshold) ++total_rel;
            }
            if (total_rel == 0) continue;
            ++n;
            double ap = 0.0;
            std::size_t found = 0;
            const auto& entries = run.entries(qid);
            for (std::size_t i = 0; i < entries.size(); ++i) {
                if (rel(qrels, qid, entries[i].doc_id)) {
                    ++found;
                    ap += static_cast<double>(found) / static_cast<double>(i + 1);
                }
            }
            sum += ap / static_cast<double>(total_rel);
        }
        return n ? sum / static_cast<double>(n) : 0.0;
    }
    static double ndcg(const RunList& run, const Qrels& qrels, std::size_t k) {
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
    static double p_at(const RunList& run, const Qrels& qrels, std::size_t k) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& qid : run.query_ids()) {
            std::size_t total_rel = 0;
            for (int g : qrels.grades(qid)) {
                if (g >= qrels.binarization_threshold) ++total_rel;
            }
            if (total_rel == 0) continue;
            ++n;
            std::size_t hits = 0;
            const auto& entries = run.entries(qid);
            for (std::size_t i = 0; i < entries.size() && i < k; ++i) {
                if (rel(qrels, qid, entries[i].doc_id)) ++hits;
            }
            sum += static_cast<double>(hits) / static_cast<double>(k);
        }
        return n ? sum / static_cast<double>(n) : 0.0;
    }
};

} // namespace

TEST_CASE("all four metrics agree exactly with brute force on random fixtures") {
    std::mt19937_64 rng(401);
    for (int fixture = 0; fixture < 50; ++fixture) {
        RunList run;
        Qrels qrels;
        const std::size_t query_count = 1 + rng() % 5;
        for (std::size_t q = 0; q < query_count; ++q) {
            const std::string qid = "q" + std::to_string(q);
            std::vector<std::string> pool;
            for (int d = 0; d < 20; ++d) pool.push_back("d" + std::to_string(d));
            for (std::size_t i = pool.size(); i > 1; --i) std::swap(pool[i - 1], pool[rng() % i]);
            const std::size_t depth = 5 + rng() % 11;
            std::vector<std::pair<std::string, double>> ranked;
            double score = 50.0;
            for (std::size_t i = 0; i < depth; ++i) {
                score -= static_cast<double>(rng() % 100) / 25.0;
                ranked.emplace_back(pool[i], score);
            }
            run.set_query(qid, ranked);
            for (std::size_t i = 0; i < pool.size(); ++i) {
                if (rng() % 3 == 0) qrels.add(qid, pool[i], static_cast<int>(rng() % 4));
            }
        }
        CHECK(mrr_at_k(run, qrels, 10) == Oracle::mrr(run, qrels, 10));
        CHECK(mean_average_precision(run, qrels) == Oracle::map(run, qrels));
        CHECK(ndcg_at_k(run, qrels, 10) == Oracle::ndcg(run, qrels, 10));
        CHECK(precision_at_k(run, qrels, 10) == Oracle::p_at(run, qrels, 10));
        // metrics stay in [0, 1]
        CHECK(mrr_at_k(run, qrels, 10) <= 1.0);
        CHECK(mean_average_precision(run, qrels) >= 0.0);
        CHECK(ndcg_at_k(run, qrels, 10) <= 1.0);
        CHECK(precision_at_k(run, qrels, 10) <= 1.0);
    }
}

TEST_CASE("run file parsing") {
    testutil::TempDir dir;
    const std::string path = dir.file("run.trec");
    testutil::write_file(path, "2 Q0 4339068 1 -10.5 tk\n2 Q0 1782337 2 -11.9 tk\n");
    const RunList run = RunList::parse(path);
    CHECK(run.query_count() == 1);
    const auto& entries = run.entries("2");
    REQUIRE(entries.size() == 2);
    CHECK(entries[0].doc_id == "4339068");
    CHECK(entries[0].rank == 1);
    CHECK(entries[0].score == -10.5);
    CHECK(run.tag == "tk");
}

TEST_CASE("run file round-trips exactly") {
    testutil::TempDir dir;
    RunList run;
    run.tag = "tk";
    run.set_query("7", {{"a", 1.0 / 3.0}, {"b", 1e-17}, {"c", -10.5}});
    run.set_query("12", {{"x", 123456.789012345}});
    const std::string path = dir.file("round.trec");
    run.write(path);
    const RunList back = RunList::parse(path);
    CHECK(back.tag == run.tag);
    CHECK(back.query_count() == 2);
    for (const auto& qid : run.query_ids()) {
        const auto& a = run.entries(qid);
        const auto& b = back.entries(qid);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].doc_id == b[i].doc_id);
            CHECK(a[i].score == b[i].score); // bit-exact via shortest round-trip formatting
            CHECK(a[i].rank == b[i].rank);
        }
    }
}

TEST_CASE("run file rejects duplicates and malformed lines") {
    testutil::TempDir dir;
    const std::string dup = dir.file("dup.trec");
    testutil::write_file(dup, "1 Q0 d 1 2.0 t\n1 Q0 d 2 1.0 t\n");
    CHECK_THROWS_WITH_AS(RunList::parse(dup), doctest::Contains("repeats"), std::runtime_error);

    const std::string bad = dir.file("bad.trec");
    testutil::write_file(bad, "1 Q0 d 1 2.0 t\n1 Q0 d2 oops\n");
    CHECK_THROWS_WITH_AS(RunList::parse(bad), doctest::Contains(":2"), std::runtime_error);

    const std::string empty = dir.file("empty.trec");
    testutil::write_file(empty, "");
    CHECK(RunList::parse(empty).query_count() == 0);
}

TEST_CASE("qrels parsing") {
    testutil::TempDir dir;
    const std::string path = dir.file("qrels.txt");
    testutil::write_file(path, "1 0 docA 2\n1 0 docB 0\n3 0 docC 1\n");
    const Qrels qrels = Qrels::parse(path);
    CHECK(qrels.grade("1", "docA") == 2);
    CHECK(qrels.grade("1", "docB") == 0);
    CHECK(qrels.grade("1", "unjudged") == 0);
    CHECK(qrels.relevant_count("1") == 1);
    CHECK(qrels.has_query("3"));
    CHECK(qrels.size() == 3);

    const std::string bad = dir.file("bad_qrels.txt");
    testutil::write_file(bad, "1 0 docA\n");
    CHECK_THROWS_WITH_AS(Qrels::parse(bad), doctest::Contains(":1"), std::runtime_error);
}
