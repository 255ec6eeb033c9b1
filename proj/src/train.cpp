#include "tk/train.hpp"

#include <algorithm>
#include <iostream>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

namespace tk {

void TrainConfig::validate() const {
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (margin <= 0.0) throw std::invalid_argument("TrainConfig: margin must be positive");
    if (patience < 1) throw std::invalid_argument("TrainConfig: patience must be >= 1");
    if (validation_interval < 1) {
        throw std::invalid_argument("TrainConfig: validation_interval must be >= 1");
    }
}

double hinge_loss(double s_pos, double s_neg, double margin) {
    if (margin <= 0.0) throw std::invalid_argument("hinge_loss: margin must be positive");
    return std::max(0.0, margin - (s_pos - s_neg));
}

double validation_mrr(const TKParameters& params, const TKConfig& config,
                      const ValidationSet& validation) {
    TKScorer scorer(params, config);
    RunList run;
    run.tag = "validation";
    for (const auto& vq : validation.queries) {
        if (vq.candidates.empty()) {
            std::cerr << "warning: validation query " << vq.query_id << " has no candidates, skipped\n";
            continue;
        }
        const SequenceRepresentation query_rep = scorer.encode_query(vq.query);
        std::vector<std::pair<std::string, double>> scored;
        scored.reserve(vq.candidates.size());
        for (const auto& [doc_id, doc] : vq.candidates) {
            scored.emplace_back(doc_id, scorer.score_with_query(query_rep, doc).score);
        }
        std::stable_sort(scored.begin(), scored.end(),
                         [](const auto& a, const auto& b) { return a.second > b.second; });
        run.set_query(vq.query_id, std::move(scored));
    }
    if (run.query_count() == 0) {
        throw std::runtime_error("validation_mrr: no usable validation queries");
    }
    return mrr_at_k(run, validation.qrels, 10);
}

double pairwise_accuracy(const TKParameters& params, const TKConfig& config,
                         const std::vector<TrainingTriple>& triples) {
    if (triples.empty()) throw std::invalid_argument("pairwise_accuracy: no triples");
    TKScorer scorer(params, config);
    std::size_t correct = 0;
    for (const auto& triple : triples) {
        const SequenceRepresentation query_rep = scorer.encode_query(triple.query);
        const double s_pos = scorer.score_with_query(query_rep, triple.positive).score;
        const double s_neg = scorer.score_with_query(query_rep, triple.negative).score;
        if (s_pos > s_neg) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(triples.size());
}

namespace {

// Fisher-Yates with rng() modulo: deterministic across standard libraries.
void seeded_shuffle(std::vector<std::size_t>& indices, std::mt19937_64& rng) {
    for (std::size_t i = indices.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(indices[i - 1], indices[j]);
    }
}

void log_line(std::ostream* log, std::size_t step, double value) {
    if (log) *log << step << "\t" << format_double(value) << "\n";
}

} // namespace

TrainResult train(const std::vector<TrainingTriple>& triples, const ValidationSet& validation,
                  const TKConfig& config, const TrainConfig& tconfig, TKParameters params,
                  std::ostream* log, const ValidationHook& hook) {
    tconfig.validate();
    config.validate();
    if (triples.empty()) throw std::invalid_argument("train: no training triples");
    for (const auto& triple : triples) {
        if (triple.query.true_length < 1 || triple.positive.true_length < 1 ||
            triple.negative.true_length < 1) {
            throw std::invalid_argument("train: empty sequence in training triple");
        }
    }

    std::vector<AdamState> adam;
    adam.reserve(params.all().size());
    for (const auto& p : params.all()) adam.push_back(make_adam_state(p));

    std::mt19937_64 rng(tconfig.seed);
    std::vector<std::size_t> order(triples.size());
    std::iota(order.begin(), order.end(), 0);
    seeded_shuffle(order, rng);
    std::size_t cursor = 0;

    const auto evaluate = [&](std::size_t step) {
        return hook ? hook(params, step) : validation_mrr(params, config, validation);
    };

    EarlyStopState stop;
    TrainResult result;

    const auto run_validation = [&](std::size_t step) {
        const double mrr = evaluate(step);
        log_line(log, step, mrr);
        result.validation_history.emplace_back(step, mrr);
        if (mrr > stop.best_mrr) {
            stop.best_mrr = mrr;
            stop.best_params = params;
            stop.best_step = step;
            stop.evaluations_since_improvement = 0;
        } else {
            ++stop.evaluations_since_improvement;
        }
        return stop.evaluations_since_improvement >= tconfig.patience;
    };

    std::size_t step = 0;
    bool stopped_early = false;
    while (step < tconfig.max_steps) {
        if (cursor + tconfig.batch_size > order.size()) {
            if (tconfig.batch_size > order.size()) {
                throw std::invalid_argument("train: batch size exceeds triple count");
            }
            seeded_shuffle(order, rng); // drop the partial batch, start a new epoch
            cursor = 0;
        }

        BoundModel bound = bind_model(params, config, /*with_grad=*/true);
        ag::Var batch_loss;
        for (std::size_t b = 0; b < tconfig.batch_size; ++b) {
            const TrainingTriple& triple = triples[order[cursor + b]];
            const SequenceRepresentation query_rep = contextualize(triple.query, bound);
            ag::Var s_pos = forward_with_query(query_rep, triple.positive, bound).scores.score;
            ag::Var s_neg = forward_with_query(query_rep, triple.negative, bound).scores.score;
            ag::Var hinge = ag::relu(
                ag::add_scalar(ag::sub(s_neg, s_pos), tconfig.margin));
            batch_loss = b == 0 ? hinge : ag::add(batch_loss, hinge);
        }
        cursor += tconfig.batch_size;
        batch_loss = ag::scale(batch_loss, 1.0 / static_cast<double>(tconfig.batch_size));

        ag::backward(batch_loss);
        params.zero_gradients();
        accumulate_gradients(bound, params, 1.0);
        for (std::size_t pi = 0; pi < params.all().size(); ++pi) {
            Parameter& p = params.all()[pi];
            const double lr =
                p.group == LrGroup::embedding_context ? tconfig.lr_embedding : tconfig.lr_other;
            adam_step(p, adam[pi], lr);
        }

        ++step;
        log_line(log, step, batch_loss->value[0]);
        result.loss_history.emplace_back(step, batch_loss->value[0]);

        if (step % tconfig.validation_interval == 0) {
            if (run_validation(step)) {
                stopped_early = true;
                break;
            }
        }
    }

    // make sure the final state is considered before picking the best
    if (!stopped_early && (step == 0 || step % tconfig.validation_interval != 0)) {
        run_validation(step);
    }

    result.best_params = std::move(stop.best_params);
    result.best_mrr = stop.best_mrr;
    result.best_step = stop.best_step;
    result.steps_run = step;
    return result;
}

} // namespace tk
