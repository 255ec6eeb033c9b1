#pragma once

#include "tk/metrics.hpp"
#include "tk/model.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace tk {

struct TrainingTriple {
    TokenSequence query;
    TokenSequence positive;
    TokenSequence negative;
};

struct TrainConfig {
    std::size_t batch_size = 64;
    double margin = 1.0;
    double lr_embedding = 1e-4; // word embeddings + contextualization layers
    double lr_other = 1e-3;     // everything else
    std::size_t validation_interval = 100;
    std::size_t patience = 4; // validation checks without improvement before stopping
    std::size_t max_steps = 1000;
    std::uint64_t seed = 42;

    void validate() const;
};

// max(0, margin - (s_pos - s_neg)); subgradient 0 at the kink.
double hinge_loss(double s_pos, double s_neg, double margin);

struct ValidationQuery {
    std::string query_id;
    TokenSequence query;
    std::vector<std::pair<std::string, TokenSequence>> candidates;
};

struct ValidationSet {
    std::vector<ValidationQuery> queries;
    Qrels qrels;
};

struct EarlyStopState {
    double best_mrr = -1.0;
    TKParameters best_params;
    std::size_t best_step = 0;
    std::size_t evaluations_since_improvement = 0;
};

struct TrainResult {
    TKParameters best_params;
    double best_mrr = 0.0;
    std::size_t best_step = 0;
    std::size_t steps_run = 0;
    std::vector<std::pair<std::size_t, double>> loss_history;
    std::vector<std::pair<std::size_t, double>> validation_history;
};

// Ranks every validation candidate list with the given parameters and
// returns MRR@10. Queries without candidates are skipped with a warning.
double validation_mrr(const TKParameters& params, const TKConfig& config,
                      const ValidationSet& validation);

// Fraction of triples scored s_pos > s_neg.
double pairwise_accuracy(const TKParameters& params, const TKConfig& config,
                         const std::vector<TrainingTriple>& triples);

// Test seam: replaces the validation metric while leaving the early-stop
// bookkeeping in place.
using ValidationHook = std::function<double(const TKParameters& params, std::size_t step)>;

// Shuffled batches of pairwise hinge loss with two-group Adam rates; the
// final partial batch of each epoch is dropped. Every validation interval
// the current parameters are scored on the validation set and the best
// checkpoint kept; training stops when `patience` checks pass without
// improvement or `max_steps` is reached. Returns the best checkpoint,
// never the last. Log lines are `step<TAB>loss` per step and
// `step<TAB>mrr` per validation check.
TrainResult train(const std::vector<TrainingTriple>& triples, const ValidationSet& validation,
                  const TKConfig& config, const TrainConfig& tconfig, TKParameters params,
                  std::ostream* log = nullptr, const ValidationHook& hook = nullptr);

} // namespace tk
