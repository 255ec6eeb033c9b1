#pragma once

#include "tk/autograd.hpp"
#include "tk/optim.hpp"
#include "tk/text.hpp"
#include "tk/window.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tk {

struct TKConfig {
    std::size_t embedding_dim = 300;
    std::size_t layers = 2;
    std::size_t heads = 16;
    std::size_t head_dim = 32;
    std::size_t ff_dim = 100;
    // No exact-match kernel; contextualized vectors do not produce exact matches.
    std::vector<double> kernel_mus{1.0, 0.9, 0.7, 0.5, 0.3, 0.1, -0.1, -0.3, -0.5, -0.7, -0.9};
    double kernel_sigma = 0.1;
    double log_base = 2.0;
    std::size_t query_cap = 30;
    std::size_t doc_cap = 200;
    bool windowed = false;
    WindowConfig window;
    // Test hook: pins the contextualization blend to a fixed value instead
    // of sigmoid(alpha_raw). Not serialized.
    std::optional<double> alpha_override;

    std::size_t kernel_count() const { return kernel_mus.size(); }
    void validate() const;
};

// All learned weights in creation order; ids are stable across runs so
// checkpoints round-trip by name.
class TKParameters {
public:
    static TKParameters initialize(const TKConfig& config, const EmbeddingTable& embeddings,
                                   std::uint64_t seed);

    std::vector<Parameter>& all() { return params_; }
    const std::vector<Parameter>& all() const { return params_; }
    Parameter& by_id(const std::string& id);
    const Parameter& by_id(const std::string& id) const;
    bool has(const std::string& id) const;
    void add(Parameter param);
    void zero_gradients();

private:
    std::vector<Parameter> params_;
};

struct ScoreBreakdown {
    std::vector<double> kernel_log; // s^k_log, before the W1 weighting
    std::vector<double> kernel_len; // s^k_len, before the W2 weighting
    double s_log = 0.0;
    double s_len = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double score = 0.0; // s_log * beta + s_len * gamma
    std::size_t doc_length = 0;
};

// Parameter leaves bound into one computation graph. Leaves own copies of
// the parameter tensors; `bindings` maps them back for gradient harvest.
struct BoundLayer {
    ag::Var ff_w1, ff_b1, ff_w2, ff_b2, wo;
    std::vector<ag::Var> wq, wk, wv;
};

struct BoundModel {
    TKConfig config;
    ag::Var embedding, alpha_raw, w_log, w_len, beta, gamma, window_lambda;
    std::vector<BoundLayer> layers;
    std::vector<std::pair<std::size_t, ag::Var>> bindings; // param index -> leaf
};

BoundModel bind_model(const TKParameters& params, const TKConfig& config, bool with_grad);
void zero_bound_gradients(BoundModel& bound);
// params.gradient += factor * leaf.grad for every bound leaf; the padding
// row of the embedding gradient is discarded.
void accumulate_gradients(const BoundModel& bound, TKParameters& params, double factor);

struct SequenceRepresentation {
    ag::Var raw;        // embedding lookup
    ag::Var positioned; // raw + positional encoding
    ag::Var contextual; // Transformer stack output
    ag::Var hybrid;     // alpha blend, padding rows zeroed
    Tensor mask;        // n x 1, 1 for real tokens
    std::size_t true_length = 0;
};

struct MatchResult {
    ag::Var matrix;    // q_len x d_len cosine similarities, masked cells 0
    Tensor outer_mask; // q_len x d_len
    Tensor query_mask; // q_len x 1
    std::size_t query_true_length = 0;
    std::size_t doc_true_length = 0;
};

struct KernelFeatures {
    std::vector<ag::Var> cells;    // per kernel, masked q_len x d_len
    std::vector<ag::Var> row_sums; // per kernel, q_len x 1 (K^k_i)
    Tensor outer_mask;
    Tensor query_mask;
    std::size_t doc_true_length = 0;
};

struct ScoreVars {
    ag::Var kernel_log_vec; // 1 x k
    ag::Var kernel_len_vec; // 1 x k
    ag::Var s_log;          // 1 x 1
    ag::Var s_len;          // 1 x 1
    ag::Var score;          // 1 x 1
};

Tensor positional_encoding(std::size_t length, std::size_t dim);

// FF first, multi-head attention on the FF output, residual from the FF
// output; no layer normalization. Attention logits at padded key
// positions are pushed to -1e30 before the softmax.
ag::Var transformer_layer(const ag::Var& x, const Tensor& mask, const BoundLayer& layer,
                          const TKConfig& config);

SequenceRepresentation contextualize(const TokenSequence& seq, const BoundModel& bound);

MatchResult match_matrix(const SequenceRepresentation& query, const SequenceRepresentation& doc);

KernelFeatures kernel_features(const MatchResult& match, const TKConfig& config);

ScoreVars score_features(const KernelFeatures& features, std::size_t doc_length,
                         const BoundModel& bound);

// Long-document path: per-window kernel sums through the log/length paths,
// window scores sorted descending, top-R weighted by lambda.
ScoreVars windowed_score_features(const KernelFeatures& features, std::size_t doc_length,
                                  const BoundModel& bound);

ScoreBreakdown breakdown_from(const ScoreVars& scores, double beta, double gamma,
                              std::size_t doc_length);

struct ForwardResult {
    ScoreBreakdown breakdown;
    ScoreVars scores;
    KernelFeatures features;
    MatchResult match;
    SequenceRepresentation query_rep;
    SequenceRepresentation doc_rep;
};

ForwardResult forward(const TokenSequence& query, const TokenSequence& doc, const BoundModel& bound);
ForwardResult forward_with_query(const SequenceRepresentation& query_rep, const TokenSequence& doc,
                                 const BoundModel& bound);

struct ExplainReport {
    ScoreBreakdown breakdown;
    std::vector<double> best_match;          // per true doc token: max_i M_ij
    std::vector<std::size_t> affiliation;    // kernel index nearest to best_match
    Tensor kernel_query_sums;                // k x q_true, K^k_i per query term
    std::vector<double> highlight_centers;
};

// Nearest kernel center by |value - mu|; equidistant goes to the higher center.
std::size_t nearest_kernel(double value, const std::vector<double>& mus);

ExplainReport explain(const TokenSequence& query, const TokenSequence& doc, const BoundModel& bound,
                      std::vector<double> highlight_centers);

// Arithmetic mean of the final scores of independently trained instances.
double ensemble_scores(const std::vector<ScoreBreakdown>& breakdowns);

// Read-only scoring facade; safe to share across threads once built.
class TKScorer {
public:
    TKScorer(const TKParameters& params, const TKConfig& config);

    ScoreBreakdown score(const TokenSequence& query, const TokenSequence& doc) const;
    SequenceRepresentation encode_query(const TokenSequence& query) const;
    ScoreBreakdown score_with_query(const SequenceRepresentation& query_rep,
                                    const TokenSequence& doc) const;
    ExplainReport explain(const TokenSequence& query, const TokenSequence& doc,
                          std::vector<double> highlight_centers) const;
    const TKConfig& config() const { return bound_.config; }

private:
    BoundModel bound_;
};

// Self-contained model artifact: hyperparameters, the vocabulary the
// embedding rows are indexed by, and every learned weight.
struct ModelCheckpoint {
    TKConfig config;
    Vocabulary vocab;
    TKParameters params;
};

void save_checkpoint(const std::string& path, const ModelCheckpoint& checkpoint);
ModelCheckpoint load_checkpoint(const std::string& path);

} // namespace tk
