#include "tk/model.hpp"

#include "tk/config.hpp"
#include "tk/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace tk {

namespace {

constexpr double kLogClamp = 1e-10; // floor under K^k_i before the logarithm
constexpr double kMaskFill = -1e30; // attention logit at padded key positions

std::string layer_prefix(std::size_t layer) { return "layer" + std::to_string(layer) + "."; }

Tensor uniform_tensor(std::size_t rows, std::size_t cols, double lo, double hi,
                      std::mt19937_64& rng) {
    Tensor t(rows, cols);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = uniform_draw(rng, lo, hi);
    return t;
}

Tensor sequence_mask(const TokenSequence& seq) {
    Tensor mask(seq.ids.size(), 1);
    for (std::size_t i = 0; i < seq.ids.size() && i < seq.true_length; ++i) mask.at(i, 0) = 1.0;
    return mask;
}

Tensor broadcast_rows(const Tensor& col_mask, std::size_t cols) {
    Tensor out(col_mask.rows(), cols);
    for (std::size_t i = 0; i < col_mask.rows(); ++i) {
        if (col_mask.at(i, 0) == 0.0) continue;
        for (std::size_t j = 0; j < cols; ++j) out.at(i, j) = 1.0;
    }
    return out;
}

} // namespace

void TKConfig::validate() const {
    if (embedding_dim < 1) throw std::invalid_argument("TKConfig: embedding_dim must be >= 1");
    if (layers < 1) throw std::invalid_argument("TKConfig: layers must be >= 1");
    if (heads < 1 || head_dim < 1) throw std::invalid_argument("TKConfig: heads and head_dim must be >= 1");
    if (ff_dim < 1) throw std::invalid_argument("TKConfig: ff_dim must be >= 1");
    if (kernel_mus.empty()) throw std::invalid_argument("TKConfig: need at least one kernel");
    for (double mu : kernel_mus) {
        if (mu < -1.0 || mu > 1.0) {
            throw std::invalid_argument("TKConfig: kernel center " + std::to_string(mu) +
                                        " outside [-1, 1]");
        }
    }
    if (kernel_sigma <= 0.0) throw std::invalid_argument("TKConfig: kernel_sigma must be positive");
    if (log_base <= 1.0) throw std::invalid_argument("TKConfig: log_base must exceed 1");
    if (query_cap < 1 || doc_cap < 1) throw std::invalid_argument("TKConfig: caps must be >= 1");
    if (windowed) window.validate(doc_cap);
}

TKParameters TKParameters::initialize(const TKConfig& config, const EmbeddingTable& embeddings,
                                      std::uint64_t seed) {
    config.validate();
    if (embeddings.dim != config.embedding_dim) {
        throw std::invalid_argument("TKParameters: embedding table dim " +
                                    std::to_string(embeddings.dim) + " does not match config " +
                                    std::to_string(config.embedding_dim));
    }
    std::mt19937_64 rng(seed);
    const double proj_bound = 1.0 / std::sqrt(static_cast<double>(config.embedding_dim));
    const double ff_in_bound = proj_bound;
    const double ff_out_bound = 1.0 / std::sqrt(static_cast<double>(config.ff_dim));

    TKParameters params;
    params.add(make_parameter("embedding", embeddings.vectors, LrGroup::embedding_context));
    for (std::size_t l = 0; l < config.layers; ++l) {
        const std::string prefix = layer_prefix(l);
        params.add(make_parameter(prefix + "ff.w1",
                                  uniform_tensor(config.embedding_dim, config.ff_dim, -ff_in_bound,
                                                 ff_in_bound, rng),
                                  LrGroup::embedding_context));
        params.add(make_parameter(prefix + "ff.b1", Tensor(1, config.ff_dim),
                                  LrGroup::embedding_context));
        params.add(make_parameter(prefix + "ff.w2",
                                  uniform_tensor(config.ff_dim, config.embedding_dim, -ff_out_bound,
                                                 ff_out_bound, rng),
                                  LrGroup::embedding_context));
        params.add(make_parameter(prefix + "ff.b2", Tensor(1, config.embedding_dim),
                                  LrGroup::embedding_context));
        for (std::size_t h = 0; h < config.heads; ++h) {
            const std::string head = prefix + "head" + std::to_string(h) + ".";
            for (const char* which : {"wq", "wk", "wv"}) {
                params.add(make_parameter(head + which,
                                          uniform_tensor(config.embedding_dim, config.head_dim,
                                                         -proj_bound, proj_bound, rng),
                                          LrGroup::embedding_context));
            }
        }
        params.add(make_parameter(prefix + "wo",
                                  uniform_tensor(config.heads * config.head_dim, config.embedding_dim,
                                                 -proj_bound, proj_bound, rng),
                                  LrGroup::embedding_context));
    }
    params.add(make_parameter("alpha_raw", Tensor::scalar(0.0), LrGroup::embedding_context));
    params.add(make_parameter("kernel.w_log",
                              uniform_tensor(config.kernel_count(), 1, -0.01, 0.01, rng),
                              LrGroup::other));
    params.add(make_parameter("kernel.w_len",
                              uniform_tensor(config.kernel_count(), 1, -0.01, 0.01, rng),
                              LrGroup::other));
    params.add(make_parameter("beta", Tensor::scalar(0.5), LrGroup::other));
    params.add(make_parameter("gamma", Tensor::scalar(0.5), LrGroup::other));
    if (config.windowed) {
        Tensor lambdas(config.window.top_r, 1);
        for (std::size_t r = 0; r < config.window.top_r; ++r) {
            lambdas.at(r, 0) = 1.0 / static_cast<double>(r + 1);
        }
        params.add(make_parameter("window.lambda", std::move(lambdas), LrGroup::other));
    }
    return params;
}

Parameter& TKParameters::by_id(const std::string& id) {
    for (auto& p : params_) {
        if (p.id == id) return p;
    }
    throw std::out_of_range("TKParameters: no parameter named " + id);
}

const Parameter& TKParameters::by_id(const std::string& id) const {
    for (const auto& p : params_) {
        if (p.id == id) return p;
    }
    throw std::out_of_range("TKParameters: no parameter named " + id);
}

bool TKParameters::has(const std::string& id) const {
    for (const auto& p : params_) {
        if (p.id == id) return true;
    }
    return false;
}

void TKParameters::add(Parameter param) { params_.push_back(std::move(param)); }

void TKParameters::zero_gradients() {
    for (auto& p : params_) p.gradient.fill(0.0);
}

BoundModel bind_model(const TKParameters& params, const TKConfig& config, bool with_grad) {
    config.validate();
    BoundModel bound;
    bound.config = config;

    std::vector<std::pair<std::string, ag::Var*>> slots;
    slots.emplace_back("embedding", &bound.embedding);
    bound.layers.resize(config.layers);
    for (std::size_t l = 0; l < config.layers; ++l) {
        const std::string prefix = layer_prefix(l);
        BoundLayer& layer = bound.layers[l];
        layer.wq.resize(config.heads);
        layer.wk.resize(config.heads);
        layer.wv.resize(config.heads);
        slots.emplace_back(prefix + "ff.w1", &layer.ff_w1);
        slots.emplace_back(prefix + "ff.b1", &layer.ff_b1);
        slots.emplace_back(prefix + "ff.w2", &layer.ff_w2);
        slots.emplace_back(prefix + "ff.b2", &layer.ff_b2);
        for (std::size_t h = 0; h < config.heads; ++h) {
            const std::string head = prefix + "head" + std::to_string(h) + ".";
            slots.emplace_back(head + "wq", &layer.wq[h]);
            slots.emplace_back(head + "wk", &layer.wk[h]);
            slots.emplace_back(head + "wv", &layer.wv[h]);
        }
        slots.emplace_back(prefix + "wo", &layer.wo);
    }
    slots.emplace_back("alpha_raw", &bound.alpha_raw);
    slots.emplace_back("kernel.w_log", &bound.w_log);
    slots.emplace_back("kernel.w_len", &bound.w_len);
    slots.emplace_back("beta", &bound.beta);
    slots.emplace_back("gamma", &bound.gamma);
    if (config.windowed) slots.emplace_back("window.lambda", &bound.window_lambda);

    const auto& all = params.all();
    for (auto& [id, slot] : slots) {
        std::size_t index = all.size();
        for (std::size_t i = 0; i < all.size(); ++i) {
            if (all[i].id == id) {
                index = i;
                break;
            }
        }
        if (index == all.size()) {
            throw std::out_of_range("bind_model: missing parameter " + id);
        }
        *slot = with_grad ? ag::leaf(all[index].tensor) : ag::constant(all[index].tensor);
        if (with_grad) bound.bindings.emplace_back(index, *slot);
    }
    return bound;
}

void zero_bound_gradients(BoundModel& bound) {
    for (auto& [index, leaf] : bound.bindings) {
        (void)index;
        leaf->grad.fill(0.0);
    }
}

void accumulate_gradients(const BoundModel& bound, TKParameters& params, double factor) {
    for (const auto& [index, leaf] : bound.bindings) {
        Parameter& param = params.all()[index];
        if (!param.gradient.same_shape(leaf->grad)) {
            throw std::logic_error("accumulate_gradients: shape mismatch for " + param.id);
        }
        for (std::size_t i = 0; i < param.gradient.size(); ++i) {
            param.gradient[i] += factor * leaf->grad[i];
        }
        if (param.id == "embedding") {
            // padding row gradient is discarded
            for (std::size_t c = 0; c < param.gradient.cols(); ++c) param.gradient.at(0, c) = 0.0;
        }
    }
}

Tensor positional_encoding(std::size_t length, std::size_t dim) {
    if (length < 1) throw std::invalid_argument("positional_encoding: length must be >= 1");
    Tensor pe(length, dim);
    for (std::size_t pos = 0; pos < length; ++pos) {
        for (std::size_t j = 0; j < dim; ++j) {
            const double pair_index = static_cast<double>(2 * (j / 2));
            const double angle = static_cast<double>(pos) /
                                 std::pow(10000.0, pair_index / static_cast<double>(dim));
            pe.at(pos, j) = (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    }
    return pe;
}

ag::Var transformer_layer(const ag::Var& x, const Tensor& mask, const BoundLayer& layer,
                          const TKConfig& config) {
    using namespace ag;
    const std::size_t n = x->value.rows();
    if (mask.rows() != n || mask.cols() != 1) {
        throw std::invalid_argument("transformer_layer: mask must be " + std::to_string(n) + " x 1");
    }

    // FF(p), evaluated once; both the attention input and the residual.
    Var f = add_rowvec(matmul(relu(add_rowvec(matmul(x, layer.ff_w1), layer.ff_b1)), layer.ff_w2),
                       layer.ff_b2);

    // keep[i][j] = 1 unless key j is padding
    Tensor key_keep(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) key_keep.at(i, j) = mask.at(j, 0);
    }

    const double logit_scale = 1.0 / std::sqrt(static_cast<double>(config.head_dim));
    std::vector<Var> heads;
    heads.reserve(config.heads);
    for (std::size_t h = 0; h < config.heads; ++h) {
        Var q = matmul(f, layer.wq[h]);
        Var k = matmul(f, layer.wk[h]);
        Var v = matmul(f, layer.wv[h]);
        Var logits = scale(matmul(q, transpose(k)), logit_scale);
        Var attention = softmax_rows(masked_fill(logits, key_keep, kMaskFill));
        heads.push_back(matmul(attention, v));
    }
    Var multi_head = matmul(concat_cols(heads), layer.wo);
    return add(multi_head, f);
}

SequenceRepresentation contextualize(const TokenSequence& seq, const BoundModel& bound) {
    using namespace ag;
    if (seq.ids.empty() || seq.true_length < 1) {
        throw std::invalid_argument("contextualize: empty sequence");
    }
    const TKConfig& config = bound.config;

    SequenceRepresentation rep;
    rep.true_length = seq.true_length;
    rep.mask = sequence_mask(seq);
    rep.raw = gather_rows(bound.embedding, seq.ids);
    rep.positioned =
        add(rep.raw, constant(positional_encoding(seq.ids.size(), config.embedding_dim)));

    Var x = rep.positioned;
    for (std::size_t l = 0; l < config.layers; ++l) {
        x = transformer_layer(x, rep.mask, bound.layers[l], config);
    }
    rep.contextual = x;

    Var alpha = config.alpha_override ? constant(Tensor::scalar(*config.alpha_override))
                                      : sigmoid(bound.alpha_raw);
    Var one_minus_alpha = add_scalar(scale(alpha, -1.0), 1.0);
    Var blended = add(mul_scalar(rep.raw, alpha), mul_scalar(rep.contextual, one_minus_alpha));
    rep.hybrid = mul(blended, constant(broadcast_rows(rep.mask, config.embedding_dim)));
    return rep;
}

MatchResult match_matrix(const SequenceRepresentation& query, const SequenceRepresentation& doc) {
    using namespace ag;
    MatchResult match;
    match.query_true_length = query.true_length;
    match.doc_true_length = doc.true_length;
    match.query_mask = query.mask;

    const std::size_t q_len = query.mask.rows();
    const std::size_t d_len = doc.mask.rows();
    match.outer_mask = Tensor(q_len, d_len);
    for (std::size_t i = 0; i < q_len; ++i) {
        if (query.mask.at(i, 0) == 0.0) continue;
        for (std::size_t j = 0; j < d_len; ++j) {
            match.outer_mask.at(i, j) = doc.mask.at(j, 0);
        }
    }
    match.matrix = mul(cosine_rows(query.hybrid, doc.hybrid), constant(match.outer_mask));
    return match;
}

KernelFeatures kernel_features(const MatchResult& match, const TKConfig& config) {
    using namespace ag;
    KernelFeatures features;
    features.outer_mask = match.outer_mask;
    features.query_mask = match.query_mask;
    features.doc_true_length = match.doc_true_length;
    const double gaussian_scale = -1.0 / (2.0 * config.kernel_sigma * config.kernel_sigma);
    for (double mu : config.kernel_mus) {
        Var diff = add_scalar(match.matrix, -mu);
        Var transformed = vexp(scale(mul(diff, diff), gaussian_scale));
        // the Gaussian moves masked cells off zero; re-mask before summing
        Var cells = mul(transformed, constant(match.outer_mask));
        features.cells.push_back(cells);
        features.row_sums.push_back(sum_axis(cells, 1));
    }
    return features;
}

namespace {

// Shared tail of the scoring paths: per-kernel log/length sums for one
// column range already reduced to K^k_i, then the W1/W2 weighting.
struct KernelPathVars {
    ag::Var log_vec; // 1 x k
    ag::Var len_vec; // 1 x k
    ag::Var s_log;
    ag::Var s_len;
};

KernelPathVars kernel_paths(const std::vector<ag::Var>& row_sums, const ag::Var& query_mask,
                            std::size_t length_norm, const BoundModel& bound) {
    using namespace ag;
    const double inv_log_base = 1.0 / std::log(bound.config.log_base);
    std::vector<Var> log_terms, len_terms;
    log_terms.reserve(row_sums.size());
    len_terms.reserve(row_sums.size());
    for (const auto& sums : row_sums) {
        Var log_per_term = scale(vlog(clamp_min(sums, kLogClamp)), inv_log_base);
        // query mask applies after the log so padded query terms contribute 0
        log_terms.push_back(sum_all(mul(log_per_term, query_mask)));
        Var len_per_term = scale(sums, 1.0 / static_cast<double>(length_norm));
        len_terms.push_back(sum_all(mul(len_per_term, query_mask)));
    }
    KernelPathVars path;
    path.log_vec = concat_cols(log_terms);
    path.len_vec = concat_cols(len_terms);
    path.s_log = matmul(path.log_vec, bound.w_log);
    path.s_len = matmul(path.len_vec, bound.w_len);
    return path;
}

} // namespace

ScoreVars score_features(const KernelFeatures& features, std::size_t doc_length,
                         const BoundModel& bound) {
    using namespace ag;
    if (doc_length < 1) throw std::invalid_argument("score_features: document length must be >= 1");
    Var query_mask = constant(features.query_mask);
    KernelPathVars path = kernel_paths(features.row_sums, query_mask, doc_length, bound);
    ScoreVars scores;
    scores.kernel_log_vec = path.log_vec;
    scores.kernel_len_vec = path.len_vec;
    scores.s_log = path.s_log;
    scores.s_len = path.s_len;
    scores.score = add(mul(scores.s_log, bound.beta), mul(scores.s_len, bound.gamma));
    return scores;
}

ScoreVars windowed_score_features(const KernelFeatures& features, std::size_t doc_length,
                                  const BoundModel& bound) {
    using namespace ag;
    if (doc_length < 1) {
        throw std::invalid_argument("windowed_score_features: document length must be >= 1");
    }
    const WindowConfig& wconfig = bound.config.window;
    wconfig.validate(bound.config.doc_cap);
    Var query_mask = constant(features.query_mask);
    const std::size_t total_cols = features.cells.front()->value.cols();

    struct WindowVars {
        KernelPathVars path;
        double combined_score = 0.0;
    };
    std::vector<WindowVars> windows;
    for (std::size_t si = 0; si < wconfig.sizes.size(); ++si) {
        for (const WindowRange& range :
             window_partition(doc_length, wconfig.sizes[si], wconfig.strides[si])) {
            Tensor selector(total_cols, 1);
            for (std::size_t j = range.begin; j < range.end; ++j) selector.at(j, 0) = 1.0;
            Var sel = constant(selector);
            std::vector<Var> window_sums;
            window_sums.reserve(features.cells.size());
            for (const auto& cells : features.cells) window_sums.push_back(matmul(cells, sel));
            WindowVars wv;
            wv.path = kernel_paths(window_sums, query_mask, range.end - range.begin, bound);
            // both paths combined with the shared beta/gamma feed the sort
            Var combined = add(mul(wv.path.s_log, bound.beta), mul(wv.path.s_len, bound.gamma));
            wv.combined_score = combined->value[0];
            windows.push_back(std::move(wv));
        }
    }

    std::vector<double> keys;
    keys.reserve(windows.size());
    for (const auto& wv : windows) keys.push_back(wv.combined_score);
    const std::vector<std::size_t> order = sort_indices_desc(keys);
    const std::size_t take = std::min(wconfig.top_r, windows.size());

    Var log_total, len_total;
    for (std::size_t r = 0; r < take; ++r) {
        Var lambda_r = gather_flat(bound.window_lambda, {r});
        Var log_term = mul_scalar(windows[order[r]].path.log_vec, lambda_r);
        Var len_term = mul_scalar(windows[order[r]].path.len_vec, lambda_r);
        log_total = r == 0 ? log_term : add(log_total, log_term);
        len_total = r == 0 ? len_term : add(len_total, len_term);
    }

    ScoreVars scores;
    scores.kernel_log_vec = log_total;
    scores.kernel_len_vec = len_total;
    scores.s_log = matmul(log_total, bound.w_log);
    scores.s_len = matmul(len_total, bound.w_len);
    scores.score = add(mul(scores.s_log, bound.beta), mul(scores.s_len, bound.gamma));
    return scores;
}

ScoreBreakdown breakdown_from(const ScoreVars& scores, double beta, double gamma,
                              std::size_t doc_length) {
    ScoreBreakdown bd;
    bd.kernel_log.assign(scores.kernel_log_vec->value.data().begin(),
                         scores.kernel_log_vec->value.data().end());
    bd.kernel_len.assign(scores.kernel_len_vec->value.data().begin(),
                         scores.kernel_len_vec->value.data().end());
    bd.s_log = scores.s_log->value[0];
    bd.s_len = scores.s_len->value[0];
    bd.beta = beta;
    bd.gamma = gamma;
    bd.score = scores.score->value[0];
    bd.doc_length = doc_length;
    return bd;
}

ForwardResult forward(const TokenSequence& query, const TokenSequence& doc,
                      const BoundModel& bound) {
    return forward_with_query(contextualize(query, bound), doc, bound);
}

ForwardResult forward_with_query(const SequenceRepresentation& query_rep, const TokenSequence& doc,
                                 const BoundModel& bound) {
    ForwardResult result;
    result.query_rep = query_rep;
    result.doc_rep = contextualize(doc, bound);
    result.match = match_matrix(result.query_rep, result.doc_rep);
    result.features = kernel_features(result.match, bound.config);
    result.scores = bound.config.windowed
                        ? windowed_score_features(result.features, result.doc_rep.true_length, bound)
                        : score_features(result.features, result.doc_rep.true_length, bound);
    result.breakdown = breakdown_from(result.scores, bound.beta->value[0], bound.gamma->value[0],
                                      result.doc_rep.true_length);
    return result;
}

std::size_t nearest_kernel(double value, const std::vector<double>& mus) {
    if (mus.empty()) throw std::invalid_argument("nearest_kernel: no centers");
    std::size_t best = 0;
    double best_dist = std::fabs(value - mus[0]);
    for (std::size_t k = 1; k < mus.size(); ++k) {
        const double dist = std::fabs(value - mus[k]);
        if (dist < best_dist || (dist == best_dist && mus[k] > mus[best])) {
            best = k;
            best_dist = dist;
        }
    }
    return best;
}

ExplainReport explain(const TokenSequence& query, const TokenSequence& doc, const BoundModel& bound,
                      std::vector<double> highlight_centers) {
    const ForwardResult result = forward(query, doc, bound);
    const Tensor& match = result.match.matrix->value;
    const std::size_t q_true = result.query_rep.true_length;
    const std::size_t d_true = result.doc_rep.true_length;

    ExplainReport report;
    report.breakdown = result.breakdown;
    report.highlight_centers = std::move(highlight_centers);
    report.best_match.resize(d_true);
    report.affiliation.resize(d_true);
    for (std::size_t j = 0; j < d_true; ++j) {
        double best = match.at(0, j);
        for (std::size_t i = 1; i < q_true; ++i) best = std::max(best, match.at(i, j));
        report.best_match[j] = best;
        report.affiliation[j] = nearest_kernel(best, bound.config.kernel_mus);
    }
    report.kernel_query_sums = Tensor(bound.config.kernel_count(), q_true);
    for (std::size_t k = 0; k < bound.config.kernel_count(); ++k) {
        const Tensor& sums = result.features.row_sums[k]->value;
        for (std::size_t i = 0; i < q_true; ++i) {
            report.kernel_query_sums.at(k, i) = sums.at(i, 0);
        }
    }
    return report;
}

double ensemble_scores(const std::vector<ScoreBreakdown>& breakdowns) {
    if (breakdowns.empty()) throw std::invalid_argument("ensemble_scores: no breakdowns");
    double total = 0.0;
    for (const auto& bd : breakdowns) total += bd.score;
    return total / static_cast<double>(breakdowns.size());
}

TKScorer::TKScorer(const TKParameters& params, const TKConfig& config)
    : bound_(bind_model(params, config, /*with_grad=*/false)) {}

ScoreBreakdown TKScorer::score(const TokenSequence& query, const TokenSequence& doc) const {
    return forward(query, doc, bound_).breakdown;
}

SequenceRepresentation TKScorer::encode_query(const TokenSequence& query) const {
    return contextualize(query, bound_);
}

ScoreBreakdown TKScorer::score_with_query(const SequenceRepresentation& query_rep,
                                          const TokenSequence& doc) const {
    return forward_with_query(query_rep, doc, bound_).breakdown;
}

ExplainReport TKScorer::explain(const TokenSequence& query, const TokenSequence& doc,
                                std::vector<double> highlight_centers) const {
    return tk::explain(query, doc, bound_, std::move(highlight_centers));
}

// --- checkpoint serialization ------------------------------------------------

namespace {

constexpr char kCheckpointMagic[8] = {'T', 'K', 'C', 'K', 'P', 'T', '0', '1'};

void write_u64(std::ostream& out, std::uint64_t v) {
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFFu);
    out.write(reinterpret_cast<const char*>(bytes), 8);
}

std::uint64_t read_u64(std::istream& in) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    if (!in) throw std::runtime_error("checkpoint: truncated file");
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
    if (!in) throw std::runtime_error("checkpoint: truncated string");
    return s;
}

void write_doubles(std::ostream& out, const std::vector<double>& values) {
    static_assert(sizeof(double) == 8);
    for (double v : values) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        write_u64(out, bits);
    }
}

void read_doubles(std::istream& in, std::vector<double>& values) {
    for (double& v : values) {
        const std::uint64_t bits = read_u64(in);
        std::memcpy(&v, &bits, 8);
    }
}

} // namespace

void save_checkpoint(const std::string& path, const ModelCheckpoint& checkpoint) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));

    KeyValueConfig kv;
    tk_config_into(checkpoint.config, kv);
    write_string(out, kv.serialize());

    write_u64(out, checkpoint.vocab.min_occurrence());
    const auto terms = checkpoint.vocab.retained_terms();
    write_u64(out, terms.size());
    for (const auto& term : terms) write_string(out, term);

    const auto& params = checkpoint.params.all();
    write_u64(out, params.size());
    for (const auto& p : params) {
        write_string(out, p.id);
        out.put(p.group == LrGroup::embedding_context ? 0 : 1);
        write_u64(out, p.tensor.rows());
        write_u64(out, p.tensor.cols());
        write_doubles(out, p.tensor.data());
    }
    if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

ModelCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    char magic[sizeof(kCheckpointMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
        throw std::runtime_error("load_checkpoint: " + path + " is not a TK checkpoint");
    }

    ModelCheckpoint checkpoint;
    checkpoint.config = tk_config_from(KeyValueConfig::parse_string(read_string(in)));

    const std::uint64_t min_occurrence = read_u64(in);
    const std::uint64_t term_count = read_u64(in);
    std::vector<std::string> terms;
    terms.reserve(term_count);
    for (std::uint64_t i = 0; i < term_count; ++i) terms.push_back(read_string(in));
    checkpoint.vocab = Vocabulary::from_terms(terms, min_occurrence);

    const std::uint64_t param_count = read_u64(in);
    for (std::uint64_t i = 0; i < param_count; ++i) {
        const std::string id = read_string(in);
        const int group_byte = in.get();
        if (group_byte < 0) throw std::runtime_error("checkpoint: truncated parameter record");
        const std::uint64_t rows = read_u64(in);
        const std::uint64_t cols = read_u64(in);
        std::vector<double> values(rows * cols);
        read_doubles(in, values);
        checkpoint.params.add(make_parameter(
            id, Tensor(rows, cols, std::move(values)),
            group_byte == 0 ? LrGroup::embedding_context : LrGroup::other));
    }
    return checkpoint;
}

} // namespace tk
