#pragma once

#include "tk/tensor.hpp"

#include <functional>
#include <string>
#include <vector>

namespace tk {

// Two fixed learning-rate groups: word embeddings and contextualization
// layers train at 1e-4, everything else at 1e-3. Membership is declared
// where the parameter is created.
enum class LrGroup {
    embedding_context, // group A
    other,             // group B
};

struct Parameter {
    std::string id;
    Tensor tensor;
    Tensor gradient; // same shape, accumulated between optimizer steps
    LrGroup group = LrGroup::other;
};

Parameter make_parameter(std::string id, Tensor tensor, LrGroup group);

struct AdamState {
    Tensor m;
    Tensor v;
    long step_count = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

AdamState make_adam_state(const Parameter& param);

// Bias-corrected Adam update. Consumes the accumulated gradient and clears
// it; with a zero gradient and zero moments the tensor is untouched.
void adam_step(Parameter& param, AdamState& state, double learning_rate);

// Evaluates the loss over the current parameter values. `with_grad` asks
// the callee to also accumulate analytic gradients into the parameters'
// gradient slots (which arrive zeroed).
using LossFn = std::function<double(std::vector<Parameter>& params, bool with_grad)>;

struct GradCheckEntry {
    std::string id;
    double max_rel_error = 0.0;
};

// Central finite differences (f(x+d) - f(x-d)) / 2d against the analytic
// gradient, entry by entry. Relative error uses max(|analytic|, |fd|, 1e-6)
// as denominator. Throws if two evaluations of the loss at the same point
// disagree.
std::vector<GradCheckEntry> gradient_check(const LossFn& loss_fn, std::vector<Parameter>& params,
                                           double delta);

double max_gradient_error(const std::vector<GradCheckEntry>& entries);

} // namespace tk
