#include "tk/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tk {

Parameter make_parameter(std::string id, Tensor tensor, LrGroup group) {
    Parameter p;
    p.id = std::move(id);
    p.gradient = Tensor(tensor.rows(), tensor.cols());
    p.tensor = std::move(tensor);
    p.group = group;
    return p;
}

AdamState make_adam_state(const Parameter& param) {
    AdamState s;
    s.m = Tensor(param.tensor.rows(), param.tensor.cols());
    s.v = Tensor(param.tensor.rows(), param.tensor.cols());
    return s;
}

void adam_step(Parameter& param, AdamState& state, double learning_rate) {
    if (!param.gradient.same_shape(param.tensor)) {
        throw std::invalid_argument("adam_step: gradient shape " + param.gradient.shape_string() +
                                    " does not match parameter " + param.id + " " +
                                    param.tensor.shape_string());
    }
    if (!state.m.same_shape(param.tensor) || !state.v.same_shape(param.tensor)) {
        throw std::invalid_argument("adam_step: state shape mismatch for parameter " + param.id);
    }
    state.step_count += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
    for (std::size_t i = 0; i < param.tensor.size(); ++i) {
        const double g = param.gradient[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        param.tensor[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
    param.gradient.fill(0.0);
}

std::vector<GradCheckEntry> gradient_check(const LossFn& loss_fn, std::vector<Parameter>& params,
                                           double delta) {
    if (delta <= 0.0) throw std::invalid_argument("gradient_check: delta must be positive");

    for (auto& p : params) p.gradient.fill(0.0);
    const double base = loss_fn(params, true);
    const double base_again = loss_fn(params, false);
    if (base != base_again) {
        throw std::runtime_error("gradient_check: loss function is not deterministic (" +
                                 std::to_string(base) + " vs " + std::to_string(base_again) + ")");
    }

    std::vector<Tensor> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params) analytic.push_back(p.gradient);

    std::vector<GradCheckEntry> report;
    report.reserve(params.size());
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        GradCheckEntry entry{params[pi].id, 0.0};
        Tensor& values = params[pi].tensor;
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double original = values[i];
            values[i] = original + delta;
            const double plus = loss_fn(params, false);
            values[i] = original - delta;
            const double minus = loss_fn(params, false);
            values[i] = original;
            const double fd = (plus - minus) / (2.0 * delta);
            const double a = analytic[pi][i];
            const double denom = std::max({std::fabs(a), std::fabs(fd), 1e-6});
            entry.max_rel_error = std::max(entry.max_rel_error, std::fabs(a - fd) / denom);
        }
        report.push_back(std::move(entry));
    }
    return report;
}

double max_gradient_error(const std::vector<GradCheckEntry>& entries) {
    double worst = 0.0;
    for (const auto& e : entries) worst = std::max(worst, e.max_rel_error);
    return worst;
}

} // namespace tk
