#pragma once

#include <cstddef>
#include <vector>

namespace tk {

// Sliding-window pooling over the document axis: window scores are sorted
// and the top R weighted by the learned rank weights lambda_1..lambda_R.
struct WindowConfig {
    std::vector<std::size_t> sizes{20, 30, 50, 100};
    std::vector<std::size_t> strides{10, 15, 25, 50}; // parallel to sizes
    std::size_t top_r = 5;

    void validate(std::size_t doc_cap) const;
};

struct WindowRange {
    std::size_t begin = 0;
    std::size_t end = 0; // exclusive
};

// Covers [0, doc_length): starts advance by `stride`, the window reaching
// the document end is clipped there and terminates the list. Requires
// stride <= size so every token lands in at least one window.
std::vector<WindowRange> window_partition(std::size_t doc_length, std::size_t size,
                                          std::size_t stride);

// Sorts descending and returns sum of lambda[r] * sorted[r] over the top R
// ranks; ranks past the end of the list contribute 0.
double rank_weighted_sum(std::vector<double> scores, const std::vector<double>& lambdas,
                         std::size_t top_r);

// Indices of `values` in descending value order; ties keep original order.
std::vector<std::size_t> sort_indices_desc(const std::vector<double>& values);

} // namespace tk
