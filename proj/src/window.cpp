#include "tk/window.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tk {

void WindowConfig::validate(std::size_t doc_cap) const {
    if (sizes.empty()) throw std::invalid_argument("WindowConfig: no window sizes");
    if (strides.size() != sizes.size()) {
        throw std::invalid_argument("WindowConfig: sizes and strides differ in length");
    }
    if (top_r < 1) throw std::invalid_argument("WindowConfig: top_r must be >= 1");
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (sizes[i] < 1 || sizes[i] > doc_cap) {
            throw std::invalid_argument("WindowConfig: window size " + std::to_string(sizes[i]) +
                                        " outside [1, doc cap " + std::to_string(doc_cap) + "]");
        }
        if (strides[i] < 1 || strides[i] > sizes[i]) {
            throw std::invalid_argument("WindowConfig: stride " + std::to_string(strides[i]) +
                                        " outside [1, size " + std::to_string(sizes[i]) + "]");
        }
    }
}

std::vector<WindowRange> window_partition(std::size_t doc_length, std::size_t size,
                                          std::size_t stride) {
    if (doc_length < 1) throw std::invalid_argument("window_partition: empty document");
    if (size < 1 || stride < 1) {
        throw std::invalid_argument("window_partition: size and stride must be >= 1");
    }
    if (stride > size) {
        throw std::invalid_argument("window_partition: stride " + std::to_string(stride) +
                                    " larger than window size " + std::to_string(size) +
                                    " would leave tokens uncovered");
    }
    std::vector<WindowRange> windows;
    std::size_t start = 0;
    while (true) {
        if (start + size >= doc_length) {
            windows.push_back({start, doc_length});
            break;
        }
        windows.push_back({start, start + size});
        start += stride;
    }
    return windows;
}

std::vector<std::size_t> sort_indices_desc(const std::vector<double>& values) {
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    return idx;
}

double rank_weighted_sum(std::vector<double> scores, const std::vector<double>& lambdas,
                         std::size_t top_r) {
    std::sort(scores.begin(), scores.end(), std::greater<double>());
    double total = 0.0;
    const std::size_t take = std::min({top_r, scores.size(), lambdas.size()});
    for (std::size_t r = 0; r < take; ++r) total += lambdas[r] * scores[r];
    return total;
}

} // namespace tk
