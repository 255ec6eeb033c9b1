#include "tk/tensor.hpp"

#include <cmath>

namespace tk {

bool Tensor::all_finite() const {
    for (double v : values_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

} // namespace tk
