#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

namespace surgecal {

/// A named parameter array, row-major. Gradients live outside the tensor
/// (see GradBuffers) so concurrent backward passes never race.
struct Tensor {
    int id = -1;  // registration index within the owning model
    std::string name;
    std::vector<int> shape;
    std::vector<double> value;

    size_t size() const { return value.size(); }

    static size_t element_count(const std::vector<int>& shape) {
        size_t n = 1;
        for (int d : shape) n *= static_cast<size_t>(d);
        return n;
    }
};

/// Per-tensor gradient accumulators, indexed by tensor id. Buffers exist only
/// for tensors selected as trainable; backward skips the rest.
class GradBuffers {
public:
    GradBuffers() = default;
    GradBuffers(size_t n_tensors, const std::vector<const Tensor*>& trainable) {
        grads_.resize(n_tensors);
        for (const Tensor* t : trainable) {
            grads_[static_cast<size_t>(t->id)].assign(t->size(), 0.0);
        }
    }

    bool wants(int tensor_id) const {
        return tensor_id >= 0 && static_cast<size_t>(tensor_id) < grads_.size() &&
               !grads_[static_cast<size_t>(tensor_id)].empty();
    }

    double* at(int tensor_id) { return grads_[static_cast<size_t>(tensor_id)].data(); }
    const std::vector<double>& vec(int tensor_id) const {
        return grads_[static_cast<size_t>(tensor_id)];
    }

    void zero() {
        for (auto& g : grads_) std::fill(g.begin(), g.end(), 0.0);
    }

    /// Elementwise accumulate (same layout required).
    void add(const GradBuffers& other) {
        for (size_t i = 0; i < grads_.size(); ++i) {
            const auto& src = other.grads_[i];
            auto& dst = grads_[i];
            for (size_t k = 0; k < src.size(); ++k) dst[k] += src[k];
        }
    }

private:
    std::vector<std::vector<double>> grads_;
};

}  // namespace surgecal
