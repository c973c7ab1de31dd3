#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "surgecal/model/tensor.hpp"

namespace surgecal {

/// Fully-connected head (GELU between layers, linear final) mapping the
/// concatenated [embedding, numeric features] vector to the scalar lambda.
class MlpHead {
public:
    /// sizes: {input_dim, hidden..., 1}; first tensor id = id_offset.
    MlpHead(std::vector<int> sizes, std::uint64_t init_seed, int id_offset);

    int input_dim() const { return sizes_.front(); }

    struct Activations {
        std::vector<std::vector<double>> inputs;  // input to each layer
        std::vector<std::vector<double>> pre;     // pre-activation per layer
    };

    double forward(const std::vector<double>& input, Activations& acts) const;

    /// Returns d(loss)/d(input); parameter grads go to the sink.
    std::vector<double> backward(double d_output, const Activations& acts,
                                 GradBuffers& sink) const;

    std::vector<Tensor*> tensors();
    std::vector<const Tensor*> tensors() const;

private:
    std::vector<int> sizes_;
    std::vector<std::unique_ptr<Tensor>> weights_;  // [out, in] per layer
    std::vector<std::unique_ptr<Tensor>> biases_;   // [out] per layer
};

}  // namespace surgecal
