#pragma once

#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "surgecal/model/tensor.hpp"

namespace surgecal {

enum class Pooling { Mean, LastToken };

enum class Projection { Query, Key, Value, Output };

std::string projection_name(Projection p);
Projection projection_from_name(const std::string& name);

struct EncoderConfig {
    int vocab_size = 0;  // filled from the tokenizer
    int embed_dim = 32;
    int n_layers = 2;
    int n_heads = 4;
    int max_seq_len = 96;
    Pooling pooling = Pooling::Mean;

    void validate() const;  // throws std::invalid_argument
};

struct LoraConfig {
    int rank = 0;        // 0 = no adapters
    double alpha = 16.0; // adapted weight: W + (alpha/rank) * B * A
    std::set<Projection> target_projections = {Projection::Query, Projection::Key,
                                               Projection::Value, Projection::Output};
};

/// A projection matrix with an optional low-rank adapter.
struct AdaptedLinear {
    Tensor* weight = nullptr;  // [d_out, d_in], frozen base
    Tensor* lora_a = nullptr;  // [rank, d_in], Gaussian init
    Tensor* lora_b = nullptr;  // [d_out, rank], zero init
    double lora_scale = 0.0;   // alpha / rank
};

/// Per-call forward state retained for backward. One instance per concurrent
/// sample; the encoder itself stays immutable during training math.
struct EncoderActivations;

/// Bidirectional pre-LN transformer encoder producing a pooled embedding.
/// Hand-rolled forward/backward in double precision; LoRA adapters can be
/// injected on the attention projections after construction.
class TransformerEncoder {
public:
    TransformerEncoder(const EncoderConfig& config, std::uint64_t init_seed);

    const EncoderConfig& config() const { return config_; }
    const LoraConfig& lora() const { return lora_; }
    bool has_adapters() const { return lora_.rank > 0; }

    /// Adds A/B tensors on the configured projections. A is Gaussian, B is
    /// zero, so outputs are unchanged until training moves B.
    void inject_adapters(const LoraConfig& lora, std::uint64_t init_seed);

    /// tokens must already include the begin token; length <= max_seq_len.
    /// Returns the pooled embedding (size embed_dim).
    std::vector<double> forward(const std::vector<int>& tokens, EncoderActivations& acts) const;

    /// Accumulates parameter gradients into sink (only for tensors the sink
    /// tracks) given d(loss)/d(pooled embedding).
    void backward(const std::vector<double>& d_pooled, const EncoderActivations& acts,
                  GradBuffers& sink) const;

    /// All tensors in registration order: base, then adapters if injected.
    std::vector<Tensor*> tensors();
    std::vector<const Tensor*> tensors() const;
    std::vector<const Tensor*> base_tensors() const;
    std::vector<const Tensor*> adapter_tensors() const;

    /// First tensor id used by this encoder's registry; ids are contiguous.
    int n_tensors() const { return static_cast<int>(all_.size()); }

    friend struct EncoderActivations;

private:
    struct Layer {
        Tensor* ln1_gain;
        Tensor* ln1_bias;
        AdaptedLinear wq, wk, wv, wo;
        Tensor* ln2_gain;
        Tensor* ln2_bias;
        Tensor* mlp_w1;  // [4d, d]
        Tensor* mlp_b1;  // [4d]
        Tensor* mlp_w2;  // [d, 4d]
        Tensor* mlp_b2;  // [d]
    };

    Tensor* add_tensor(const std::string& name, std::vector<int> shape);

    EncoderConfig config_;
    LoraConfig lora_;
    std::uint64_t init_seed_ = 0;

    Tensor* tok_emb_;    // [vocab, d]
    Tensor* pos_emb_;    // [max_seq_len, d]
    std::vector<Layer> layers_;
    Tensor* lnf_gain_;
    Tensor* lnf_bias_;

    std::vector<std::unique_ptr<Tensor>> all_;
};

struct EncoderActivations {
    int seq_len = 0;
    std::vector<int> tokens;

    struct LayerActs {
        std::vector<double> x_in;       // [L, d]
        std::vector<double> ln1_out;    // [L, d]
        std::vector<double> ln1_rstd;   // [L]
        std::vector<double> ln1_mean;   // [L]
        std::vector<double> q, k, v;    // [L, d]
        std::vector<double> lora_q, lora_k, lora_v, lora_o;  // [L, rank] intermediates
        std::vector<double> attn_probs; // [heads, L, L]
        std::vector<double> ctx;        // [L, d]
        std::vector<double> x_mid;      // [L, d]
        std::vector<double> ln2_out;    // [L, d]
        std::vector<double> ln2_rstd;   // [L]
        std::vector<double> ln2_mean;   // [L]
        std::vector<double> mlp_pre;    // [L, 4d]
        std::vector<double> mlp_act;    // [L, 4d]
    };

    std::vector<LayerActs> layers;
    std::vector<double> x_final;     // [L, d] input to final LN
    std::vector<double> lnf_out;     // [L, d]
    std::vector<double> lnf_rstd;    // [L]
    std::vector<double> lnf_mean;    // [L]
    std::vector<double> pooled;      // [d]
};

}  // namespace surgecal
