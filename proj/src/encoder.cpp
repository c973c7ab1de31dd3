#include "surgecal/model/encoder.hpp"

#include <cmath>
#include <stdexcept>

#include "surgecal/rng.hpp"

namespace surgecal {

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)

double gelu(double x) {
    double u = kGeluC * (x + 0.044715 * x * x * x);
    return 0.5 * x * (1.0 + std::tanh(u));
}

double gelu_grad(double x) {
    double u = kGeluC * (x + 0.044715 * x * x * x);
    double t = std::tanh(u);
    double du = kGeluC * (1.0 + 3.0 * 0.044715 * x * x);
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
}

void layernorm_forward(const double* x, const double* gain, const double* bias, int n_rows,
                       int d, double* out, double* mean, double* rstd) {
    for (int t = 0; t < n_rows; ++t) {
        const double* xt = x + t * d;
        double mu = 0.0;
        for (int i = 0; i < d; ++i) mu += xt[i];
        mu /= d;
        double var = 0.0;
        for (int i = 0; i < d; ++i) {
            double c = xt[i] - mu;
            var += c * c;
        }
        var /= d;
        double rs = 1.0 / std::sqrt(var + kLnEps);
        mean[t] = mu;
        rstd[t] = rs;
        double* ot = out + t * d;
        for (int i = 0; i < d; ++i) ot[i] = gain[i] * (xt[i] - mu) * rs + bias[i];
    }
}

/// dx is accumulated; gain/bias grads go to the sink when tracked.
void layernorm_backward(const double* dout, const double* x, const double* gain,
                        const double* mean, const double* rstd, int n_rows, int d, double* dx,
                        double* dgain, double* dbias) {
    for (int t = 0; t < n_rows; ++t) {
        const double* dy = dout + t * d;
        const double* xt = x + t * d;
        double mu = mean[t];
        double rs = rstd[t];
        double sum_dyg = 0.0, sum_dyg_xhat = 0.0;
        for (int i = 0; i < d; ++i) {
            double xhat = (xt[i] - mu) * rs;
            double dyg = dy[i] * gain[i];
            sum_dyg += dyg;
            sum_dyg_xhat += dyg * xhat;
            if (dgain) dgain[i] += dy[i] * xhat;
            if (dbias) dbias[i] += dy[i];
        }
        double inv_d = 1.0 / d;
        double* dxt = dx + t * d;
        for (int i = 0; i < d; ++i) {
            double xhat = (xt[i] - mu) * rs;
            double dyg = dy[i] * gain[i];
            dxt[i] += rs * (dyg - inv_d * sum_dyg - xhat * inv_d * sum_dyg_xhat);
        }
    }
}

/// y[0..d_out) = W x, plus the low-rank path when present. lora_tmp must hold
/// rank doubles when adapters are attached (stores A x for backward).
void adapted_forward(const AdaptedLinear& lin, const double* x, double* y, double* lora_tmp,
                     int d_out, int d_in, int rank) {
    const double* w = lin.weight->value.data();
    for (int o = 0; o < d_out; ++o) {
        const double* row = w + o * d_in;
        double acc = 0.0;
        for (int i = 0; i < d_in; ++i) acc += row[i] * x[i];
        y[o] = acc;
    }
    if (rank > 0) {
        const double* a = lin.lora_a->value.data();
        const double* b = lin.lora_b->value.data();
        for (int j = 0; j < rank; ++j) {
            const double* arow = a + j * d_in;
            double acc = 0.0;
            for (int i = 0; i < d_in; ++i) acc += arow[i] * x[i];
            lora_tmp[j] = acc;
        }
        for (int o = 0; o < d_out; ++o) {
            const double* brow = b + o * rank;
            double acc = 0.0;
            for (int j = 0; j < rank; ++j) acc += brow[j] * lora_tmp[j];
            y[o] += lin.lora_scale * acc;
        }
    }
}

void adapted_backward(const AdaptedLinear& lin, const double* x, const double* lora_tmp,
                      const double* dy, double* dx, GradBuffers& sink, int d_out, int d_in,
                      int rank) {
    const double* w = lin.weight->value.data();
    if (sink.wants(lin.weight->id)) {
        double* dw = sink.at(lin.weight->id);
        for (int o = 0; o < d_out; ++o) {
            double g = dy[o];
            double* drow = dw + o * d_in;
            for (int i = 0; i < d_in; ++i) drow[i] += g * x[i];
        }
    }
    for (int o = 0; o < d_out; ++o) {
        double g = dy[o];
        const double* row = w + o * d_in;
        for (int i = 0; i < d_in; ++i) dx[i] += row[i] * g;
    }
    if (rank > 0) {
        const double* a = lin.lora_a->value.data();
        const double* b = lin.lora_b->value.data();
        // dt = scale * B^T dy
        std::vector<double> dt(static_cast<size_t>(rank), 0.0);
        for (int o = 0; o < d_out; ++o) {
            double g = lin.lora_scale * dy[o];
            const double* brow = b + o * rank;
            for (int j = 0; j < rank; ++j) dt[static_cast<size_t>(j)] += brow[j] * g;
        }
        if (sink.wants(lin.lora_b->id)) {
            double* db = sink.at(lin.lora_b->id);
            for (int o = 0; o < d_out; ++o) {
                double g = lin.lora_scale * dy[o];
                double* drow = db + o * rank;
                for (int j = 0; j < rank; ++j) drow[j] += g * lora_tmp[j];
            }
        }
        if (sink.wants(lin.lora_a->id)) {
            double* da = sink.at(lin.lora_a->id);
            for (int j = 0; j < rank; ++j) {
                double g = dt[static_cast<size_t>(j)];
                double* arow = da + j * d_in;
                for (int i = 0; i < d_in; ++i) arow[i] += g * x[i];
            }
        }
        for (int j = 0; j < rank; ++j) {
            double g = dt[static_cast<size_t>(j)];
            const double* arow = a + j * d_in;
            for (int i = 0; i < d_in; ++i) dx[i] += arow[i] * g;
        }
    }
}

}  // namespace

std::string projection_name(Projection p) {
    switch (p) {
        case Projection::Query: return "query";
        case Projection::Key: return "key";
        case Projection::Value: return "value";
        case Projection::Output: return "output";
    }
    throw std::logic_error("unreachable projection");
}

Projection projection_from_name(const std::string& name) {
    if (name == "query") return Projection::Query;
    if (name == "key") return Projection::Key;
    if (name == "value") return Projection::Value;
    if (name == "output") return Projection::Output;
    throw std::invalid_argument("unknown projection: '" + name + "'");
}

void EncoderConfig::validate() const {
    if (vocab_size < 2) throw std::invalid_argument("encoder.vocab_size must be >= 2");
    if (embed_dim < 1 || n_layers < 1 || n_heads < 1 || max_seq_len < 2) {
        throw std::invalid_argument("encoder dimensions must be >= 1 (max_seq_len >= 2)");
    }
    if (embed_dim % n_heads != 0) {
        throw std::invalid_argument("encoder.embed_dim must be divisible by n_heads");
    }
}

Tensor* TransformerEncoder::add_tensor(const std::string& name, std::vector<int> shape) {
    auto t = std::make_unique<Tensor>();
    t->id = static_cast<int>(all_.size());
    t->name = name;
    t->shape = std::move(shape);
    t->value.assign(Tensor::element_count(t->shape), 0.0);
    all_.push_back(std::move(t));
    return all_.back().get();
}

TransformerEncoder::TransformerEncoder(const EncoderConfig& config, std::uint64_t init_seed)
    : config_(config), init_seed_(init_seed) {
    config_.validate();
    int d = config_.embed_dim;

    auto gaussian_init = [&](Tensor* t, double stddev) {
        Rng rng(derive_seed(init_seed_, "init/" + t->name));
        for (double& v : t->value) v = rng.normal(0.0, stddev);
    };
    auto ones = [](Tensor* t) { std::fill(t->value.begin(), t->value.end(), 1.0); };

    tok_emb_ = add_tensor("encoder.tok_emb", {config_.vocab_size, d});
    pos_emb_ = add_tensor("encoder.pos_emb", {config_.max_seq_len, d});
    gaussian_init(tok_emb_, 0.02);
    gaussian_init(pos_emb_, 0.02);

    layers_.resize(static_cast<size_t>(config_.n_layers));
    for (int l = 0; l < config_.n_layers; ++l) {
        std::string prefix = "encoder.layer" + std::to_string(l) + ".";
        Layer& layer = layers_[static_cast<size_t>(l)];
        layer.ln1_gain = add_tensor(prefix + "ln1.gain", {d});
        layer.ln1_bias = add_tensor(prefix + "ln1.bias", {d});
        ones(layer.ln1_gain);
        layer.wq.weight = add_tensor(prefix + "attn.query", {d, d});
        layer.wk.weight = add_tensor(prefix + "attn.key", {d, d});
        layer.wv.weight = add_tensor(prefix + "attn.value", {d, d});
        layer.wo.weight = add_tensor(prefix + "attn.output", {d, d});
        gaussian_init(layer.wq.weight, 0.02);
        gaussian_init(layer.wk.weight, 0.02);
        gaussian_init(layer.wv.weight, 0.02);
        gaussian_init(layer.wo.weight, 0.02);
        layer.ln2_gain = add_tensor(prefix + "ln2.gain", {d});
        layer.ln2_bias = add_tensor(prefix + "ln2.bias", {d});
        ones(layer.ln2_gain);
        layer.mlp_w1 = add_tensor(prefix + "mlp.w1", {4 * d, d});
        layer.mlp_b1 = add_tensor(prefix + "mlp.b1", {4 * d});
        layer.mlp_w2 = add_tensor(prefix + "mlp.w2", {d, 4 * d});
        layer.mlp_b2 = add_tensor(prefix + "mlp.b2", {d});
        gaussian_init(layer.mlp_w1, 0.02);
        gaussian_init(layer.mlp_w2, 0.02);
    }
    lnf_gain_ = add_tensor("encoder.lnf.gain", {d});
    lnf_bias_ = add_tensor("encoder.lnf.bias", {d});
    ones(lnf_gain_);
}

void TransformerEncoder::inject_adapters(const LoraConfig& lora, std::uint64_t init_seed) {
    if (has_adapters()) throw std::logic_error("adapters already injected");
    if (lora.rank < 0) throw std::invalid_argument("lora.rank must be >= 0");
    if (lora.alpha <= 0) throw std::invalid_argument("lora.alpha must be > 0");
    lora_ = lora;
    if (lora.rank == 0) return;  // pure emb mode
    int d = config_.embed_dim;
    double scale = lora_.alpha / lora_.rank;
    for (int l = 0; l < config_.n_layers; ++l) {
        Layer& layer = layers_[static_cast<size_t>(l)];
        std::string prefix = "encoder.layer" + std::to_string(l) + ".lora.";
        for (Projection proj : lora_.target_projections) {
            AdaptedLinear* lin = nullptr;
            switch (proj) {
                case Projection::Query: lin = &layer.wq; break;
                case Projection::Key: lin = &layer.wk; break;
                case Projection::Value: lin = &layer.wv; break;
                case Projection::Output: lin = &layer.wo; break;
            }
            std::string base = prefix + projection_name(proj);
            lin->lora_a = add_tensor(base + ".a", {lora_.rank, d});
            lin->lora_b = add_tensor(base + ".b", {d, lora_.rank});
            lin->lora_scale = scale;
            Rng rng(derive_seed(init_seed, "init/" + lin->lora_a->name));
            for (double& v : lin->lora_a->value) v = rng.normal(0.0, 0.02);
            // lora_b stays zero: adapters start as the identity update.
        }
    }
}

std::vector<double> TransformerEncoder::forward(const std::vector<int>& tokens,
                                                EncoderActivations& acts) const {
    if (tokens.empty()) throw std::invalid_argument("encoder.forward: empty token sequence");
    int L = static_cast<int>(tokens.size());
    if (L > config_.max_seq_len) {
        throw std::invalid_argument("encoder.forward: sequence length " + std::to_string(L) +
                                    " exceeds max_seq_len " + std::to_string(config_.max_seq_len));
    }
    const int d = config_.embed_dim;
    const int H = config_.n_heads;
    const int dh = d / H;
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
    const int rank = lora_.rank;

    acts.seq_len = L;
    acts.tokens = tokens;
    acts.layers.assign(static_cast<size_t>(config_.n_layers), {});

    std::vector<double> x(static_cast<size_t>(L) * d);
    for (int t = 0; t < L; ++t) {
        int tok = tokens[static_cast<size_t>(t)];
        if (tok < 0 || tok >= config_.vocab_size) {
            throw std::invalid_argument("encoder.forward: token id " + std::to_string(tok) +
                                        " outside vocab of size " +
                                        std::to_string(config_.vocab_size));
        }
        const double* te = tok_emb_->value.data() + static_cast<size_t>(tok) * d;
        const double* pe = pos_emb_->value.data() + static_cast<size_t>(t) * d;
        for (int i = 0; i < d; ++i) x[static_cast<size_t>(t) * d + i] = te[i] + pe[i];
    }

    for (int l = 0; l < config_.n_layers; ++l) {
        const Layer& layer = layers_[static_cast<size_t>(l)];
        auto& la = acts.layers[static_cast<size_t>(l)];
        la.x_in = x;
        la.ln1_out.resize(x.size());
        la.ln1_mean.resize(static_cast<size_t>(L));
        la.ln1_rstd.resize(static_cast<size_t>(L));
        layernorm_forward(la.x_in.data(), layer.ln1_gain->value.data(),
                          layer.ln1_bias->value.data(), L, d, la.ln1_out.data(),
                          la.ln1_mean.data(), la.ln1_rstd.data());

        la.q.resize(x.size());
        la.k.resize(x.size());
        la.v.resize(x.size());
        size_t lora_len = rank > 0 ? static_cast<size_t>(L) * rank : 0;
        la.lora_q.resize(layer.wq.lora_a ? lora_len : 0);
        la.lora_k.resize(layer.wk.lora_a ? lora_len : 0);
        la.lora_v.resize(layer.wv.lora_a ? lora_len : 0);
        la.lora_o.resize(layer.wo.lora_a ? lora_len : 0);
        for (int t = 0; t < L; ++t) {
            const double* in = la.ln1_out.data() + static_cast<size_t>(t) * d;
            adapted_forward(layer.wq, in, la.q.data() + static_cast<size_t>(t) * d,
                            layer.wq.lora_a ? la.lora_q.data() + static_cast<size_t>(t) * rank
                                            : nullptr,
                            d, d, layer.wq.lora_a ? rank : 0);
            adapted_forward(layer.wk, in, la.k.data() + static_cast<size_t>(t) * d,
                            layer.wk.lora_a ? la.lora_k.data() + static_cast<size_t>(t) * rank
                                            : nullptr,
                            d, d, layer.wk.lora_a ? rank : 0);
            adapted_forward(layer.wv, in, la.v.data() + static_cast<size_t>(t) * d,
                            layer.wv.lora_a ? la.lora_v.data() + static_cast<size_t>(t) * rank
                                            : nullptr,
                            d, d, layer.wv.lora_a ? rank : 0);
        }

        la.attn_probs.assign(static_cast<size_t>(H) * L * L, 0.0);
        la.ctx.assign(x.size(), 0.0);
        std::vector<double> scores(static_cast<size_t>(L));
        for (int h = 0; h < H; ++h) {
            int off = h * dh;
            for (int t = 0; t < L; ++t) {
                const double* qt = la.q.data() + static_cast<size_t>(t) * d + off;
                double maxs = -1e300;
                for (int u = 0; u < L; ++u) {
                    const double* ku = la.k.data() + static_cast<size_t>(u) * d + off;
                    double s = 0.0;
                    for (int i = 0; i < dh; ++i) s += qt[i] * ku[i];
                    s *= inv_sqrt_dh;
                    scores[static_cast<size_t>(u)] = s;
                    if (s > maxs) maxs = s;
                }
                double denom = 0.0;
                double* prow =
                    la.attn_probs.data() + (static_cast<size_t>(h) * L + t) * L;
                for (int u = 0; u < L; ++u) {
                    double e = std::exp(scores[static_cast<size_t>(u)] - maxs);
                    prow[u] = e;
                    denom += e;
                }
                double inv_denom = 1.0 / denom;
                double* ct = la.ctx.data() + static_cast<size_t>(t) * d + off;
                for (int u = 0; u < L; ++u) {
                    double p = prow[u] * inv_denom;
                    prow[u] = p;
                    const double* vu = la.v.data() + static_cast<size_t>(u) * d + off;
                    for (int i = 0; i < dh; ++i) ct[i] += p * vu[i];
                }
            }
        }

        la.x_mid.resize(x.size());
        std::vector<double> attn_out(static_cast<size_t>(d));
        for (int t = 0; t < L; ++t) {
            adapted_forward(layer.wo, la.ctx.data() + static_cast<size_t>(t) * d, attn_out.data(),
                            layer.wo.lora_a ? la.lora_o.data() + static_cast<size_t>(t) * rank
                                            : nullptr,
                            d, d, layer.wo.lora_a ? rank : 0);
            for (int i = 0; i < d; ++i) {
                la.x_mid[static_cast<size_t>(t) * d + i] =
                    la.x_in[static_cast<size_t>(t) * d + i] + attn_out[static_cast<size_t>(i)];
            }
        }

        la.ln2_out.resize(x.size());
        la.ln2_mean.resize(static_cast<size_t>(L));
        la.ln2_rstd.resize(static_cast<size_t>(L));
        layernorm_forward(la.x_mid.data(), layer.ln2_gain->value.data(),
                          layer.ln2_bias->value.data(), L, d, la.ln2_out.data(),
                          la.ln2_mean.data(), la.ln2_rstd.data());

        int dm = 4 * d;
        la.mlp_pre.resize(static_cast<size_t>(L) * dm);
        la.mlp_act.resize(static_cast<size_t>(L) * dm);
        for (int t = 0; t < L; ++t) {
            const double* in = la.ln2_out.data() + static_cast<size_t>(t) * d;
            double* pre = la.mlp_pre.data() + static_cast<size_t>(t) * dm;
            const double* w1 = layer.mlp_w1->value.data();
            const double* b1 = layer.mlp_b1->value.data();
            for (int o = 0; o < dm; ++o) {
                const double* row = w1 + static_cast<size_t>(o) * d;
                double acc = b1[o];
                for (int i = 0; i < d; ++i) acc += row[i] * in[i];
                pre[o] = acc;
            }
            double* act = la.mlp_act.data() + static_cast<size_t>(t) * dm;
            for (int o = 0; o < dm; ++o) act[o] = gelu(pre[o]);
            const double* w2 = layer.mlp_w2->value.data();
            const double* b2 = layer.mlp_b2->value.data();
            double* xt = x.data() + static_cast<size_t>(t) * d;
            for (int i = 0; i < d; ++i) {
                const double* row = w2 + static_cast<size_t>(i) * dm;
                double acc = b2[i];
                for (int o = 0; o < dm; ++o) acc += row[o] * act[o];
                xt[i] = la.x_mid[static_cast<size_t>(t) * d + i] + acc;
            }
        }
    }

    acts.x_final = x;
    acts.lnf_out.resize(x.size());
    acts.lnf_mean.resize(static_cast<size_t>(L));
    acts.lnf_rstd.resize(static_cast<size_t>(L));
    layernorm_forward(acts.x_final.data(), lnf_gain_->value.data(), lnf_bias_->value.data(), L, d,
                      acts.lnf_out.data(), acts.lnf_mean.data(), acts.lnf_rstd.data());

    acts.pooled.assign(static_cast<size_t>(d), 0.0);
    if (config_.pooling == Pooling::Mean) {
        for (int t = 0; t < L; ++t) {
            for (int i = 0; i < d; ++i) {
                acts.pooled[static_cast<size_t>(i)] += acts.lnf_out[static_cast<size_t>(t) * d + i];
            }
        }
        for (int i = 0; i < d; ++i) acts.pooled[static_cast<size_t>(i)] /= L;
    } else {
        for (int i = 0; i < d; ++i) {
            acts.pooled[static_cast<size_t>(i)] = acts.lnf_out[static_cast<size_t>(L - 1) * d + i];
        }
    }
    return acts.pooled;
}

void TransformerEncoder::backward(const std::vector<double>& d_pooled,
                                  const EncoderActivations& acts, GradBuffers& sink) const {
    const int L = acts.seq_len;
    const int d = config_.embed_dim;
    const int H = config_.n_heads;
    const int dh = d / H;
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
    const int rank = lora_.rank;

    std::vector<double> d_lnf(static_cast<size_t>(L) * d, 0.0);
    if (config_.pooling == Pooling::Mean) {
        double inv_l = 1.0 / L;
        for (int t = 0; t < L; ++t) {
            for (int i = 0; i < d; ++i) {
                d_lnf[static_cast<size_t>(t) * d + i] = d_pooled[static_cast<size_t>(i)] * inv_l;
            }
        }
    } else {
        for (int i = 0; i < d; ++i) {
            d_lnf[static_cast<size_t>(L - 1) * d + i] = d_pooled[static_cast<size_t>(i)];
        }
    }

    std::vector<double> dx(static_cast<size_t>(L) * d, 0.0);
    layernorm_backward(d_lnf.data(), acts.x_final.data(), lnf_gain_->value.data(),
                       acts.lnf_mean.data(), acts.lnf_rstd.data(), L, d, dx.data(),
                       sink.wants(lnf_gain_->id) ? sink.at(lnf_gain_->id) : nullptr,
                       sink.wants(lnf_bias_->id) ? sink.at(lnf_bias_->id) : nullptr);

    const int dm = 4 * d;
    for (int l = config_.n_layers - 1; l >= 0; --l) {
        const Layer& layer = layers_[static_cast<size_t>(l)];
        const auto& la = acts.layers[static_cast<size_t>(l)];

        // MLP block: x_out = x_mid + W2 gelu(W1 ln2(x_mid) + b1) + b2
        std::vector<double> d_ln2(static_cast<size_t>(L) * d, 0.0);
        {
            std::vector<double> d_act(static_cast<size_t>(dm));
            std::vector<double> d_pre(static_cast<size_t>(dm));
            double* dw2 = sink.wants(layer.mlp_w2->id) ? sink.at(layer.mlp_w2->id) : nullptr;
            double* db2 = sink.wants(layer.mlp_b2->id) ? sink.at(layer.mlp_b2->id) : nullptr;
            double* dw1 = sink.wants(layer.mlp_w1->id) ? sink.at(layer.mlp_w1->id) : nullptr;
            double* db1 = sink.wants(layer.mlp_b1->id) ? sink.at(layer.mlp_b1->id) : nullptr;
            const double* w2 = layer.mlp_w2->value.data();
            const double* w1 = layer.mlp_w1->value.data();
            for (int t = 0; t < L; ++t) {
                const double* dxt = dx.data() + static_cast<size_t>(t) * d;  // d(loss)/d(x_out)
                const double* act = la.mlp_act.data() + static_cast<size_t>(t) * dm;
                const double* pre = la.mlp_pre.data() + static_cast<size_t>(t) * dm;
                std::fill(d_act.begin(), d_act.end(), 0.0);
                for (int i = 0; i < d; ++i) {
                    double g = dxt[i];
                    if (db2) db2[i] += g;
                    const double* row = w2 + static_cast<size_t>(i) * dm;
                    if (dw2) {
                        double* drow = dw2 + static_cast<size_t>(i) * dm;
                        for (int o = 0; o < dm; ++o) drow[o] += g * act[o];
                    }
                    for (int o = 0; o < dm; ++o) d_act[static_cast<size_t>(o)] += row[o] * g;
                }
                for (int o = 0; o < dm; ++o) {
                    d_pre[static_cast<size_t>(o)] = d_act[static_cast<size_t>(o)] * gelu_grad(pre[o]);
                }
                const double* ln2 = la.ln2_out.data() + static_cast<size_t>(t) * d;
                double* dl2 = d_ln2.data() + static_cast<size_t>(t) * d;
                for (int o = 0; o < dm; ++o) {
                    double g = d_pre[static_cast<size_t>(o)];
                    if (db1) db1[o] += g;
                    if (dw1) {
                        double* drow = dw1 + static_cast<size_t>(o) * d;
                        for (int i = 0; i < d; ++i) drow[i] += g * ln2[i];
                    }
                    const double* row = w1 + static_cast<size_t>(o) * d;
                    for (int i = 0; i < d; ++i) dl2[i] += row[i] * g;
                }
            }
        }

        // dx currently holds d(x_out); residual passes it straight to x_mid.
        layernorm_backward(d_ln2.data(), la.x_mid.data(), layer.ln2_gain->value.data(),
                           la.ln2_mean.data(), la.ln2_rstd.data(), L, d, dx.data(),
                           sink.wants(layer.ln2_gain->id) ? sink.at(layer.ln2_gain->id) : nullptr,
                           sink.wants(layer.ln2_bias->id) ? sink.at(layer.ln2_bias->id) : nullptr);

        // Attention block: x_mid = x_in + Wo(ctx)
        std::vector<double> d_ctx(static_cast<size_t>(L) * d, 0.0);
        for (int t = 0; t < L; ++t) {
            adapted_backward(layer.wo, la.ctx.data() + static_cast<size_t>(t) * d,
                             layer.wo.lora_a ? la.lora_o.data() + static_cast<size_t>(t) * rank
                                             : nullptr,
                             dx.data() + static_cast<size_t>(t) * d,
                             d_ctx.data() + static_cast<size_t>(t) * d, sink, d, d,
                             layer.wo.lora_a ? rank : 0);
        }

        std::vector<double> dq(static_cast<size_t>(L) * d, 0.0);
        std::vector<double> dk(static_cast<size_t>(L) * d, 0.0);
        std::vector<double> dv(static_cast<size_t>(L) * d, 0.0);
        std::vector<double> dprobs(static_cast<size_t>(L));
        for (int h = 0; h < H; ++h) {
            int off = h * dh;
            for (int t = 0; t < L; ++t) {
                const double* dct = d_ctx.data() + static_cast<size_t>(t) * d + off;
                const double* prow =
                    la.attn_probs.data() + (static_cast<size_t>(h) * L + t) * L;
                double dot_dp_p = 0.0;
                for (int u = 0; u < L; ++u) {
                    const double* vu = la.v.data() + static_cast<size_t>(u) * d + off;
                    double dp = 0.0;
                    for (int i = 0; i < dh; ++i) dp += dct[i] * vu[i];
                    dprobs[static_cast<size_t>(u)] = dp;
                    dot_dp_p += dp * prow[u];
                    double* dvu = dv.data() + static_cast<size_t>(u) * d + off;
                    double p = prow[u];
                    for (int i = 0; i < dh; ++i) dvu[i] += p * dct[i];
                }
                const double* qt = la.q.data() + static_cast<size_t>(t) * d + off;
                double* dqt = dq.data() + static_cast<size_t>(t) * d + off;
                for (int u = 0; u < L; ++u) {
                    double ds = prow[u] * (dprobs[static_cast<size_t>(u)] - dot_dp_p) * inv_sqrt_dh;
                    if (ds == 0.0) continue;
                    const double* ku = la.k.data() + static_cast<size_t>(u) * d + off;
                    double* dku = dk.data() + static_cast<size_t>(u) * d + off;
                    for (int i = 0; i < dh; ++i) {
                        dqt[i] += ds * ku[i];
                        dku[i] += ds * qt[i];
                    }
                }
            }
        }

        std::vector<double> d_ln1(static_cast<size_t>(L) * d, 0.0);
        for (int t = 0; t < L; ++t) {
            const double* in = la.ln1_out.data() + static_cast<size_t>(t) * d;
            double* dl1 = d_ln1.data() + static_cast<size_t>(t) * d;
            adapted_backward(layer.wq, in,
                             layer.wq.lora_a ? la.lora_q.data() + static_cast<size_t>(t) * rank
                                             : nullptr,
                             dq.data() + static_cast<size_t>(t) * d, dl1, sink, d, d,
                             layer.wq.lora_a ? rank : 0);
            adapted_backward(layer.wk, in,
                             layer.wk.lora_a ? la.lora_k.data() + static_cast<size_t>(t) * rank
                                             : nullptr,
                             dk.data() + static_cast<size_t>(t) * d, dl1, sink, d, d,
                             layer.wk.lora_a ? rank : 0);
            adapted_backward(layer.wv, in,
                             layer.wv.lora_a ? la.lora_v.data() + static_cast<size_t>(t) * rank
                                             : nullptr,
                             dv.data() + static_cast<size_t>(t) * d, dl1, sink, d, d,
                             layer.wv.lora_a ? rank : 0);
        }

        layernorm_backward(d_ln1.data(), la.x_in.data(), layer.ln1_gain->value.data(),
                           la.ln1_mean.data(), la.ln1_rstd.data(), L, d, dx.data(),
                           sink.wants(layer.ln1_gain->id) ? sink.at(layer.ln1_gain->id) : nullptr,
                           sink.wants(layer.ln1_bias->id) ? sink.at(layer.ln1_bias->id) : nullptr);
        // dx now holds d(x_in) for this layer == d(x_out) of the layer below.
    }

    if (sink.wants(tok_emb_->id)) {
        double* dte = sink.at(tok_emb_->id);
        for (int t = 0; t < L; ++t) {
            double* row = dte + static_cast<size_t>(acts.tokens[static_cast<size_t>(t)]) * d;
            for (int i = 0; i < d; ++i) row[i] += dx[static_cast<size_t>(t) * d + i];
        }
    }
    if (sink.wants(pos_emb_->id)) {
        double* dpe = sink.at(pos_emb_->id);
        for (int t = 0; t < L; ++t) {
            for (int i = 0; i < d; ++i) {
                dpe[static_cast<size_t>(t) * d + i] += dx[static_cast<size_t>(t) * d + i];
            }
        }
    }
}

std::vector<Tensor*> TransformerEncoder::tensors() {
    std::vector<Tensor*> out;
    out.reserve(all_.size());
    for (auto& t : all_) out.push_back(t.get());
    return out;
}

std::vector<const Tensor*> TransformerEncoder::tensors() const {
    std::vector<const Tensor*> out;
    out.reserve(all_.size());
    for (const auto& t : all_) out.push_back(t.get());
    return out;
}

std::vector<const Tensor*> TransformerEncoder::base_tensors() const {
    std::vector<const Tensor*> out;
    for (const auto& t : all_) {
        if (t->name.find(".lora.") == std::string::npos) out.push_back(t.get());
    }
    return out;
}

std::vector<const Tensor*> TransformerEncoder::adapter_tensors() const {
    std::vector<const Tensor*> out;
    for (const auto& t : all_) {
        if (t->name.find(".lora.") != std::string::npos) out.push_back(t.get());
    }
    return out;
}

}  // namespace surgecal
