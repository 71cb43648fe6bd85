#pragma once

#include <vector>

#include "motionlab/gru.hpp"
#include "motionlab/tensor.hpp"

namespace motionlab {

enum class PoolingMode { kAttention, kStatic };

PoolingMode pooling_from_string(const std::string& s);
const char* to_string(PoolingMode mode);

// Attention MLP: tanh hidden layers, scalar logit per frame. Dropout applies
// to the hidden activations in training mode only.
struct AttnParams {
    std::vector<Tensor> w;
    std::vector<Tensor> b;
    Tensor out_w, out_b;
    double dropout = 0.1;

    static AttnParams init(int input, int width, int layers, double dropout,
                           Rng& rng);
    void collect(const std::string& prefix, NamedParams& out) const;
};

struct AttentionResult {
    Tensor pooled;   // (H)
    Tensor weights;  // (T), softmax-normalized
};

// r = sum_i a_i h_i with a = softmax(phi(h_i))
AttentionResult attention_pool(const std::vector<Tensor>& hidden,
                               const AttnParams& params, bool training = false,
                               Rng* dropout_rng = nullptr);

// elementwise mean and max over time, concatenated
Tensor static_pool(const std::vector<Tensor>& hidden);

struct DiscriminatorParams {
    GruParams gru;
    PoolingMode pooling = PoolingMode::kAttention;
    AttnParams attn;
    Tensor head_w, head_b;

    static DiscriminatorParams init(int input_size, int gru_hidden, int gru_layers,
                                    PoolingMode pooling, int attn_width,
                                    int attn_layers, double attn_dropout, Rng& rng);
    NamedParams named() const;
    std::vector<Tensor> trainable() const;
};

// GRU over per-frame parameter vectors, pooled, then an affine head squashed
// through a sigmoid: the probability that the sequence is a real motion.
Tensor discriminator_forward(const std::vector<Tensor>& frames,
                             const DiscriminatorParams& params,
                             bool training = false, Rng* dropout_rng = nullptr);

}  // namespace motionlab
