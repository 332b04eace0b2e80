#pragma once

#include "climreg/views.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace climreg {

struct EncoderDims {
    int patch_size = 4;  // P
    int n_channels = 2;  // V
    int embed_dim = 64;  // d_e
    int hidden_dim = 128; // d_h
    int latent_dim = 128; // d

    int patch_input() const { return patch_size * patch_size * n_channels; }
    bool operator==(const EncoderDims&) const = default;
};

/// Mask-aware patch encoder: linear patch embedding, mean pool over unmasked
/// patches, two-layer MLP with tanh hidden activation, L2 normalization.
/// Weight matrices are row-major [in, out].
struct EncoderParams {
    EncoderDims dims;
    std::vector<double> patch_embed_w; // patch_input x d_e
    std::vector<double> patch_embed_b; // d_e
    std::vector<double> mlp1_w;        // d_e x d_h
    std::vector<double> mlp1_b;        // d_h
    std::vector<double> mlp2_w;        // d_h x d
    std::vector<double> mlp2_b;        // d

    struct TensorRef {
        std::string name;
        std::vector<double>* data;
        std::vector<std::size_t> shape;
    };
    std::vector<TensorRef> tensors();
    std::size_t n_parameters() const;
};

/// Unit-norm latent representation.
struct Latent {
    std::vector<double> v;
};

/// Forward intermediates kept for the analytic backward pass.
struct EncodeTrace {
    std::vector<double> patch_mean; // mean unmasked patch vector
    std::vector<double> pooled;     // h
    std::vector<double> hidden;     // u = tanh(W1 h + b1)
    std::vector<double> preout;     // y (before normalization)
    double norm = 0.0;
    bool degenerate = false; // pre-normalization output was ~zero
};

/// Gradient accumulator with the same tensor layout as EncoderParams.
struct EncoderGrads {
    std::vector<double> patch_embed_w, patch_embed_b;
    std::vector<double> mlp1_w, mlp1_b;
    std::vector<double> mlp2_w, mlp2_b;

    static EncoderGrads zeros(const EncoderDims& dims);
    void add(const EncoderGrads& other);
    void scale(double s);
};

/// Xavier-uniform weights, zero biases, deterministic per seed.
EncoderParams init_params(const EncoderDims& dims, std::uint64_t seed);

/// Deterministic forward pass. A degenerate (near-zero) pre-normalization
/// output falls back to the fixed basis vector e1 and is flagged in the
/// trace. Throws DataError when every patch is masked.
Latent encode(const EncoderParams& params, const View& view, EncodeTrace* trace = nullptr);

/// Accumulates d(z . upstream)/d(params) into `grads`; recomputes the forward
/// pass internally.
void encode_backward(const EncoderParams& params, const View& view,
                     const std::vector<double>& upstream, EncoderGrads& grads);

/// Same, reusing a trace produced by encode() on the identical view.
void encode_backward_cached(const EncoderParams& params, const EncodeTrace& trace,
                            const double* upstream, EncoderGrads& grads);

/// target <- momentum * target + (1 - momentum) * anchor, entrywise.
void ema_update(EncoderParams& target, const EncoderParams& anchor, double momentum);

} // namespace climreg
