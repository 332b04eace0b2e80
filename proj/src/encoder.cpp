#include "climreg/encoder.hpp"
#include "climreg/errors.hpp"
#include "climreg/rng.hpp"

#include <cmath>

namespace climreg {

std::vector<EncoderParams::TensorRef> EncoderParams::tensors() {
    const std::size_t in = static_cast<std::size_t>(dims.patch_input());
    const std::size_t de = static_cast<std::size_t>(dims.embed_dim);
    const std::size_t dh = static_cast<std::size_t>(dims.hidden_dim);
    const std::size_t dl = static_cast<std::size_t>(dims.latent_dim);
    return {
        {"patch_embed_w", &patch_embed_w, {in, de}},
        {"patch_embed_b", &patch_embed_b, {de}},
        {"mlp1_w", &mlp1_w, {de, dh}},
        {"mlp1_b", &mlp1_b, {dh}},
        {"mlp2_w", &mlp2_w, {dh, dl}},
        {"mlp2_b", &mlp2_b, {dl}},
    };
}

std::size_t EncoderParams::n_parameters() const {
    return patch_embed_w.size() + patch_embed_b.size() + mlp1_w.size() + mlp1_b.size() +
           mlp2_w.size() + mlp2_b.size();
}

EncoderGrads EncoderGrads::zeros(const EncoderDims& dims) {
    EncoderGrads g;
    g.patch_embed_w.assign(static_cast<std::size_t>(dims.patch_input()) * dims.embed_dim, 0.0);
    g.patch_embed_b.assign(dims.embed_dim, 0.0);
    g.mlp1_w.assign(static_cast<std::size_t>(dims.embed_dim) * dims.hidden_dim, 0.0);
    g.mlp1_b.assign(dims.hidden_dim, 0.0);
    g.mlp2_w.assign(static_cast<std::size_t>(dims.hidden_dim) * dims.latent_dim, 0.0);
    g.mlp2_b.assign(dims.latent_dim, 0.0);
    return g;
}

namespace {
void add_vec(std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] += b[i];
    }
}
void scale_vec(std::vector<double>& a, double s) {
    for (double& v : a) {
        v *= s;
    }
}
} // namespace

void EncoderGrads::add(const EncoderGrads& other) {
    add_vec(patch_embed_w, other.patch_embed_w);
    add_vec(patch_embed_b, other.patch_embed_b);
    add_vec(mlp1_w, other.mlp1_w);
    add_vec(mlp1_b, other.mlp1_b);
    add_vec(mlp2_w, other.mlp2_w);
    add_vec(mlp2_b, other.mlp2_b);
}

void EncoderGrads::scale(double s) {
    scale_vec(patch_embed_w, s);
    scale_vec(patch_embed_b, s);
    scale_vec(mlp1_w, s);
    scale_vec(mlp1_b, s);
    scale_vec(mlp2_w, s);
    scale_vec(mlp2_b, s);
}

EncoderParams init_params(const EncoderDims& dims, std::uint64_t seed) {
    if (dims.patch_size < 1 || dims.n_channels < 1 || dims.embed_dim < 1 ||
        dims.hidden_dim < 1 || dims.latent_dim < 1) {
        throw ConfigError("encoder dimensions must be positive");
    }
    EncoderParams p;
    p.dims = dims;
    const Rng root(seed);
    auto xavier = [](std::vector<double>& w, std::size_t fan_in, std::size_t fan_out, Rng rng) {
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        w.resize(fan_in * fan_out);
        for (double& v : w) {
            v = rng.uniform(-bound, bound);
        }
    };
    xavier(p.patch_embed_w, dims.patch_input(), dims.embed_dim, root.fork(0));
    xavier(p.mlp1_w, dims.embed_dim, dims.hidden_dim, root.fork(1));
    xavier(p.mlp2_w, dims.hidden_dim, dims.latent_dim, root.fork(2));
    p.patch_embed_b.assign(dims.embed_dim, 0.0);
    p.mlp1_b.assign(dims.hidden_dim, 0.0);
    p.mlp2_b.assign(dims.latent_dim, 0.0);
    return p;
}

namespace {

constexpr double kDegenerateNorm = 1e-12;

/// Mean vector over unmasked patches, layout [channel][py][px].
/// The mean pool commutes with the linear embedding, so the pooled
/// embedding is computed from this single vector.
std::vector<double> mean_unmasked_patch(const View& view, const EncoderDims& dims) {
    const int P = dims.patch_size;
    if (view.side % P != 0) {
        throw DataError("view side not divisible by encoder patch size");
    }
    if (view.channels != dims.n_channels) {
        throw DataError("view channel count does not match encoder");
    }
    const int per_side = view.side / P;
    const int n_patches = per_side * per_side;
    const bool has_mask = !view.patch_mask.empty();
    if (has_mask && static_cast<int>(view.patch_mask.size()) != n_patches) {
        throw DataError("patch mask size does not match view");
    }

    std::vector<double> mean(static_cast<std::size_t>(dims.patch_input()), 0.0);
    int n_used = 0;
    for (int p = 0; p < n_patches; ++p) {
        if (has_mask && view.patch_mask[p]) {
            continue;
        }
        ++n_used;
        const int pi = (p / per_side) * P;
        const int pj = (p % per_side) * P;
        std::size_t a = 0;
        for (int c = 0; c < view.channels; ++c) {
            const double* plane =
                view.values.data() + static_cast<std::size_t>(c) * view.side * view.side;
            for (int y = 0; y < P; ++y) {
                for (int x = 0; x < P; ++x) {
                    mean[a++] += plane[static_cast<std::size_t>(pi + y) * view.side + (pj + x)];
                }
            }
        }
    }
    if (n_used == 0) {
        throw DataError("all patches masked; cannot encode");
    }
    const double inv = 1.0 / n_used;
    for (double& v : mean) {
        v *= inv;
    }
    return mean;
}

void forward(const EncoderParams& params, const View& view, EncodeTrace& t) {
    const EncoderDims& d = params.dims;
    t.patch_mean = mean_unmasked_patch(view, d);

    t.pooled.assign(d.embed_dim, 0.0);
    for (int i = 0; i < d.patch_input(); ++i) {
        const double v = t.patch_mean[i];
        const double* row = params.patch_embed_w.data() + static_cast<std::size_t>(i) * d.embed_dim;
        for (int j = 0; j < d.embed_dim; ++j) {
            t.pooled[j] += v * row[j];
        }
    }
    for (int j = 0; j < d.embed_dim; ++j) {
        t.pooled[j] += params.patch_embed_b[j];
    }

    t.hidden.assign(d.hidden_dim, 0.0);
    for (int i = 0; i < d.embed_dim; ++i) {
        const double v = t.pooled[i];
        const double* row = params.mlp1_w.data() + static_cast<std::size_t>(i) * d.hidden_dim;
        for (int j = 0; j < d.hidden_dim; ++j) {
            t.hidden[j] += v * row[j];
        }
    }
    for (int j = 0; j < d.hidden_dim; ++j) {
        t.hidden[j] = std::tanh(t.hidden[j] + params.mlp1_b[j]);
    }

    t.preout.assign(d.latent_dim, 0.0);
    for (int i = 0; i < d.hidden_dim; ++i) {
        const double v = t.hidden[i];
        const double* row = params.mlp2_w.data() + static_cast<std::size_t>(i) * d.latent_dim;
        for (int j = 0; j < d.latent_dim; ++j) {
            t.preout[j] += v * row[j];
        }
    }
    double norm_sq = 0.0;
    for (int j = 0; j < d.latent_dim; ++j) {
        t.preout[j] += params.mlp2_b[j];
        norm_sq += t.preout[j] * t.preout[j];
    }
    t.norm = std::sqrt(norm_sq);
    t.degenerate = t.norm < kDegenerateNorm;
}

} // namespace

Latent encode(const EncoderParams& params, const View& view, EncodeTrace* trace) {
    EncodeTrace local;
    EncodeTrace& t = trace ? *trace : local;
    forward(params, view, t);

    Latent z;
    z.v.assign(params.dims.latent_dim, 0.0);
    if (t.degenerate) {
        z.v[0] = 1.0; // fixed fallback unit vector
        return z;
    }
    const double inv = 1.0 / t.norm;
    for (int j = 0; j < params.dims.latent_dim; ++j) {
        z.v[j] = t.preout[j] * inv;
    }
    return z;
}

void encode_backward_cached(const EncoderParams& params, const EncodeTrace& t,
                            const double* upstream, EncoderGrads& grads) {
    const EncoderDims& d = params.dims;
    if (t.degenerate) {
        return; // fallback output is constant
    }

    // Through the normalization: g_y = (g - (g.z) z) / |y|.
    const double inv_norm = 1.0 / t.norm;
    double g_dot_z = 0.0;
    for (int j = 0; j < d.latent_dim; ++j) {
        g_dot_z += upstream[j] * t.preout[j] * inv_norm;
    }
    std::vector<double> g_y(d.latent_dim);
    for (int j = 0; j < d.latent_dim; ++j) {
        g_y[j] = (upstream[j] - g_dot_z * t.preout[j] * inv_norm) * inv_norm;
    }

    // mlp2
    std::vector<double> g_u(d.hidden_dim, 0.0);
    for (int i = 0; i < d.hidden_dim; ++i) {
        const double u = t.hidden[i];
        double* wrow = grads.mlp2_w.data() + static_cast<std::size_t>(i) * d.latent_dim;
        const double* prow = params.mlp2_w.data() + static_cast<std::size_t>(i) * d.latent_dim;
        double acc = 0.0;
        for (int j = 0; j < d.latent_dim; ++j) {
            wrow[j] += u * g_y[j];
            acc += prow[j] * g_y[j];
        }
        g_u[i] = acc;
    }
    for (int j = 0; j < d.latent_dim; ++j) {
        grads.mlp2_b[j] += g_y[j];
    }

    // tanh
    std::vector<double> g_a(d.hidden_dim);
    for (int i = 0; i < d.hidden_dim; ++i) {
        g_a[i] = g_u[i] * (1.0 - t.hidden[i] * t.hidden[i]);
    }

    // mlp1
    std::vector<double> g_h(d.embed_dim, 0.0);
    for (int i = 0; i < d.embed_dim; ++i) {
        const double h = t.pooled[i];
        double* wrow = grads.mlp1_w.data() + static_cast<std::size_t>(i) * d.hidden_dim;
        const double* prow = params.mlp1_w.data() + static_cast<std::size_t>(i) * d.hidden_dim;
        double acc = 0.0;
        for (int j = 0; j < d.hidden_dim; ++j) {
            wrow[j] += h * g_a[j];
            acc += prow[j] * g_a[j];
        }
        g_h[i] = acc;
    }
    for (int j = 0; j < d.hidden_dim; ++j) {
        grads.mlp1_b[j] += g_a[j];
    }

    // patch embedding (pooled input is the mean patch vector)
    for (int i = 0; i < d.patch_input(); ++i) {
        const double v = t.patch_mean[i];
        double* wrow = grads.patch_embed_w.data() + static_cast<std::size_t>(i) * d.embed_dim;
        for (int j = 0; j < d.embed_dim; ++j) {
            wrow[j] += v * g_h[j];
        }
    }
    for (int j = 0; j < d.embed_dim; ++j) {
        grads.patch_embed_b[j] += g_h[j];
    }
}

void encode_backward(const EncoderParams& params, const View& view,
                     const std::vector<double>& upstream, EncoderGrads& grads) {
    if (static_cast<int>(upstream.size()) != params.dims.latent_dim) {
        throw ConfigError("upstream gradient has wrong dimension");
    }
    EncodeTrace t;
    forward(params, view, t);
    encode_backward_cached(params, t, upstream.data(), grads);
}

void ema_update(EncoderParams& target, const EncoderParams& anchor, double momentum) {
    if (momentum < 0.0 || momentum > 1.0) {
        throw ConfigError("EMA momentum must be in [0, 1]");
    }
    std::vector<double>* dst[] = {&target.patch_embed_w, &target.patch_embed_b,
                                  &target.mlp1_w,        &target.mlp1_b,
                                  &target.mlp2_w,        &target.mlp2_b};
    const std::vector<double>* src[] = {&anchor.patch_embed_w, &anchor.patch_embed_b,
                                        &anchor.mlp1_w,        &anchor.mlp1_b,
                                        &anchor.mlp2_w,        &anchor.mlp2_b};
    for (std::size_t k = 0; k < 6; ++k) {
        if (dst[k]->size() != src[k]->size()) {
            throw DataError("EMA update shape mismatch");
        }
        std::vector<double>& tv = *dst[k];
        const std::vector<double>& av = *src[k];
        for (std::size_t i = 0; i < tv.size(); ++i) {
            tv[i] = momentum * tv[i] + (1.0 - momentum) * av[i];
        }
    }
}

} // namespace climreg
