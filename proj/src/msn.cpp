#include "climreg/msn.hpp"
#include "climreg/errors.hpp"
#include "climreg/io_util.hpp"
#include "climreg/rng.hpp"
#include "climreg/threading.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace climreg {

namespace {
constexpr double kLogEps = 1e-12;
constexpr std::size_t kGradBlockSamples = 16; // fixed; keeps reductions thread-count independent
} // namespace

void PrototypeBank::renormalize_rows() {
    for (int i = 0; i < k; ++i) {
        double* r = row(i);
        double norm_sq = 0.0;
        for (int j = 0; j < dim; ++j) {
            norm_sq += r[j] * r[j];
        }
        const double norm = std::sqrt(norm_sq);
        if (norm < 1e-12) {
            std::fill(r, r + dim, 0.0);
            r[i % dim] = 1.0;
            continue;
        }
        const double inv = 1.0 / norm;
        for (int j = 0; j < dim; ++j) {
            r[j] *= inv;
        }
    }
}

PrototypeBank init_prototypes(int k, int dim, std::uint64_t seed) {
    if (k < 1 || dim < 1) {
        throw ConfigError("prototype bank needs k >= 1 and dim >= 1");
    }
    PrototypeBank bank;
    bank.k = k;
    bank.dim = dim;
    bank.weights.resize(static_cast<std::size_t>(k) * dim);
    Rng rng(seed);
    for (double& v : bank.weights) {
        v = rng.normal();
    }
    bank.renormalize_rows();
    return bank;
}

AssignmentDistribution softmax_scaled(const std::vector<double>& logits, double tau) {
    if (!(tau > 0.0)) {
        throw ConfigError("softmax temperature must be positive");
    }
    AssignmentDistribution out;
    out.probs.resize(logits.size());
    const double max_logit = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out.probs[i] = std::exp((logits[i] - max_logit) / tau);
        sum += out.probs[i];
    }
    const double inv = 1.0 / sum;
    for (double& p : out.probs) {
        p *= inv;
    }
    return out;
}

namespace {
std::vector<double> bank_logits(const Latent& z, const PrototypeBank& bank) {
    if (static_cast<int>(z.v.size()) != bank.dim) {
        throw ConfigError("latent dimension does not match prototype bank");
    }
    std::vector<double> logits(bank.k);
    for (int i = 0; i < bank.k; ++i) {
        const double* q = bank.row(i);
        double dot = 0.0;
        for (int j = 0; j < bank.dim; ++j) {
            dot += z.v[j] * q[j];
        }
        logits[i] = dot;
    }
    return logits;
}
} // namespace

AssignmentDistribution prototype_probs(const Latent& z, const PrototypeBank& bank, double tau) {
    return softmax_scaled(bank_logits(z, bank), tau);
}

double cross_entropy(const AssignmentDistribution& target, const AssignmentDistribution& anchor) {
    if (target.probs.size() != anchor.probs.size()) {
        throw ConfigError("cross_entropy distribution size mismatch");
    }
    double h = 0.0;
    for (std::size_t i = 0; i < target.probs.size(); ++i) {
        h -= target.probs[i] * std::log(anchor.probs[i] + kLogEps);
    }
    return h;
}

double entropy(const AssignmentDistribution& p) {
    double h = 0.0;
    for (const double v : p.probs) {
        h -= v * std::log(v + kLogEps);
    }
    return h;
}

double memax(const AssignmentDistribution& mean_probs) { return entropy(mean_probs); }

void TrainConfig::validate() const {
    if (k_prototypes < 1) {
        throw ConfigError("k_prototypes must be >= 1");
    }
    if (!(tau_anchor > 0.0) || !(tau_target > 0.0)) {
        throw ConfigError("temperatures must be positive");
    }
    if (!(tau_target < tau_anchor)) {
        throw ConfigError("tau_target must be smaller than tau_anchor");
    }
    if (memax_weight < 0.0) {
        throw ConfigError("memax_weight must be non-negative");
    }
    if (epochs < 0 || batch_size < 1) {
        throw ConfigError("epochs must be >= 0 and batch_size >= 1");
    }
    if (!(base_lr > 0.0) || !(final_lr > 0.0) || weight_decay < 0.0) {
        throw ConfigError("learning rates must be positive and weight decay non-negative");
    }
    if (ema_momentum < 0.0 || ema_momentum > 1.0) {
        throw ConfigError("ema_momentum must be in [0, 1]");
    }
}

// ---------------------------------------------------------------------------
// Batch forward/backward
// ---------------------------------------------------------------------------

namespace {

struct AnchorState {
    AssignmentDistribution probs;
    Latent z;
    EncodeTrace trace;
};

struct TargetState {
    AssignmentDistribution probs;
    Latent z;
    bool degenerate = false;
};

struct ForwardState {
    std::vector<TargetState> targets;            // n
    std::vector<std::vector<AnchorState>> anchors; // n x M
    double ce_mean = 0.0;
    double mean_anchor_entropy = 0.0;
    AssignmentDistribution mean_anchor;
    AssignmentDistribution mean_target;
    std::vector<long> usage;
    long degenerate = 0;
    std::size_t n_pairs = 0;
};

int argmax_index(const std::vector<double>& v) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(v.size()); ++i) {
        if (v[i] > v[best]) {
            best = i;
        }
    }
    return best;
}

ForwardState forward_batch(const EncoderParams& anchor_params,
                           const EncoderParams& target_params, const PrototypeBank& bank,
                           const std::vector<SampleViews>& batch, const TrainConfig& cfg,
                           int n_workers, const TargetAssignments* frozen) {
    if (frozen && (frozen->probs.size() != batch.size() ||
                   frozen->latents.size() != batch.size())) {
        throw ConfigError("frozen target assignments do not match the batch");
    }
    if (batch.empty()) {
        throw ConfigError("batch must be nonempty");
    }
    const std::size_t n = batch.size();
    const std::size_t m = batch[0].anchors.size();
    if (m == 0) {
        throw ConfigError("each sample needs at least one anchor view");
    }
    for (const SampleViews& s : batch) {
        if (s.anchors.size() != m) {
            throw ConfigError("all samples must carry the same number of anchor views");
        }
    }

    ForwardState st;
    st.targets.resize(n);
    st.anchors.assign(n, std::vector<AnchorState>(m));
    st.n_pairs = n * m;

    const std::size_t n_blocks = (n + kGradBlockSamples - 1) / kGradBlockSamples;
    struct Partial {
        double ce = 0.0;
        double ent = 0.0;
        std::vector<double> pbar;
        std::vector<double> pbar_target;
        std::vector<long> usage;
        long degenerate = 0;
    };
    std::vector<Partial> partials(n_blocks);

    parallel_blocks(n_blocks, n_workers, [&](std::size_t b) {
        Partial& part = partials[b];
        part.pbar.assign(bank.k, 0.0);
        part.pbar_target.assign(bank.k, 0.0);
        part.usage.assign(bank.k, 0);
        const std::size_t lo = b * kGradBlockSamples;
        const std::size_t hi = std::min(n, lo + kGradBlockSamples);
        for (std::size_t i = lo; i < hi; ++i) {
            TargetState& ts = st.targets[i];
            if (frozen) {
                ts.z = frozen->latents[i];
                ts.probs = frozen->probs[i];
            } else {
                EncodeTrace ttrace;
                ts.z = encode(target_params, batch[i].target, &ttrace);
                ts.degenerate = ttrace.degenerate;
                if (ttrace.degenerate) {
                    ++part.degenerate;
                }
                ts.probs = prototype_probs(ts.z, bank, cfg.tau_target);
            }
            for (int k = 0; k < bank.k; ++k) {
                part.pbar_target[k] += ts.probs.probs[k];
            }
            for (std::size_t j = 0; j < m; ++j) {
                AnchorState& as = st.anchors[i][j];
                as.z = encode(anchor_params, batch[i].anchors[j], &as.trace);
                if (as.trace.degenerate) {
                    ++part.degenerate;
                }
                as.probs = prototype_probs(as.z, bank, cfg.tau_anchor);
                part.ce += cross_entropy(ts.probs, as.probs);
                part.ent += entropy(as.probs);
                for (int k = 0; k < bank.k; ++k) {
                    part.pbar[k] += as.probs.probs[k];
                }
                ++part.usage[argmax_index(as.probs.probs)];
            }
        }
    });

    st.mean_anchor.probs.assign(bank.k, 0.0);
    st.mean_target.probs.assign(bank.k, 0.0);
    st.usage.assign(bank.k, 0);
    double ce = 0.0, ent = 0.0;
    for (const Partial& part : partials) {
        ce += part.ce;
        ent += part.ent;
        st.degenerate += part.degenerate;
        for (int k = 0; k < bank.k; ++k) {
            st.mean_anchor.probs[k] += part.pbar[k];
            st.mean_target.probs[k] += part.pbar_target[k];
            st.usage[k] += part.usage[k];
        }
    }
    const double inv_pairs = 1.0 / static_cast<double>(st.n_pairs);
    const double inv_n = 1.0 / static_cast<double>(n);
    st.ce_mean = ce * inv_pairs;
    st.mean_anchor_entropy = ent * inv_pairs;
    for (int k = 0; k < bank.k; ++k) {
        st.mean_anchor.probs[k] *= inv_pairs;
        st.mean_target.probs[k] *= inv_n;
    }
    return st;
}

double finish_loss(const ForwardState& st, const TrainConfig& cfg, BatchDiagnostics* diag) {
    const AssignmentDistribution& reg_side =
        cfg.memax_on_target ? st.mean_target : st.mean_anchor;
    const double memax_value = memax(reg_side);
    const double loss = st.ce_mean - cfg.memax_weight * memax_value;
    if (diag) {
        diag->cross_entropy_term = st.ce_mean;
        diag->memax_term = memax_value;
        diag->mean_anchor_entropy = st.mean_anchor_entropy;
        diag->mean_anchor_probs = st.mean_anchor;
        diag->usage = st.usage;
        diag->degenerate_encodes = st.degenerate;
    }
    return loss;
}

} // namespace

TargetAssignments compute_target_assignments(const EncoderParams& target_params,
                                             const PrototypeBank& bank,
                                             const std::vector<SampleViews>& batch,
                                             double tau_target, int n_workers) {
    const std::size_t n = batch.size();
    TargetAssignments out;
    out.probs.resize(n);
    out.latents.resize(n);
    const std::size_t n_blocks = (n + kGradBlockSamples - 1) / kGradBlockSamples;
    parallel_blocks(n_blocks, n_workers, [&](std::size_t b) {
        const std::size_t lo = b * kGradBlockSamples;
        const std::size_t hi = std::min(n, lo + kGradBlockSamples);
        for (std::size_t i = lo; i < hi; ++i) {
            out.latents[i] = encode(target_params, batch[i].target);
            out.probs[i] = prototype_probs(out.latents[i], bank, tau_target);
        }
    });
    return out;
}

double batch_loss(const EncoderParams& anchor_params, const EncoderParams& target_params,
                  const PrototypeBank& bank, const std::vector<SampleViews>& batch,
                  const TrainConfig& cfg, BatchDiagnostics* diag, int n_workers,
                  const TargetAssignments* frozen) {
    const ForwardState st =
        forward_batch(anchor_params, target_params, bank, batch, cfg, n_workers, frozen);
    return finish_loss(st, cfg, diag);
}

double batch_gradients(const EncoderParams& anchor_params, const EncoderParams& target_params,
                       const PrototypeBank& bank, const std::vector<SampleViews>& batch,
                       const TrainConfig& cfg, BatchGradients& out, BatchDiagnostics* diag,
                       int n_workers, const TargetAssignments* frozen) {
    const ForwardState st =
        forward_batch(anchor_params, target_params, bank, batch, cfg, n_workers, frozen);
    const double loss = finish_loss(st, cfg, diag);

    const std::size_t n = batch.size();
    const std::size_t m = st.anchors[0].size();
    const double inv_pairs = 1.0 / static_cast<double>(st.n_pairs);
    const int K = bank.k;
    const int D = bank.dim;

    // Entropy-gradient weights of the regularized mean distribution.
    const AssignmentDistribution& reg_side =
        cfg.memax_on_target ? st.mean_target : st.mean_anchor;
    std::vector<double> w(K);
    for (int k = 0; k < K; ++k) {
        const double p = reg_side.probs[k];
        w[k] = -(std::log(p + kLogEps) + p / (p + kLogEps));
    }

    const std::size_t n_blocks = (n + kGradBlockSamples - 1) / kGradBlockSamples;
    struct Partial {
        EncoderGrads enc;
        std::vector<double> bank;
    };
    std::vector<Partial> partials(n_blocks);

    parallel_blocks(n_blocks, n_workers, [&](std::size_t b) {
        Partial& part = partials[b];
        part.enc = EncoderGrads::zeros(anchor_params.dims);
        part.bank.assign(static_cast<std::size_t>(K) * D, 0.0);
        std::vector<double> g_s(K);
        std::vector<double> g_z(D);

        const std::size_t lo = b * kGradBlockSamples;
        const std::size_t hi = std::min(n, lo + kGradBlockSamples);
        for (std::size_t i = lo; i < hi; ++i) {
            const std::vector<double>& t = st.targets[i].probs.probs;
            for (std::size_t j = 0; j < m; ++j) {
                const AnchorState& as = st.anchors[i][j];
                const std::vector<double>& p = as.probs.probs;

                double sum_tr = 0.0;
                for (int k = 0; k < K; ++k) {
                    sum_tr += t[k] * (p[k] / (p[k] + kLogEps));
                }
                double sum_wp = 0.0;
                if (!cfg.memax_on_target && cfg.memax_weight != 0.0) {
                    for (int k = 0; k < K; ++k) {
                        sum_wp += w[k] * p[k];
                    }
                }
                for (int k = 0; k < K; ++k) {
                    const double r = p[k] / (p[k] + kLogEps);
                    double g = -t[k] * r + p[k] * sum_tr; // cross-entropy part
                    if (!cfg.memax_on_target && cfg.memax_weight != 0.0) {
                        g -= cfg.memax_weight * p[k] * (w[k] - sum_wp);
                    }
                    g_s[k] = g * inv_pairs;
                }

                // Into the bank and the anchor encoder through s = <z, q>/tau.
                const double inv_tau = 1.0 / cfg.tau_anchor;
                std::fill(g_z.begin(), g_z.end(), 0.0);
                for (int k = 0; k < K; ++k) {
                    const double gs = g_s[k] * inv_tau;
                    if (gs == 0.0) {
                        continue;
                    }
                    const double* q = bank.row(k);
                    double* brow = part.bank.data() + static_cast<std::size_t>(k) * D;
                    for (int d = 0; d < D; ++d) {
                        brow[d] += gs * as.z.v[d];
                        g_z[d] += gs * q[d];
                    }
                }
                encode_backward_cached(anchor_params, as.trace, g_z.data(), part.enc);
            }

            if (cfg.memax_on_target && cfg.memax_weight != 0.0 && frozen == nullptr) {
                // Regularizer on the mean target assignment: gradient reaches
                // the bank through the target logits; the target encoder
                // itself stays frozen.
                const TargetState& ts = st.targets[i];
                const std::vector<double>& tp = ts.probs.probs;
                double sum_wp = 0.0;
                for (int k = 0; k < K; ++k) {
                    sum_wp += w[k] * tp[k];
                }
                const double inv_n = 1.0 / static_cast<double>(n);
                const double inv_tau = 1.0 / cfg.tau_target;
                for (int k = 0; k < K; ++k) {
                    const double gs =
                        -cfg.memax_weight * inv_n * tp[k] * (w[k] - sum_wp) * inv_tau;
                    if (gs == 0.0) {
                        continue;
                    }
                    double* brow = part.bank.data() + static_cast<std::size_t>(k) * D;
                    for (int d = 0; d < D; ++d) {
                        brow[d] += gs * ts.z.v[d];
                    }
                }
            }
        }
    });

    out.encoder = EncoderGrads::zeros(anchor_params.dims);
    out.bank.assign(static_cast<std::size_t>(K) * D, 0.0);
    for (const Partial& part : partials) {
        out.encoder.add(part.enc);
        for (std::size_t i = 0; i < out.bank.size(); ++i) {
            out.bank[i] += part.bank[i];
        }
    }
    return loss;
}

// ---------------------------------------------------------------------------
// Optimizer and schedule
// ---------------------------------------------------------------------------

void adamw_step(const std::vector<std::vector<double>*>& params,
                const std::vector<const std::vector<double>*>& grads, AdamWState& state,
                double lr, double weight_decay, double beta1, double beta2, double eps) {
    if (params.size() != grads.size()) {
        throw ConfigError("adamw parameter/gradient list size mismatch");
    }
    if (state.m.empty()) {
        state.m.resize(params.size());
        state.v.resize(params.size());
        for (std::size_t t = 0; t < params.size(); ++t) {
            state.m[t].assign(params[t]->size(), 0.0);
            state.v[t].assign(params[t]->size(), 0.0);
        }
        state.step = 0;
    }
    for (std::size_t t = 0; t < params.size(); ++t) {
        if (params[t]->size() != grads[t]->size() || params[t]->size() != state.m[t].size()) {
            throw ConfigError("adamw tensor shape mismatch");
        }
    }

    ++state.step;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (std::size_t t = 0; t < params.size(); ++t) {
        std::vector<double>& p = *params[t];
        const std::vector<double>& g = *grads[t];
        std::vector<double>& m = state.m[t];
        std::vector<double>& v = state.v[t];
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            p[i] -= lr * weight_decay * p[i];
            p[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
        }
    }
}

double cosine_lr(int epoch, int total_epochs, double base_lr, double final_lr) {
    if (epoch < 0 || epoch >= total_epochs) {
        throw ConfigError("epoch out of schedule range");
    }
    if (total_epochs == 1) {
        return base_lr;
    }
    const double phase = 3.141592653589793 * static_cast<double>(epoch) /
                         static_cast<double>(total_epochs - 1);
    return final_lr + 0.5 * (base_lr - final_lr) * (1.0 + std::cos(phase));
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

void write_train_report(const TrainReport& report, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "epoch,loss,mean_entropy,lr,usage_entropy\n";
    for (const EpochRecord& r : report.epochs) {
        out << r.epoch << ',' << format_double(r.loss) << ',' << format_double(r.mean_entropy)
            << ',' << format_double(r.lr) << ',' << format_double(r.usage_entropy) << '\n';
    }
    write_text_file(path, out.str());
}

TrainResult train(const DailyFieldSeries& normalized, const ViewConfig& view_cfg,
                  const EncoderDims& dims, const TrainConfig& cfg, int n_workers) {
    cfg.validate();
    view_cfg.validate();
    if (normalized.fields.empty()) {
        throw DataError("training dataset is empty");
    }
    if (dims.n_channels != normalized.n_channels()) {
        throw ConfigError("encoder channel count does not match dataset");
    }
    if (dims.patch_size != view_cfg.patch_size) {
        throw ConfigError("encoder and view patch sizes must match");
    }

    const Rng root(cfg.seed);
    TrainResult result;
    result.anchor = init_params(dims, root.fork(21).next_u64());
    result.target = result.anchor;
    result.bank = init_prototypes(cfg.k_prototypes, dims.latent_dim, root.fork(22).next_u64());

    const Rng views_root = root.fork(23);
    Rng shuffle_rng = root.fork(24);

    AdamWState opt_state;
    auto param_list = [&]() {
        std::vector<std::vector<double>*> list;
        for (auto& t : result.anchor.tensors()) {
            list.push_back(t.data);
        }
        list.push_back(&result.bank.weights);
        return list;
    };

    const std::size_t n = normalized.fields.size();
    const int V = normalized.n_channels();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order[i] = i;
    }

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cosine_lr(epoch, cfg.epochs, cfg.base_lr, cfg.final_lr);
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        double entropy_sum = 0.0;
        std::vector<long> usage(cfg.k_prototypes, 0);
        long n_seen = 0;

        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t count = std::min<std::size_t>(cfg.batch_size, n - start);
            std::vector<SampleViews> batch(count);
            const std::size_t n_blocks =
                (count + kGradBlockSamples - 1) / kGradBlockSamples;
            parallel_blocks(n_blocks, n_workers, [&](std::size_t b) {
                const std::size_t lo = b * kGradBlockSamples;
                const std::size_t hi = std::min(count, lo + kGradBlockSamples);
                for (std::size_t p = lo; p < hi; ++p) {
                    const std::size_t di = order[start + p];
                    const Rng sample_rng = views_root.fork(
                        static_cast<std::uint64_t>(epoch) * n + di);
                    batch[p] = make_views(normalized.fields[di], normalized.geometry, V,
                                          view_cfg, sample_rng);
                }
            });

            BatchGradients grads;
            BatchDiagnostics diag;
            const double loss = batch_gradients(result.anchor, result.target, result.bank,
                                                batch, cfg, grads, &diag, n_workers);
            if (!std::isfinite(loss)) {
                throw NumericError("non-finite loss at epoch " + std::to_string(epoch));
            }

            std::vector<const std::vector<double>*> grad_list = {
                &grads.encoder.patch_embed_w, &grads.encoder.patch_embed_b,
                &grads.encoder.mlp1_w,        &grads.encoder.mlp1_b,
                &grads.encoder.mlp2_w,        &grads.encoder.mlp2_b,
                &grads.bank};
            adamw_step(param_list(), grad_list, opt_state, lr, cfg.weight_decay);
            result.bank.renormalize_rows();
            ema_update(result.target, result.anchor, cfg.ema_momentum);

            loss_sum += loss * static_cast<double>(count);
            entropy_sum += diag.mean_anchor_entropy * static_cast<double>(count);
            for (int k = 0; k < cfg.k_prototypes; ++k) {
                usage[k] += diag.usage[k];
            }
            result.report.degenerate_encodes += diag.degenerate_encodes;
            n_seen += static_cast<long>(count);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.loss = loss_sum / static_cast<double>(n_seen);
        rec.mean_entropy = entropy_sum / static_cast<double>(n_seen);
        rec.lr = lr;
        rec.usage = usage;
        long total_usage = 0;
        for (const long u : usage) {
            total_usage += u;
        }
        AssignmentDistribution usage_dist;
        usage_dist.probs.resize(usage.size());
        for (std::size_t k = 0; k < usage.size(); ++k) {
            usage_dist.probs[k] =
                total_usage > 0 ? static_cast<double>(usage[k]) / total_usage : 0.0;
        }
        rec.usage_entropy = entropy(usage_dist);
        result.report.epochs.push_back(std::move(rec));
    }
    return result;
}

} // namespace climreg
