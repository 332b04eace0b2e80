#pragma once

#include "climreg/encoder.hpp"
#include "climreg/grid_data.hpp"
#include "climreg/views.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace climreg {

/// K learnable unit-norm prototype vectors; row k is the latent anchor of
/// regime k, so inner products with unit-norm latents are cosine similarities.
struct PrototypeBank {
    int k = 30;
    int dim = 128;
    std::vector<double> weights; // k x dim, row-major

    const double* row(int i) const { return weights.data() + static_cast<std::size_t>(i) * dim; }
    double* row(int i) { return weights.data() + static_cast<std::size_t>(i) * dim; }

    /// Rescales every row to unit norm; called after each optimizer step.
    void renormalize_rows();
};

PrototypeBank init_prototypes(int k, int dim, std::uint64_t seed);

struct AssignmentDistribution {
    std::vector<double> probs;
};

/// Numerically stable softmax of logits/tau (max subtraction).
AssignmentDistribution softmax_scaled(const std::vector<double>& logits, double tau);

/// p_k = exp(<z, q_k>/tau) / sum_j exp(<z, q_j>/tau)
AssignmentDistribution prototype_probs(const Latent& z, const PrototypeBank& bank, double tau);

/// H(target, anchor) = -sum_k target_k log(anchor_k + eps), eps = 1e-12.
double cross_entropy(const AssignmentDistribution& target, const AssignmentDistribution& anchor);

/// H(p) = -sum_k p_k log(p_k + eps).
double entropy(const AssignmentDistribution& p);

/// Mean-entropy-maximization value for a batch-mean distribution; the
/// training loss subtracts memax_weight times this.
double memax(const AssignmentDistribution& mean_probs);

struct TrainConfig {
    int k_prototypes = 30;
    double tau_anchor = 0.1;
    double tau_target = 0.025;
    double memax_weight = 1.0;
    bool memax_on_target = false; // regularize mean target assignment instead
    int epochs = 300;
    int batch_size = 512;
    double base_lr = 1e-3;
    double final_lr = 1e-5;
    double weight_decay = 1e-4;
    double ema_momentum = 0.996;
    std::uint64_t seed = 0;

    void validate() const; // throws ConfigError
};

struct BatchDiagnostics {
    double cross_entropy_term = 0.0;
    double memax_term = 0.0;
    double mean_anchor_entropy = 0.0;
    AssignmentDistribution mean_anchor_probs;
    std::vector<long> usage; // anchor argmax counts per prototype
    long degenerate_encodes = 0;
};

/// Pseudo-label assignments of the target branch, one per sample. Useful to
/// freeze the stop-gradient branch explicitly, e.g. when comparing analytic
/// gradients against finite differences of the loss.
struct TargetAssignments {
    std::vector<AssignmentDistribution> probs;
    std::vector<Latent> latents;
};

TargetAssignments compute_target_assignments(const EncoderParams& target_params,
                                             const PrototypeBank& bank,
                                             const std::vector<SampleViews>& batch,
                                             double tau_target, int n_workers = 1);

/// MSN objective over one batch: mean cross-entropy between sharp target
/// assignments (EMA encoder, tau_target) and anchor predictions (trainable
/// encoder, tau_anchor), minus memax_weight * entropy of the mean anchor
/// distribution. No gradient flows into the target branch. When `frozen`
/// is given, the target assignments are taken from it verbatim and treated
/// as constants on every path.
double batch_loss(const EncoderParams& anchor_params, const EncoderParams& target_params,
                  const PrototypeBank& bank, const std::vector<SampleViews>& batch,
                  const TrainConfig& cfg, BatchDiagnostics* diag = nullptr, int n_workers = 1,
                  const TargetAssignments* frozen = nullptr);

struct BatchGradients {
    EncoderGrads encoder;      // for the anchor encoder
    std::vector<double> bank;  // k x dim
};

/// Loss plus exact analytic gradients for the anchor encoder and the bank.
double batch_gradients(const EncoderParams& anchor_params, const EncoderParams& target_params,
                       const PrototypeBank& bank, const std::vector<SampleViews>& batch,
                       const TrainConfig& cfg, BatchGradients& out,
                       BatchDiagnostics* diag = nullptr, int n_workers = 1,
                       const TargetAssignments* frozen = nullptr);

struct AdamWState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    long step = 0;
};

/// Decoupled-weight-decay Adam with bias correction, over a tensor list.
void adamw_step(const std::vector<std::vector<double>*>& params,
                const std::vector<const std::vector<double>*>& grads, AdamWState& state,
                double lr, double weight_decay, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);

/// final + 0.5*(base - final)*(1 + cos(pi * epoch/(total-1))).
/// A single-epoch schedule returns base_lr.
double cosine_lr(int epoch, int total_epochs, double base_lr, double final_lr);

struct EpochRecord {
    int epoch = 0;
    double loss = 0.0;
    double mean_entropy = 0.0;
    double lr = 0.0;
    double usage_entropy = 0.0;
    std::vector<long> usage;
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    long degenerate_encodes = 0;
};

/// CSV with header `epoch,loss,mean_entropy,lr,usage_entropy`.
void write_train_report(const TrainReport& report, const std::filesystem::path& path);

struct TrainResult {
    EncoderParams anchor;
    EncoderParams target;
    PrototypeBank bank;
    TrainReport report;
};

/// Full training loop over a normalized series: per batch, multi-view
/// generation, loss/gradients, AdamW on encoder and bank, prototype
/// re-normalization, EMA update of the target encoder. Deterministic for a
/// given seed regardless of n_workers. Throws NumericError if the loss
/// becomes non-finite.
TrainResult train(const DailyFieldSeries& normalized, const ViewConfig& view_cfg,
                  const EncoderDims& dims, const TrainConfig& cfg, int n_workers = 1);

} // namespace climreg
