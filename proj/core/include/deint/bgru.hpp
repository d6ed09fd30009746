// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "deint/features.hpp"
#include "deint/rng.hpp"
#include "deint/scenario.hpp"

namespace deint {

template <class S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

struct ModelDims {
    int input = 2;
    int hidden = 120;
    int layers = 3;
    int classes = 4;
};

/// One direction of one stacked layer. Gate weights are packed row-wise as
/// [update; reset]; the candidate map is separate because it multiplies the
/// reset-masked state. Biases are stored as single-column matrices so every
/// parameter block has a uniform type.
template <class S>
struct GruLayerParams {
    MatX<S> w_zr, u_zr, b_zr;  // 2H x in, 2H x H, 2H x 1
    MatX<S> w_c, u_c, b_c;     // H x in,  H x H,  H x 1
};

template <class S>
struct BgruParams {
    std::vector<std::array<GruLayerParams<S>, 2>> layers;  // [layer][0=fwd, 1=bwd]
    MatX<S> head_w;  // C x 2H
    MatX<S> head_b;  // C x 1

    static BgruParams shaped(const ModelDims& dims);

    /// Parameter blocks in the declared (checkpoint) order.
    std::vector<MatX<S>*> blocks();
    std::vector<const MatX<S>*> blocks() const;

    void set_zero();
    double squared_norm() const;
};

template <class S>
struct BgruModel {
    ModelDims dims;
    BgruParams<S> params;
    Normalizer normalizer;  // applied to raw features before the net sees them
    Channel channel = Channel::Pw;
};

/// Weights uniform in +-sqrt(1/fan_in) per block, biases zero.
template <class S>
BgruModel<S> init_model(const ModelDims& dims, Channel channel, Rng& rng);

/// Per-step activations kept for backpropagation through time.
template <class S>
struct LayerDirCache {
    MatX<S> z, r, g, h, hr;  // H x (T*B) each; hr = reset ⊙ previous state
};

template <class S>
struct ForwardCache {
    int T = 0, B = 0;
    std::vector<MatX<S>> inputs;  // [layers+1]; inputs[l] feeds layer l, last feeds the head
    std::vector<std::array<LayerDirCache<S>, 2>> gates;  // [layer][dir]
};

/// Lockstep forward over B equal-length sequences. `x` is input-major with
/// column t*B + b holding sample b at step t. Returns per-step class
/// log-probabilities (C x T*B). Throws on non-finite activations.
template <class S>
MatX<S> model_forward(const BgruModel<S>& model, const MatX<S>& x, int T, int B,
                      ForwardCache<S>* cache = nullptr);

/// Mean cross-entropy over all steps and sequences (labels are 1-based).
template <class S>
double sequence_loss(const MatX<S>& logp, const std::vector<int>& labels);

template <class S>
double sequence_accuracy(const MatX<S>& logp, const std::vector<int>& labels);

/// Accumulates d(loss_scale * sum of per-step cross-entropies)/d(params) into
/// `grads`. Pass loss_scale = 1/(T*B) for the mean-loss gradient.
template <class S>
void model_backward(const BgruModel<S>& model, const ForwardCache<S>& cache, const MatX<S>& logp,
                    const std::vector<int>& labels, double loss_scale, BgruParams<S>& grads);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <class S>
struct AdamState {
    BgruParams<S> m, v;
    long step = 0;

    static AdamState shaped(const ModelDims& dims);
};

template <class S>
void adam_step(BgruParams<S>& params, const BgruParams<S>& grads, AdamState<S>& state,
               const AdamConfig& config);

/// Scales grads so their global L2 norm is at most max_norm; returns the
/// pre-clip norm.
template <class S>
double clip_gradients(BgruParams<S>& grads, double max_norm);

struct TrainConfig {
    int hidden = 120;
    int layers = 3;
    AdamConfig adam;
    int batch_size = 32;
    int max_epochs = 100;
    int patience = 10;
    double min_delta = 1e-5;
    double clip_norm = 5.0;
    /// Stop as soon as validation accuracy reaches this value (<= 0 disables).
    double target_val_accuracy = -1.0;
    int threads = 1;
    int grad_chunk = 8;  // fixed lockstep width; keeps results thread-count invariant
    std::uint64_t seed = 0;
    bool verbose = false;
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0, train_acc = 0;
    double val_loss = 0, val_acc = 0;
};

struct TrainResult {
    std::vector<EpochStats> history;
    int best_epoch = -1;
    double best_val_loss = 0.0;
};

/// Builds and trains a model from raw (unnormalized) feature sequences.
/// Fits the normalizer on the training split, runs mini-batch updates with
/// early stopping on validation loss, and leaves the best weights in the
/// returned model. Deterministic in (config.seed, datasets).
template <class S>
std::pair<BgruModel<S>, TrainResult> train_model(const std::vector<FeatureSequence>& train_raw,
                                                 const std::vector<FeatureSequence>& val_raw,
                                                 Channel channel, int num_classes,
                                                 const TrainConfig& config);

/// Argmax labels for one raw feature sequence (normalizes internally).
template <class S>
std::vector<int> predict_labels(const BgruModel<S>& model, const FeatureSequence& raw);

template <class S>
std::vector<std::vector<int>> predict_labels_batch(const BgruModel<S>& model,
                                                   const std::vector<FeatureSequence>& raw,
                                                   int threads = 1);

/// Mean loss and per-pulse accuracy over a raw dataset.
template <class S>
std::pair<double, double> evaluate_model(const BgruModel<S>& model,
                                         const std::vector<FeatureSequence>& raw, int threads = 1);

/// Versioned binary container: magic, format version, dimension header,
/// little-endian f64 weight blocks in declared order, optional optimizer
/// state, normalizer, channel tag.
template <class S>
void save_checkpoint(const std::string& path, const BgruModel<S>& model,
                     const AdamState<S>* optimizer = nullptr);

template <class S>
BgruModel<S> load_checkpoint(const std::string& path, AdamState<S>* optimizer = nullptr);

}  // namespace deint
