// SPDX-License-Identifier: Apache-2.0
#include "deint/bgru.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <stdexcept>
#include <thread>

#include "parallel_util.hpp"

namespace deint {

using detail::parallel_run;

namespace {

int layer_input_size(const ModelDims& dims, int layer) {
    return layer == 0 ? dims.input : 2 * dims.hidden;
}

}  // namespace

template <class S>
BgruParams<S> BgruParams<S>::shaped(const ModelDims& dims) {
    BgruParams<S> p;
    p.layers.resize(dims.layers);
    const int h = dims.hidden;
    for (int l = 0; l < dims.layers; ++l) {
        const int in = layer_input_size(dims, l);
        for (int dir = 0; dir < 2; ++dir) {
            auto& q = p.layers[l][dir];
            q.w_zr = MatX<S>::Zero(2 * h, in);
            q.u_zr = MatX<S>::Zero(2 * h, h);
            q.b_zr = MatX<S>::Zero(2 * h, 1);
            q.w_c = MatX<S>::Zero(h, in);
            q.u_c = MatX<S>::Zero(h, h);
            q.b_c = MatX<S>::Zero(h, 1);
        }
    }
    p.head_w = MatX<S>::Zero(dims.classes, 2 * h);
    p.head_b = MatX<S>::Zero(dims.classes, 1);
    return p;
}

template <class S>
std::vector<MatX<S>*> BgruParams<S>::blocks() {
    std::vector<MatX<S>*> out;
    out.reserve(layers.size() * 12 + 2);
    for (auto& layer : layers)
        for (auto& q : layer) {
            out.push_back(&q.w_zr);
            out.push_back(&q.u_zr);
            out.push_back(&q.b_zr);
            out.push_back(&q.w_c);
            out.push_back(&q.u_c);
            out.push_back(&q.b_c);
        }
    out.push_back(&head_w);
    out.push_back(&head_b);
    return out;
}

template <class S>
std::vector<const MatX<S>*> BgruParams<S>::blocks() const {
    auto mutable_blocks = const_cast<BgruParams<S>*>(this)->blocks();
    return {mutable_blocks.begin(), mutable_blocks.end()};
}

template <class S>
void BgruParams<S>::set_zero() {
    for (auto* b : blocks()) b->setZero();
}

template <class S>
double BgruParams<S>::squared_norm() const {
    double acc = 0.0;
    for (const auto* b : blocks()) acc += b->template cast<double>().squaredNorm();
    return acc;
}

template <class S>
BgruModel<S> init_model(const ModelDims& dims, Channel channel, Rng& rng) {
    if (dims.input < 1 || dims.hidden < 1 || dims.layers < 1 || dims.classes < 2)
        throw std::invalid_argument("init_model: bad dimensions");
    BgruModel<S> model;
    model.dims = dims;
    model.channel = channel;
    model.params = BgruParams<S>::shaped(dims);
    for (auto* block : model.params.blocks()) {
        if (block->cols() == 1) continue;  // biases stay zero
        const double bound = std::sqrt(1.0 / static_cast<double>(block->cols()));
        for (long j = 0; j < block->cols(); ++j)
            for (long i = 0; i < block->rows(); ++i)
                (*block)(i, j) = static_cast<S>(rng.uniform(-bound, bound));
    }
    model.normalizer.mean = Eigen::VectorXd::Zero(dims.input);
    model.normalizer.stddev = Eigen::VectorXd::Ones(dims.input);
    return model;
}

template <class S>
MatX<S> model_forward(const BgruModel<S>& model, const MatX<S>& x, int T, int B,
                      ForwardCache<S>* cache) {
    const ModelDims& dims = model.dims;
    const int h = dims.hidden;
    const long cols = static_cast<long>(T) * B;
    if (x.rows() != dims.input || x.cols() != cols)
        throw std::invalid_argument("model_forward: input shape mismatch");

    if (cache) {
        cache->T = T;
        cache->B = B;
        cache->inputs.resize(dims.layers + 1);
        cache->gates.resize(dims.layers);
    }

    MatX<S> cur = x;
    MatX<S> h_state(h, B), h_new(h, B), a_zr(2 * h, B), a_c(h, B), z(h, B), r(h, B), g(h, B),
        hr(h, B);

    for (int l = 0; l < dims.layers; ++l) {
        if (cache) cache->inputs[l] = cur;
        MatX<S> out(2 * h, cols);
        for (int dir = 0; dir < 2; ++dir) {
            const auto& p = model.params.layers[l][dir];
            MatX<S> zr_in = p.w_zr * cur;
            zr_in.colwise() += p.b_zr.col(0);
            MatX<S> c_in = p.w_c * cur;
            c_in.colwise() += p.b_c.col(0);

            LayerDirCache<S>* gates = nullptr;
            if (cache) {
                gates = &cache->gates[l][dir];
                gates->z.resize(h, cols);
                gates->r.resize(h, cols);
                gates->g.resize(h, cols);
                gates->h.resize(h, cols);
                gates->hr.resize(h, cols);
            }

            h_state.setZero();
            for (int step = 0; step < T; ++step) {
                const int t = dir == 0 ? step : T - 1 - step;
                const long c0 = static_cast<long>(t) * B;

                a_zr.noalias() = p.u_zr * h_state;
                a_zr += zr_in.middleCols(c0, B);
                z = (S(1) / (S(1) + (-a_zr.topRows(h).array()).exp())).matrix();
                r = (S(1) / (S(1) + (-a_zr.bottomRows(h).array()).exp())).matrix();
                hr = r.cwiseProduct(h_state);
                a_c.noalias() = p.u_c * hr;
                a_c += c_in.middleCols(c0, B);
                g = a_c.array().tanh().matrix();
                h_new = h_state + z.cwiseProduct(g - h_state);  // (1-z)*h + z*g

                if (!h_new.allFinite())
                    throw std::runtime_error("model_forward: non-finite activation at step " +
                                             std::to_string(t) + " (layer " + std::to_string(l) +
                                             ")");

                out.middleRows(dir * h, h).middleCols(c0, B) = h_new;
                if (gates) {
                    gates->z.middleCols(c0, B) = z;
                    gates->r.middleCols(c0, B) = r;
                    gates->g.middleCols(c0, B) = g;
                    gates->h.middleCols(c0, B) = h_new;
                    gates->hr.middleCols(c0, B) = hr;
                }
                h_state.swap(h_new);
            }
        }
        cur = std::move(out);
    }
    if (cache) cache->inputs[dims.layers] = cur;

    MatX<S> logits = model.params.head_w * cur;
    logits.colwise() += model.params.head_b.col(0);

    // log-softmax per column
    for (long c = 0; c < logits.cols(); ++c) {
        auto col = logits.col(c);
        const S m = col.maxCoeff();
        const S lse = m + std::log((col.array() - m).exp().sum());
        col.array() -= lse;
    }
    return logits;
}

namespace {

template <class S>
void check_labels(const MatX<S>& logp, const std::vector<int>& labels) {
    if (static_cast<long>(labels.size()) != logp.cols())
        throw std::invalid_argument("label/logit length mismatch");
    const int classes = static_cast<int>(logp.rows());
    for (int lab : labels)
        if (lab < 1 || lab > classes)
            throw std::out_of_range("label out of range 1.." + std::to_string(classes));
}

}  // namespace

template <class S>
double sequence_loss(const MatX<S>& logp, const std::vector<int>& labels) {
    check_labels(logp, labels);
    double total = 0.0;
    for (long c = 0; c < logp.cols(); ++c) total -= static_cast<double>(logp(labels[c] - 1, c));
    return total / static_cast<double>(logp.cols());
}

template <class S>
double sequence_accuracy(const MatX<S>& logp, const std::vector<int>& labels) {
    check_labels(logp, labels);
    long correct = 0;
    for (long c = 0; c < logp.cols(); ++c) {
        long best = 0;
        logp.col(c).maxCoeff(&best);
        if (best + 1 == labels[c]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(logp.cols());
}

template <class S>
void model_backward(const BgruModel<S>& model, const ForwardCache<S>& cache, const MatX<S>& logp,
                    const std::vector<int>& labels, double loss_scale, BgruParams<S>& grads) {
    check_labels(logp, labels);
    const ModelDims& dims = model.dims;
    const int h = dims.hidden;
    const int T = cache.T;
    const int B = cache.B;
    const long cols = static_cast<long>(T) * B;
    const S scale = static_cast<S>(loss_scale);

    // head: d(logits) = (softmax - onehot) * scale
    MatX<S> dlogits = logp.array().exp().matrix();
    for (long c = 0; c < cols; ++c) dlogits(labels[c] - 1, c) -= S(1);
    dlogits *= scale;

    grads.head_w.noalias() += dlogits * cache.inputs[dims.layers].transpose();
    grads.head_b.col(0) += dlogits.rowwise().sum();
    MatX<S> dcur = model.params.head_w.transpose() * dlogits;

    MatX<S> da_zr_all(2 * h, cols), da_c_all(h, cols), hprev_all(h, cols);
    MatX<S> dh(h, B), dz(h, B), dg(h, B), da_c(h, B), dhr(h, B), dr(h, B), da_zr(2 * h, B),
        dh_carry(h, B), hprev(h, B);

    for (int l = dims.layers - 1; l >= 0; --l) {
        MatX<S> dx = MatX<S>::Zero(cache.inputs[l].rows(), cols);
        for (int dir = 0; dir < 2; ++dir) {
            const auto& p = model.params.layers[l][dir];
            const auto& gates = cache.gates[l][dir];
            auto& gp = grads.layers[l][dir];

            dh_carry.setZero();
            for (int step = T - 1; step >= 0; --step) {
                const int t = dir == 0 ? step : T - 1 - step;
                const long c0 = static_cast<long>(t) * B;
                const int t_prev = dir == 0 ? t - 1 : t + 1;

                if (t_prev < 0 || t_prev >= T)
                    hprev.setZero();
                else
                    hprev = gates.h.middleCols(static_cast<long>(t_prev) * B, B);
                hprev_all.middleCols(c0, B) = hprev;

                auto z = gates.z.middleCols(c0, B);
                auto r = gates.r.middleCols(c0, B);
                auto g = gates.g.middleCols(c0, B);

                dh = dcur.middleRows(dir * h, h).middleCols(c0, B) + dh_carry;

                dz = dh.cwiseProduct(g - hprev);
                dg = dh.cwiseProduct(z);
                dh_carry = dh - dh.cwiseProduct(z);  // dh * (1 - z)

                da_c = dg.cwiseProduct((S(1) - g.array().square()).matrix());
                da_c_all.middleCols(c0, B) = da_c;

                dhr.noalias() = p.u_c.transpose() * da_c;
                dr = dhr.cwiseProduct(hprev);
                dh_carry += dhr.cwiseProduct(r);

                da_zr.topRows(h) = dz.cwiseProduct(z).cwiseProduct((S(1) - z.array()).matrix());
                da_zr.bottomRows(h) = dr.cwiseProduct(r).cwiseProduct((S(1) - r.array()).matrix());
                da_zr_all.middleCols(c0, B) = da_zr;

                dh_carry.noalias() += p.u_zr.transpose() * da_zr;
            }

            gp.w_zr.noalias() += da_zr_all * cache.inputs[l].transpose();
            gp.u_zr.noalias() += da_zr_all * hprev_all.transpose();
            gp.b_zr.col(0) += da_zr_all.rowwise().sum();
            gp.w_c.noalias() += da_c_all * cache.inputs[l].transpose();
            gp.u_c.noalias() += da_c_all * gates.hr.transpose();
            gp.b_c.col(0) += da_c_all.rowwise().sum();

            dx.noalias() += p.w_zr.transpose() * da_zr_all;
            dx.noalias() += p.w_c.transpose() * da_c_all;
        }
        dcur = std::move(dx);
    }
}

template <class S>
AdamState<S> AdamState<S>::shaped(const ModelDims& dims) {
    AdamState<S> st;
    st.m = BgruParams<S>::shaped(dims);
    st.v = BgruParams<S>::shaped(dims);
    st.step = 0;
    return st;
}

template <class S>
void adam_step(BgruParams<S>& params, const BgruParams<S>& grads, AdamState<S>& state,
               const AdamConfig& config) {
    state.step += 1;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
    const S b1 = static_cast<S>(config.beta1);
    const S b2 = static_cast<S>(config.beta2);
    const S lr = static_cast<S>(config.lr / bc1);
    const S vs = static_cast<S>(1.0 / bc2);
    const S eps = static_cast<S>(config.eps);

    auto pb = params.blocks();
    auto gb = grads.blocks();
    auto mb = state.m.blocks();
    auto vb = state.v.blocks();
    for (size_t i = 0; i < pb.size(); ++i) {
        auto& p = *pb[i];
        const auto& g = *gb[i];
        auto& m = *mb[i];
        auto& v = *vb[i];
        m = b1 * m + (S(1) - b1) * g;
        v = (b2 * v.array() + (S(1) - b2) * g.array().square()).matrix();
        p.array() -= lr * m.array() / ((v.array() * vs).sqrt() + eps);
    }
}

template <class S>
double clip_gradients(BgruParams<S>& grads, double max_norm) {
    const double norm = std::sqrt(grads.squared_norm());
    if (max_norm > 0.0 && norm > max_norm) {
        const S f = static_cast<S>(max_norm / norm);
        for (auto* b : grads.blocks()) (*b) *= f;
    }
    return norm;
}

namespace {

template <class S>
struct PackedSet {
    std::vector<MatX<S>> x;  // input x T, already normalized
    std::vector<std::vector<int>> labels;
    int T = 0;
    long input = 0;
};

template <class S>
PackedSet<S> pack_dataset(const std::vector<FeatureSequence>& raw, const Normalizer& norm) {
    if (raw.empty()) throw std::invalid_argument("empty dataset");
    PackedSet<S> set;
    set.T = static_cast<int>(raw.front().length());
    set.input = raw.front().num_channels();
    set.x.reserve(raw.size());
    set.labels.reserve(raw.size());
    for (const auto& seq : raw) {
        if (seq.length() != set.T || seq.num_channels() != set.input)
            throw std::invalid_argument("train/eval sequences must share shape");
        Eigen::MatrixXd z = seq.channels;
        for (long r = 0; r < z.rows(); ++r)
            z.row(r) = (z.row(r).array() - norm.mean(r)) / norm.stddev(r);
        set.x.push_back(z.cast<S>());
        set.labels.push_back(seq.labels);
    }
    return set;
}

/// Lockstep-packs samples set.x[idx[b0..b1)] into (input x T*B, labels).
template <class S>
void pack_batch(const PackedSet<S>& set, const std::vector<int>& idx, int b0, int b1, MatX<S>& x,
                std::vector<int>& labels) {
    const int B = b1 - b0;
    const int T = set.T;
    x.resize(set.input, static_cast<long>(T) * B);
    labels.resize(static_cast<size_t>(T) * B);
    for (int b = 0; b < B; ++b) {
        const auto& xs = set.x[idx[b0 + b]];
        const auto& ls = set.labels[idx[b0 + b]];
        for (int t = 0; t < T; ++t) {
            x.col(static_cast<long>(t) * B + b) = xs.col(t);
            labels[static_cast<size_t>(t) * B + b] = ls[t];
        }
    }
}

struct ChunkStats {
    double loss_sum = 0.0;  // sum over columns of -logp[label]
    long correct = 0;
    long cols = 0;
};

/// Forward (+ optional backward) over a span of samples, split into fixed
/// grad_chunk lockstep slices.
template <class S>
ChunkStats run_chunk(const BgruModel<S>& model, const PackedSet<S>& set,
                     const std::vector<int>& idx, int b0, int b1, double loss_scale,
                     BgruParams<S>* grads) {
    MatX<S> x;
    std::vector<int> labels;
    pack_batch(set, idx, b0, b1, x, labels);
    const int B = b1 - b0;

    ChunkStats stats;
    if (grads) {
        ForwardCache<S> cache;
        MatX<S> logp = model_forward(model, x, set.T, B, &cache);
        model_backward(model, cache, logp, labels, loss_scale, *grads);
        for (long c = 0; c < logp.cols(); ++c) {
            stats.loss_sum -= static_cast<double>(logp(labels[c] - 1, c));
            long best = 0;
            logp.col(c).maxCoeff(&best);
            if (best + 1 == labels[c]) ++stats.correct;
        }
        stats.cols = logp.cols();
    } else {
        MatX<S> logp = model_forward(model, x, set.T, B, nullptr);
        for (long c = 0; c < logp.cols(); ++c) {
            stats.loss_sum -= static_cast<double>(logp(labels[c] - 1, c));
            long best = 0;
            logp.col(c).maxCoeff(&best);
            if (best + 1 == labels[c]) ++stats.correct;
        }
        stats.cols = logp.cols();
    }
    return stats;
}

std::vector<int> identity_order(size_t n) {
    std::vector<int> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
    return idx;
}

template <class S>
std::pair<double, double> evaluate_packed(const BgruModel<S>& model, const PackedSet<S>& set,
                                          int chunk, int threads) {
    const auto idx = identity_order(set.x.size());
    const int n = static_cast<int>(set.x.size());
    const int n_chunks = (n + chunk - 1) / chunk;
    std::vector<ChunkStats> slots(n_chunks);
    parallel_run(n_chunks, threads, [&](int c) {
        const int b0 = c * chunk;
        const int b1 = std::min(n, b0 + chunk);
        slots[c] = run_chunk<S>(model, set, idx, b0, b1, 0.0, nullptr);
    });
    double loss = 0.0;
    long correct = 0, cols = 0;
    for (const auto& s : slots) {
        loss += s.loss_sum;
        correct += s.correct;
        cols += s.cols;
    }
    return {loss / static_cast<double>(cols), static_cast<double>(correct) / cols};
}

}  // namespace

template <class S>
std::pair<BgruModel<S>, TrainResult> train_model(const std::vector<FeatureSequence>& train_raw,
                                                 const std::vector<FeatureSequence>& val_raw,
                                                 Channel channel, int num_classes,
                                                 const TrainConfig& config) {
    if (train_raw.empty() || val_raw.empty())
        throw std::invalid_argument("train_model: empty dataset");

    const Normalizer norm = fit_normalizer(train_raw);
    PackedSet<S> train_set = pack_dataset<S>(train_raw, norm);
    PackedSet<S> val_set = pack_dataset<S>(val_raw, norm);

    ModelDims dims;
    dims.input = static_cast<int>(train_set.input);
    dims.hidden = config.hidden;
    dims.layers = config.layers;
    dims.classes = num_classes;

    Rng root(config.seed);
    Rng init_rng = root.substream(0xB1);
    BgruModel<S> model = init_model<S>(dims, channel, init_rng);
    model.normalizer = norm;

    AdamState<S> opt = AdamState<S>::shaped(dims);
    const int n = static_cast<int>(train_set.x.size());
    const int chunk = std::max(1, config.grad_chunk);
    const int max_chunks = (config.batch_size + chunk - 1) / chunk;
    std::vector<BgruParams<S>> grad_slots(max_chunks, BgruParams<S>::shaped(dims));
    std::vector<ChunkStats> stat_slots(max_chunks);
    BgruParams<S> grads = BgruParams<S>::shaped(dims);

    TrainResult result;
    BgruParams<S> best_params = model.params;
    double best_val = std::numeric_limits<double>::infinity();
    int since_best = 0;

    std::vector<int> order = identity_order(n);
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        Rng shuffle_rng = root.substream(0xE0, static_cast<std::uint64_t>(epoch));
        for (int i = n - 1; i > 0; --i) {  // Fisher-Yates
            const long j = shuffle_rng.uniform_int(0, i);
            std::swap(order[i], order[static_cast<int>(j)]);
        }

        double train_loss_sum = 0.0;
        long train_correct = 0, train_cols = 0;
        for (int start = 0; start < n; start += config.batch_size) {
            const int stop = std::min(n, start + config.batch_size);
            const int batch = stop - start;
            const double loss_scale = 1.0 / (static_cast<double>(train_set.T) * batch);

            const int n_chunks = (batch + chunk - 1) / chunk;
            parallel_run(n_chunks, config.threads, [&](int c) {
                grad_slots[c].set_zero();
                const int b0 = start + c * chunk;
                const int b1 = std::min(stop, b0 + chunk);
                stat_slots[c] =
                    run_chunk<S>(model, train_set, order, b0, b1, loss_scale, &grad_slots[c]);
            });

            grads.set_zero();
            for (int c = 0; c < n_chunks; ++c) {
                auto gb = grads.blocks();
                auto sb = grad_slots[c].blocks();
                for (size_t i = 0; i < gb.size(); ++i) *gb[i] += *sb[i];
                train_loss_sum += stat_slots[c].loss_sum;
                train_correct += stat_slots[c].correct;
                train_cols += stat_slots[c].cols;
            }
            clip_gradients(grads, config.clip_norm);
            adam_step(model.params, grads, opt, config.adam);
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = train_loss_sum / static_cast<double>(train_cols);
        stats.train_acc = static_cast<double>(train_correct) / train_cols;
        std::tie(stats.val_loss, stats.val_acc) =
            evaluate_packed<S>(model, val_set, chunk, config.threads);
        result.history.push_back(stats);

        if (config.verbose)
            std::fprintf(stderr, "epoch %3d  train %.4f/%.4f  val %.4f/%.4f\n", epoch,
                         stats.train_loss, stats.train_acc, stats.val_loss, stats.val_acc);

        if (!std::isfinite(stats.train_loss) || !std::isfinite(stats.val_loss))
            throw std::runtime_error("train_model: loss diverged at epoch " +
                                     std::to_string(epoch) + " (train " +
                                     std::to_string(stats.train_loss) + ")");

        if (stats.val_loss < best_val - config.min_delta) {
            best_val = stats.val_loss;
            result.best_epoch = epoch;
            best_params = model.params;
            since_best = 0;
        } else {
            ++since_best;
        }

        if (config.target_val_accuracy > 0.0 && stats.val_acc >= config.target_val_accuracy) {
            // good enough for the caller; keep the current weights
            best_params = model.params;
            result.best_epoch = epoch;
            best_val = stats.val_loss;
            break;
        }
        if (since_best >= config.patience) break;
    }

    model.params = std::move(best_params);
    result.best_val_loss = best_val;
    return {std::move(model), std::move(result)};
}

namespace {

template <class S>
std::vector<int> argmax_labels(const MatX<S>& logp, int T, int B, int b) {
    std::vector<int> out(T);
    for (int t = 0; t < T; ++t) {
        long best = 0;
        logp.col(static_cast<long>(t) * B + b).maxCoeff(&best);
        out[t] = static_cast<int>(best) + 1;
    }
    return out;
}

}  // namespace

template <class S>
std::vector<int> predict_labels(const BgruModel<S>& model, const FeatureSequence& raw) {
    auto batched = predict_labels_batch(model, std::vector<FeatureSequence>{raw}, 1);
    return batched.front();
}

template <class S>
std::vector<std::vector<int>> predict_labels_batch(const BgruModel<S>& model,
                                                   const std::vector<FeatureSequence>& raw,
                                                   int threads) {
    if (raw.empty()) return {};
    for (const auto& seq : raw)
        if (seq.num_channels() != model.dims.input)
            throw std::runtime_error("predict: sequence has " +
                                     std::to_string(seq.num_channels()) +
                                     " channels but the model expects " +
                                     std::to_string(model.dims.input));

    // lockstep chunks over runs of equal-length sequences
    constexpr int kChunk = 8;
    struct Span {
        int begin, end, T;
    };
    std::vector<Span> spans;
    for (int i = 0; i < static_cast<int>(raw.size());) {
        const int t = static_cast<int>(raw[i].length());
        int j = i;
        while (j < static_cast<int>(raw.size()) && raw[j].length() == t &&
               j - i < kChunk)
            ++j;
        spans.push_back({i, j, t});
        i = j;
    }

    std::vector<std::vector<int>> out(raw.size());
    parallel_run(static_cast<int>(spans.size()), threads, [&](int s) {
        const Span span = spans[s];
        const int B = span.end - span.begin;
        MatX<S> x(model.dims.input, static_cast<long>(span.T) * B);
        for (int b = 0; b < B; ++b) {
            Eigen::MatrixXd z = raw[span.begin + b].channels;
            for (long r = 0; r < z.rows(); ++r)
                z.row(r) = (z.row(r).array() - model.normalizer.mean(r)) /
                           model.normalizer.stddev(r);
            MatX<S> zs = z.cast<S>();
            for (int t = 0; t < span.T; ++t) x.col(static_cast<long>(t) * B + b) = zs.col(t);
        }
        MatX<S> logp = model_forward(model, x, span.T, B, nullptr);
        for (int b = 0; b < B; ++b)
            out[span.begin + b] = argmax_labels(logp, span.T, B, b);
    });
    return out;
}

template <class S>
std::pair<double, double> evaluate_model(const BgruModel<S>& model,
                                         const std::vector<FeatureSequence>& raw, int threads) {
    PackedSet<S> set = pack_dataset<S>(raw, model.normalizer);
    return evaluate_packed<S>(model, set, 8, threads);
}

// ---------------------------------------------------------------------------
// checkpoint container

namespace {

constexpr char kMagic[8] = {'D', 'E', 'I', 'N', 'T', 'G', 'R', 'U'};
constexpr std::uint32_t kVersion = 1;

struct Writer {
    explicit Writer(const std::string& path) : out(path, std::ios::binary) {
        if (!out) throw std::runtime_error("cannot open for writing: " + path);
    }
    void raw(const void* p, size_t n) {
        out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        if (!out) throw std::runtime_error("checkpoint write failed");
    }
    template <class V>
    void value(V v) {
        raw(&v, sizeof(v));
    }
    template <class S>
    void block_f64(const MatX<S>& m) {
        for (long j = 0; j < m.cols(); ++j)
            for (long i = 0; i < m.rows(); ++i) value<double>(static_cast<double>(m(i, j)));
    }
    std::ofstream out;
};

struct Reader {
    explicit Reader(const std::string& path) : in(path, std::ios::binary) {
        if (!in) throw std::runtime_error("cannot open: " + path);
    }
    void raw(void* p, size_t n) {
        in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (in.gcount() != static_cast<std::streamsize>(n))
            throw std::runtime_error("checkpoint truncated or corrupt");
    }
    template <class V>
    V value() {
        V v;
        raw(&v, sizeof(v));
        return v;
    }
    template <class S>
    void block_f64(MatX<S>& m) {
        for (long j = 0; j < m.cols(); ++j)
            for (long i = 0; i < m.rows(); ++i) m(i, j) = static_cast<S>(value<double>());
    }
    bool at_end() {
        in.peek();
        return in.eof();
    }
    std::ifstream in;
};

std::uint8_t channel_tag(Channel c) {
    switch (c) {
        case Channel::Pw: return 0;
        case Channel::Rf: return 1;
        case Channel::Pa: return 2;
        case Channel::None: return 3;
    }
    return 255;
}

Channel channel_from_tag(std::uint8_t t) {
    switch (t) {
        case 0: return Channel::Pw;
        case 1: return Channel::Rf;
        case 2: return Channel::Pa;
        case 3: return Channel::None;
    }
    throw std::runtime_error("checkpoint: unknown channel tag");
}

}  // namespace

template <class S>
void save_checkpoint(const std::string& path, const BgruModel<S>& model,
                     const AdamState<S>* optimizer) {
    Writer w(path);
    w.raw(kMagic, sizeof(kMagic));
    w.value<std::uint32_t>(kVersion);
    w.value<std::int32_t>(model.dims.input);
    w.value<std::int32_t>(model.dims.hidden);
    w.value<std::int32_t>(model.dims.layers);
    w.value<std::int32_t>(model.dims.classes);

    for (const auto* b : model.params.blocks()) w.block_f64(*b);

    w.value<std::uint8_t>(optimizer ? 1 : 0);
    if (optimizer) {
        w.value<std::int64_t>(optimizer->step);
        for (const auto* b : optimizer->m.blocks()) w.block_f64(*b);
        for (const auto* b : optimizer->v.blocks()) w.block_f64(*b);
    }

    w.value<std::int32_t>(static_cast<std::int32_t>(model.normalizer.mean.size()));
    for (long i = 0; i < model.normalizer.mean.size(); ++i)
        w.value<double>(model.normalizer.mean(i));
    for (long i = 0; i < model.normalizer.stddev.size(); ++i)
        w.value<double>(model.normalizer.stddev(i));

    w.value<std::uint8_t>(channel_tag(model.channel));
}

template <class S>
BgruModel<S> load_checkpoint(const std::string& path, AdamState<S>* optimizer) {
    Reader r(path);
    char magic[8];
    r.raw(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("checkpoint: bad magic (not a model checkpoint)");
    const auto version = r.value<std::uint32_t>();
    if (version != kVersion)
        throw std::runtime_error("checkpoint: unsupported format version " +
                                 std::to_string(version));

    BgruModel<S> model;
    model.dims.input = r.value<std::int32_t>();
    model.dims.hidden = r.value<std::int32_t>();
    model.dims.layers = r.value<std::int32_t>();
    model.dims.classes = r.value<std::int32_t>();
    if (model.dims.input < 1 || model.dims.hidden < 1 || model.dims.layers < 1 ||
        model.dims.classes < 2 || model.dims.hidden > (1 << 20))
        throw std::runtime_error("checkpoint: implausible dimension header");

    model.params = BgruParams<S>::shaped(model.dims);
    for (auto* b : model.params.blocks()) r.block_f64(*b);

    const auto has_opt = r.value<std::uint8_t>();
    if (has_opt > 1) throw std::runtime_error("checkpoint: corrupt optimizer flag");
    if (has_opt) {
        AdamState<S> st = AdamState<S>::shaped(model.dims);
        st.step = r.value<std::int64_t>();
        for (auto* b : st.m.blocks()) r.block_f64(*b);
        for (auto* b : st.v.blocks()) r.block_f64(*b);
        if (optimizer) *optimizer = std::move(st);
    } else if (optimizer) {
        *optimizer = AdamState<S>::shaped(model.dims);
    }

    const auto nchan = r.value<std::int32_t>();
    if (nchan != model.dims.input)
        throw std::runtime_error("checkpoint: normalizer/input size mismatch");
    model.normalizer.mean.resize(nchan);
    model.normalizer.stddev.resize(nchan);
    for (long i = 0; i < nchan; ++i) model.normalizer.mean(i) = r.value<double>();
    for (long i = 0; i < nchan; ++i) {
        model.normalizer.stddev(i) = r.value<double>();
        if (!(model.normalizer.stddev(i) > 0.0))
            throw std::runtime_error("checkpoint: non-positive normalizer stddev");
    }

    model.channel = channel_from_tag(r.value<std::uint8_t>());
    if (!r.at_end()) throw std::runtime_error("checkpoint: trailing bytes");
    return model;
}

// explicit instantiations: float for production runs, double for gradient
// verification
#define DEINT_INSTANTIATE(S)                                                                     \
    template struct BgruParams<S>;                                                              \
    template struct AdamState<S>;                                                               \
    template BgruModel<S> init_model<S>(const ModelDims&, Channel, Rng&);                       \
    template MatX<S> model_forward<S>(const BgruModel<S>&, const MatX<S>&, int, int,            \
                                      ForwardCache<S>*);                                        \
    template double sequence_loss<S>(const MatX<S>&, const std::vector<int>&);                  \
    template double sequence_accuracy<S>(const MatX<S>&, const std::vector<int>&);              \
    template void model_backward<S>(const BgruModel<S>&, const ForwardCache<S>&, const MatX<S>&,\
                                    const std::vector<int>&, double, BgruParams<S>&);           \
    template void adam_step<S>(BgruParams<S>&, const BgruParams<S>&, AdamState<S>&,             \
                               const AdamConfig&);                                              \
    template double clip_gradients<S>(BgruParams<S>&, double);                                  \
    template std::pair<BgruModel<S>, TrainResult> train_model<S>(                               \
        const std::vector<FeatureSequence>&, const std::vector<FeatureSequence>&, Channel, int, \
        const TrainConfig&);                                                                    \
    template std::vector<int> predict_labels<S>(const BgruModel<S>&, const FeatureSequence&);   \
    template std::vector<std::vector<int>> predict_labels_batch<S>(                             \
        const BgruModel<S>&, const std::vector<FeatureSequence>&, int);                         \
    template std::pair<double, double> evaluate_model<S>(const BgruModel<S>&,                   \
                                                         const std::vector<FeatureSequence>&,   \
                                                         int);                                  \
    template void save_checkpoint<S>(const std::string&, const BgruModel<S>&,                   \
                                     const AdamState<S>*);                                      \
    template BgruModel<S> load_checkpoint<S>(const std::string&, AdamState<S>*);

DEINT_INSTANTIATE(float)
DEINT_INSTANTIATE(double)

#undef DEINT_INSTANTIATE

}  // namespace deint
