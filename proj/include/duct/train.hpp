#pragma once

// Plain minibatch SGD for the joint fine-tune objective and for classifier-only
// retraining on frozen features. Gradients are hand-derived for the fixed
// tanh MLP and the cosine head.

#include "duct/model.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace duct {

struct TrainConfig {
    double learning_rate = 0.01;
    std::size_t batch_size = 32;
    std::size_t epochs = 15;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
            throw PreconditionError("learning_rate must be a finite non-negative number");
        if (batch_size < 1) throw PreconditionError("batch_size must be >= 1");
        if (epochs < 1) throw PreconditionError("epochs must be >= 1");
    }

    static TrainConfig desk(std::uint64_t seed = 0) { return {0.01, 32, 15, seed}; }
    static TrainConfig reference(std::uint64_t seed = 0) { return {0.001, 128, 15, seed}; }
};

struct LabeledBatch {
    Matrix inputs;  // n x D
    std::vector<std::size_t> labels;

    std::size_t size() const noexcept { return labels.size(); }
    bool empty() const noexcept { return labels.empty(); }

    void validate(std::size_t num_classes) const {
        if (inputs.rows() != labels.size())
            throw ShapeError("labeled batch: " + std::to_string(inputs.rows()) + " rows but " +
                             std::to_string(labels.size()) + " labels");
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] >= num_classes)
                throw PreconditionError("labeled batch: label " + std::to_string(labels[i]) + " at record " +
                                        std::to_string(i) + " out of range");
    }
};

struct CrossEntropyResult {
    double loss = 0.0;
    std::vector<double> grad_embedding;
    Matrix grad_weights;  // same shape as the classifier weights
};

// -log softmax(s * cos(w_c, emb))[label] and its gradients.
inline CrossEntropyResult cross_entropy_cosine(const CosineClassifier& clf, std::span<const double> emb,
                                               std::size_t label) {
    const Matrix& w = clf.weights();
    const std::size_t d = w.rows();
    const std::size_t k = w.cols();
    if (label >= k) throw PreconditionError("cross_entropy_cosine: label " + std::to_string(label) + " >= " +
                                            std::to_string(k));
    if (emb.size() != d) throw ShapeError("cross_entropy_cosine: embedding length mismatch");
    const double s = clf.logit_scale();

    const double raw_emb_norm = l2_norm(emb);
    const double emb_norm = std::max(raw_emb_norm, kNormEps);
    std::vector<double> v(d);
    for (std::size_t r = 0; r < d; ++r) v[r] = emb[r] / emb_norm;

    std::vector<double> col_norm(k, 0.0);
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < k; ++c) col_norm[c] += w(r, c) * w(r, c);
    std::vector<double> raw_col_norm(k);
    for (std::size_t c = 0; c < k; ++c) {
        raw_col_norm[c] = std::sqrt(col_norm[c]);
        col_norm[c] = std::max(raw_col_norm[c], kNormEps);
    }

    // cosines and logits
    std::vector<double> cosv(k, 0.0);
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < k; ++c) cosv[c] += w(r, c) * v[r];
    for (std::size_t c = 0; c < k; ++c) cosv[c] /= col_norm[c];

    double zmax = -std::numeric_limits<double>::infinity();
    for (double c : cosv) zmax = std::max(zmax, s * c);
    double sum = 0.0;
    std::vector<double> p(k);
    for (std::size_t c = 0; c < k; ++c) {
        p[c] = std::exp(s * cosv[c] - zmax);
        sum += p[c];
    }
    CrossEntropyResult res;
    res.loss = -(s * cosv[label] - zmax - std::log(sum));
    for (double& x : p) x /= sum;
    p[label] -= 1.0;  // now dL/dz

    res.grad_weights = Matrix(d, k);
    std::vector<double> grad_v(d, 0.0);
    for (std::size_t r = 0; r < d; ++r) {
        for (std::size_t c = 0; c < k; ++c) {
            const double u = w(r, c) / col_norm[c];
            grad_v[r] += s * p[c] * u;
            // d cos / d w_c = (v - cos * u) / |w_c| inside the norm branch, v / eps when clamped.
            const double dcos = raw_col_norm[c] > kNormEps ? (v[r] - cosv[c] * u) / col_norm[c] : v[r] / kNormEps;
            res.grad_weights(r, c) = s * p[c] * dcos;
        }
    }
    res.grad_embedding.assign(d, 0.0);
    if (raw_emb_norm > kNormEps) {
        const double proj = dot(v, grad_v);
        for (std::size_t r = 0; r < d; ++r) res.grad_embedding[r] = (grad_v[r] - proj * v[r]) / emb_norm;
    } else {
        for (std::size_t r = 0; r < d; ++r) res.grad_embedding[r] = grad_v[r] / kNormEps;
    }
    return res;
}

// Zero-filled map shaped like `like`.
inline WeightMap zeros_like(const WeightMap& like) {
    WeightMap out;
    for (const auto& [name, t] : like.entries()) out.add(name, Matrix(t.rows(), t.cols()));
    return out;
}

// Accumulates d loss / d backbone weights into `grad` given d loss / d embedding.
inline void backprop(const Backbone& net, const ForwardTrace& trace, std::span<const double> grad_embedding,
                     WeightMap& grad) {
    const std::size_t layers = net.num_layers();
    const auto& out = trace.activations.back();
    std::vector<double> delta(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) delta[i] = grad_embedding[i] * (1.0 - out[i] * out[i]);

    for (std::size_t l = layers; l-- > 0;) {
        const Matrix& w = net.weight(l);
        const auto& in = trace.activations[l];
        Matrix& gw = grad.entries()[2 * l].second;
        Matrix& gb = grad.entries()[2 * l + 1].second;
        for (std::size_t r = 0; r < w.rows(); ++r) {
            auto gw_row = gw.row(r);
            for (std::size_t c = 0; c < in.size(); ++c) gw_row[c] += delta[r] * in[c];
            gb(r, 0) += delta[r];
        }
        if (l == 0) break;
        std::vector<double> prev(in.size(), 0.0);
        for (std::size_t r = 0; r < w.rows(); ++r) {
            const auto wr = w.row(r);
            for (std::size_t c = 0; c < in.size(); ++c) prev[c] += wr[c] * delta[r];
        }
        for (std::size_t c = 0; c < in.size(); ++c) prev[c] *= (1.0 - in[c] * in[c]);
        delta = std::move(prev);
    }
}

struct FinetuneResult {
    Backbone backbone;
    CosineClassifier classifier;
    std::vector<double> epoch_losses;  // mean training loss seen during each epoch
};

namespace detail {

inline void accumulate(Matrix& dst, const Matrix& src) {
    auto p = dst.data();
    const auto g = src.data();
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += g[i];
}

inline void sgd_step(Matrix& param, const Matrix& grad, double lr_over_n) {
    auto p = param.data();
    const auto g = grad.data();
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr_over_n * g[i];
}

inline void check_loss(double loss, std::size_t epoch) {
    if (!std::isfinite(loss)) throw TrainingError("training diverged (non-finite loss) in epoch " + std::to_string(epoch));
}

// Trains `head` (and `net` when non-null) on data with softmax over the head's columns.
inline std::vector<double> run_sgd(Backbone* net, Matrix& head, std::size_t classes, double logit_scale,
                                   const LabeledBatch& data, const Matrix* cached_embeddings,
                                   const TrainConfig& cfg) {
    Rng rng(cfg.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> epoch_losses;
    epoch_losses.reserve(cfg.epochs);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            const CosineClassifier clf(head, classes, logit_scale);
            Matrix head_grad(head.rows(), head.cols());
            WeightMap net_grad = net != nullptr ? zeros_like(net->weights()) : WeightMap{};
            for (std::size_t b = start; b < stop; ++b) {
                const std::size_t idx = order[b];
                if (net != nullptr) {
                    const ForwardTrace trace = forward_trace(*net, data.inputs.row(idx));
                    const auto ce = cross_entropy_cosine(clf, trace.embedding(), data.labels[idx]);
                    epoch_loss += ce.loss;
                    accumulate(head_grad, ce.grad_weights);
                    backprop(*net, trace, ce.grad_embedding, net_grad);
                } else {
                    const auto ce = cross_entropy_cosine(clf, cached_embeddings->row(idx), data.labels[idx]);
                    epoch_loss += ce.loss;
                    accumulate(head_grad, ce.grad_weights);
                }
            }
            const double scale = cfg.learning_rate / static_cast<double>(stop - start);
            sgd_step(head, head_grad, scale);
            if (net != nullptr) {
                WeightMap updated = net->weights();
                for (std::size_t t = 0; t < updated.size(); ++t)
                    sgd_step(updated.entries()[t].second, net_grad.entries()[t].second, scale);
                *net = Backbone(std::move(updated));
            }
        }
        epoch_loss /= static_cast<double>(order.size());
        check_loss(epoch_loss, epoch);
        epoch_losses.push_back(epoch_loss);
    }
    if (!head.all_finite()) throw TrainingError("classifier weights became non-finite");
    if (net != nullptr)
        for (const auto& [name, t] : net->weights().entries())
            if (!t.all_finite()) throw TrainingError("backbone tensor '" + name + "' became non-finite");
    return epoch_losses;
}

}  // namespace detail

// Joint optimisation of the backbone and the newest classifier block. The
// softmax runs over the newest block only (labels are in [0, |Y|)); older
// blocks are frozen and returned bit-identical.
inline FinetuneResult finetune(const Backbone& backbone, const CosineClassifier& clf, const LabeledBatch& data,
                               const TrainConfig& cfg) {
    cfg.validate();
    if (data.empty()) throw PreconditionError("finetune: empty training data");
    if (clf.num_domains() == 0) throw PreconditionError("finetune: classifier has no block to train");
    data.validate(clf.classes_per_domain());
    if (data.inputs.cols() != backbone.input_dim()) throw ShapeError("finetune: input width mismatch");
    if (clf.embed_dim() != backbone.embed_dim()) throw ShapeError("finetune: classifier/backbone width mismatch");

    const std::size_t first = (clf.num_domains() - 1) * clf.classes_per_domain();
    Matrix head = clf.columns(first, clf.classes_per_domain());
    FinetuneResult res;
    res.backbone = backbone;
    res.epoch_losses =
        detail::run_sgd(&res.backbone, head, clf.classes_per_domain(), clf.logit_scale(), data, nullptr, cfg);
    res.classifier = replace_columns(clf, first, head);
    return res;
}

// Classifier-only retraining of the newest block against embeddings of the
// frozen backbone. Returns the classifier; every other column is untouched.
inline CosineClassifier retrain_new_classifier(const Backbone& merged, const CosineClassifier& clf,
                                               const LabeledBatch& data, const TrainConfig& cfg,
                                               std::vector<double>* epoch_losses = nullptr) {
    cfg.validate();
    if (data.empty()) throw PreconditionError("retrain_new_classifier: empty training data");
    if (clf.num_domains() == 0) throw PreconditionError("retrain_new_classifier: classifier has no block");
    data.validate(clf.classes_per_domain());
    const Matrix cached = embed_rows(merged, data.inputs);
    const std::size_t first = (clf.num_domains() - 1) * clf.classes_per_domain();
    Matrix head = clf.columns(first, clf.classes_per_domain());
    auto losses = detail::run_sgd(nullptr, head, clf.classes_per_domain(), clf.logit_scale(), data, &cached, cfg);
    if (epoch_losses != nullptr) *epoch_losses = std::move(losses);
    return replace_columns(clf, first, head);
}

// Mean cross-entropy of the newest block over a dataset.
inline double mean_loss(const Backbone& net, const CosineClassifier& clf, const LabeledBatch& data) {
    if (data.empty()) throw PreconditionError("mean_loss: empty data");
    const std::size_t first = (clf.num_domains() - 1) * clf.classes_per_domain();
    const CosineClassifier head(clf.columns(first, clf.classes_per_domain()), clf.classes_per_domain(),
                                clf.logit_scale());
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i)
        total += cross_entropy_cosine(head, forward(net, data.inputs.row(i)), data.labels[i]).loss;
    return total / static_cast<double>(data.size());
}

}  // namespace duct
