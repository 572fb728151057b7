#pragma once

// Backbone MLP, named weight collections and the expanding cosine classifier.

#include "duct/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace duct {

// Ordered (name, tensor) pairs. Two maps are arithmetic-compatible iff their
// (name, shape) sequences are identical.
class WeightMap {
  public:
    using Entry = std::pair<std::string, Matrix>;

    void add(std::string name, Matrix tensor) {
        if (find(name) != nullptr) throw PreconditionError("duplicate tensor name '" + name + "'");
        entries_.emplace_back(std::move(name), std::move(tensor));
    }

    const Matrix* find(std::string_view name) const noexcept {
        for (const auto& [n, t] : entries_)
            if (n == name) return &t;
        return nullptr;
    }

    const Matrix& at(std::string_view name) const {
        const Matrix* t = find(name);
        if (t == nullptr) throw PreconditionError("missing tensor '" + std::string(name) + "'");
        return *t;
    }

    Matrix& at(std::string_view name) { return const_cast<Matrix&>(std::as_const(*this).at(name)); }

    const std::vector<Entry>& entries() const noexcept { return entries_; }
    std::vector<Entry>& entries() noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }

    std::size_t parameter_count() const noexcept {
        std::size_t n = 0;
        for (const auto& e : entries_) n += e.second.size();
        return n;
    }

    bool compatible(const WeightMap& other) const noexcept {
        if (entries_.size() != other.entries_.size()) return false;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            if (entries_[i].first != other.entries_[i].first) return false;
            if (!entries_[i].second.same_shape(other.entries_[i].second)) return false;
        }
        return true;
    }

    friend bool operator==(const WeightMap& a, const WeightMap& b) noexcept { return a.entries_ == b.entries_; }

  private:
    std::vector<Entry> entries_;
};

namespace detail {
inline void require_compatible(const WeightMap& a, const WeightMap& b, const char* what) {
    if (!a.compatible(b)) throw ShapeError(std::string(what) + ": weight maps are not arithmetic-compatible");
}
}  // namespace detail

// a - b, name-aligned.
inline WeightMap subtract(const WeightMap& a, const WeightMap& b) {
    detail::require_compatible(a, b, "subtract");
    WeightMap out = a;
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto dst = out.entries()[i].second.data();
        const auto rhs = b.entries()[i].second.data();
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] -= rhs[k];
    }
    return out;
}

// a + scale * b, name-aligned.
inline WeightMap add_scaled(const WeightMap& a, const WeightMap& b, double scale) {
    detail::require_compatible(a, b, "add_scaled");
    WeightMap out = a;
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto dst = out.entries()[i].second.data();
        const auto rhs = b.entries()[i].second.data();
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += scale * rhs[k];
    }
    return out;
}

// Default hidden widths between input and embedding.
inline const std::vector<std::size_t> kDefaultHidden = {64, 32};

// Stack of dense layers, each followed by tanh (the last one included).
// Layer l stores "layer{l}.weight" (out x in) and "layer{l}.bias" (out x 1).
class Backbone {
  public:
    Backbone() = default;

    explicit Backbone(WeightMap weights) : weights_(std::move(weights)) { validate(); }

    // Xavier-uniform weights, zero biases.
    static Backbone init(std::span<const std::size_t> layer_sizes, Rng& rng) {
        if (layer_sizes.size() < 2) throw PreconditionError("backbone needs at least input and output sizes");
        WeightMap w;
        for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
            const std::size_t in = layer_sizes[l];
            const std::size_t out = layer_sizes[l + 1];
            const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
            Matrix weight(out, in);
            for (double& v : weight.data()) v = rng.uniform(-limit, limit);
            w.add(weight_name(l), std::move(weight));
            w.add(bias_name(l), Matrix(out, 1));
        }
        return Backbone(std::move(w));
    }

    static Backbone init(std::size_t input_dim, std::size_t embed_dim, Rng& rng) {
        std::vector<std::size_t> sizes{input_dim};
        sizes.insert(sizes.end(), kDefaultHidden.begin(), kDefaultHidden.end());
        sizes.push_back(embed_dim);
        return init(sizes, rng);
    }

    static std::string weight_name(std::size_t l) { return "layer" + std::to_string(l) + ".weight"; }
    static std::string bias_name(std::size_t l) { return "layer" + std::to_string(l) + ".bias"; }

    const WeightMap& weights() const noexcept { return weights_; }
    std::size_t num_layers() const noexcept { return weights_.size() / 2; }
    const Matrix& weight(std::size_t l) const { return weights_.entries()[2 * l].second; }
    const Matrix& bias(std::size_t l) const { return weights_.entries()[2 * l + 1].second; }
    std::size_t input_dim() const { return weight(0).cols(); }
    std::size_t embed_dim() const { return weight(num_layers() - 1).rows(); }

    friend bool operator==(const Backbone& a, const Backbone& b) noexcept { return a.weights_ == b.weights_; }

  private:
    void validate() const {
        if (weights_.size() == 0 || weights_.size() % 2 != 0) throw ShapeError("backbone: expected weight/bias pairs");
        std::size_t prev = 0;
        for (std::size_t l = 0; l < num_layers(); ++l) {
            const auto& [wn, w] = weights_.entries()[2 * l];
            const auto& [bn, b] = weights_.entries()[2 * l + 1];
            if (wn != weight_name(l) || bn != bias_name(l)) throw ShapeError("backbone: unexpected tensor names");
            if (l > 0 && w.cols() != prev) throw ShapeError("backbone: layer " + std::to_string(l) + " input width");
            if (b.rows() != w.rows() || b.cols() != 1) throw ShapeError("backbone: bias shape of layer " + std::to_string(l));
            prev = w.rows();
        }
    }

    WeightMap weights_;
};

// Post-activation outputs of every layer; activations[0] is the input.
struct ForwardTrace {
    std::vector<std::vector<double>> activations;
    std::span<const double> embedding() const noexcept { return activations.back(); }
};

inline ForwardTrace forward_trace(const Backbone& net, std::span<const double> x) {
    if (x.size() != net.input_dim())
        throw ShapeError("forward: input length " + std::to_string(x.size()) + ", expected " +
                         std::to_string(net.input_dim()));
    ForwardTrace trace;
    trace.activations.reserve(net.num_layers() + 1);
    trace.activations.emplace_back(x.begin(), x.end());
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        const Matrix& w = net.weight(l);
        const Matrix& b = net.bias(l);
        const auto& in = trace.activations.back();
        std::vector<double> out(w.rows());
        for (std::size_t r = 0; r < w.rows(); ++r) out[r] = std::tanh(dot(w.row(r), in) + b(r, 0));
        trace.activations.push_back(std::move(out));
    }
    return trace;
}

inline std::vector<double> forward(const Backbone& net, std::span<const double> x) {
    return std::move(forward_trace(net, x).activations.back());
}

// Embeddings of every row of `inputs`, stacked as rows.
inline Matrix embed_rows(const Backbone& net, const Matrix& inputs) {
    Matrix out(inputs.rows(), net.embed_dim());
    for (std::size_t i = 0; i < inputs.rows(); ++i) {
        const auto e = forward(net, inputs.row(i));
        std::copy(e.begin(), e.end(), out.row(i).begin());
    }
    return out;
}

inline constexpr double kDefaultLogitScale = 10.0;

// d x (b * |Y|) weights; block j owns columns [j*|Y|, (j+1)*|Y|).
class CosineClassifier {
  public:
    CosineClassifier() = default;

    CosineClassifier(Matrix weights, std::size_t classes_per_domain, double logit_scale = kDefaultLogitScale)
        : weights_(std::move(weights)), classes_(classes_per_domain), scale_(logit_scale) {
        if (classes_ == 0) throw PreconditionError("classifier needs at least one class per domain");
        if (weights_.cols() % classes_ != 0)
            throw ShapeError("classifier columns " + std::to_string(weights_.cols()) + " not a multiple of " +
                             std::to_string(classes_));
        if (!(scale_ > 0.0)) throw PreconditionError("logit scale must be positive");
    }

    // Zero-block classifier over embed_dim features.
    static CosineClassifier empty(std::size_t embed_dim, std::size_t classes_per_domain,
                                  double logit_scale = kDefaultLogitScale) {
        return CosineClassifier(Matrix(embed_dim, 0), classes_per_domain, logit_scale);
    }

    const Matrix& weights() const noexcept { return weights_; }
    std::size_t classes_per_domain() const noexcept { return classes_; }
    std::size_t num_domains() const noexcept { return weights_.cols() / classes_; }
    std::size_t total_classes() const noexcept { return weights_.cols(); }
    std::size_t embed_dim() const noexcept { return weights_.rows(); }
    double logit_scale() const noexcept { return scale_; }

    Matrix block(std::size_t j) const { return columns(j * classes_, classes_); }

    // Columns [first, first + count).
    Matrix columns(std::size_t first, std::size_t count) const {
        if (first + count > weights_.cols()) throw ShapeError("classifier column range out of bounds");
        Matrix out(weights_.rows(), count);
        for (std::size_t r = 0; r < weights_.rows(); ++r)
            for (std::size_t c = 0; c < count; ++c) out(r, c) = weights_(r, first + c);
        return out;
    }

    friend bool operator==(const CosineClassifier& a, const CosineClassifier& b) noexcept {
        return a.weights_ == b.weights_ && a.classes_ == b.classes_ && a.scale_ == b.scale_;
    }

  private:
    Matrix weights_;
    std::size_t classes_ = 1;
    double scale_ = kDefaultLogitScale;
};

struct Prediction {
    std::size_t raw_index = 0;
    std::size_t label = 0;
    std::size_t domain_block = 0;
};

inline std::vector<double> logits(const CosineClassifier& clf, std::span<const double> emb) {
    const Matrix& w = clf.weights();
    if (emb.size() != w.rows())
        throw ShapeError("logits: embedding length " + std::to_string(emb.size()) + ", expected " +
                         std::to_string(w.rows()));
    const double emb_norm = std::max(l2_norm(emb), kNormEps);
    std::vector<double> out(w.cols(), 0.0);
    std::vector<double> col_sq(w.cols(), 0.0);
    for (std::size_t r = 0; r < w.rows(); ++r) {
        const auto wr = w.row(r);
        for (std::size_t c = 0; c < w.cols(); ++c) {
            out[c] += wr[c] * emb[r];
            col_sq[c] += wr[c] * wr[c];
        }
    }
    for (std::size_t c = 0; c < w.cols(); ++c)
        out[c] = clf.logit_scale() * out[c] / (std::max(std::sqrt(col_sq[c]), kNormEps) * emb_norm);
    return out;
}

// First maximal index wins ties.
inline Prediction prediction_from_logits(std::span<const double> z, std::size_t classes_per_domain) {
    if (z.empty()) throw PreconditionError("predict: classifier has no columns");
    const auto it = std::max_element(z.begin(), z.end());
    const auto raw = static_cast<std::size_t>(it - z.begin());
    return {raw, raw % classes_per_domain, raw / classes_per_domain};
}

inline Prediction predict(const CosineClassifier& clf, std::span<const double> emb) {
    return prediction_from_logits(logits(clf, emb), clf.classes_per_domain());
}

inline CosineClassifier expand_classifier(const CosineClassifier& clf, const Matrix& init) {
    if (init.rows() != clf.embed_dim() || init.cols() != clf.classes_per_domain())
        throw ShapeError("expand_classifier: init " + shape_str(init) + ", expected " +
                         std::to_string(clf.embed_dim()) + "x" + std::to_string(clf.classes_per_domain()));
    const Matrix& old = clf.weights();
    Matrix w(old.rows(), old.cols() + init.cols());
    for (std::size_t r = 0; r < w.rows(); ++r) {
        std::copy(old.row(r).begin(), old.row(r).end(), w.row(r).begin());
        std::copy(init.row(r).begin(), init.row(r).end(), w.row(r).begin() + static_cast<std::ptrdiff_t>(old.cols()));
    }
    return CosineClassifier(std::move(w), clf.classes_per_domain(), clf.logit_scale());
}

// Copy of clf with columns [first, first + block.cols()) overwritten.
inline CosineClassifier replace_columns(const CosineClassifier& clf, std::size_t first, const Matrix& block) {
    if (block.rows() != clf.embed_dim() || first + block.cols() > clf.total_classes())
        throw ShapeError("replace_columns: block " + shape_str(block) + " does not fit");
    Matrix w = clf.weights();
    for (std::size_t r = 0; r < w.rows(); ++r)
        for (std::size_t c = 0; c < block.cols(); ++c) w(r, first + c) = block(r, c);
    return CosineClassifier(std::move(w), clf.classes_per_domain(), clf.logit_scale());
}

}  // namespace duct
