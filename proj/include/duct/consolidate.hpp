#pragma once

// Representation consolidation: task vectors relative to the pre-trained
// weights, per-class embedding centers, center-based task similarity and the
// similarity-weighted running merge.

#include "duct/model.hpp"
#include "duct/train.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace duct {

struct TaskVector {
    WeightMap delta;
    std::size_t domain_index = 0;
};

inline TaskVector task_vector(const WeightMap& finetuned, const WeightMap& base, std::size_t domain_index = 0) {
    return {subtract(finetuned, base), domain_index};
}

struct ClassCenterTable {
    Matrix centers;                   // |Y| x d, zero rows for absent classes
    std::vector<std::size_t> counts;  // samples per class
    std::string backbone_tag;
    std::size_t domain_index = 0;

    std::size_t num_classes() const noexcept { return centers.rows(); }
    bool present(std::size_t c) const noexcept { return counts[c] > 0; }
};

// Mean embedding per class. Embeddings are accumulated in sample order, so a
// permuted dataset agrees to rounding.
inline ClassCenterTable class_centers(const Backbone& net, const LabeledBatch& data, std::size_t num_classes,
                                      std::string backbone_tag = {}, std::size_t domain_index = 0) {
    data.validate(num_classes);
    ClassCenterTable t;
    t.centers = Matrix(num_classes, net.embed_dim());
    t.counts.assign(num_classes, 0);
    t.backbone_tag = std::move(backbone_tag);
    t.domain_index = domain_index;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto e = forward(net, data.inputs.row(i));
        auto row = t.centers.row(data.labels[i]);
        for (std::size_t k = 0; k < e.size(); ++k) row[k] += e[k];
        ++t.counts[data.labels[i]];
    }
    for (std::size_t c = 0; c < num_classes; ++c) {
        if (t.counts[c] == 0) continue;
        for (double& v : t.centers.row(c)) v /= static_cast<double>(t.counts[c]);
    }
    return t;
}

// Mean over classes present in both tables of the cosine between matching centers.
inline double task_similarity(const ClassCenterTable& base, const ClassCenterTable& finetuned) {
    if (base.num_classes() != finetuned.num_classes() || base.centers.cols() != finetuned.centers.cols())
        throw ShapeError("task_similarity: center tables differ in shape");
    double total = 0.0;
    std::size_t overlap = 0;
    for (std::size_t c = 0; c < base.num_classes(); ++c) {
        if (!base.present(c) || !finetuned.present(c)) continue;
        total += cosine_sim(base.centers.row(c), finetuned.centers.row(c));
        ++overlap;
    }
    if (overlap == 0) throw PreconditionError("task_similarity: no class present in both tables");
    return total / static_cast<double>(overlap);
}

// Holds exactly two full weight maps, however many tasks have been absorbed.
struct MergeState {
    WeightMap base;
    WeightMap merged;
    double alpha_phi = 0.5;
    std::vector<double> applied_similarities;

    static MergeState start(const WeightMap& base, double alpha_phi) {
        return {base, base, alpha_phi, {}};
    }
};

// merged <- merged + alpha_phi * sim * delta
inline MergeState merge_incremental(const MergeState& state, const TaskVector& tv, double sim) {
    if (!state.merged.compatible(tv.delta)) throw ShapeError("merge_incremental: task vector shape mismatch");
    if (!(sim >= -1.0 - 1e-9 && sim <= 1.0 + 1e-9)) throw PreconditionError("merge_incremental: sim outside [-1, 1]");
    MergeState next{state.base, add_scaled(state.merged, tv.delta, state.alpha_phi * sim), state.alpha_phi,
                    state.applied_similarities};
    next.applied_similarities.push_back(sim);
    return next;
}

inline MergeState merge_unweighted(const MergeState& state, const TaskVector& tv) {
    return merge_incremental(state, tv, 1.0);
}

}  // namespace duct
