#pragma once

// Accuracy matrix over incremental stages and the summary metrics derived
// from it: per-stage accuracy, average incremental accuracy, final accuracy
// and the max-drop forgetting measure.

#include "duct/model.hpp"
#include "duct/train.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <cstddef>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace duct {

// a[k][j] = accuracy on domain j after stage k, stored for j <= k only.
class AccuracyMatrix {
  public:
    AccuracyMatrix() = default;

    explicit AccuracyMatrix(std::vector<std::vector<double>> rows) {
        for (auto& r : rows) add_row(std::move(r));
    }

    void add_row(std::vector<double> row) {
        if (row.size() != rows_.size() + 1)
            throw PreconditionError("accuracy row for stage " + std::to_string(rows_.size()) + " must have " +
                                    std::to_string(rows_.size() + 1) + " entries, got " + std::to_string(row.size()));
        for (double v : row)
            if (!(v >= 0.0 && v <= 1.0)) throw PreconditionError("accuracy entry outside [0, 1]");
        rows_.push_back(std::move(row));
    }

    std::size_t stages() const noexcept { return rows_.size(); }
    double at(std::size_t k, std::size_t j) const { return rows_.at(k).at(j); }
    const std::vector<std::vector<double>>& rows() const noexcept { return rows_; }

    friend bool operator==(const AccuracyMatrix&, const AccuracyMatrix&) = default;

    std::string to_csv() const {
        std::ostringstream os;
        os << "stage";
        for (std::size_t j = 0; j < rows_.size(); ++j) os << ",domain_" << j;
        os << '\n';
        char buf[32];
        for (std::size_t k = 0; k < rows_.size(); ++k) {
            os << k;
            for (std::size_t j = 0; j < rows_.size(); ++j) {
                os << ',';
                if (j <= k) {
                    std::snprintf(buf, sizeof buf, "%.17g", rows_[k][j]);
                    os << buf;
                }
            }
            os << '\n';
        }
        return os.str();
    }

  private:
    std::vector<std::vector<double>> rows_;
};

struct MetricsReport {
    std::vector<double> per_stage_accuracy;
    double average_accuracy = 0.0;
    double last_accuracy = 0.0;
    std::optional<double> forgetting;  // absent for single-stage runs

    friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

inline double accuracy(const Backbone& net, const CosineClassifier& clf, const LabeledBatch& data) {
    if (data.empty()) throw PreconditionError("accuracy: empty test set");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (predict(clf, forward(net, data.inputs.row(i))).label == data.labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

// Accuracy on each of the given test sets (domains 0..k in stage order).
inline std::vector<double> evaluate_stage(const Backbone& net, const CosineClassifier& clf,
                                          std::span<const LabeledBatch* const> test_sets) {
    if (clf.num_domains() < test_sets.size())
        throw PreconditionError("evaluate_stage: classifier has " + std::to_string(clf.num_domains()) +
                                " blocks for " + std::to_string(test_sets.size()) + " domains");
    std::vector<double> row;
    row.reserve(test_sets.size());
    for (std::size_t j = 0; j < test_sets.size(); ++j) {
        if (test_sets[j] == nullptr || test_sets[j]->empty())
            throw PreconditionError("evaluate_stage: missing test set for domain " + std::to_string(j));
        row.push_back(accuracy(net, clf, *test_sets[j]));
    }
    return row;
}

// Mean over old domains j < B of max_{j <= l < B} (a[l][j] - a[B][j]); not clamped.
inline double forgetting_measure(const AccuracyMatrix& a) {
    const std::size_t b = a.stages();
    if (b < 2) throw PreconditionError("forgetting_measure needs at least two stages");
    double total = 0.0;
    for (std::size_t j = 0; j + 1 < b; ++j) {
        double worst = a.at(j, j) - a.at(b - 1, j);
        for (std::size_t l = j + 1; l + 1 < b; ++l) worst = std::max(worst, a.at(l, j) - a.at(b - 1, j));
        total += worst;
    }
    return total / static_cast<double>(b - 1);
}

inline MetricsReport summarize(const AccuracyMatrix& a) {
    if (a.stages() == 0) throw PreconditionError("summarize: empty accuracy matrix");
    MetricsReport r;
    double sum = 0.0;
    for (std::size_t k = 0; k < a.stages(); ++k) {
        const auto& row = a.rows()[k];
        if (row.size() != k + 1) throw PreconditionError("summarize: incomplete row " + std::to_string(k));
        double s = 0.0;
        for (double v : row) s += v;
        r.per_stage_accuracy.push_back(s / static_cast<double>(row.size()));
        sum += r.per_stage_accuracy.back();
    }
    r.average_accuracy = sum / static_cast<double>(a.stages());
    r.last_accuracy = r.per_stage_accuracy.back();
    if (a.stages() >= 2) r.forgetting = forgetting_measure(a);
    return r;
}

inline void to_json(nlohmann::json& j, const MetricsReport& r) {
    j = nlohmann::json{{"per_stage_accuracy", r.per_stage_accuracy},
                       {"average_accuracy", r.average_accuracy},
                       {"last_accuracy", r.last_accuracy}};
    j["forgetting"] = r.forgetting ? nlohmann::json(*r.forgetting) : nlohmann::json(nullptr);
}

}  // namespace duct
