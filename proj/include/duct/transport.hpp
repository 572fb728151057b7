#pragma once

// Classifier consolidation through entropic optimal transport between the
// current domain's classes and every previously seen (domain, class) pair.

#include "duct/consolidate.hpp"
#include "duct/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace duct {

// beta x gamma, rows = current-domain classes, columns = old (domain, class) pairs.
struct CostMatrix {
    Matrix q;
};

struct TransportPlan {
    Matrix t;
    std::vector<double> mu1;
    std::vector<double> mu2;
    double epsilon = 0.0;
    std::size_t iterations_used = 0;
    bool converged = false;
    double row_residual = 0.0;  // max |T 1 - mu1|
    double col_residual = 0.0;  // max |T^T 1 - mu2|

    double cost(const Matrix& q) const {
        double c = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) c += t.data()[i] * q.data()[i];
        return c;
    }
};

struct SinkhornOptions {
    double epsilon_scale = 0.05;  // epsilon = epsilon_scale * mean(Q)
    std::size_t max_iters = 5000;
    double tol = 1e-9;
};

inline CostMatrix build_cost(const ClassCenterTable& current, std::span<const ClassCenterTable> old) {
    std::size_t gamma = 0;
    for (const auto& t : old) {
        if (t.centers.cols() != current.centers.cols())
            throw ShapeError("build_cost: old table of domain " + std::to_string(t.domain_index) +
                             " has embedding width " + std::to_string(t.centers.cols()));
        gamma += t.num_classes();
    }
    Matrix stacked(gamma, current.centers.cols());
    std::size_t r = 0;
    for (const auto& t : old)
        for (std::size_t c = 0; c < t.num_classes(); ++c, ++r)
            std::copy(t.centers.row(c).begin(), t.centers.row(c).end(), stacked.row(r).begin());
    return {pairwise_sq_dist(current.centers, stacked)};
}

inline std::vector<double> uniform_marginal(std::size_t n) {
    return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

inline double default_epsilon(const Matrix& q, double epsilon_scale) {
    double mean = 0.0;
    for (double v : q.data()) mean += v;
    if (!q.empty()) mean /= static_cast<double>(q.size());
    return std::max(epsilon_scale * mean, 1e-12);
}

namespace detail {

inline void check_marginal(std::span<const double> mu, std::size_t n, const char* which) {
    if (mu.size() != n) throw ShapeError(std::string("sinkhorn: ") + which + " has wrong length");
    double total = 0.0;
    for (double v : mu) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw PreconditionError(std::string("sinkhorn: ") + which + " has a negative entry");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) throw PreconditionError(std::string("sinkhorn: ") + which + " does not sum to 1");
}

inline double log_sum_exp(std::span<const double> v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

}  // namespace detail

// Log-domain Sinkhorn iterations on the dual potentials (f, g). The column
// marginal holds exactly after every sweep; convergence is declared when
// the row marginal residual also drops below tol.
inline TransportPlan sinkhorn(const CostMatrix& cost, std::span<const double> mu1, std::span<const double> mu2,
                              double epsilon, std::size_t max_iters, double tol) {
    const Matrix& q = cost.q;
    const std::size_t n = q.rows();
    const std::size_t m = q.cols();
    if (n == 0 || m == 0) throw PreconditionError("sinkhorn: empty cost matrix");
    if (!(epsilon > 0.0)) throw PreconditionError("sinkhorn: epsilon must be positive");
    for (double v : q.data())
        if (v < 0.0) throw PreconditionError("sinkhorn: negative cost entry");
    detail::check_marginal(mu1, n, "mu1");
    detail::check_marginal(mu2, m, "mu2");

    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    std::vector<double> log_mu1(n), log_mu2(m);
    for (std::size_t i = 0; i < n; ++i) log_mu1[i] = mu1[i] > 0.0 ? std::log(mu1[i]) : kNegInf;
    for (std::size_t j = 0; j < m; ++j) log_mu2[j] = mu2[j] > 0.0 ? std::log(mu2[j]) : kNegInf;

    std::vector<double> f(n, 0.0), g(m, 0.0), buf(std::max(n, m));
    TransportPlan plan;
    plan.mu1.assign(mu1.begin(), mu1.end());
    plan.mu2.assign(mu2.begin(), mu2.end());
    plan.epsilon = epsilon;

    auto row_residual = [&] {
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < m; ++j) s += std::exp((f[i] + g[j] - q(i, j)) / epsilon);
            worst = std::max(worst, std::abs(s - mu1[i]));
        }
        return worst;
    };

    std::size_t it = 0;
    double residual = std::numeric_limits<double>::infinity();
    while (it < max_iters) {
        ++it;
        for (std::size_t i = 0; i < n; ++i) {
            if (log_mu1[i] == kNegInf) {
                f[i] = kNegInf;
                continue;
            }
            for (std::size_t j = 0; j < m; ++j) buf[j] = (g[j] - q(i, j)) / epsilon;
            f[i] = epsilon * (log_mu1[i] - detail::log_sum_exp({buf.data(), m}));
        }
        for (std::size_t j = 0; j < m; ++j) {
            if (log_mu2[j] == kNegInf) {
                g[j] = kNegInf;
                continue;
            }
            for (std::size_t i = 0; i < n; ++i) buf[i] = (f[i] - q(i, j)) / epsilon;
            g[j] = epsilon * (log_mu2[j] - detail::log_sum_exp({buf.data(), n}));
        }
        residual = row_residual();
        if (residual <= tol) break;
    }

    plan.t = Matrix(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const double v = std::exp((f[i] + g[j] - q(i, j)) / epsilon);
            plan.t(i, j) = std::isfinite(v) ? v : 0.0;
        }
    double col_res = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += plan.t(i, j);
        col_res = std::max(col_res, std::abs(s - mu2[j]));
    }
    plan.iterations_used = it;
    plan.row_residual = residual;
    plan.col_residual = col_res;
    plan.converged = residual <= tol && col_res <= tol;
    return plan;
}

inline TransportPlan sinkhorn(const CostMatrix& cost, const SinkhornOptions& opt = {}) {
    return sinkhorn(cost, uniform_marginal(cost.q.rows()), uniform_marginal(cost.q.cols()),
                    default_epsilon(cost.q, opt.epsilon_scale), opt.max_iters, opt.tol);
}

// T diag(1 / colsum(T)): column j becomes convex weights over the new classes.
inline Matrix barycentric_project(const TransportPlan& plan) {
    const Matrix& t = plan.t;
    Matrix out = t;
    for (std::size_t j = 0; j < t.cols(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < t.rows(); ++i) s += t(i, j);
        if (!(s > 0.0)) throw NumericError("barycentric_project: column " + std::to_string(j) + " carries no mass");
        for (std::size_t i = 0; i < t.rows(); ++i) out(i, j) = t(i, j) / s;
    }
    return out;
}

inline Matrix transport_classifier(const Matrix& w_new, const Matrix& t_bar) {
    if (w_new.cols() != t_bar.rows())
        throw ShapeError("transport_classifier: " + shape_str(w_new) + " * " + shape_str(t_bar));
    return mat_mul(w_new, t_bar);
}

struct ConsolidatedClassifier {
    Matrix weights;
    double alpha_w = 0.5;
};

// (1 - alpha_w) * w_old + alpha_w * w_hat; the endpoints return an input verbatim.
inline ConsolidatedClassifier consolidate_old(const Matrix& w_old, const Matrix& w_hat, double alpha_w) {
    if (!w_old.same_shape(w_hat))
        throw ShapeError("consolidate_old: " + shape_str(w_old) + " vs " + shape_str(w_hat));
    if (!(alpha_w >= 0.0 && alpha_w <= 1.0)) throw PreconditionError("consolidate_old: alpha_w outside [0, 1]");
    if (alpha_w == 0.0) return {w_old, alpha_w};
    if (alpha_w == 1.0) return {w_hat, alpha_w};
    Matrix out(w_old.rows(), w_old.cols());
    for (std::size_t i = 0; i < out.size(); ++i)
        out.data()[i] = (1.0 - alpha_w) * w_old.data()[i] + alpha_w * w_hat.data()[i];
    return {std::move(out), alpha_w};
}

}  // namespace duct
