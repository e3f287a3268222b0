#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "champ/vecmath.hpp"

namespace champ::bsci {

struct SvmConfig {
    int degree = 3;       // polynomial kernel degree
    double gamma = 1.0;   // kernel scale
    double coef0 = 1.0;   // kernel intercept
    double C = 1.0;       // box constraint
    double tol = 0.001;   // KKT tolerance
    int max_passes = 5;   // consecutive clean sweeps before stopping
    int max_iter = 2000;  // hard bound on outer sweeps
    bool trace_dual = false;  // record the dual objective per accepted update

    void validate() const {
        if (degree < 1) throw std::invalid_argument("svm: degree must be >= 1");
        if (C <= 0.0) throw std::invalid_argument("svm: C must be positive");
        if (tol <= 0.0) throw std::invalid_argument("svm: tol must be positive");
        if (max_passes < 1 || max_iter < 1)
            throw std::invalid_argument("svm: iteration bounds must be >= 1");
    }
};

inline double poly_kernel(const SvmConfig& cfg, const std::vector<double>& a,
                          const std::vector<double>& b) {
    return std::pow(cfg.gamma * dot(a, b) + cfg.coef0, cfg.degree);
}

// Binary kernel SVM with {-1,+1} labels; decision threshold 0.
struct MembershipClassifier {
    SvmConfig config;
    std::vector<std::vector<double>> support_vectors;
    std::vector<double> dual_coef;  // alpha_i * y_i per support vector
    double bias = 0.0;
    std::vector<double> dual_objective_trace;  // filled only when trace_dual is set

    double decision(const std::vector<double>& z) const {
        double f = bias;
        for (std::size_t i = 0; i < support_vectors.size(); ++i)
            f += dual_coef[i] * poly_kernel(config, support_vectors[i], z);
        return f;
    }

    bool predict_member(const std::vector<double>& z) const { return decision(z) >= 0.0; }
};

namespace detail {

inline double dual_objective(const std::vector<double>& alpha,
                             const std::vector<int>& y,
                             const std::vector<std::vector<double>>& kernel) {
    const std::size_t n = alpha.size();
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) obj += alpha[i];
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            obj -= 0.5 * alpha[i] * alpha[j] * y[i] * y[j] * kernel[i][j];
    return obj;
}

}  // namespace detail

// Sequential minimal optimization (simplified Platt variant): violating index
// i is swept in order, its partner j maximizes |E_i - E_j| with lowest index
// on ties, so training is deterministic without any RNG. Decision values are
// cached and updated incrementally after every accepted pair step.
inline MembershipClassifier train_svm(const std::vector<std::vector<double>>& points,
                                      const std::vector<int>& labels,
                                      const SvmConfig& config) {
    config.validate();
    const std::size_t n = points.size();
    if (n != labels.size()) throw std::invalid_argument("svm: points/labels mismatch");
    if (n < 2) throw std::invalid_argument("svm: need at least two training points");
    bool has_pos = false, has_neg = false;
    for (int y : labels) {
        if (y == 1) has_pos = true;
        else if (y == -1) has_neg = true;
        else throw std::invalid_argument("svm: labels must be -1 or +1");
    }
    if (!has_pos || !has_neg)
        throw std::invalid_argument("svm: both classes must be present");
    for (const auto& p : points)
        if (p.size() != points[0].size())
            throw std::invalid_argument("svm: points differ in dimension");

    std::vector<std::vector<double>> kernel(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j)
            kernel[i][j] = kernel[j][i] = poly_kernel(config, points[i], points[j]);

    std::vector<double> alpha(n, 0.0);
    double b = 0.0;
    std::vector<double> fx(n, 0.0);  // decision value at each training point
    std::vector<double> trace;

    int passes = 0, sweeps = 0;
    while (passes < config.max_passes && sweeps < config.max_iter) {
        ++sweeps;
        int changed = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double ei = fx[i] - labels[i];
            const double ri = labels[i] * ei;
            if (!((ri < -config.tol && alpha[i] < config.C) ||
                  (ri > config.tol && alpha[i] > 0.0)))
                continue;

            std::size_t j = i == 0 ? 1 : 0;
            double best_gap = -1.0;
            for (std::size_t cand = 0; cand < n; ++cand) {
                if (cand == i) continue;
                const double gap = std::abs(ei - (fx[cand] - labels[cand]));
                if (gap > best_gap) {
                    best_gap = gap;
                    j = cand;
                }
            }
            const double ej = fx[j] - labels[j];

            double lo, hi;
            if (labels[i] != labels[j]) {
                lo = std::max(0.0, alpha[j] - alpha[i]);
                hi = std::min(config.C, config.C + alpha[j] - alpha[i]);
            } else {
                lo = std::max(0.0, alpha[i] + alpha[j] - config.C);
                hi = std::min(config.C, alpha[i] + alpha[j]);
            }
            if (lo >= hi) continue;
            const double eta = 2.0 * kernel[i][j] - kernel[i][i] - kernel[j][j];
            if (eta >= 0.0) continue;

            const double aj_old = alpha[j], ai_old = alpha[i];
            double aj = aj_old - labels[j] * (ei - ej) / eta;
            aj = std::clamp(aj, lo, hi);
            if (std::abs(aj - aj_old) < 1e-5) continue;
            const double ai = ai_old + labels[i] * labels[j] * (aj_old - aj);

            const double b1 = b - ei - labels[i] * (ai - ai_old) * kernel[i][i] -
                              labels[j] * (aj - aj_old) * kernel[i][j];
            const double b2 = b - ej - labels[i] * (ai - ai_old) * kernel[i][j] -
                              labels[j] * (aj - aj_old) * kernel[j][j];
            const double b_old = b;
            alpha[i] = ai;
            alpha[j] = aj;
            if (ai > 0.0 && ai < config.C) b = b1;
            else if (aj > 0.0 && aj < config.C) b = b2;
            else b = 0.5 * (b1 + b2);

            const double di = (ai - ai_old) * labels[i];
            const double dj = (aj - aj_old) * labels[j];
            const double db = b - b_old;
            for (std::size_t k = 0; k < n; ++k)
                fx[k] += di * kernel[i][k] + dj * kernel[j][k] + db;

            if (config.trace_dual)
                trace.push_back(detail::dual_objective(alpha, labels, kernel));
            ++changed;
        }
        passes = changed == 0 ? passes + 1 : 0;
    }

    MembershipClassifier clf;
    clf.config = config;
    clf.bias = b;
    for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] > 0.0) {
            clf.support_vectors.push_back(points[i]);
            clf.dual_coef.push_back(alpha[i] * labels[i]);
        }
    }
    clf.dual_objective_trace = std::move(trace);
    return clf;
}

}  // namespace champ::bsci
