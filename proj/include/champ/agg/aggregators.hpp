#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "champ/vecmath.hpp"

namespace champ::agg {

struct AggregationOutcome {
    ParamVector global;
    std::optional<std::vector<int>> selected;     // client ids, ascending
    std::optional<std::vector<double>> scores;    // per-client rule-specific score
    std::optional<int> iterations;                // rfa only
};

namespace detail {

inline void require_updates(const std::vector<ParamVector>& updates) {
    if (updates.empty()) throw std::invalid_argument("aggregation: no updates");
    for (const auto& u : updates)
        if (u.size() != updates[0].size())
            throw std::invalid_argument("aggregation: updates differ in length");
}

inline ParamVector mean_of(const std::vector<ParamVector>& updates,
                           const std::vector<int>& ids) {
    ParamVector out(updates[0].size(), 0.0);
    for (int id : ids) axpy(1.0, updates[id], out);
    const double inv = 1.0 / static_cast<double>(ids.size());
    for (double& v : out) v *= inv;
    return out;
}

inline std::vector<int> all_ids(std::size_t n) {
    std::vector<int> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    return ids;
}

// Indices of clients sorted by (score, id); id break keeps runs deterministic.
inline std::vector<int> rank_by_score(const std::vector<double>& scores) {
    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores[a] < scores[b]; });
    return order;
}

}  // namespace detail

// Coordinate-wise arithmetic mean.
inline AggregationOutcome fed_avg(const std::vector<ParamVector>& updates) {
    detail::require_updates(updates);
    return {detail::mean_of(updates, detail::all_ids(updates.size())), std::nullopt,
            std::nullopt, std::nullopt};
}

// Coordinate-wise median; even N averages the two central values.
inline AggregationOutcome median_agg(const std::vector<ParamVector>& updates) {
    detail::require_updates(updates);
    const std::size_t n = updates.size();
    const std::size_t k_len = updates[0].size();
    ParamVector out(k_len);
    std::vector<double> column(n);
    for (std::size_t k = 0; k < k_len; ++k) {
        for (std::size_t i = 0; i < n; ++i) column[i] = updates[i][k];
        std::sort(column.begin(), column.end());
        out[k] = (n % 2 == 1) ? column[n / 2]
                              : 0.5 * (column[n / 2 - 1] + column[n / 2]);
    }
    return {std::move(out), std::nullopt, std::nullopt, std::nullopt};
}

// Drops the floor(beta*N) largest and smallest per coordinate, averages the rest.
inline AggregationOutcome trimmed_mean_agg(const std::vector<ParamVector>& updates,
                                           double beta) {
    detail::require_updates(updates);
    const std::size_t n = updates.size();
    const std::size_t trim = static_cast<std::size_t>(beta * static_cast<double>(n));
    if (n <= 2 * trim)
        throw std::invalid_argument("trimmed_mean: beta trims every update (N=" +
                                    std::to_string(n) + ", trim=" + std::to_string(trim) +
                                    " per side)");
    const std::size_t k_len = updates[0].size();
    ParamVector out(k_len);
    std::vector<double> column(n);
    const double inv = 1.0 / static_cast<double>(n - 2 * trim);
    for (std::size_t k = 0; k < k_len; ++k) {
        for (std::size_t i = 0; i < n; ++i) column[i] = updates[i][k];
        std::sort(column.begin(), column.end());
        double s = 0.0;
        for (std::size_t i = trim; i < n - trim; ++i) s += column[i];
        out[k] = s * inv;
    }
    return {std::move(out), std::nullopt, std::nullopt, std::nullopt};
}

// Sum of squared distances to the N-f-2 nearest neighbours, per client.
inline std::vector<double> krum_scores(const std::vector<ParamVector>& updates, int f) {
    detail::require_updates(updates);
    const int n = static_cast<int>(updates.size());
    const int neighbours = n - f - 2;
    if (neighbours < 1)
        throw std::invalid_argument("krum: need N-f-2 >= 1 (N=" + std::to_string(n) +
                                    ", f=" + std::to_string(f) + ")");
    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            dist[i][j] = dist[j][i] = sq_distance(updates[i], updates[j]);

    std::vector<double> scores(n);
    std::vector<double> row;
    for (int i = 0; i < n; ++i) {
        row.clear();
        for (int j = 0; j < n; ++j)
            if (j != i) row.push_back(dist[i][j]);
        std::sort(row.begin(), row.end());
        scores[i] = std::accumulate(row.begin(), row.begin() + neighbours, 0.0);
    }
    return scores;
}

inline AggregationOutcome krum_agg(const std::vector<ParamVector>& updates, int f) {
    auto scores = krum_scores(updates, f);
    const auto order = detail::rank_by_score(scores);
    const int best = order.front();
    return {updates[best], std::vector<int>{best}, std::move(scores), std::nullopt};
}

inline AggregationOutcome multi_krum_agg(const std::vector<ParamVector>& updates, int m,
                                         int f) {
    if (m < 1 || m > static_cast<int>(updates.size()))
        throw std::invalid_argument("multi_krum: m must be in [1, N]");
    auto scores = krum_scores(updates, f);
    const auto order = detail::rank_by_score(scores);
    std::vector<int> selected(order.begin(), order.begin() + m);
    std::sort(selected.begin(), selected.end());
    return {detail::mean_of(updates, selected), std::move(selected), std::move(scores),
            std::nullopt};
}

// Repeated Krum with removal picks m clients, then a coordinate-wise
// trimmed mean (floor(beta*m) per side) runs over the picked set.
inline AggregationOutcome bulyan_agg(const std::vector<ParamVector>& updates, int m, int f,
                                     double beta) {
    detail::require_updates(updates);
    const int n = static_cast<int>(updates.size());
    if (n - 2 * f < 1)
        throw std::invalid_argument("bulyan: need N-2f >= 1");
    if (m < 1 || m > n) throw std::invalid_argument("bulyan: m must be in [1, N]");
    if (n - m + 1 - f - 2 < 1)
        throw std::invalid_argument("bulyan: selection pool exhausts (need N >= m+f+2)");

    std::vector<int> pool = detail::all_ids(updates.size());
    std::vector<int> selected;
    std::optional<std::vector<double>> first_scores;
    while (static_cast<int>(selected.size()) < m) {
        std::vector<ParamVector> sub;
        sub.reserve(pool.size());
        for (int id : pool) sub.push_back(updates[id]);
        auto scores = krum_scores(sub, f);
        if (!first_scores) first_scores = scores;
        const int best_local = detail::rank_by_score(scores).front();
        selected.push_back(pool[best_local]);
        pool.erase(pool.begin() + best_local);
    }
    std::sort(selected.begin(), selected.end());

    std::vector<ParamVector> chosen;
    chosen.reserve(selected.size());
    for (int id : selected) chosen.push_back(updates[id]);
    auto out = trimmed_mean_agg(chosen, beta);
    return {std::move(out.global), std::move(selected), std::move(first_scores),
            std::nullopt};
}

// Geometric median by Weiszfeld iteration with epsilon-smoothed weights.
inline AggregationOutcome rfa_agg(const std::vector<ParamVector>& updates, int max_iter,
                                  double epsilon, double tol) {
    detail::require_updates(updates);
    if (max_iter < 1) throw std::invalid_argument("rfa: max_iter must be >= 1");
    ParamVector v = fed_avg(updates).global;
    int iters = 0;
    for (int it = 0; it < max_iter; ++it) {
        ParamVector next(v.size(), 0.0);
        double wsum = 0.0;
        for (const auto& g : updates) {
            const double w = 1.0 / std::max(epsilon, l2_distance(v, g));
            axpy(w, g, next);
            wsum += w;
        }
        for (double& x : next) x /= wsum;
        const double step = l2_distance(next, v);
        v = std::move(next);
        iters = it + 1;
        if (step < tol) break;
    }
    return {std::move(v), std::nullopt, std::nullopt, iters};
}

// Score of a client is the cosine between its delta from the previous global
// and the mean delta; the floor(th*N) highest and lowest scores are dropped.
inline AggregationOutcome align_ins_agg(const std::vector<ParamVector>& updates,
                                        const ParamVector& prev_global, double th) {
    detail::require_updates(updates);
    const std::size_t n = updates.size();
    require_same_size(updates[0], prev_global, "align_ins");

    std::vector<ParamVector> deltas;
    deltas.reserve(n);
    for (const auto& g : updates) deltas.push_back(sub(g, prev_global));
    ParamVector mean_delta(prev_global.size(), 0.0);
    for (const auto& d : deltas) axpy(1.0 / static_cast<double>(n), d, mean_delta);

    const double mean_norm = l2_norm(mean_delta);
    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double dn = l2_norm(deltas[i]);
        scores[i] = (dn == 0.0 || mean_norm == 0.0)
                        ? 0.0
                        : dot(deltas[i], mean_delta) / (dn * mean_norm);
    }

    const std::size_t trim = static_cast<std::size_t>(th * static_cast<double>(n));
    if (n <= 2 * trim)
        throw std::invalid_argument("align_ins: threshold trims every client");
    const auto order = detail::rank_by_score(scores);
    std::vector<int> kept(order.begin() + trim, order.end() - trim);
    std::sort(kept.begin(), kept.end());
    return {detail::mean_of(updates, kept), std::move(kept), std::move(scores),
            std::nullopt};
}

// Per-coordinate sign agreement flips the server learning rate: coordinates
// where |sum of delta signs| falls below theta are applied with -lr.
inline AggregationOutcome rlr_agg(const std::vector<ParamVector>& updates,
                                  const ParamVector& prev_global, double theta,
                                  double lr) {
    detail::require_updates(updates);
    require_same_size(updates[0], prev_global, "rlr");
    const std::size_t n = updates.size();
    const std::size_t k_len = prev_global.size();
    ParamVector out(k_len);
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < k_len; ++k) {
        double sign_sum = 0.0, delta_mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = updates[i][k] - prev_global[k];
            sign_sum += d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
            delta_mean += d * inv;
        }
        const double rate = std::abs(sign_sum) >= theta ? lr : -lr;
        out[k] = prev_global[k] + rate * delta_mean;
    }
    return {std::move(out), std::nullopt, std::nullopt, std::nullopt};
}

// FoolsGold over accumulated per-client histories: max pairwise cosine with
// pardoning, then a clipped logit turns similarity into a weight.
inline AggregationOutcome fools_gold_agg(const std::vector<ParamVector>& updates,
                                         const std::vector<ParamVector>& history) {
    detail::require_updates(updates);
    const std::size_t n = updates.size();
    std::vector<double> lambda(n, 1.0);

    if (!history.empty()) {
        if (history.size() != n)
            throw std::invalid_argument("fools_gold: history size mismatch");
        std::vector<std::vector<double>> cs(n, std::vector<double>(n, 0.0));
        std::vector<double> norms(n);
        for (std::size_t i = 0; i < n; ++i) norms[i] = l2_norm(history[i]);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j && norms[i] > 0.0 && norms[j] > 0.0)
                    cs[i][j] = dot(history[i], history[j]) / (norms[i] * norms[j]);

        std::vector<double> vmax(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) vmax[i] = std::max(vmax[i], cs[i][j]);
        // Pardoning: rescale similarity towards clients with higher maxima.
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j && vmax[j] > vmax[i] && vmax[j] > 0.0)
                    cs[i][j] *= vmax[i] / vmax[j];

        for (std::size_t i = 0; i < n; ++i) {
            double mx = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) mx = std::max(mx, cs[i][j]);
            lambda[i] = 1.0 - mx;
        }
        const double lmax = *std::max_element(lambda.begin(), lambda.end());
        if (lmax > 0.0)
            for (double& l : lambda) l /= lmax;
        for (double& l : lambda) {
            if (l >= 1.0) {
                l = 1.0;
            } else if (l <= 0.0) {
                l = 0.0;
            } else {
                l = std::clamp(std::log(l / (1.0 - l)) + 0.5, 0.0, 1.0);
            }
        }
    }

    ParamVector out(updates[0].size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) axpy(lambda[i], updates[i], out);
    const double invn = 1.0 / static_cast<double>(n);
    for (double& v : out) v *= invn;
    return {std::move(out), std::nullopt, std::move(lambda), std::nullopt};
}

}  // namespace champ::agg
