#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

#include "champ/types.hpp"

namespace champ {

inline void require_same_size(std::span<const double> a, std::span<const double> b,
                              const char* what) {
    if (a.size() != b.size())
        throw std::invalid_argument(std::string(what) + ": vector length mismatch (" +
                                    std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()) + ")");
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    require_same_size(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double sq_distance(std::span<const double> a, std::span<const double> b) {
    require_same_size(a, b, "sq_distance");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline double l2_distance(std::span<const double> a, std::span<const double> b) {
    return std::sqrt(sq_distance(a, b));
}

// cos(a, b); throws if either vector has zero norm.
inline double cosine(std::span<const double> a, std::span<const double> b) {
    const double na = l2_norm(a), nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0)
        throw std::domain_error("cosine: zero-norm vector");
    return dot(a, b) / (na * nb);
}

// y += s * x
inline void axpy(double s, std::span<const double> x, std::span<double> y) {
    require_same_size(x, y, "axpy");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

inline ParamVector add(std::span<const double> a, std::span<const double> b) {
    require_same_size(a, b, "add");
    ParamVector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline ParamVector sub(std::span<const double> a, std::span<const double> b) {
    require_same_size(a, b, "sub");
    ParamVector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline ParamVector scaled(std::span<const double> a, double s) {
    ParamVector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
    return r;
}

inline bool all_finite(std::span<const double> a) {
    for (double v : a)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace champ
