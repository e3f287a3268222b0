#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "champ/vecmath.hpp"

namespace champ::attack {

// Camouflage distance between a local update and a reference model.
struct ProxMetric {
    enum class Kind { euclidean, cosine, huber };

    // The euclidean penalty is (lambda/2)*||p - r||^2, so lambda scales how
    // hard a given alpha pulls the update toward the reference.  The default
    // matches the stiffness the desk-scale profile is tuned for.
    static constexpr double kDefaultLambda = 4.0;

    Kind kind = Kind::euclidean;
    double delta = 1.0;                // huber only
    double lambda = kDefaultLambda;    // euclidean only: stiffness of the pull

    static ProxMetric euclidean(double lambda = kDefaultLambda) {
        if (!(lambda > 0.0))
            throw std::invalid_argument("euclidean: lambda must be > 0");
        return {Kind::euclidean, 1.0, lambda};
    }
    static ProxMetric cosine() { return {Kind::cosine, 1.0, 1.0}; }
    static ProxMetric huber(double delta = 1.0) {
        if (!(delta > 0.0)) throw std::invalid_argument("huber: delta must be > 0");
        return {Kind::huber, delta, 1.0};
    }

    std::string name() const {
        switch (kind) {
            case Kind::euclidean: return "euclidean";
            case Kind::cosine: return "cosine";
            case Kind::huber: return "huber";
        }
        return "?";
    }

    // Accepts the CLI spellings "l2[:lambda]", "cos" and "huber[:delta]",
    // plus the long names used in config files.
    static ProxMetric parse(const std::string& text) {
        const auto trailing_number = [](const std::string& arg, const char* what) {
            try {
                std::size_t pos = 0;
                const double v = std::stod(arg, &pos);
                if (pos != arg.size()) throw std::invalid_argument(arg);
                return v;
            } catch (const std::exception&) {
                throw std::invalid_argument(std::string("prox: bad ") + what + " '" +
                                            arg + "'");
            }
        };
        if (text == "l2" || text == "euclidean") return euclidean();
        if (text == "cos" || text == "cosine") return cosine();
        if (text == "huber") return huber();
        if (text.rfind("l2:", 0) == 0)
            return euclidean(trailing_number(text.substr(3), "lambda"));
        if (text.rfind("euclidean:", 0) == 0)
            return euclidean(trailing_number(text.substr(10), "lambda"));
        if (text.rfind("huber:", 0) == 0)
            return huber(trailing_number(text.substr(6), "delta"));
        throw std::invalid_argument(
            "prox: expected l2[:lambda], cos or huber[:delta], got '" + text + "'");
    }
};

// Value and gradient (w.r.t. params) of the proximity term.
//   euclidean: lambda * ||p - r||^2 / 2  grad lambda * (p - r)
//   cosine:    1 - cos(p, r)             analytic grad
//   huber:     mean_k huber(p_k - r_k)   per-coordinate clamped grad
inline std::pair<double, ParamVector> prox_value_and_grad(const ProxMetric& metric,
                                                          const ParamVector& params,
                                                          const ParamVector& reference) {
    require_same_size(params, reference, "prox");
    const std::size_t K = params.size();
    ParamVector grad(K, 0.0);
    switch (metric.kind) {
        case ProxMetric::Kind::euclidean: {
            // Proximal form: the pull p -= lr*alpha*lambda*(p - r) contracts
            // toward the reference, so full camouflage (large alpha) pins the
            // update to the reference instead of oscillating.  train_local
            // applies it as an implicit step, which stays contractive for any
            // lambda.
            double value = 0.0;
            for (std::size_t i = 0; i < K; ++i) {
                const double d = params[i] - reference[i];
                value += 0.5 * metric.lambda * d * d;
                grad[i] = metric.lambda * d;
            }
            return {value, std::move(grad)};
        }
        case ProxMetric::Kind::cosine: {
            const double np = l2_norm(params), nr = l2_norm(reference);
            if (np == 0.0 || nr == 0.0)
                throw std::domain_error("cosine prox: zero-norm vector");
            const double pr = dot(params, reference);
            const double c = pr / (np * nr);
            // d/dp [p.r / (|p||r|)] = r/(|p||r|) - (p.r) p / (|p|^3 |r|)
            for (std::size_t i = 0; i < K; ++i)
                grad[i] = -(reference[i] / (np * nr) - pr * params[i] / (np * np * np * nr));
            return {1.0 - c, std::move(grad)};
        }
        case ProxMetric::Kind::huber: {
            const double delta = metric.delta;
            double value = 0.0;
            for (std::size_t i = 0; i < K; ++i) {
                const double d = params[i] - reference[i];
                const double a = std::abs(d);
                if (a <= delta)
                    value += 0.5 * d * d;
                else
                    value += delta * (a - 0.5 * delta);
                grad[i] = std::clamp(d, -delta, delta) / static_cast<double>(K);
            }
            return {value / static_cast<double>(K), std::move(grad)};
        }
    }
    throw std::logic_error("unreachable");
}

}  // namespace champ::attack
