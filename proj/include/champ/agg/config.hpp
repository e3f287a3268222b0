#pragma once

#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "champ/agg/aggregators.hpp"

namespace champ::agg {

enum class Rule {
    fedavg,
    median,
    trimmed_mean,
    krum,
    multi_krum,
    bulyan,
    rfa,
    align_ins,
    rlr,
    fools_gold,
};

inline const char* rule_name(Rule r) {
    switch (r) {
        case Rule::fedavg: return "fedavg";
        case Rule::median: return "median";
        case Rule::trimmed_mean: return "trimmed_mean";
        case Rule::krum: return "krum";
        case Rule::multi_krum: return "multi_krum";
        case Rule::bulyan: return "bulyan";
        case Rule::rfa: return "rfa";
        case Rule::align_ins: return "align_ins";
        case Rule::rlr: return "rlr";
        case Rule::fools_gold: return "fools_gold";
    }
    throw std::logic_error("rule_name: unknown rule");
}

struct AggregatorConfig {
    Rule rule = Rule::fedavg;
    double beta = 0.2;       // trimmed_mean, bulyan
    int f = 1;               // krum, multi_krum, bulyan
    int m = 3;               // multi_krum, bulyan
    int max_iter = 10;       // rfa
    double epsilon = 1e-10;  // rfa
    double tol = 1e-5;       // rfa
    double th = 0.1;         // align_ins
    double c = 1.0;          // rlr (accepted for CLI compatibility)
    double theta = 1.0;      // rlr sign-agreement threshold
    double lr = 1.0;         // rlr server learning rate

    // Parses "<name>[:<k=v,...>]", e.g. "krum:f=1" or "bulyan:m=3,f=1,beta=0.2".
    static AggregatorConfig parse(const std::string& text);

    void validate(int n_clients) const;
    std::string str() const;
};

namespace detail {

inline std::map<std::string, std::string> parse_kv(const std::string& text,
                                                   const std::string& where) {
    std::map<std::string, std::string> kv;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == item.size())
            throw std::invalid_argument(where + ": expected k=v, got '" + item + "'");
        kv[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return kv;
}

inline double to_real(const std::string& s, const std::string& key) {
    std::size_t pos = 0;
    double v;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("defense: bad value for " + key + ": '" + s + "'");
    }
    if (pos != s.size())
        throw std::invalid_argument("defense: bad value for " + key + ": '" + s + "'");
    return v;
}

inline int to_int(const std::string& s, const std::string& key) {
    const double v = to_real(s, key);
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v)
        throw std::invalid_argument("defense: " + key + " must be an integer, got '" + s +
                                    "'");
    return i;
}

}  // namespace detail

inline AggregatorConfig AggregatorConfig::parse(const std::string& text) {
    AggregatorConfig cfg;
    const auto colon = text.find(':');
    const std::string name = text.substr(0, colon);

    if (name == "fedavg") cfg.rule = Rule::fedavg;
    else if (name == "median") cfg.rule = Rule::median;
    else if (name == "trimmed_mean") cfg.rule = Rule::trimmed_mean;
    else if (name == "krum") cfg.rule = Rule::krum;
    else if (name == "multi_krum") cfg.rule = Rule::multi_krum;
    else if (name == "bulyan") cfg.rule = Rule::bulyan;
    else if (name == "rfa") cfg.rule = Rule::rfa;
    else if (name == "align_ins") cfg.rule = Rule::align_ins;
    else if (name == "rlr") cfg.rule = Rule::rlr;
    else if (name == "fools_gold") cfg.rule = Rule::fools_gold;
    else throw std::invalid_argument("defense: unknown rule '" + name + "'");

    if (colon == std::string::npos) return cfg;
    for (const auto& [key, val] : detail::parse_kv(text.substr(colon + 1), "defense")) {
        if (key == "beta") cfg.beta = detail::to_real(val, key);
        else if (key == "f") cfg.f = detail::to_int(val, key);
        else if (key == "m") cfg.m = detail::to_int(val, key);
        else if (key == "max_iter") cfg.max_iter = detail::to_int(val, key);
        else if (key == "epsilon") cfg.epsilon = detail::to_real(val, key);
        else if (key == "tol") cfg.tol = detail::to_real(val, key);
        else if (key == "th") cfg.th = detail::to_real(val, key);
        else if (key == "c") cfg.c = detail::to_real(val, key);
        else if (key == "theta") cfg.theta = detail::to_real(val, key);
        else if (key == "lr") cfg.lr = detail::to_real(val, key);
        else throw std::invalid_argument("defense: unknown parameter '" + key + "'");
    }
    return cfg;
}

inline void AggregatorConfig::validate(int n_clients) const {
    const int n = n_clients;
    if (n < 1) throw std::invalid_argument("defense: need at least one client");
    switch (rule) {
        case Rule::trimmed_mean: {
            const int trim = static_cast<int>(beta * n);
            if (beta < 0.0 || n - 2 * trim <= 0)
                throw std::invalid_argument("defense: trimmed_mean beta trims all of N=" +
                                            std::to_string(n));
            break;
        }
        case Rule::krum:
            if (n - f - 2 < 1)
                throw std::invalid_argument("defense: krum needs N-f-2 >= 1");
            break;
        case Rule::multi_krum:
            if (n - f - 2 < 1)
                throw std::invalid_argument("defense: multi_krum needs N-f-2 >= 1");
            if (m < 1 || m > n)
                throw std::invalid_argument("defense: multi_krum m must be in [1, N]");
            break;
        case Rule::bulyan:
            if (n - 2 * f < 1)
                throw std::invalid_argument("defense: bulyan needs N-2f >= 1");
            if (m < 1 || m > n)
                throw std::invalid_argument("defense: bulyan m must be in [1, N]");
            if (n - m + 1 - f - 2 < 1)
                throw std::invalid_argument("defense: bulyan needs N >= m+f+2");
            break;
        case Rule::rfa:
            if (max_iter < 1)
                throw std::invalid_argument("defense: rfa max_iter must be >= 1");
            break;
        case Rule::align_ins:
            if (th <= 0.0 || th >= 0.5)
                throw std::invalid_argument("defense: align_ins th must be in (0, 0.5)");
            break;
        default:
            break;
    }
}

inline std::string AggregatorConfig::str() const {
    std::ostringstream os;
    os << rule_name(rule);
    switch (rule) {
        case Rule::trimmed_mean: os << ":beta=" << beta; break;
        case Rule::krum: os << ":f=" << f; break;
        case Rule::multi_krum: os << ":m=" << m << ",f=" << f; break;
        case Rule::bulyan: os << ":m=" << m << ",f=" << f << ",beta=" << beta; break;
        case Rule::rfa:
            os << ":max_iter=" << max_iter << ",epsilon=" << epsilon << ",tol=" << tol;
            break;
        case Rule::align_ins: os << ":th=" << th; break;
        case Rule::rlr: os << ":theta=" << theta << ",lr=" << lr; break;
        default: break;
    }
    return os.str();
}

// Whether the rule reports a selected-client set (drives Fig. 6-style traces).
inline bool reports_selection(Rule r) {
    return r == Rule::krum || r == Rule::multi_krum || r == Rule::bulyan ||
           r == Rule::align_ins;
}

inline AggregationOutcome aggregate(const AggregatorConfig& cfg,
                                    const std::vector<ParamVector>& updates,
                                    const ParamVector& prev_global,
                                    const std::vector<ParamVector>& history) {
    cfg.validate(static_cast<int>(updates.size()));
    switch (cfg.rule) {
        case Rule::fedavg: return fed_avg(updates);
        case Rule::median: return median_agg(updates);
        case Rule::trimmed_mean: return trimmed_mean_agg(updates, cfg.beta);
        case Rule::krum: return krum_agg(updates, cfg.f);
        case Rule::multi_krum: return multi_krum_agg(updates, cfg.m, cfg.f);
        case Rule::bulyan: return bulyan_agg(updates, cfg.m, cfg.f, cfg.beta);
        case Rule::rfa: return rfa_agg(updates, cfg.max_iter, cfg.epsilon, cfg.tol);
        case Rule::align_ins: return align_ins_agg(updates, prev_global, cfg.th);
        case Rule::rlr: return rlr_agg(updates, prev_global, cfg.theta, cfg.lr);
        case Rule::fools_gold: return fools_gold_agg(updates, history);
    }
    throw std::logic_error("aggregate: unknown rule");
}

}  // namespace champ::agg
