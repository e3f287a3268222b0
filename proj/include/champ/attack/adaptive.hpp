#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace champ::attack {

enum class AlphaMode { bsci, asr };

inline const char* alpha_mode_name(AlphaMode m) {
    return m == AlphaMode::bsci ? "bsci" : "asr";
}

inline AlphaMode parse_alpha_mode(const std::string& s) {
    if (s == "bsci") return AlphaMode::bsci;
    if (s == "asr") return AlphaMode::asr;
    throw std::invalid_argument("alpha-mode: expected bsci or asr, got '" + s + "'");
}

// Sliding window of side-channel (or ASR) feedback driving the balance
// coefficient: high recent success -> low alpha -> poison term dominates.
struct AdaptiveState {
    int window = 3;
    std::vector<double> history;  // most recent last
    AlphaMode mode = AlphaMode::bsci;

    void push(double v) {
        if (v < 0.0 || v > 1.0)
            throw std::invalid_argument("adaptive: feedback must lie in [0,1], got " +
                                        std::to_string(v));
        history.push_back(v);
    }
};

inline double compute_alpha(const AdaptiveState& state) {
    if (state.window < 1) throw std::invalid_argument("adaptive: window must be >= 1");
    if (state.history.empty()) return 1.0;  // warm-up: full camouflage
    const std::size_t k =
        std::min<std::size_t>(state.window, state.history.size());
    double s = 0.0;
    for (std::size_t i = state.history.size() - k; i < state.history.size(); ++i)
        s += state.history[i];
    return 1.0 - s / static_cast<double>(k);
}

}  // namespace champ::attack
