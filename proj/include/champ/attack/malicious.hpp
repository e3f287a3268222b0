#pragma once

#include <set>
#include <stdexcept>
#include <string>

#include "champ/attack/adaptive.hpp"
#include "champ/attack/prox.hpp"
#include "champ/data/backdoor.hpp"
#include "champ/nn/model.hpp"

namespace champ::attack {

enum class AttackKind { none, vanilla, champ };

inline const char* attack_kind_name(AttackKind k) {
    switch (k) {
        case AttackKind::none: return "none";
        case AttackKind::vanilla: return "vanilla";
        case AttackKind::champ: return "champ";
    }
    throw std::logic_error("attack_kind_name: unknown kind");
}

inline AttackKind parse_attack_kind(const std::string& s) {
    if (s == "none") return AttackKind::none;
    if (s == "vanilla") return AttackKind::vanilla;
    if (s == "champ") return AttackKind::champ;
    throw std::invalid_argument("attack: expected none, vanilla or champ, got '" + s +
                                "'");
}

struct AttackConfig {
    AttackKind kind = AttackKind::none;
    data::BackdoorSpec backdoor;
    std::set<int> malicious_ids;
    ProxMetric prox = ProxMetric::euclidean();
    int window = 3;
    AlphaMode alpha_mode = AlphaMode::bsci;

    // malicious_ids may stay populated while kind == none; they only take
    // effect once an attack is switched on.
    void validate(int n_clients) const {
        if (kind != AttackKind::none && malicious_ids.empty())
            throw std::invalid_argument("attack: need at least one malicious client");
        if (static_cast<int>(malicious_ids.size()) > n_clients)
            throw std::invalid_argument("attack: more malicious clients than clients");
        for (int id : malicious_ids)
            if (id < 0 || id >= n_clients)
                throw std::invalid_argument("attack: malicious id " + std::to_string(id) +
                                            " out of range");
        if (window < 1) throw std::invalid_argument("attack: window must be >= 1");
    }
};

// One local round of the malicious client: poisoned cross-entropy plus
// alpha-weighted proximity to the incoming global parameters (the camouflage
// term). alpha = 0 reduces exactly to vanilla poisoned training.
inline nn::Model malicious_round(const nn::Model& global, const Dataset& poisoned_data,
                                 double alpha, const ProxMetric& metric, int epochs,
                                 double lr, int batch, std::uint64_t seed) {
    if (alpha < 0.0)
        throw std::invalid_argument("attack: alpha must be non-negative");
    nn::CompositeLoss composite{alpha, metric, global.params};
    return nn::train_local(global, poisoned_data, epochs, lr, batch, composite, seed);
}

}  // namespace champ::attack
