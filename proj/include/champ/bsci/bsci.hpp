#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "champ/bsci/svm.hpp"
#include "champ/data/backdoor.hpp"
#include "champ/data/dataset.hpp"
#include "champ/nn/model.hpp"
#include "champ/rng.hpp"

namespace champ::bsci {

struct BsciConfig {
    int R = 6;
    std::vector<double> p_levels = {0.3, 0.2, 0.1, 0.0, 0.0, 0.0};
    int ref_epochs = 1;
    double lr = 0.01;
    int batch = 32;
    SvmConfig svm;

    void validate() const {
        if (R < 2) throw std::invalid_argument("bsci: R must be >= 2");
        if (static_cast<int>(p_levels.size()) != R)
            throw std::invalid_argument("bsci: need exactly R poison levels");
        bool has_zero = false, has_pos = false;
        for (double p : p_levels) {
            if (p < 0.0 || p > 1.0)
                throw std::invalid_argument("bsci: poison levels must lie in [0,1]");
            (p > 0.0 ? has_pos : has_zero) = true;
        }
        if (!has_zero || !has_pos)
            throw std::invalid_argument(
                "bsci: poison levels must include a zero and a positive entry");
        if (ref_epochs < 0)
            throw std::invalid_argument("bsci: ref_epochs must be >= 0");
        svm.validate();
    }

    // Parses "R=<int>,p=<csv>,epochs=<int>,degree=<int>,C=<real>,tol=<real>".
    // Comma-separated items without '=' extend the preceding p list, so
    // "p=0.3,0.2,0.1,0,0,0" reads naturally.
    static BsciConfig parse(const std::string& text);
};

inline BsciConfig BsciConfig::parse(const std::string& text) {
    BsciConfig cfg;
    std::stringstream ss(text);
    std::string item;
    bool in_p_list = false;
    std::vector<double> levels;
    bool p_seen = false;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            if (!in_p_list)
                throw std::invalid_argument("bsci: expected k=v, got '" + item + "'");
            try {
                levels.push_back(std::stod(item));
            } catch (const std::exception&) {
                throw std::invalid_argument("bsci: bad poison level '" + item + "'");
            }
            continue;
        }
        in_p_list = false;
        if (eq == 0 || eq + 1 == item.size())
            throw std::invalid_argument("bsci: expected k=v, got '" + item + "'");
        const std::string key = item.substr(0, eq);
        const std::string val = item.substr(eq + 1);
        try {
            if (key == "R") {
                cfg.R = std::stoi(val);
            } else if (key == "p") {
                levels.clear();
                levels.push_back(std::stod(val));
                p_seen = true;
                in_p_list = true;
            } else if (key == "epochs") {
                cfg.ref_epochs = std::stoi(val);
            } else if (key == "degree") {
                cfg.svm.degree = std::stoi(val);
            } else if (key == "C") {
                cfg.svm.C = std::stod(val);
            } else if (key == "tol") {
                cfg.svm.tol = std::stod(val);
            } else {
                throw std::invalid_argument("bsci: unknown parameter '" + key + "'");
            }
        } catch (const std::invalid_argument&) {
            throw;
        } catch (const std::exception&) {
            throw std::invalid_argument("bsci: bad value for " + key + ": '" + val + "'");
        }
    }
    if (p_seen) cfg.p_levels = std::move(levels);
    cfg.validate();
    return cfg;
}

struct SideChannelSignal {
    double v = 0.0;
    int round = 0;
    int sample_count = 0;
};

struct AttackRecord {
    std::vector<double> z;  // softmax output vector
    int member = 0;         // 1 if the producing model trained on poisoned data
};

// Disjoint near-equal shards of the malicious client's clean data, shuffled
// so every shard sees the same class mix in expectation.
inline std::vector<Dataset> split_reference(const Dataset& data, int R,
                                            std::uint64_t seed) {
    if (R < 1) throw std::invalid_argument("bsci: R must be >= 1");
    if (static_cast<int>(data.items.size()) < R)
        throw std::invalid_argument("bsci: fewer samples than reference shards");
    std::vector<std::size_t> order(data.items.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, "bsci-split"));
    rng.shuffle(order);

    const std::size_t base = order.size() / R;
    const std::size_t extra = order.size() % R;
    std::vector<Dataset> shards;
    shards.reserve(R);
    std::size_t at = 0;
    for (int r = 0; r < R; ++r) {
        const std::size_t take = base + (static_cast<std::size_t>(r) < extra ? 1 : 0);
        Dataset shard;
        shard.class_count = data.class_count;
        shard.items.reserve(take);
        for (std::size_t i = 0; i < take; ++i) shard.items.push_back(data.items[order[at++]]);
        shards.push_back(std::move(shard));
    }
    return shards;
}

// Reference models fine-tuned from the current global at graded poison levels;
// second element marks models whose shard was poisoned (p_r > 0).
inline std::vector<std::pair<nn::Model, int>> train_reference_models(
    const nn::Model& init, const std::vector<Dataset>& shards,
    const std::vector<double>& p_levels, const data::BackdoorSpec& spec, int ref_epochs,
    double lr, int batch, std::uint64_t seed) {
    if (shards.size() != p_levels.size())
        throw std::invalid_argument("bsci: shards/p_levels mismatch");
    std::vector<std::pair<nn::Model, int>> out;
    out.reserve(shards.size());
    for (std::size_t r = 0; r < shards.size(); ++r) {
        const double p = p_levels[r];
        Dataset local = p > 0.0
                            ? data::poison_dataset(shards[r], spec, p,
                                                   derive_seed(seed, "bsci-poison", r))
                            : shards[r];
        nn::Model model =
            ref_epochs == 0
                ? init
                : nn::train_local(init, local, ref_epochs, lr, batch, std::nullopt,
                                  derive_seed(seed, "bsci-train", r));
        out.emplace_back(std::move(model), p > 0.0 ? 1 : 0);
    }
    return out;
}

// One record per (reference model, triggered sample): the model's softmax
// output labeled by whether that model saw poisoned data.
inline std::vector<AttackRecord> collect_attack_dataset(
    const std::vector<std::pair<nn::Model, int>>& ref_models,
    const std::vector<Image>& backdoored_samples) {
    if (backdoored_samples.empty())
        throw std::invalid_argument("bsci: no probe samples");
    std::vector<AttackRecord> records;
    records.reserve(ref_models.size() * backdoored_samples.size());
    for (const auto& [model, poisoned] : ref_models) {
        const auto logits = nn::forward(model, backdoored_samples);
        for (const auto& row : logits)
            records.push_back({nn::softmax(row), poisoned});
    }
    return records;
}

inline MembershipClassifier train_membership_classifier(
    const std::vector<AttackRecord>& records, const SvmConfig& config) {
    std::vector<std::vector<double>> points;
    std::vector<int> labels;
    points.reserve(records.size());
    labels.reserve(records.size());
    for (const auto& rec : records) {
        points.push_back(rec.z);
        labels.push_back(rec.member ? 1 : -1);
    }
    return train_svm(points, labels, config);
}

inline SideChannelSignal infer_v(const nn::Model& global,
                                 const std::vector<Image>& backdoored_samples,
                                 const MembershipClassifier& clf, int round = 0) {
    if (backdoored_samples.empty())
        throw std::invalid_argument("bsci: no probe samples");
    const auto logits = nn::forward(global, backdoored_samples);
    int members = 0;
    for (const auto& row : logits)
        if (clf.predict_member(nn::softmax(row))) ++members;
    SideChannelSignal sig;
    sig.round = round;
    sig.sample_count = static_cast<int>(backdoored_samples.size());
    sig.v = static_cast<double>(members) / static_cast<double>(sig.sample_count);
    return sig;
}

// Triggered copies of every source-class sample in the malicious client's data.
inline std::vector<Image> probe_samples(const Dataset& malicious_data,
                                        const data::BackdoorSpec& spec) {
    std::vector<Image> probes;
    for (const auto& item : malicious_data.items) {
        if (item.label == spec.source_class) {
            Image img = item.image;
            data::apply_trigger(img, spec);
            probes.push_back(std::move(img));
        }
    }
    if (probes.empty())
        throw std::invalid_argument("bsci: malicious data holds no source-class samples");
    return probes;
}

// Full side-channel round: shard, train graded reference models, fit the
// membership classifier, probe the global model.
inline SideChannelSignal run_bsci_round(const nn::Model& global,
                                        const Dataset& malicious_data,
                                        const BsciConfig& config,
                                        const data::BackdoorSpec& spec,
                                        std::uint64_t seed, int round = 0) {
    config.validate();
    const auto shards = split_reference(malicious_data, config.R, seed);
    const auto refs =
        train_reference_models(global, shards, config.p_levels, spec, config.ref_epochs,
                               config.lr, config.batch, seed);
    const auto probes = probe_samples(malicious_data, spec);
    const auto records = collect_attack_dataset(refs, probes);
    const auto clf = train_membership_classifier(records, config.svm);
    return infer_v(global, probes, clf, round);
}

}  // namespace champ::bsci
