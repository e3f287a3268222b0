#pragma once

#include <chrono>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "champ/agg/config.hpp"
#include "champ/attack/adaptive.hpp"
#include "champ/attack/malicious.hpp"
#include "champ/bsci/bsci.hpp"
#include "champ/sim/config.hpp"

namespace champ::sim {

struct RoundRecord {
    int t = 0;  // 1-based
    std::optional<double> benign_acc;
    std::optional<double> asr;
    std::optional<double> v;
    std::optional<double> alpha;
    std::optional<std::vector<int>> selected;
    std::optional<std::vector<double>> scores;
    double wall_ms = 0.0;
};

struct RunResult {
    std::vector<RoundRecord> rounds;
    nn::Model final_model;
    Dataset clean_test;
    Dataset backdoor_test;
};

// Clean-test accuracy and attack success rate (fraction of triggered
// source-class samples routed to the target class).
inline std::pair<double, double> evaluate(const nn::Model& model,
                                          const Dataset& clean_test,
                                          const Dataset& backdoor_test,
                                          int target_class) {
    if (clean_test.empty() || backdoor_test.empty())
        throw std::invalid_argument("evaluate: empty test set");
    std::vector<Image> imgs;
    imgs.reserve(clean_test.size());
    for (const auto& it : clean_test.items) imgs.push_back(it.image);
    const auto clean_out = nn::forward(model, imgs);
    int correct = 0;
    for (std::size_t i = 0; i < clean_out.size(); ++i)
        if (nn::argmax(clean_out[i]) == clean_test.items[i].label) ++correct;

    imgs.clear();
    imgs.reserve(backdoor_test.size());
    for (const auto& it : backdoor_test.items) imgs.push_back(it.image);
    const auto bd_out = nn::forward(model, imgs);
    int hits = 0;
    for (const auto& row : bd_out)
        if (nn::argmax(row) == target_class) ++hits;

    return {static_cast<double>(correct) / static_cast<double>(clean_test.size()),
            static_cast<double>(hits) / static_cast<double>(backdoor_test.size())};
}

namespace detail {

// Local ASR as the attacker sees it: its own triggered source samples
// against the broadcast global (feeds the asr alpha-mode).
inline double local_asr(const nn::Model& global, const std::vector<Image>& probes,
                        int target_class) {
    const auto out = nn::forward(global, probes);
    int hits = 0;
    for (const auto& row : out)
        if (nn::argmax(row) == target_class) ++hits;
    return static_cast<double>(hits) / static_cast<double>(out.size());
}

}  // namespace detail

inline RunResult run_experiment(const ExperimentConfig& cfg, Dataset train,
                                Dataset test) {
    cfg.validate();
    const std::uint64_t seed = cfg.master_seed;

    if (train.class_count != cfg.model.classes)
        throw std::invalid_argument("run: model classes (" +
                                    std::to_string(cfg.model.classes) +
                                    ") do not match dataset (" +
                                    std::to_string(train.class_count) + ")");
    const auto shards = data::partition_iid(train, cfg.n_clients, seed);

    const bool attacking = cfg.attack.kind != attack::AttackKind::none;
    Dataset backdoor_test;
    std::vector<Dataset> poisoned;          // per malicious client
    std::vector<std::vector<Image>> probes; // per malicious client
    std::vector<int> malicious;             // sorted ids
    if (attacking) {
        cfg.attack.backdoor.validate(test.items.at(0).image.shape, train.class_count);
        backdoor_test = data::backdoor_testset(test, cfg.attack.backdoor);
        for (int id : cfg.attack.malicious_ids) malicious.push_back(id);
        for (int id : malicious) {
            poisoned.push_back(data::poison_dataset(shards[id], cfg.attack.backdoor, 1.0,
                                                    derive_seed(seed, "poison", id)));
            probes.push_back(bsci::probe_samples(shards[id], cfg.attack.backdoor));
        }
    } else {
        // ASR is still reported (as the base rate of the untriggered model).
        data::BackdoorSpec spec = cfg.attack.backdoor;
        spec.validate(test.items.at(0).image.shape, train.class_count);
        backdoor_test = data::backdoor_testset(test, spec);
    }

    const bool champ_attack = cfg.attack.kind == attack::AttackKind::champ;
    attack::AdaptiveState adaptive{cfg.attack.window, {}, cfg.attack.alpha_mode};

    nn::Model global = nn::init_model(cfg.model, seed);
    std::vector<ParamVector> fg_history;  // FoolsGold accumulated deltas

    RunResult result;
    result.rounds.reserve(cfg.rounds);

    for (int t = 1; t <= cfg.rounds; ++t) {
        const auto t0 = std::chrono::steady_clock::now();
        RoundRecord rec;
        rec.t = t;

        // The attacker probes the broadcast G^{t-1}; the probe is stored for
        // the following rounds, so an empty history keeps alpha at 1.
        double alpha = 0.0;
        if (champ_attack) {
            alpha = attack::compute_alpha(adaptive);
            rec.alpha = alpha;
            if (cfg.attack.alpha_mode == attack::AlphaMode::bsci) {
                const auto sig = bsci::run_bsci_round(global, shards[malicious.front()],
                                                      cfg.bsci, cfg.attack.backdoor,
                                                      derive_seed(seed, "bsci", t), t);
                rec.v = sig.v;
                adaptive.push(sig.v);
            } else {
                const double v = detail::local_asr(global, probes.front(),
                                                   cfg.attack.backdoor.target_class);
                rec.v = v;
                adaptive.push(v);
            }
        }

        std::vector<ParamVector> updates;
        updates.reserve(cfg.n_clients);
        for (int n = 0; n < cfg.n_clients; ++n) {
            const std::uint64_t client_seed = derive_seed(seed, "client", n, t);
            nn::Model local;
            if (attacking && cfg.attack.malicious_ids.count(n)) {
                const std::size_t mi =
                    std::lower_bound(malicious.begin(), malicious.end(), n) -
                    malicious.begin();
                const double a = champ_attack ? alpha : 0.0;
                local = attack::malicious_round(global, poisoned[mi], a, cfg.attack.prox,
                                                cfg.local_epochs, cfg.lr, cfg.batch,
                                                client_seed);
            } else {
                local = nn::train_local(global, shards[n], cfg.local_epochs, cfg.lr,
                                        cfg.batch, std::nullopt, client_seed);
            }
            updates.push_back(std::move(local.params));
        }

        agg::AggregationOutcome out;
        try {
            out = agg::aggregate(cfg.defense, updates, global.params, fg_history);
        } catch (const std::exception& e) {
            throw std::runtime_error("round " + std::to_string(t) +
                                     ": aggregation failed: " + e.what());
        }
        if (cfg.defense.rule == agg::Rule::fools_gold) {
            if (fg_history.empty())
                fg_history.assign(cfg.n_clients, ParamVector(global.params.size(), 0.0));
            for (int n = 0; n < cfg.n_clients; ++n)
                for (std::size_t k = 0; k < global.params.size(); ++k)
                    fg_history[n][k] += updates[n][k] - global.params[k];
        }
        global.params = std::move(out.global);
        rec.selected = std::move(out.selected);
        rec.scores = std::move(out.scores);

        if (t % cfg.eval_every == 0 || t == cfg.rounds) {
            auto [acc, asr] = evaluate(global, test, backdoor_test,
                                       cfg.attack.backdoor.target_class);
            rec.benign_acc = acc;
            rec.asr = asr;
        }

        rec.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
        result.rounds.push_back(std::move(rec));
    }

    result.final_model = std::move(global);
    result.clean_test = std::move(test);
    result.backdoor_test = std::move(backdoor_test);
    return result;
}

inline RunResult run_experiment(const ExperimentConfig& cfg) {
    auto [train, test] = load_data(cfg.dataset, cfg.master_seed);
    return run_experiment(cfg, std::move(train), std::move(test));
}

struct KrumTracePoint {
    int t = 0;
    int rank = 0;  // 1 = lowest score
    bool selected = false;
};

// Per-round rank of the malicious client's score plus whether it made the
// selected set; empty when the defense reports no selection info.
inline std::vector<KrumTracePoint> krum_trace(const std::vector<RoundRecord>& records,
                                              int malicious_id) {
    std::vector<KrumTracePoint> trace;
    for (const auto& rec : records) {
        if (!rec.scores || !rec.selected) continue;
        const auto& scores = *rec.scores;
        if (malicious_id < 0 || malicious_id >= static_cast<int>(scores.size())) continue;
        KrumTracePoint pt;
        pt.t = rec.t;
        pt.rank = 1;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            if (static_cast<int>(i) == malicious_id) continue;
            if (scores[i] < scores[malicious_id] ||
                (scores[i] == scores[malicious_id] && static_cast<int>(i) < malicious_id))
                ++pt.rank;
        }
        pt.selected = std::find(rec.selected->begin(), rec.selected->end(),
                                malicious_id) != rec.selected->end();
        trace.push_back(pt);
    }
    return trace;
}

}  // namespace champ::sim
