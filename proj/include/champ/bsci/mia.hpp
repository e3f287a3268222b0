#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "champ/bsci/bsci.hpp"
#include "champ/data/backdoor.hpp"
#include "champ/data/dataset.hpp"
#include "champ/nn/model.hpp"

namespace champ::bsci {

struct Confusion {
    int tp = 0, fp = 0, tn = 0, fn = 0;
    int total() const { return tp + fp + tn + fn; }
    double accuracy() const {
        return total() == 0 ? 0.0 : static_cast<double>(tp + tn) / total();
    }
};

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

struct MiaConditionResult {
    Confusion confusion;
    std::vector<RocPoint> roc;
    double auc = 0.0;
};

struct MiaResult {
    MiaConditionResult clean;
    MiaConditionResult backdoored;
};

struct MiaConfig {
    int classes = 4;
    int pool_per_class = 400;  // split across target + shadow in/out shards
    Shape image_shape{1, 12, 12};
    double noise = 0.25;
    int shadow_count = 6;
    int hidden = 64;
    int epochs = 60;
    double lr = 0.25;
    int batch = 16;
    // Poisoned samples per shard are a seeded quarter of the source class; the
    // rest keeps its clean label, so the source class itself stays learnable
    // and membership concerns the poisoned subset only.  A small subset keeps
    // the memorized region tight, which is what separates members from
    // triggered non-members.
    double poison_fraction = 0.25;
    // A low-contrast stamp inside the image's noisy interior: statistically
    // invisible against the pixel noise, so no generalizable trigger rule
    // exists and poisoned members can only be fit one by one.
    data::BackdoorSpec backdoor{.origin_row = 4, .origin_col = 4, .size = 2,
                                .pixel_value = 0.55, .source_class = 0,
                                .target_class = 1};
    SvmConfig svm;

    void validate() const {
        if (classes < 2) throw std::invalid_argument("mia: need >= 2 classes");
        if (shadow_count < 1) throw std::invalid_argument("mia: need >= 1 shadow model");
        if (pool_per_class < 2 * (shadow_count + 1))
            throw std::invalid_argument("mia: pool too small for the shard layout");
        if (!(poison_fraction > 0.0 && poison_fraction <= 1.0))
            throw std::invalid_argument("mia: poison fraction must be in (0, 1]");
        backdoor.validate(image_shape, classes);
        svm.validate();
    }
};

// ROC curve and area from (decision score, is_member) pairs; thresholds sweep
// the distinct scores descending, ties grouped, endpoints pinned at (0,0) and
// (1,1). Trapezoidal area equals the rank statistic with 0.5 credit for ties.
inline std::pair<std::vector<RocPoint>, double> roc_curve(
    std::vector<std::pair<double, int>> scored) {
    int pos = 0, neg = 0;
    for (const auto& [s, y] : scored) (y ? pos : neg) += 1;
    if (pos == 0 || neg == 0)
        throw std::invalid_argument("roc: need both member and non-member samples");
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });

    std::vector<RocPoint> roc{{0.0, 0.0}};
    double auc = 0.0;
    int tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < scored.size()) {
        std::size_t j = i;
        int dtp = 0, dfp = 0;
        while (j < scored.size() && scored[j].first == scored[i].first) {
            (scored[j].second ? dtp : dfp) += 1;
            ++j;
        }
        const RocPoint prev = roc.back();
        tp += dtp;
        fp += dfp;
        const RocPoint cur{static_cast<double>(fp) / neg, static_cast<double>(tp) / pos};
        auc += 0.5 * (cur.tpr + prev.tpr) * (cur.fpr - prev.fpr);
        roc.push_back(cur);
        i = j;
    }
    return {std::move(roc), auc};
}

namespace detail {

// Source-class probe images of a shard; trigger stamped when requested,
// original labels irrelevant (membership is the label here).
inline std::vector<Image> source_probes(const Dataset& shard,
                                        const data::BackdoorSpec& spec, bool triggered) {
    std::vector<Image> probes;
    for (const auto& item : shard.items) {
        if (item.label != spec.source_class) continue;
        Image img = item.image;
        if (triggered) data::apply_trigger(img, spec);
        probes.push_back(std::move(img));
    }
    return probes;
}

// A shard plus its designated member subset: a seeded fraction of the source
// class.  In the backdoored condition that subset is poisoned (trigger +
// target label) inside the returned training set; the member probes are the
// images as trained on (triggered or clean), so both conditions ask the same
// question about the same samples.
struct ShardProbes {
    Dataset train;
    std::vector<Image> members;
};

inline ShardProbes shard_with_members(const Dataset& shard,
                                      const data::BackdoorSpec& spec, double fraction,
                                      bool backdoored, std::uint64_t seed) {
    std::vector<int> src;
    for (std::size_t i = 0; i < shard.items.size(); ++i)
        if (shard.items[i].label == spec.source_class)
            src.push_back(static_cast<int>(i));
    if (src.empty()) throw std::invalid_argument("mia: shard has no source-class samples");
    Rng rng(derive_seed(seed, "mia-members"));
    rng.shuffle(src);
    const auto count = std::max<std::size_t>(
        1, static_cast<std::size_t>(fraction * static_cast<double>(src.size())));

    ShardProbes out{shard, {}};
    for (std::size_t i = 0; i < count && i < src.size(); ++i) {
        auto& item = out.train.items[src[i]];
        if (backdoored) {
            item = data::apply_trigger(item, spec);
            item.label = spec.target_class;
        }
        out.members.push_back(item.image);
    }
    return out;
}

inline void append_records(const nn::Model& model, const std::vector<Image>& probes,
                           int member, std::vector<AttackRecord>& records) {
    if (probes.empty()) return;
    const auto logits = nn::forward(model, probes);
    for (const auto& row : logits) records.push_back({nn::softmax(row), member});
}

inline MiaConditionResult run_condition(const MiaConfig& cfg, bool backdoored,
                                        std::uint64_t seed) {
    const int n_models = cfg.shadow_count + 1;  // target last
    const auto pool = data::gen_synthetic(derive_seed(seed, "mia-pool"), cfg.classes,
                                          cfg.pool_per_class, cfg.image_shape, cfg.noise);
    const auto shards =
        data::partition_iid(pool, 2 * n_models, derive_seed(seed, "mia-shards"));

    auto model_spec =
        nn::ModelSpec::mlp(cfg.image_shape.size(), {cfg.hidden}, cfg.classes);
    model_spec.input_shape = cfg.image_shape;
    const nn::Model init = nn::init_model(model_spec, derive_seed(seed, "mia-init"));

    std::vector<AttackRecord> records;
    MiaConditionResult result;
    std::vector<std::pair<double, int>> target_scores;

    MembershipClassifier clf;
    for (int phase = 0; phase < 2; ++phase) {
        const bool is_target = phase == 1;
        const int lo = is_target ? cfg.shadow_count : 0;
        const int hi = is_target ? n_models : cfg.shadow_count;
        if (is_target) clf = train_membership_classifier(records, cfg.svm);

        for (int r = lo; r < hi; ++r) {
            const Dataset& in_shard = shards[2 * r];
            const Dataset& out_shard = shards[2 * r + 1];
            // Backdoored models train with the member subset poisoned the same
            // way the attack poisons its shard.  The flipped label contradicts
            // the class evidence and the low-contrast trigger offers no
            // generalizable rule, so those members can only be fit by
            // memorization, which is the leakage the appendix quantifies.
            const auto [train, members] =
                shard_with_members(in_shard, cfg.backdoor, cfg.poison_fraction,
                                   backdoored, derive_seed(seed, "mia-poison", r));
            const nn::Model model =
                nn::train_local(init, train, cfg.epochs, cfg.lr, cfg.batch, std::nullopt,
                                derive_seed(seed, "mia-fit", r));

            const auto outsiders = source_probes(out_shard, cfg.backdoor, backdoored);
            if (!is_target) {
                append_records(model, members, 1, records);
                append_records(model, outsiders, 0, records);
            } else {
                for (const auto& img : members) {
                    const auto z = nn::softmax(nn::forward(model, {img})[0]);
                    target_scores.emplace_back(clf.decision(z), 1);
                }
                for (const auto& img : outsiders) {
                    const auto z = nn::softmax(nn::forward(model, {img})[0]);
                    target_scores.emplace_back(clf.decision(z), 0);
                }
            }
        }
    }

    for (const auto& [score, member] : target_scores) {
        const bool pred = score >= 0.0;
        if (member && pred) result.confusion.tp += 1;
        else if (member && !pred) result.confusion.fn += 1;
        else if (!member && pred) result.confusion.fp += 1;
        else result.confusion.tn += 1;
    }
    auto [roc, auc] = roc_curve(std::move(target_scores));
    result.roc = std::move(roc);
    result.auc = auc;
    return result;
}

}  // namespace detail

// Appendix-style leakage study: the same shadow-model membership attack run
// against a clean and a backdoored target, reporting confusion/ROC/AUC each.
// Both conditions share one sub-seed, so they see identical pools, shard
// layouts, initial weights and shuffle streams; the only difference is the
// trigger stamp, which makes the clean/backdoored comparison a paired one.
inline MiaResult appendix_a_experiment(const MiaConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const std::uint64_t cond = derive_seed(seed, "mia-cond");
    MiaResult out;
    out.clean = detail::run_condition(cfg, false, cond);
    out.backdoored = detail::run_condition(cfg, true, cond);
    return out;
}

}  // namespace champ::bsci
