#pragma once

#include <numeric>
#include <stdexcept>
#include <vector>

#include "champ/rng.hpp"
#include "champ/types.hpp"

namespace champ::data {

// Trigger geometry and relabeling rule for a backdoor.
struct BackdoorSpec {
    int origin_row = 0;
    int origin_col = 0;
    int size = 3;              // trigger is size x size
    double pixel_value = 1.0;  // "all white"
    int source_class = 0;
    int target_class = 0;
    bool targeted = true;
    std::uint64_t untargeted_seed = 0;

    void validate(const Shape& image_shape, int class_count) const {
        if (size < 1) throw std::invalid_argument("backdoor: trigger size must be >= 1");
        if (origin_row < 0 || origin_col < 0 ||
            origin_row + size > image_shape.height || origin_col + size > image_shape.width)
            throw std::invalid_argument("backdoor: trigger out of image bounds");
        if (!(pixel_value >= 0.0 && pixel_value <= 1.0))
            throw std::invalid_argument("backdoor: pixel value outside [0,1]");
        if (source_class < 0 || source_class >= class_count)
            throw std::invalid_argument("backdoor: source class out of range");
        if (targeted) {
            if (target_class < 0 || target_class >= class_count)
                throw std::invalid_argument("backdoor: target class out of range");
            if (target_class == source_class)
                throw std::invalid_argument("backdoor: target class equals source class");
        }
    }
};

// Stamps the trigger block across all channels.
inline void apply_trigger(Image& img, const BackdoorSpec& spec) {
    if (spec.origin_row + spec.size > img.shape.height ||
        spec.origin_col + spec.size > img.shape.width || spec.origin_row < 0 ||
        spec.origin_col < 0 || spec.size < 1)
        throw std::invalid_argument("apply_trigger: trigger out of image bounds");
    for (int c = 0; c < img.shape.channels; ++c)
        for (int y = spec.origin_row; y < spec.origin_row + spec.size; ++y)
            for (int x = spec.origin_col; x < spec.origin_col + spec.size; ++x)
                img.at(c, y, x) = spec.pixel_value;
}

inline LabeledImage apply_trigger(const LabeledImage& img, const BackdoorSpec& spec) {
    LabeledImage out = img;
    apply_trigger(out.image, spec);
    return out;
}

// Poisons a deterministic floor(p * |source items|) subset of the source
// class: trigger plus target label (targeted) or a seeded label drawn from
// the other classes (untargeted). Everything else passes through untouched.
inline Dataset poison_dataset(const Dataset& ds, const BackdoorSpec& spec, double p,
                              std::uint64_t seed) {
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("poison_dataset: p must be in [0,1]");

    std::vector<int> source_idx;
    for (std::size_t i = 0; i < ds.items.size(); ++i)
        if (ds.items[i].label == spec.source_class) source_idx.push_back(static_cast<int>(i));

    const std::size_t count =
        static_cast<std::size_t>(p * static_cast<double>(source_idx.size()));
    Rng rng(derive_seed(seed, "poison-pick"));
    rng.shuffle(source_idx);

    Dataset out = ds;
    Rng label_rng(derive_seed(spec.untargeted_seed, "untargeted-label"));
    for (std::size_t i = 0; i < count; ++i) {
        auto& item = out.items[source_idx[i]];
        item = apply_trigger(item, spec);
        if (spec.targeted) {
            item.label = spec.target_class;
        } else {
            int lbl = label_rng.uniform_int(0, ds.class_count - 2);
            if (lbl >= spec.source_class) ++lbl;  // uniform over classes != source
            item.label = lbl;
        }
    }
    return out;
}

// Stamps the trigger on every source-class sample without relabeling — the
// leakage-study variant where only the input distribution shifts.
inline Dataset trigger_source_class(const Dataset& ds, const BackdoorSpec& spec) {
    Dataset out = ds;
    for (auto& item : out.items)
        if (item.label == spec.source_class) apply_trigger(item.image, spec);
    return out;
}

// All source-class test samples with the trigger applied; labels retained
// for bookkeeping (attack success counts predictions equal to the target).
inline Dataset backdoor_testset(const Dataset& test, const BackdoorSpec& spec) {
    Dataset out;
    out.class_count = test.class_count;
    for (const auto& item : test.items)
        if (item.label == spec.source_class) out.items.push_back(apply_trigger(item, spec));
    if (out.items.empty())
        throw std::invalid_argument("backdoor_testset: no source-class samples in test set");
    return out;
}

}  // namespace champ::data
