#pragma once

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "champ/rng.hpp"
#include "champ/types.hpp"

namespace champ::data {

// Gaussian class-blob images clipped to [0,1], laid out like low-resolution
// garment thumbnails: a dark, near-constant margin (the empty border of a
// centred Fashion-MNIST item) surrounding a bright central region that carries
// the class identity plus most of the sample noise. Class means are drawn from
// a sub-stream of the same seed, so train/test splits share a task when they
// share a seed.
inline Dataset gen_synthetic(std::uint64_t seed, int classes, int per_class, Shape shape,
                             double noise = 0.15) {
    if (classes < 2) throw std::invalid_argument("gen_synthetic: classes must be >= 2");
    if (per_class < 1) throw std::invalid_argument("gen_synthetic: per_class must be >= 1");

    const std::size_t d = static_cast<std::size_t>(shape.size());
    const int margin = std::max(1, std::min(shape.height, shape.width) / 4);
    const auto central = [&](std::size_t k) {
        const int in_plane = static_cast<int>(k) % (shape.height * shape.width);
        const int row = in_plane / shape.width;
        const int col = in_plane % shape.width;
        return row >= margin && row < shape.height - margin && col >= margin &&
               col < shape.width - margin;
    };

    Rng mean_rng(derive_seed(seed, "class-means"));
    // The margin is class-blind: one shared dark base per pixel.
    std::vector<double> border(d, 0.0);
    for (std::size_t k = 0; k < d; ++k)
        if (!central(k)) border[k] = mean_rng.uniform(0.02, 0.08);
    std::vector<std::vector<double>> means(classes, std::vector<double>(d));
    for (auto& mu : means)
        for (std::size_t k = 0; k < d; ++k)
            mu[k] = central(k) ? mean_rng.uniform(0.15, 0.75) : border[k];

    Rng rng(derive_seed(seed, "samples"));
    Dataset ds;
    ds.class_count = classes;
    ds.items.reserve(static_cast<std::size_t>(classes) * per_class);
    for (int c = 0; c < classes; ++c) {
        for (int i = 0; i < per_class; ++i) {
            LabeledImage item;
            item.label = c;
            item.image.shape = shape;
            item.image.pixels.resize(d);
            for (std::size_t k = 0; k < d; ++k) {
                const double sigma = central(k) ? noise : 0.02;
                item.image.pixels[k] =
                    std::clamp(means[c][k] + rng.normal(0.0, sigma), 0.0, 1.0);
            }
            ds.items.push_back(std::move(item));
        }
    }
    return ds;
}

// Disjoint near-equal shards covering ds; a shard size differs from another
// by at most one. Deterministic in seed.
inline std::vector<Dataset> partition_iid(const Dataset& ds, int n_clients,
                                          std::uint64_t seed) {
    if (n_clients <= 0) throw std::invalid_argument("partition_iid: N must be > 0");
    if (ds.size() < static_cast<std::size_t>(n_clients))
        throw std::invalid_argument("partition_iid: fewer samples than clients");

    std::vector<int> order(ds.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, "partition"));
    rng.shuffle(order);

    std::vector<Dataset> shards(n_clients);
    const std::size_t base = ds.size() / n_clients;
    const std::size_t extra = ds.size() % n_clients;
    std::size_t pos = 0;
    for (int n = 0; n < n_clients; ++n) {
        const std::size_t count = base + (static_cast<std::size_t>(n) < extra ? 1 : 0);
        shards[n].class_count = ds.class_count;
        shards[n].items.reserve(count);
        for (std::size_t i = 0; i < count; ++i)
            shards[n].items.push_back(ds.items[order[pos++]]);
    }
    return shards;
}

// Seeded sample without replacement; count = 0 keeps the whole set. Caps
// full-size corpora down to desk-scale subsets.
inline Dataset subset(const Dataset& ds, std::size_t count, std::uint64_t seed) {
    if (count == 0 || count >= ds.size()) return ds;
    std::vector<int> order(ds.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, "subset"));
    rng.shuffle(order);
    Dataset out;
    out.class_count = ds.class_count;
    out.items.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.items.push_back(ds.items[order[i]]);
    return out;
}

// Seeded train/holdout split by fraction; used when no separate test files
// are supplied.
inline std::pair<Dataset, Dataset> holdout_split(const Dataset& ds, double test_fraction,
                                                 std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw std::invalid_argument("holdout_split: fraction must be in (0,1)");
    std::vector<int> order(ds.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, "holdout"));
    rng.shuffle(order);
    const std::size_t test_count =
        std::max<std::size_t>(1, static_cast<std::size_t>(test_fraction * ds.size()));
    Dataset train, test;
    train.class_count = test.class_count = ds.class_count;
    for (std::size_t i = 0; i < order.size(); ++i)
        (i < test_count ? test : train).items.push_back(ds.items[order[i]]);
    return {std::move(train), std::move(test)};
}

// Splits per-class tails off into a held-out set; used by the synthetic
// fixture to build train/test pairs over the same class means.
inline std::pair<Dataset, Dataset> split_per_class(const Dataset& ds, int test_per_class) {
    Dataset train, test;
    train.class_count = test.class_count = ds.class_count;
    std::vector<int> seen(ds.class_count, 0);
    std::vector<int> total(ds.class_count, 0);
    for (const auto& it : ds.items) total[it.label]++;
    for (const auto& it : ds.items) {
        if (total[it.label] - seen[it.label] <= test_per_class)
            test.items.push_back(it);
        else
            train.items.push_back(it);
        seen[it.label]++;
    }
    return {std::move(train), std::move(test)};
}

}  // namespace champ::data
