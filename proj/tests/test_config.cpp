#include <gtest/gtest.h>

#include <stdexcept>

#include <json.hpp>

#include "champ/sim/config.hpp"

namespace sim = champ::sim;
using sim::DatasetSource;
using sim::ExperimentConfig;

namespace {

TEST(DatasetSource, ParsesSynthetic) {
    auto src = DatasetSource::parse("synthetic:4x50");
    EXPECT_EQ(src.kind, DatasetSource::Kind::synthetic);
    EXPECT_EQ(src.classes, 4);
    EXPECT_EQ(src.per_class, 50);
    EXPECT_EQ(src.str(), "synthetic:4x50");
}

TEST(DatasetSource, ParsesIdx) {
    auto src = DatasetSource::parse("idx:/data/train-images,/data/train-labels");
    EXPECT_EQ(src.kind, DatasetSource::Kind::idx);
    EXPECT_EQ(src.train_images, "/data/train-images");
    EXPECT_EQ(src.train_labels, "/data/train-labels");
    EXPECT_EQ(src.str(), "idx:/data/train-images,/data/train-labels");
}

TEST(DatasetSource, ParseRejectsGarbage) {
    EXPECT_THROW(DatasetSource::parse("synthetic"), std::invalid_argument);
    EXPECT_THROW(DatasetSource::parse("blob:3x5"), std::invalid_argument);
    EXPECT_THROW(DatasetSource::parse("synthetic:x5"), std::invalid_argument);
    EXPECT_THROW(DatasetSource::parse("synthetic:4x"), std::invalid_argument);
    EXPECT_THROW(DatasetSource::parse("synthetic:axb"), std::invalid_argument);
    EXPECT_THROW(DatasetSource::parse("synthetic:1x5"), std::invalid_argument);
    EXPECT_THROW(DatasetSource::parse("idx:only_images"), std::invalid_argument);
    EXPECT_THROW(DatasetSource::parse("idx:,labels"), std::invalid_argument);
}

TEST(DatasetSource, LoadSyntheticSplitsPerClass) {
    DatasetSource src;
    src.classes = 3;
    src.per_class = 20;
    src.test_per_class = 5;
    src.shape = champ::Shape{1, 4, 4};
    auto [train, test] = sim::load_data(src, 42);
    EXPECT_EQ(train.size(), 60u);
    EXPECT_EQ(test.size(), 15u);
    EXPECT_EQ(train.class_count, 3);
    EXPECT_EQ(test.class_count, 3);
    int per_class_seen[3] = {0, 0, 0};
    for (const auto& item : test.items) per_class_seen[item.label]++;
    for (int c = 0; c < 3; ++c) EXPECT_EQ(per_class_seen[c], 5) << "class " << c;

    auto [train2, test2] = sim::load_data(src, 42);
    EXPECT_EQ(train2.items.size(), train.items.size());
    EXPECT_EQ(train2.items[0].image.pixels, train.items[0].image.pixels);
}

TEST(ExperimentConfig, Defaults) {
    ExperimentConfig cfg;
    EXPECT_EQ(cfg.n_clients, 10);
    EXPECT_EQ(cfg.rounds, 20);
    EXPECT_EQ(cfg.local_epochs, 5);
    EXPECT_DOUBLE_EQ(cfg.lr, 0.1);
    EXPECT_EQ(cfg.batch, 64);
    EXPECT_EQ(cfg.eval_every, 1);
    EXPECT_EQ(cfg.master_seed, 1u);
}

TEST(ExperimentConfig, DeskProfileIsRunnable) {
    auto cfg = ExperimentConfig::desk_profile();
    EXPECT_NO_THROW(cfg.validate());
    EXPECT_EQ(cfg.dataset.kind, DatasetSource::Kind::synthetic);
    EXPECT_EQ(cfg.model.classes, cfg.dataset.classes);
    EXPECT_EQ(cfg.attack.kind, champ::attack::AttackKind::none);
    EXPECT_EQ(cfg.attack.backdoor.size, 3);
    EXPECT_EQ(cfg.attack.malicious_ids, (std::set<int>{0}));
}

TEST(ExperimentConfig, FmnistProfile) {
    auto cfg = ExperimentConfig::fmnist_profile("img", "lbl");
    EXPECT_EQ(cfg.rounds, 50);
    EXPECT_DOUBLE_EQ(cfg.lr, 0.1);
    EXPECT_EQ(cfg.batch, 64);
    EXPECT_EQ(cfg.attack.window, 3);
    EXPECT_EQ(cfg.model.arch, champ::nn::Arch::fmnist_cnn);
    EXPECT_EQ(cfg.dataset.kind, DatasetSource::Kind::idx);
    EXPECT_EQ(cfg.dataset.train_images, "img");
}

TEST(ExperimentConfig, CifarProfile) {
    auto cfg = ExperimentConfig::cifar_profile("img", "lbl");
    EXPECT_EQ(cfg.rounds, 100);
    EXPECT_DOUBLE_EQ(cfg.lr, 0.01);
    EXPECT_EQ(cfg.attack.window, 5);
    EXPECT_EQ(cfg.model.arch, champ::nn::Arch::cifar_alexnet);
}

ExperimentConfig nontrivial_config() {
    auto cfg = ExperimentConfig::desk_profile();
    cfg.n_clients = 8;
    cfg.rounds = 12;
    cfg.local_epochs = 2;
    cfg.lr = 0.05;
    cfg.batch = 32;
    cfg.eval_every = 2;
    cfg.master_seed = 99;
    cfg.attack.kind = champ::attack::AttackKind::champ;
    cfg.attack.prox = champ::attack::ProxMetric::huber(0.25);
    cfg.attack.window = 5;
    cfg.attack.alpha_mode = champ::attack::AlphaMode::asr;
    cfg.defense = champ::agg::AggregatorConfig::parse("krum:f=2");
    cfg.bsci.R = 4;
    cfg.bsci.p_levels = {0.5, 0.25, 0.0, 0.0};
    cfg.bsci.svm.degree = 2;
    return cfg;
}

TEST(ExperimentConfig, JsonRoundTrip) {
    auto cfg = nontrivial_config();
    nlohmann::json j = cfg;
    auto back = j.get<ExperimentConfig>();
    // Canonical JSON equality covers every serialized field at once.
    EXPECT_EQ(nlohmann::json(back), j);
    EXPECT_EQ(back.model, cfg.model);
    EXPECT_EQ(back.attack.kind, champ::attack::AttackKind::champ);
    EXPECT_EQ(back.attack.prox.kind, champ::attack::ProxMetric::Kind::huber);
    EXPECT_DOUBLE_EQ(back.attack.prox.delta, 0.25);
    EXPECT_EQ(back.attack.alpha_mode, champ::attack::AlphaMode::asr);
    EXPECT_EQ(back.defense.rule, champ::agg::Rule::krum);
    EXPECT_EQ(back.defense.f, 2);
    EXPECT_EQ(back.bsci.p_levels, cfg.bsci.p_levels);
    EXPECT_EQ(back.master_seed, 99u);
}

TEST(ExperimentConfig, JsonRoundTripKeepsProxLambda) {
    auto cfg = ExperimentConfig::desk_profile();
    cfg.attack.prox = champ::attack::ProxMetric::euclidean(2.5);
    nlohmann::json j = cfg;
    auto back = j.get<ExperimentConfig>();
    EXPECT_EQ(back.attack.prox.kind, champ::attack::ProxMetric::Kind::euclidean);
    EXPECT_DOUBLE_EQ(back.attack.prox.lambda, 2.5);

    // Hand-written configs may omit the key; the default stiffness applies.
    j["attack"]["prox"].erase("lambda");
    auto bare = j.get<ExperimentConfig>();
    EXPECT_DOUBLE_EQ(bare.attack.prox.lambda,
                     champ::attack::ProxMetric::kDefaultLambda);
}

TEST(ExperimentConfig, JsonRoundTripIdxDataset) {
    auto cfg = ExperimentConfig::fmnist_profile("img.gz", "lbl.gz");
    cfg.dataset.max_train = 512;
    nlohmann::json j = cfg;
    auto back = j.get<ExperimentConfig>();
    EXPECT_EQ(back.dataset.kind, DatasetSource::Kind::idx);
    EXPECT_EQ(back.dataset.train_images, "img.gz");
    EXPECT_EQ(back.dataset.max_train, 512u);
}

TEST(ExperimentConfig, ValidateCatchesBadFields) {
    auto base = ExperimentConfig::desk_profile();
    auto broken = base;
    broken.n_clients = 0;
    EXPECT_THROW(broken.validate(), std::invalid_argument);
    broken = base;
    broken.rounds = 0;
    EXPECT_THROW(broken.validate(), std::invalid_argument);
    broken = base;
    broken.lr = 0.0;
    EXPECT_THROW(broken.validate(), std::invalid_argument);
    broken = base;
    broken.batch = 0;
    EXPECT_THROW(broken.validate(), std::invalid_argument);
    broken = base;
    broken.eval_every = 0;
    EXPECT_THROW(broken.validate(), std::invalid_argument);
}

TEST(ExperimentConfig, ValidateCrossChecksDefenseAgainstClients) {
    auto cfg = ExperimentConfig::desk_profile();
    cfg.n_clients = 4;
    cfg.defense = champ::agg::AggregatorConfig::parse("krum:f=2");  // N-f-2 = 0
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(ExperimentConfig, BsciValidatedOnlyWhenUsed) {
    auto cfg = ExperimentConfig::desk_profile();
    cfg.attack.kind = champ::attack::AttackKind::champ;
    cfg.bsci.p_levels = {0, 0, 0, 0, 0, 0};  // invalid: no positive level

    cfg.attack.alpha_mode = champ::attack::AlphaMode::asr;
    EXPECT_NO_THROW(cfg.validate());

    cfg.attack.alpha_mode = champ::attack::AlphaMode::bsci;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

}  // namespace
