#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

#include <json.hpp>

#include "champ/agg/config.hpp"
#include "champ/attack/malicious.hpp"
#include "champ/bsci/bsci.hpp"
#include "champ/data/dataset.hpp"
#include "champ/data/idx.hpp"
#include "champ/nn/serialize.hpp"

namespace champ::sim {

struct DatasetSource {
    enum class Kind { synthetic, idx };
    Kind kind = Kind::synthetic;

    // synthetic blobs
    int classes = 4;
    int per_class = 600;
    Shape shape{1, 8, 8};
    double noise = 0.32;
    int test_per_class = 100;

    // idx files; empty test paths fall back to a seeded 10% holdout
    std::string train_images, train_labels;
    std::string test_images, test_labels;
    std::size_t max_train = 0;  // 0 = no cap

    // Parses "synthetic:<classes>x<per_class>" or "idx:<images>,<labels>".
    static DatasetSource parse(const std::string& text);
    std::string str() const;

    void validate() const {
        if (kind == Kind::synthetic) {
            if (classes < 2) throw std::invalid_argument("dataset: need >= 2 classes");
            if (per_class < 1 || test_per_class < 0)
                throw std::invalid_argument("dataset: bad per-class counts");
            if (shape.size() < 1) throw std::invalid_argument("dataset: empty shape");
        } else {
            if (train_images.empty() || train_labels.empty())
                throw std::invalid_argument("dataset: idx needs image and label paths");
            if (test_images.empty() != test_labels.empty())
                throw std::invalid_argument(
                    "dataset: test images and labels must come together");
        }
    }
};

inline DatasetSource DatasetSource::parse(const std::string& text) {
    DatasetSource src;
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        throw std::invalid_argument(
            "dataset: expected synthetic:<classes>x<per_class> or idx:<img>,<lbl>");
    const std::string name = text.substr(0, colon);
    const std::string rest = text.substr(colon + 1);
    if (name == "synthetic") {
        src.kind = Kind::synthetic;
        const auto x = rest.find('x');
        if (x == std::string::npos || x == 0 || x + 1 == rest.size())
            throw std::invalid_argument(
                "dataset: synthetic wants <classes>x<per_class>, got '" + rest + "'");
        try {
            src.classes = std::stoi(rest.substr(0, x));
            src.per_class = std::stoi(rest.substr(x + 1));
        } catch (const std::exception&) {
            throw std::invalid_argument("dataset: bad synthetic sizes '" + rest + "'");
        }
    } else if (name == "idx") {
        src.kind = Kind::idx;
        const auto comma = rest.find(',');
        if (comma == std::string::npos || comma == 0 || comma + 1 == rest.size())
            throw std::invalid_argument("dataset: idx wants <images>,<labels>, got '" +
                                        rest + "'");
        src.train_images = rest.substr(0, comma);
        src.train_labels = rest.substr(comma + 1);
    } else {
        throw std::invalid_argument("dataset: unknown source '" + name + "'");
    }
    src.validate();
    return src;
}

inline std::string DatasetSource::str() const {
    if (kind == Kind::synthetic)
        return "synthetic:" + std::to_string(classes) + "x" + std::to_string(per_class);
    return "idx:" + train_images + "," + train_labels;
}

// Materializes (train, test) from the source. Synthetic pairs share class
// means; idx without test files splits a seeded 10% holdout.
inline std::pair<Dataset, Dataset> load_data(const DatasetSource& src,
                                             std::uint64_t seed) {
    src.validate();
    if (src.kind == DatasetSource::Kind::synthetic) {
        const Dataset all =
            data::gen_synthetic(derive_seed(seed, "data"), src.classes,
                                src.per_class + src.test_per_class, src.shape, src.noise);
        auto [train, test] = data::split_per_class(all, src.test_per_class);
        return {std::move(train), std::move(test)};
    }
    Dataset train = data::load_idx(src.train_images, src.train_labels);
    Dataset test;
    if (!src.test_images.empty()) {
        test = data::load_idx(src.test_images, src.test_labels);
    } else {
        std::tie(train, test) = data::holdout_split(train, 0.1, derive_seed(seed, "data"));
    }
    if (src.max_train > 0) train = data::subset(train, src.max_train, derive_seed(seed, "cap"));
    return {std::move(train), std::move(test)};
}

struct ExperimentConfig {
    int n_clients = 10;
    int rounds = 20;
    int local_epochs = 5;
    double lr = 0.1;
    int batch = 64;
    nn::ModelSpec model = nn::ModelSpec::mlp(64, {32}, 4);
    DatasetSource dataset;
    attack::AttackConfig attack;
    agg::AggregatorConfig defense;
    bsci::BsciConfig bsci;
    int eval_every = 1;
    std::uint64_t master_seed = 1;

    void validate() const {
        if (n_clients < 1) throw std::invalid_argument("config: need >= 1 client");
        if (rounds < 1) throw std::invalid_argument("config: need >= 1 round");
        if (local_epochs < 1) throw std::invalid_argument("config: need >= 1 local epoch");
        if (lr <= 0.0) throw std::invalid_argument("config: lr must be positive");
        if (batch < 1) throw std::invalid_argument("config: batch must be >= 1");
        if (eval_every < 1) throw std::invalid_argument("config: eval_every must be >= 1");
        dataset.validate();
        attack.validate(n_clients);
        defense.validate(n_clients);
        if (attack.kind == attack::AttackKind::champ &&
            attack.alpha_mode == attack::AlphaMode::bsci)
            bsci.validate();
    }

    // Synthetic-blob profile sized for laptop-speed acceptance runs.  The
    // short-horizon knobs (1 local epoch, small batches, a hot lr) keep the
    // benign population visibly in motion for all 20 rounds, which is the
    // regime the single-attacker camouflage results are calibrated against.
    static ExperimentConfig desk_profile() {
        ExperimentConfig cfg;
        cfg.local_epochs = 1;
        cfg.lr = 0.7;
        cfg.batch = 16;
        cfg.dataset.kind = DatasetSource::Kind::synthetic;
        cfg.model = nn::ModelSpec::mlp(cfg.dataset.shape.size(), {32},
                                       cfg.dataset.classes);
        cfg.model.input_shape = cfg.dataset.shape;
        cfg.attack.backdoor.source_class = 0;
        cfg.attack.backdoor.target_class = 1;
        cfg.attack.backdoor.size = 3;
        cfg.attack.malicious_ids = {0};
        cfg.attack.kind = attack::AttackKind::none;
        cfg.attack.window = 3;
        // The reference-model probes tolerate a hotter lr and an extra epoch
        // at desk scale; the full-size regimes keep the type defaults.
        cfg.bsci.lr = 0.1;
        cfg.bsci.ref_epochs = 2;
        return cfg;
    }

    // Fashion-MNIST regime: T=50, lr=0.1, k=3, batch=64, CNN.
    static ExperimentConfig fmnist_profile(const std::string& images,
                                           const std::string& labels) {
        ExperimentConfig cfg;
        cfg.rounds = 50;
        cfg.lr = 0.1;
        cfg.batch = 64;
        cfg.model = nn::ModelSpec::fmnist_cnn();
        cfg.dataset.kind = DatasetSource::Kind::idx;
        cfg.dataset.train_images = images;
        cfg.dataset.train_labels = labels;
        cfg.attack.backdoor.source_class = 0;
        cfg.attack.backdoor.target_class = 1;
        cfg.attack.malicious_ids = {0};
        cfg.attack.window = 3;
        return cfg;
    }

    // CIFAR-10 regime: T=100, lr=0.01, k=5, batch=64, AlexNet-style CNN.
    static ExperimentConfig cifar_profile(const std::string& images,
                                          const std::string& labels) {
        ExperimentConfig cfg;
        cfg.rounds = 100;
        cfg.lr = 0.01;
        cfg.batch = 64;
        cfg.model = nn::ModelSpec::cifar_alexnet();
        cfg.dataset.kind = DatasetSource::Kind::idx;
        cfg.dataset.train_images = images;
        cfg.dataset.train_labels = labels;
        cfg.attack.backdoor.source_class = 0;
        cfg.attack.backdoor.target_class = 1;
        cfg.attack.malicious_ids = {0};
        cfg.attack.window = 5;
        return cfg;
    }
};

// --- JSON round trips -------------------------------------------------------

inline void to_json(nlohmann::json& j, const DatasetSource& s) {
    if (s.kind == DatasetSource::Kind::synthetic) {
        j = {{"kind", "synthetic"},
             {"classes", s.classes},
             {"per_class", s.per_class},
             {"shape", {s.shape.channels, s.shape.height, s.shape.width}},
             {"noise", s.noise},
             {"test_per_class", s.test_per_class}};
    } else {
        j = {{"kind", "idx"},
             {"train_images", s.train_images},
             {"train_labels", s.train_labels},
             {"test_images", s.test_images},
             {"test_labels", s.test_labels},
             {"max_train", s.max_train}};
    }
}

inline void from_json(const nlohmann::json& j, DatasetSource& s) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "synthetic") {
        s.kind = DatasetSource::Kind::synthetic;
        j.at("classes").get_to(s.classes);
        j.at("per_class").get_to(s.per_class);
        const auto& sh = j.at("shape");
        s.shape = Shape{sh.at(0).get<int>(), sh.at(1).get<int>(), sh.at(2).get<int>()};
        j.at("noise").get_to(s.noise);
        j.at("test_per_class").get_to(s.test_per_class);
    } else if (kind == "idx") {
        s.kind = DatasetSource::Kind::idx;
        j.at("train_images").get_to(s.train_images);
        j.at("train_labels").get_to(s.train_labels);
        s.test_images = j.value("test_images", std::string{});
        s.test_labels = j.value("test_labels", std::string{});
        s.max_train = j.value("max_train", std::size_t{0});
    } else {
        throw std::invalid_argument("config: unknown dataset kind '" + kind + "'");
    }
}

}  // namespace champ::sim

namespace champ::data {

inline void to_json(nlohmann::json& j, const BackdoorSpec& b) {
    j = {{"origin_row", b.origin_row},   {"origin_col", b.origin_col},
         {"size", b.size},               {"pixel_value", b.pixel_value},
         {"source_class", b.source_class}, {"target_class", b.target_class},
         {"targeted", b.targeted},       {"untargeted_seed", b.untargeted_seed}};
}

inline void from_json(const nlohmann::json& j, BackdoorSpec& b) {
    j.at("origin_row").get_to(b.origin_row);
    j.at("origin_col").get_to(b.origin_col);
    j.at("size").get_to(b.size);
    j.at("pixel_value").get_to(b.pixel_value);
    j.at("source_class").get_to(b.source_class);
    j.at("target_class").get_to(b.target_class);
    b.targeted = j.value("targeted", true);
    b.untargeted_seed = j.value("untargeted_seed", std::uint64_t{0});
}

}  // namespace champ::data

namespace champ::attack {

inline void to_json(nlohmann::json& j, const ProxMetric& m) {
    j = {{"kind", m.name()}};
    if (m.kind == ProxMetric::Kind::euclidean) j["lambda"] = m.lambda;
    if (m.kind == ProxMetric::Kind::huber) j["delta"] = m.delta;
}

inline void from_json(const nlohmann::json& j, ProxMetric& m) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "euclidean")
        m = ProxMetric::euclidean(j.value("lambda", ProxMetric::kDefaultLambda));
    else if (kind == "cosine") m = ProxMetric::cosine();
    else if (kind == "huber") m = ProxMetric::huber(j.value("delta", 1.0));
    else throw std::invalid_argument("config: unknown prox metric '" + kind + "'");
}

inline void to_json(nlohmann::json& j, const AttackConfig& a) {
    j = {{"kind", attack_kind_name(a.kind)},
         {"backdoor", a.backdoor},
         {"malicious_ids", a.malicious_ids},
         {"prox", a.prox},
         {"window", a.window},
         {"alpha_mode", alpha_mode_name(a.alpha_mode)}};
}

inline void from_json(const nlohmann::json& j, AttackConfig& a) {
    a.kind = parse_attack_kind(j.at("kind").get<std::string>());
    j.at("backdoor").get_to(a.backdoor);
    a.malicious_ids.clear();
    for (const auto& id : j.at("malicious_ids")) a.malicious_ids.insert(id.get<int>());
    j.at("prox").get_to(a.prox);
    j.at("window").get_to(a.window);
    a.alpha_mode = parse_alpha_mode(j.at("alpha_mode").get<std::string>());
}

}  // namespace champ::attack

namespace champ::agg {

inline void to_json(nlohmann::json& j, const AggregatorConfig& c) {
    j = {{"rule", rule_name(c.rule)}, {"beta", c.beta},       {"f", c.f},
         {"m", c.m},                  {"max_iter", c.max_iter}, {"epsilon", c.epsilon},
         {"tol", c.tol},              {"th", c.th},            {"c", c.c},
         {"theta", c.theta},          {"lr", c.lr}};
}

inline void from_json(const nlohmann::json& j, AggregatorConfig& c) {
    const std::string rule = j.at("rule").get<std::string>();
    c = AggregatorConfig::parse(rule);
    c.beta = j.value("beta", c.beta);
    c.f = j.value("f", c.f);
    c.m = j.value("m", c.m);
    c.max_iter = j.value("max_iter", c.max_iter);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.tol = j.value("tol", c.tol);
    c.th = j.value("th", c.th);
    c.c = j.value("c", c.c);
    c.theta = j.value("theta", c.theta);
    c.lr = j.value("lr", c.lr);
}

}  // namespace champ::agg

namespace champ::bsci {

inline void to_json(nlohmann::json& j, const SvmConfig& s) {
    j = {{"degree", s.degree}, {"gamma", s.gamma},           {"coef0", s.coef0},
         {"C", s.C},           {"tol", s.tol},               {"max_passes", s.max_passes},
         {"max_iter", s.max_iter}};
}

inline void from_json(const nlohmann::json& j, SvmConfig& s) {
    s.degree = j.value("degree", s.degree);
    s.gamma = j.value("gamma", s.gamma);
    s.coef0 = j.value("coef0", s.coef0);
    s.C = j.value("C", s.C);
    s.tol = j.value("tol", s.tol);
    s.max_passes = j.value("max_passes", s.max_passes);
    s.max_iter = j.value("max_iter", s.max_iter);
}

inline void to_json(nlohmann::json& j, const BsciConfig& b) {
    j = {{"R", b.R},           {"p_levels", b.p_levels}, {"ref_epochs", b.ref_epochs},
         {"lr", b.lr},         {"batch", b.batch},       {"svm", b.svm}};
}

inline void from_json(const nlohmann::json& j, BsciConfig& b) {
    j.at("R").get_to(b.R);
    j.at("p_levels").get_to(b.p_levels);
    j.at("ref_epochs").get_to(b.ref_epochs);
    b.lr = j.value("lr", b.lr);
    b.batch = j.value("batch", b.batch);
    if (j.contains("svm")) j.at("svm").get_to(b.svm);
}

}  // namespace champ::bsci

namespace champ::sim {

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
    j = {{"n_clients", c.n_clients},
         {"rounds", c.rounds},
         {"local_epochs", c.local_epochs},
         {"lr", c.lr},
         {"batch", c.batch},
         {"model", c.model},
         {"dataset", c.dataset},
         {"attack", c.attack},
         {"defense", c.defense},
         {"bsci", c.bsci},
         {"eval_every", c.eval_every},
         {"master_seed", c.master_seed}};
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
    j.at("n_clients").get_to(c.n_clients);
    j.at("rounds").get_to(c.rounds);
    j.at("local_epochs").get_to(c.local_epochs);
    j.at("lr").get_to(c.lr);
    j.at("batch").get_to(c.batch);
    j.at("model").get_to(c.model);
    j.at("dataset").get_to(c.dataset);
    j.at("attack").get_to(c.attack);
    j.at("defense").get_to(c.defense);
    if (j.contains("bsci")) j.at("bsci").get_to(c.bsci);
    c.eval_every = j.value("eval_every", 1);
    j.at("master_seed").get_to(c.master_seed);
}

}  // namespace champ::sim
