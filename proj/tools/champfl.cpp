// champfl: deterministic federated-learning simulator with robust-aggregation
// defenses and an adaptive backdoor attack. Subcommands: run, agg-test,
// mia-appendix, report.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "champ/champ.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Output root: --out wins, then CHAMPFL_OUT, then ./out.
std::string resolve_out_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("CHAMPFL_OUT"); env && *env) return env;
    return "out";
}

champ::nn::ModelSpec resolve_model(const std::string& name, const champ::Shape& shape,
                                   int classes) {
    const int d_in = static_cast<int>(shape.size());
    // Flatten-first models adopt the data's true geometry as their input shape.
    auto shaped = [&shape](champ::nn::ModelSpec spec) {
        spec.input_shape = shape;
        return spec;
    };
    if (name == "logistic") return shaped(champ::nn::ModelSpec::logistic(d_in, classes));
    if (name == "fmnist_cnn") return champ::nn::ModelSpec::fmnist_cnn();
    if (name == "cifar_alexnet") return champ::nn::ModelSpec::cifar_alexnet();
    if (name == "mlp") return shaped(champ::nn::ModelSpec::mlp(d_in, {32}, classes));
    if (name.rfind("mlp:", 0) == 0) {
        std::vector<int> hidden;
        std::stringstream ss(name.substr(4));
        std::string part;
        while (std::getline(ss, part, '-')) {
            try {
                hidden.push_back(std::stoi(part));
            } catch (const std::exception&) {
                throw std::invalid_argument("model: bad hidden width '" + part + "'");
            }
        }
        if (hidden.empty()) throw std::invalid_argument("model: mlp needs widths");
        return shaped(champ::nn::ModelSpec::mlp(d_in, hidden, classes));
    }
    throw std::invalid_argument(
        "model: expected logistic, mlp[:w1-w2...], fmnist_cnn or cifar_alexnet, got '" +
        name + "'");
}

struct RunFlags {
    std::string config_path;
    std::string dataset;
    std::string test_dataset;
    std::size_t max_train = 0;
    std::string defense;
    std::string attack;
    std::string prox;
    std::string alpha_mode;
    int window = -1;
    std::string bsci;
    std::string model;
    int clients = -1, rounds = -1, local_epochs = -1, batch = -1, eval_every = -1;
    double lr = -1.0, noise = -1.0;
    int side = -1;
    int test_per_class = -1;
    std::string malicious;
    int trigger_size = -1, trigger_row = -1, trigger_col = -1;
    int source_class = -1, target_class = -1;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
    cmd->add_option("--config", f.config_path, "JSON config to start from");
    cmd->add_option("--dataset", f.dataset,
                    "idx:<images>,<labels> or synthetic:<classes>x<per_class>");
    cmd->add_option("--test-dataset", f.test_dataset, "idx:<images>,<labels> test pair");
    cmd->add_option("--max-train", f.max_train, "cap on training samples (0 = all)");
    cmd->add_option("--defense", f.defense, "aggregation rule, e.g. krum:f=1");
    cmd->add_option("--attack", f.attack, "none, vanilla or champ");
    cmd->add_option("--prox", f.prox, "l2[:lambda], cos or huber[:delta]");
    cmd->add_option("--alpha-mode", f.alpha_mode, "bsci or asr");
    cmd->add_option("--window", f.window, "alpha feedback window k");
    cmd->add_option("--bsci", f.bsci, "R=<int>,p=<csv>,epochs=<int>,degree=<int>,C=<real>,tol=<real>");
    cmd->add_option("--model", f.model, "logistic, mlp[:w1-w2...], fmnist_cnn, cifar_alexnet");
    cmd->add_option("--clients", f.clients, "number of clients");
    cmd->add_option("--rounds", f.rounds, "global rounds T");
    cmd->add_option("--local-epochs", f.local_epochs, "local epochs per round");
    cmd->add_option("--lr", f.lr, "local learning rate");
    cmd->add_option("--batch", f.batch, "local batch size");
    cmd->add_option("--eval-every", f.eval_every, "evaluation cadence in rounds");
    cmd->add_option("--noise", f.noise, "synthetic blob noise sigma");
    cmd->add_option("--side", f.side, "synthetic image side length");
    cmd->add_option("--test-per-class", f.test_per_class, "synthetic held-out per class");
    cmd->add_option("--malicious", f.malicious, "comma-separated malicious client ids");
    cmd->add_option("--trigger-size", f.trigger_size, "trigger side length");
    cmd->add_option("--trigger-row", f.trigger_row, "trigger origin row");
    cmd->add_option("--trigger-col", f.trigger_col, "trigger origin column");
    cmd->add_option("--source-class", f.source_class, "backdoor source class");
    cmd->add_option("--target-class", f.target_class, "backdoor target class");
    cmd->add_option("--seed", f.seed, "master seed")->each([&f](const std::string&) {
        f.seed_set = true;
    });
    cmd->add_option("--out", f.out, "output directory (overrides CHAMPFL_OUT)");
}

champ::sim::ExperimentConfig build_config(const RunFlags& f) {
    champ::sim::ExperimentConfig cfg = champ::sim::ExperimentConfig::desk_profile();
    bool model_from_config = false;
    if (!f.config_path.empty()) {
        std::ifstream in(f.config_path);
        if (!in) throw std::runtime_error("cannot open config " + f.config_path);
        json j = json::parse(in);
        cfg = j.get<champ::sim::ExperimentConfig>();
        model_from_config = true;
    }

    if (!f.dataset.empty()) cfg.dataset = champ::sim::DatasetSource::parse(f.dataset);
    if (!f.test_dataset.empty()) {
        const auto t = champ::sim::DatasetSource::parse(f.test_dataset);
        if (t.kind != champ::sim::DatasetSource::Kind::idx)
            throw std::invalid_argument("--test-dataset must be an idx pair");
        cfg.dataset.test_images = t.train_images;
        cfg.dataset.test_labels = t.train_labels;
    }
    if (f.max_train > 0) cfg.dataset.max_train = f.max_train;
    if (f.noise >= 0.0) cfg.dataset.noise = f.noise;
    if (f.side > 0) cfg.dataset.shape = {1, f.side, f.side};
    if (f.test_per_class >= 0) cfg.dataset.test_per_class = f.test_per_class;

    if (!f.defense.empty()) cfg.defense = champ::agg::AggregatorConfig::parse(f.defense);
    if (!f.attack.empty()) cfg.attack.kind = champ::attack::parse_attack_kind(f.attack);
    if (!f.prox.empty()) cfg.attack.prox = champ::attack::ProxMetric::parse(f.prox);
    if (!f.alpha_mode.empty())
        cfg.attack.alpha_mode = champ::attack::parse_alpha_mode(f.alpha_mode);
    if (f.window > 0) cfg.attack.window = f.window;
    if (!f.bsci.empty()) cfg.bsci = champ::bsci::BsciConfig::parse(f.bsci);
    if (!f.malicious.empty()) {
        cfg.attack.malicious_ids.clear();
        std::stringstream ss(f.malicious);
        std::string id;
        while (std::getline(ss, id, ',')) cfg.attack.malicious_ids.insert(std::stoi(id));
    }
    if (cfg.attack.kind == champ::attack::AttackKind::none) cfg.attack.malicious_ids.clear();
    if (f.trigger_size > 0) cfg.attack.backdoor.size = f.trigger_size;
    if (f.trigger_row >= 0) cfg.attack.backdoor.origin_row = f.trigger_row;
    if (f.trigger_col >= 0) cfg.attack.backdoor.origin_col = f.trigger_col;
    if (f.source_class >= 0) cfg.attack.backdoor.source_class = f.source_class;
    if (f.target_class >= 0) cfg.attack.backdoor.target_class = f.target_class;

    if (f.clients > 0) cfg.n_clients = f.clients;
    if (f.rounds > 0) cfg.rounds = f.rounds;
    if (f.local_epochs > 0) cfg.local_epochs = f.local_epochs;
    if (f.lr > 0.0) cfg.lr = f.lr;
    if (f.batch > 0) cfg.batch = f.batch;
    if (f.eval_every > 0) cfg.eval_every = f.eval_every;
    if (f.seed_set) cfg.master_seed = f.seed;

    // The model may depend on the dataset's shape/classes, so resolve it via
    // a peek at the data when given by name (or when the dataset changed).
    if (!f.model.empty() || (!f.dataset.empty() && !model_from_config)) {
        auto [train, test] = champ::sim::load_data(cfg.dataset, cfg.master_seed);
        const champ::Shape shape = train.items.at(0).image.shape;
        const std::string name = f.model.empty() ? "mlp" : f.model;
        cfg.model = resolve_model(name, shape, train.class_count);
    }
    return cfg;
}

int cmd_run(const RunFlags& f) {
    const auto cfg = build_config(f);
    const fs::path out_dir = resolve_out_dir(f.out);
    fs::create_directories(out_dir);

    auto [train, test] = champ::sim::load_data(cfg.dataset, cfg.master_seed);
    const auto result = champ::sim::run_experiment(cfg, std::move(train), std::move(test));

    {
        std::ofstream out(out_dir / "config.json", std::ios::binary);
        out << json(cfg).dump(2) << "\n";
    }
    champ::report::write_round_jsonl(result.rounds, (out_dir / "rounds.jsonl").string());
    champ::report::write_summary_csv({champ::report::summarize(cfg, result.rounds)},
                                     (out_dir / "summary.csv").string());
    champ::nn::save_checkpoint(result.final_model, (out_dir / "final.ckpt").string());

    const auto& last = result.rounds.back();
    std::cout << "run complete: " << cfg.rounds << " rounds, defense="
              << champ::agg::rule_name(cfg.defense.rule)
              << ", attack=" << champ::attack::attack_kind_name(cfg.attack.kind) << "\n";
    if (last.benign_acc) std::cout << "  benign_acc " << *last.benign_acc << "\n";
    if (last.asr) std::cout << "  asr        " << *last.asr << "\n";
    std::cout << "  outputs in " << out_dir.string() << "\n";
    return 0;
}

// One-shot aggregation over a file of vectors: JSON object with "updates"
// (and optional "prev_global"/"history"), or plain text with one
// whitespace-separated vector per line.
int cmd_agg_test(const std::string& input, const std::string& defense,
                 const std::string& out_path) {
    std::ifstream in(input);
    if (!in) throw std::runtime_error("cannot open " + input);
    std::vector<champ::ParamVector> updates;
    std::vector<champ::ParamVector> history;
    champ::ParamVector prev_global;

    char c = 0;
    while (in.get(c) && std::isspace(static_cast<unsigned char>(c))) {}
    in.unget();
    if (c == '{' || c == '[') {
        json j = json::parse(in);
        if (j.is_array()) {
            updates = j.get<std::vector<champ::ParamVector>>();
        } else {
            updates = j.at("updates").get<std::vector<champ::ParamVector>>();
            if (j.contains("prev_global"))
                prev_global = j.at("prev_global").get<champ::ParamVector>();
            if (j.contains("history"))
                history = j.at("history").get<std::vector<champ::ParamVector>>();
        }
    } else {
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::stringstream ss(line);
            champ::ParamVector v;
            double x;
            while (ss >> x) v.push_back(x);
            if (!v.empty()) updates.push_back(std::move(v));
        }
    }
    if (updates.empty()) throw std::runtime_error("agg-test: no update vectors in " + input);
    if (prev_global.empty()) prev_global.assign(updates[0].size(), 0.0);

    const auto cfg = champ::agg::AggregatorConfig::parse(defense);
    const auto outcome = champ::agg::aggregate(cfg, updates, prev_global, history);

    json j{{"defense", cfg.str()}, {"global", outcome.global}};
    if (outcome.selected) j["selected"] = *outcome.selected;
    if (outcome.scores) j["scores"] = *outcome.scores;
    if (outcome.iterations) j["iterations"] = *outcome.iterations;
    if (out_path.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open " + out_path + " for writing");
        out << j.dump(2) << "\n";
    }
    return 0;
}

json mia_condition_json(const champ::bsci::MiaConditionResult& r) {
    json roc = json::array();
    for (const auto& pt : r.roc) roc.push_back({{"fpr", pt.fpr}, {"tpr", pt.tpr}});
    return {{"auc", r.auc},
            {"confusion",
             {{"tp", r.confusion.tp},
              {"fp", r.confusion.fp},
              {"tn", r.confusion.tn},
              {"fn", r.confusion.fn}}},
            {"accuracy", r.confusion.accuracy()},
            {"roc", roc}};
}

int cmd_mia(int seeds, std::uint64_t base_seed, const champ::bsci::MiaConfig& cfg,
            const std::string& out_flag) {
    const fs::path out_dir = resolve_out_dir(out_flag);
    fs::create_directories(out_dir);
    json all = json::array();
    for (int s = 0; s < seeds; ++s) {
        const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(s);
        const auto res = champ::bsci::appendix_a_experiment(cfg, seed);
        all.push_back({{"seed", seed},
                       {"clean", mia_condition_json(res.clean)},
                       {"backdoored", mia_condition_json(res.backdoored)}});
        std::cout << "seed " << seed << ": clean AUC " << res.clean.auc
                  << ", backdoored AUC " << res.backdoored.auc << "\n";
    }
    std::ofstream out(out_dir / "mia.json", std::ios::binary);
    out << all.dump(2) << "\n";
    std::cout << "wrote " << (out_dir / "mia.json").string() << "\n";
    return 0;
}

// Summarizes a rounds.jsonl into a per-round CSV plus a trailing summary row.
int cmd_report(const std::string& input, const std::string& out_path) {
    const auto records = champ::report::read_round_jsonl(input);
    std::ostringstream os;
    os << std::setprecision(10);
    os << "kind,t,benign_acc,asr,v,alpha,asr_mid\n";
    auto cell = [](const std::optional<double>& v) {
        return v ? json(*v).dump() : std::string{};
    };
    double asr_mid = 0.0, asr_final = 0.0, acc_final = 0.0;
    const int mid = static_cast<int>(records.size()) / 2;
    for (const auto& rec : records) {
        if (rec.t <= mid && rec.asr) asr_mid = *rec.asr;
        if (rec.asr) asr_final = *rec.asr;
        if (rec.benign_acc) acc_final = *rec.benign_acc;
        os << "round," << rec.t << ',' << cell(rec.benign_acc) << ',' << cell(rec.asr)
           << ',' << cell(rec.v) << ',' << cell(rec.alpha) << ",\n";
    }
    os << "summary," << (records.empty() ? 0 : records.back().t) << ',' << acc_final
       << ',' << asr_final << ",,," << asr_mid << "\n";
    if (out_path.empty()) {
        std::cout << os.str();
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open " + out_path + " for writing");
        out << os.str();
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated-learning simulator: robust aggregation vs adaptive backdoors"};
    app.require_subcommand(1);

    RunFlags run_flags;
    CLI::App* run = app.add_subcommand("run", "run a federated experiment");
    add_run_flags(run, run_flags);

    std::string agg_input, agg_defense = "fedavg", agg_out;
    CLI::App* agg = app.add_subcommand("agg-test", "one-shot aggregation over a file of vectors");
    agg->add_option("--input", agg_input, "JSON or whitespace vector file")->required();
    agg->add_option("--defense", agg_defense, "aggregation rule, e.g. krum:f=1");
    agg->add_option("--out", agg_out, "write outcome JSON here instead of stdout");

    int mia_seeds = 3;
    std::uint64_t mia_seed = 1;
    champ::bsci::MiaConfig mia_cfg;
    std::string mia_out;
    CLI::App* mia = app.add_subcommand("mia-appendix",
                                       "membership-leakage study: clean vs backdoored");
    mia->add_option("--seeds", mia_seeds, "number of seeds to run");
    mia->add_option("--seed", mia_seed, "base seed");
    mia->add_option("--classes", mia_cfg.classes, "synthetic class count");
    mia->add_option("--shadows", mia_cfg.shadow_count, "shadow model count");
    mia->add_option("--epochs", mia_cfg.epochs, "training epochs per model");
    mia->add_option("--noise", mia_cfg.noise, "synthetic blob noise sigma");
    mia->add_option("--trigger-size", mia_cfg.backdoor.size, "trigger side length");
    mia->add_option("--out", mia_out, "output directory (overrides CHAMPFL_OUT)");

    std::string report_input, report_out;
    CLI::App* report = app.add_subcommand("report", "summarize rounds.jsonl into CSV");
    report->add_option("--input", report_input, "rounds.jsonl path")->required();
    report->add_option("--out", report_out, "CSV output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // prints help, exit 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints the message
        return 2;
    }

    try {
        if (*run) return cmd_run(run_flags);
        if (*agg) return cmd_agg_test(agg_input, agg_defense, agg_out);
        if (*mia) return cmd_mia(mia_seeds, mia_seed, mia_cfg, mia_out);
        if (*report) return cmd_report(report_input, report_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
