#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "champ/sim/config.hpp"
#include "champ/sim/simulator.hpp"

namespace champ::report {

// FNV-1a over the canonical config dump; stable across runs for dedup.
inline std::string config_digest(const sim::ExperimentConfig& cfg) {
    const std::string canon = nlohmann::json(cfg).dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

namespace detail {

inline nlohmann::ordered_json round_to_json(const sim::RoundRecord& rec) {
    nlohmann::ordered_json j;
    j["t"] = rec.t;
    j["benign_acc"] = rec.benign_acc ? nlohmann::json(*rec.benign_acc)
                                     : nlohmann::json(nullptr);
    j["asr"] = rec.asr ? nlohmann::json(*rec.asr) : nlohmann::json(nullptr);
    j["v"] = rec.v ? nlohmann::json(*rec.v) : nlohmann::json(nullptr);
    j["alpha"] = rec.alpha ? nlohmann::json(*rec.alpha) : nlohmann::json(nullptr);
    j["selected"] = rec.selected ? nlohmann::json(*rec.selected)
                                 : nlohmann::json(nullptr);
    j["scores"] = rec.scores ? nlohmann::json(*rec.scores) : nlohmann::json(nullptr);
    return j;
}

inline sim::RoundRecord round_from_json(const nlohmann::json& j) {
    sim::RoundRecord rec;
    rec.t = j.at("t").get<int>();
    if (!j.at("benign_acc").is_null()) rec.benign_acc = j.at("benign_acc").get<double>();
    if (!j.at("asr").is_null()) rec.asr = j.at("asr").get<double>();
    if (!j.at("v").is_null()) rec.v = j.at("v").get<double>();
    if (!j.at("alpha").is_null()) rec.alpha = j.at("alpha").get<double>();
    if (!j.at("selected").is_null())
        rec.selected = j.at("selected").get<std::vector<int>>();
    if (!j.at("scores").is_null())
        rec.scores = j.at("scores").get<std::vector<double>>();
    return rec;
}

}  // namespace detail

inline void write_round_jsonl(const std::vector<sim::RoundRecord>& records,
                              const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // binary: byte-stable newlines
    if (!out) throw std::runtime_error("jsonl: cannot open " + path + " for writing");
    for (const auto& rec : records) out << detail::round_to_json(rec).dump() << "\n";
    if (!out) throw std::runtime_error("jsonl: write failed for " + path);
}

inline std::vector<sim::RoundRecord> read_round_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("jsonl: cannot open " + path);
    std::vector<sim::RoundRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        records.push_back(detail::round_from_json(nlohmann::json::parse(line)));
    }
    return records;
}

struct RunSummary {
    std::string digest;
    std::string defense;
    std::string attack;
    std::string prox;
    std::string trigger;  // e.g. "3x3"
    double asr_mid = 0.0;
    double asr_final = 0.0;
    double benign_acc_final = 0.0;
};

// Condenses a run into the summary row; mid-run values read the last
// evaluated round at or before floor(T/2).
inline RunSummary summarize(const sim::ExperimentConfig& cfg,
                            const std::vector<sim::RoundRecord>& records) {
    if (records.empty()) throw std::invalid_argument("summarize: no rounds");
    RunSummary s;
    s.digest = config_digest(cfg);
    s.defense = agg::rule_name(cfg.defense.rule);
    s.attack = attack::attack_kind_name(cfg.attack.kind);
    s.prox = cfg.attack.kind == attack::AttackKind::champ ? cfg.attack.prox.name() : "-";
    s.trigger = std::to_string(cfg.attack.backdoor.size) + "x" +
                std::to_string(cfg.attack.backdoor.size);

    const int mid = static_cast<int>(records.size()) / 2;
    for (const auto& rec : records) {
        if (rec.t <= mid && rec.asr) s.asr_mid = *rec.asr;
        if (rec.asr) s.asr_final = *rec.asr;
        if (rec.benign_acc) s.benign_acc_final = *rec.benign_acc;
    }
    return s;
}

inline void write_summary_csv(const std::vector<RunSummary>& summaries,
                              const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("csv: cannot open " + path + " for writing");
    out << "defense,attack,prox,trigger,asr_mid,asr_final,benign_acc_final\n";
    out << std::setprecision(10);
    for (const auto& s : summaries)
        out << s.defense << ',' << s.attack << ',' << s.prox << ',' << s.trigger << ','
            << s.asr_mid << ',' << s.asr_final << ',' << s.benign_acc_final << "\n";
    if (!out) throw std::runtime_error("csv: write failed for " + path);
}

}  // namespace champ::report
