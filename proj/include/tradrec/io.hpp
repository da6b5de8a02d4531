#pragma once

#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tradrec/common.hpp"
#include "tradrec/counterfactual.hpp"
#include "tradrec/diffusion.hpp"
#include "tradrec/evaluation.hpp"
#include "tradrec/fitness.hpp"

namespace tradrec {

// Written at the top of every output file. `config` holds the fully
// resolved settings as key/value pairs in a fixed order.
struct Provenance {
    std::vector<std::pair<std::string, std::string>> config;
    std::string input_hash;

    std::string config_text() const {
        std::string out;
        for (const auto& [k, v] : config) out += k + "=" + v + ";";
        return out;
    }
    std::string config_hash() const {
        Fnv1a h;
        h.update(config_text());
        return h.hex();
    }
};

// CSV outputs carry the provenance as leading '#' lines.
inline void write_provenance(std::ostream& out, const Provenance& p) {
    out << "# version: " << kVersion << "\n";
    out << "# config_hash: " << p.config_hash() << "\n";
    out << "# input_hash: " << p.input_hash << "\n";
    out << "# config: " << p.config_text() << "\n";
}

// JSON-lines outputs carry it as a first {"provenance": ...} record.
inline void write_provenance_json(std::ostream& out, const Provenance& p) {
    nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
    for (const auto& [k, v] : p.config) cfg[k] = v;
    nlohmann::ordered_json j;
    j["provenance"] = {{"version", kVersion},
                       {"config_hash", p.config_hash()},
                       {"input_hash", p.input_hash},
                       {"config", cfg}};
    out << j.dump() << "\n";
}

// One JSON object per line: country, algorithm, params, ranked pairs.
// Scores are rounded to 12 significant digits.
inline void write_recommendations(std::ostream& out, const std::vector<RecommendationList>& lists) {
    for (const auto& l : lists) {
        nlohmann::ordered_json j;
        j["country"] = l.country;
        j["algorithm"] = to_string(l.algorithm);
        j["year"] = l.year;
        nlohmann::ordered_json params = nlohmann::ordered_json::object();
        if (l.algorithm == Algorithm::TProbS) params["theta"] = l.params.theta;
        if (uses_history(l.algorithm)) {
            params["tau"] = l.params.tau;
            params["epsilon"] = l.params.epsilon;
        }
        j["params"] = params;
        auto ranked = nlohmann::ordered_json::array();
        for (const auto& r : l.ranked) ranked.push_back(nlohmann::ordered_json::array({r.product, round_significant(r.score)}));
        j["ranked"] = ranked;
        j["padded"] = l.padded;
        j["truncated"] = l.truncated;
        out << j.dump() << "\n";
    }
}

inline void write_fitness(std::ostream& out, const FitnessResult& r) {
    out << "year,country,fitness,rank\n";
    for (std::size_t i = 0; i < r.countries.size(); ++i)
        out << r.year << "," << r.countries[i] << "," << format_real(r.fitness[i]) << "," << r.rank[i] << "\n";
}

// Products without exporters have no complexity and are omitted.
inline void write_complexity(std::ostream& out, const FitnessResult& r, const BipartiteSnapshot& s) {
    out << "year,product,complexity\n";
    for (std::size_t a = 0; a < r.products.size(); ++a)
        if (s.product_degrees()[a] > 0) out << r.year << "," << r.products[a] << "," << format_real(r.complexity[a]) << "\n";
}

inline std::string theta_column(Algorithm a, const RecommenderParams& p) {
    return a == Algorithm::TProbS ? format_real(p.theta) : "";
}
inline std::string tau_column(Algorithm a, const RecommenderParams& p) {
    return uses_history(a) ? std::to_string(p.tau) : "";
}

// Per-T rows followed by one "mean" row per algorithm.
inline void write_sweep(std::ostream& out, const SweepTable& t) {
    out << "algorithm,theta,tau,T,precision,recall\n";
    for (const auto& r : t.rows)
        out << to_string(r.algorithm) << "," << theta_column(r.algorithm, r.params) << ","
            << tau_column(r.algorithm, r.params) << "," << r.train_year << "," << format_real(r.precision) << ","
            << format_real(r.recall) << "\n";
    for (const auto& s : t.summary)
        out << to_string(s.algorithm) << "," << theta_column(s.algorithm, s.params) << ","
            << tau_column(s.algorithm, s.params) << ",mean," << format_real(s.precision) << "," << format_real(s.recall)
            << "\n";
}

// Companion table: both recall conventions and country counts.
inline void write_sweep_details(std::ostream& out, const SweepTable& t) {
    out << "algorithm,T,precision,recall_new_exporters,recall_all_countries,evaluated,excluded,without_new_exports\n";
    for (const auto& r : t.rows)
        out << to_string(r.algorithm) << "," << r.train_year << "," << format_real(r.precision) << ","
            << format_real(r.recall) << "," << format_real(r.recall_all) << "," << r.evaluated << "," << r.excluded
            << "," << r.without_new_exports << "\n";
    for (const auto& m : t.missing) out << "# missing: " << m << "\n";
}

inline void write_counterfactual(std::ostream& out, const CounterfactualReport& r) {
    out << "mode,algorithm,L,country,tier,fitness_base,fitness_scenario,delta_fitness,rank_base,rank_scenario,"
           "delta_rank\n";
    for (const auto& row : r.rows) {
        const auto& o = row.outcome;
        out << to_string(row.mode) << "," << to_string(row.algorithm) << "," << row.L << "," << row.country << ","
            << to_string(row.tier) << "," << format_real(o.fitness_base) << "," << format_real(o.fitness_scenario) << ","
            << format_real(o.delta_fitness) << "," << o.rank_base << "," << o.rank_scenario << "," << o.delta_rank
            << "\n";
    }
    for (const auto& s : r.skipped)
        out << "# skipped: " << to_string(s.algorithm) << " " << s.year << " " << s.country << ": " << s.reason << "\n";
}

inline void write_tier_aggregates(std::ostream& out, const CounterfactualReport& r) {
    out << "mode,algorithm,L,tier,countries,mean_delta_fitness,mean_delta_rank\n";
    for (const auto& g : r.aggregates)
        out << to_string(g.mode) << "," << to_string(g.algorithm) << ","
            << (g.mode == ScenarioMode::FixedL ? std::to_string(g.L) : std::string("dynamic")) << ","
            << to_string(g.tier) << "," << g.count << "," << format_real(g.mean_delta_fitness) << ","
            << format_real(g.mean_delta_rank) << "\n";
}

inline void write_virtual_summary(std::ostream& out, const VirtualReport& v) {
    out << "algorithm,country,runs,mean_delta_fitness,improved\n";
    for (const auto& s : v.per_country)
        out << to_string(s.algorithm) << "," << s.country << "," << s.runs << "," << format_real(s.mean_delta_fitness)
            << "," << (s.mean_delta_fitness > 0.0 ? 1 : 0) << "\n";
    for (const auto& [a, n] : v.countries) {
        auto it = v.improved.find(a);
        out << "# " << to_string(a) << ": " << (it == v.improved.end() ? 0 : it->second) << " of " << n
            << " countries improve\n";
    }
}

}  // namespace tradrec
