#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "tradrec/common.hpp"
#include "tradrec/diffusion.hpp"
#include "tradrec/evaluation.hpp"
#include "tradrec/fitness.hpp"
#include "tradrec/trade_graph.hpp"

namespace tradrec {

enum class ScenarioMode { FixedL, VirtualNetwork };

inline std::string to_string(ScenarioMode m) { return m == ScenarioMode::FixedL ? "fixed_L" : "virtual"; }

// One country's export row edited; every other row is the reference's.
struct Scenario {
    std::shared_ptr<const BipartiteSnapshot> reference;  // deltas are measured against this
    BipartiteSnapshot network;
    CountryId focal;
    std::vector<ProductId> added;
    std::vector<ProductId> removed;
    ScenarioMode mode = ScenarioMode::FixedL;
};

// Links the focal country to the first L products of `recs`.
inline Scenario apply_recommendations(std::shared_ptr<const BipartiteSnapshot> snapshot, const CountryId& country,
                                      const RecommendationList& recs, std::size_t L) {
    if (!snapshot) throw DataError("apply_recommendations: null snapshot");
    if (recs.snapshot_fingerprint != snapshot->fingerprint())
        throw DataError("recommendations for '" + recs.country + "' were built from a different snapshot");
    if (recs.country != country)
        throw DataError("recommendations belong to '" + recs.country + "', not '" + country + "'");
    if (L > recs.ranked.size())
        throw DataError("L = " + std::to_string(L) + " exceeds recommendation list length " +
                        std::to_string(recs.ranked.size()));
    const std::size_t c = snapshot->require_country(country);
    std::vector<std::size_t> add;
    Scenario sc;
    for (std::size_t n = 0; n < L; ++n) {
        const auto& item = recs.ranked[n];
        if (snapshot->linked(c, item.index))
            throw DataError("product '" + item.product + "' is already exported by '" + country + "'");
        add.push_back(item.index);
        sc.added.push_back(item.product);
    }
    sc.network = snapshot->with_row_edit(c, add);
    sc.reference = std::move(snapshot);
    sc.focal = country;
    sc.mode = ScenarioMode::FixedL;
    return sc;
}

// Real network at T + horizon with the focal country's additions since T
// replaced by its top-L_i recommendations from T (L_i = number of real
// additions). nullopt when the country added nothing.
inline std::optional<Scenario> virtual_network(const BipartiteSnapshot& train,
                                               std::shared_ptr<const BipartiteSnapshot> test, const CountryId& country,
                                               const RecommendationList& recs) {
    if (!test) throw DataError("virtual_network: null test snapshot");
    if (recs.snapshot_fingerprint != train.fingerprint())
        throw DataError("recommendations for '" + recs.country + "' were not built from the training snapshot");
    if (recs.country != country)
        throw DataError("recommendations belong to '" + recs.country + "', not '" + country + "'");
    if (train.products() != test->products()) throw DataError("train and test snapshots do not share a product index");
    auto real = new_exports(train, *test, country);
    if (real.empty()) return std::nullopt;
    if (recs.ranked.size() < real.size())
        throw DataError("recommendation list for '" + country + "' is shorter than its " + std::to_string(real.size()) +
                        " real additions");

    const std::size_t c = test->require_country(country);
    std::vector<std::size_t> remove, add;
    Scenario sc;
    for (const auto& id : real) remove.push_back(*test->product_index(id));
    for (std::size_t n = 0; n < real.size(); ++n) {
        add.push_back(recs.ranked[n].index);
        sc.added.push_back(recs.ranked[n].product);
    }
    sc.removed = std::move(real);
    sc.network = test->with_row_edit(c, add, remove);
    sc.reference = std::move(test);
    sc.focal = country;
    sc.mode = ScenarioMode::VirtualNetwork;
    return sc;
}

struct ScenarioOutcome {
    double fitness_base = 0.0;
    double fitness_scenario = 0.0;
    double delta_fitness = 0.0;
    int rank_base = 0;
    int rank_scenario = 0;
    int delta_rank = 0;  // positive = moved up
};

// Solves the reference (unless `base` is supplied) and the scenario network
// with the same solver settings. Throws ConvergenceError if either run does
// not converge.
inline ScenarioOutcome evaluate_scenario(const Scenario& sc, const SolverConfig& config,
                                         const FitnessResult* base = nullptr) {
    std::optional<FitnessResult> own;
    if (!base || base->snapshot_fingerprint != sc.reference->fingerprint()) {
        own = solve_fitness(*sc.reference, config);
        base = &*own;
    }
    if (!base->converged) throw ConvergenceError("fitness did not converge on the reference network");
    auto modified = solve_fitness(sc.network, config);
    if (!modified.converged) throw ConvergenceError("fitness did not converge on the scenario for '" + sc.focal + "'");
    ScenarioOutcome o;
    o.fitness_base = base->fitness_of(sc.focal);
    o.fitness_scenario = modified.fitness_of(sc.focal);
    o.delta_fitness = o.fitness_scenario - o.fitness_base;
    o.rank_base = base->rank_of(sc.focal);
    o.rank_scenario = modified.rank_of(sc.focal);
    o.delta_rank = o.rank_base - o.rank_scenario;
    return o;
}

struct CounterfactualRow {
    ScenarioMode mode = ScenarioMode::FixedL;
    Algorithm algorithm = Algorithm::ProbS;
    std::size_t L = 0;
    int year = 0;
    CountryId country;
    Tier tier = Tier::Top;
    ScenarioOutcome outcome;
};

struct TierAggregate {
    ScenarioMode mode = ScenarioMode::FixedL;
    Algorithm algorithm = Algorithm::ProbS;
    std::size_t L = 0;  // 0 in virtual mode, where L varies per country
    Tier tier = Tier::Top;
    std::size_t count = 0;
    double mean_delta_fitness = 0.0;
    double mean_delta_rank = 0.0;
};

struct SkippedScenario {
    Algorithm algorithm = Algorithm::ProbS;
    int year = 0;
    CountryId country;
    std::string reason;
};

struct CounterfactualReport {
    std::vector<CounterfactualRow> rows;
    std::vector<TierAggregate> aggregates;
    std::vector<SkippedScenario> skipped;
};

// Mean delta fitness and delta rank per (mode, algorithm, L, tier), sorted
// by that key. Virtual-mode rows are pooled over L.
inline std::vector<TierAggregate> aggregate_by_tier(const std::vector<CounterfactualRow>& rows) {
    std::vector<TierAggregate> out;
    for (const auto& r : rows) {
        const std::size_t L = r.mode == ScenarioMode::FixedL ? r.L : 0;
        auto it = std::find_if(out.begin(), out.end(), [&](const TierAggregate& g) {
            return g.mode == r.mode && g.algorithm == r.algorithm && g.L == L && g.tier == r.tier;
        });
        if (it == out.end()) {
            out.push_back({r.mode, r.algorithm, L, r.tier, 0, 0.0, 0.0});
            it = out.end() - 1;
        }
        ++it->count;
        it->mean_delta_fitness += r.outcome.delta_fitness;
        it->mean_delta_rank += r.outcome.delta_rank;
    }
    for (auto& g : out) {
        g.mean_delta_fitness /= static_cast<double>(g.count);
        g.mean_delta_rank /= static_cast<double>(g.count);
    }
    std::stable_sort(out.begin(), out.end(), [](const TierAggregate& x, const TierAggregate& y) {
        return std::tuple(x.mode, x.algorithm, x.L, x.tier) < std::tuple(y.mode, y.algorithm, y.L, y.tier);
    });
    return out;
}

struct CounterfactualConfig {
    std::vector<Algorithm> algorithms{Algorithm::HeatS, Algorithm::TProbS};
    RecommenderParams params;
    std::size_t L = 20;
    SolverConfig solver;
    unsigned threads = 1;
};

namespace detail {

inline void run_scenarios(std::vector<std::optional<Scenario>>& scenarios, const FitnessResult& base,
                          const SolverConfig& solver, unsigned threads, std::vector<std::optional<ScenarioOutcome>>& out,
                          std::vector<std::string>& errors) {
    out.assign(scenarios.size(), std::nullopt);
    errors.assign(scenarios.size(), {});
    parallel_for(scenarios.size(), threads, [&](std::size_t n) {
        if (!scenarios[n]) return;
        try {
            out[n] = evaluate_scenario(*scenarios[n], solver, &base);
        } catch (const ConvergenceError& e) {
            errors[n] = e.what();
        }
        scenarios[n].reset();
    });
}

}  // namespace detail

// Fixed-L experiment: for every country and algorithm, add its top-L
// recommendations alone and record the fitness/rank change. Tiers come
// from the unmodified network's fitness.
inline CounterfactualReport tier_report(std::shared_ptr<const BipartiteSnapshot> snapshot,
                                        const BipartiteSnapshot* past, const CounterfactualConfig& config) {
    auto base = solve_fitness(*snapshot, config.solver);
    if (!base.converged)
        throw ConvergenceError("fitness did not converge on the " + std::to_string(snapshot->year()) + " network");
    auto tiers = assign_tiers(base);

    CounterfactualReport report;
    for (auto algorithm : config.algorithms) {
        std::vector<RecommendationList> recs;
        if (config.L > 0) recs = recommend_from_training(algorithm, *snapshot, past, config.params, config.L, config.threads);
        std::vector<std::optional<Scenario>> scenarios(snapshot->num_countries());
        for (std::size_t i = 0; i < snapshot->num_countries(); ++i) {
            const auto& id = snapshot->countries()[i];
            if (config.L == 0) {
                scenarios[i] = Scenario{snapshot, *snapshot, id, {}, {}, ScenarioMode::FixedL};
            } else {
                std::size_t L = std::min(config.L, recs[i].ranked.size());
                scenarios[i] = apply_recommendations(snapshot, id, recs[i], L);
            }
        }
        std::vector<std::optional<ScenarioOutcome>> outcomes;
        std::vector<std::string> errors;
        detail::run_scenarios(scenarios, base, config.solver, config.threads, outcomes, errors);
        for (std::size_t i = 0; i < outcomes.size(); ++i) {
            const auto& id = snapshot->countries()[i];
            if (!outcomes[i]) {
                report.skipped.push_back({algorithm, snapshot->year(), id, errors[i]});
                continue;
            }
            report.rows.push_back(
                {ScenarioMode::FixedL, algorithm, config.L, snapshot->year(), id, tiers.tiers[i], *outcomes[i]});
        }
    }
    report.aggregates = aggregate_by_tier(report.rows);
    return report;
}

struct VirtualSummaryRow {
    Algorithm algorithm = Algorithm::ProbS;
    CountryId country;
    std::size_t runs = 0;
    double mean_delta_fitness = 0.0;
};

struct VirtualReport {
    CounterfactualReport report;
    std::vector<VirtualSummaryRow> per_country;  // mean over T per (algorithm, country)
    std::map<Algorithm, std::size_t> improved;   // countries with mean delta > 0
    std::map<Algorithm, std::size_t> countries;  // countries with at least one run
};

// Dynamic-L experiment over every T in `train_years`: each country's real
// additions in (T, T + horizon] are swapped for its recommendations.
// Deltas are against the real network at T + horizon; tiers come from it.
inline VirtualReport virtual_report(const SnapshotSeries& series, YearRange train_years, int horizon,
                                    const CounterfactualConfig& config) {
    if (horizon < 1) throw ConfigError("horizon must be >= 1");
    VirtualReport out;
    auto& report = out.report;
    for (int t = train_years.first; t <= train_years.last; ++t) {
        auto train = series.find(t);
        auto test = series.find(t + horizon);
        if (!train || !test) {
            report.skipped.push_back({Algorithm::ProbS, t, "*", "missing snapshot " +
                                                                    std::to_string(train ? t + horizon : t)});
            continue;
        }
        if (train->products() != test->products()) throw DataError("snapshots do not share a product index");
        auto base = solve_fitness(*test, config.solver);
        if (!base.converged) {
            report.skipped.push_back({Algorithm::ProbS, t, "*", "fitness did not converge on the real network"});
            continue;
        }
        auto tiers = assign_tiers(base);
        for (auto algorithm : config.algorithms) {
            auto past = uses_history(algorithm) ? series.find(t - config.params.tau) : nullptr;
            if (uses_history(algorithm) && !past) {
                report.skipped.push_back(
                    {algorithm, t, "*", "missing snapshot " + std::to_string(t - config.params.tau)});
                continue;
            }
            auto scores = score_matrix(algorithm, *train, past.get(), config.params, config.threads);
            std::vector<std::optional<Scenario>> scenarios(test->num_countries());
            std::vector<std::string> reasons(test->num_countries());
            for (std::size_t i = 0; i < test->num_countries(); ++i) {
                const auto& id = test->countries()[i];
                auto ti = train->country_index(id);
                if (!ti) {
                    reasons[i] = "absent at " + std::to_string(t);
                    continue;
                }
                auto li = new_exports(*train, *test, id).size();
                if (li == 0) {
                    reasons[i] = "no new exports";
                    continue;
                }
                auto recs = top_l(scores.scores.row(*ti), *train, id, li);
                recs.algorithm = algorithm;
                scenarios[i] = virtual_network(*train, test, id, recs);
            }
            std::vector<std::optional<ScenarioOutcome>> outcomes;
            std::vector<std::string> errors;
            detail::run_scenarios(scenarios, base, config.solver, config.threads, outcomes, errors);
            for (std::size_t i = 0; i < outcomes.size(); ++i) {
                const auto& id = test->countries()[i];
                if (!outcomes[i]) {
                    report.skipped.push_back({algorithm, t, id, reasons[i].empty() ? errors[i] : reasons[i]});
                    continue;
                }
                std::size_t li = new_exports(*train, *test, id).size();
                report.rows.push_back({ScenarioMode::VirtualNetwork, algorithm, li, t, id, tiers.tiers[i], *outcomes[i]});
            }
        }
    }
    report.aggregates = aggregate_by_tier(report.rows);

    std::map<std::pair<Algorithm, CountryId>, VirtualSummaryRow> acc;
    for (const auto& r : report.rows) {
        auto& s = acc[{r.algorithm, r.country}];
        s.algorithm = r.algorithm;
        s.country = r.country;
        ++s.runs;
        s.mean_delta_fitness += r.outcome.delta_fitness;
    }
    for (auto& [key, s] : acc) {
        s.mean_delta_fitness /= static_cast<double>(s.runs);
        out.per_country.push_back(s);
        ++out.countries[s.algorithm];
        if (s.mean_delta_fitness > 0.0) ++out.improved[s.algorithm];
    }
    return out;
}

// Picks `count` countries of `tier` with a seeded shuffle (all of them if
// the tier is smaller). Result is in id order.
inline std::vector<CountryId> sample_tier(const TierAssignment& tiers, Tier tier, std::size_t count,
                                          std::uint64_t seed) {
    std::vector<CountryId> pool;
    for (std::size_t i = 0; i < tiers.countries.size(); ++i)
        if (tiers.tiers[i] == tier) pool.push_back(tiers.countries[i]);
    std::mt19937_64 rng(seed);
    for (std::size_t n = pool.size(); n > 1; --n) {
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        std::swap(pool[n - 1], pool[pick(rng)]);
    }
    if (pool.size() > count) pool.resize(count);
    std::sort(pool.begin(), pool.end());
    return pool;
}

// Fitness of selected countries as a function of the list length L.
inline CounterfactualReport length_sweep(std::shared_ptr<const BipartiteSnapshot> snapshot,
                                         const BipartiteSnapshot* past, const std::vector<CountryId>& countries,
                                         const std::vector<std::size_t>& lengths, const CounterfactualConfig& config) {
    auto base = solve_fitness(*snapshot, config.solver);
    if (!base.converged)
        throw ConvergenceError("fitness did not converge on the " + std::to_string(snapshot->year()) + " network");
    auto tiers = assign_tiers(base);
    const std::size_t longest = lengths.empty() ? 0 : *std::max_element(lengths.begin(), lengths.end());

    CounterfactualReport report;
    for (auto algorithm : config.algorithms) {
        auto scores = score_matrix(algorithm, *snapshot, past, config.params, config.threads);
        std::vector<std::optional<Scenario>> scenarios;
        std::vector<std::pair<CountryId, std::size_t>> keys;
        for (const auto& id : countries) {
            const std::size_t c = snapshot->require_country(id);
            auto recs = longest > 0 ? top_l(scores.scores.row(c), *snapshot, id, longest) : RecommendationList{};
            recs.algorithm = algorithm;
            for (auto L : lengths) {
                if (L == 0) {
                    scenarios.push_back(Scenario{snapshot, *snapshot, id, {}, {}, ScenarioMode::FixedL});
                } else {
                    scenarios.push_back(apply_recommendations(snapshot, id, recs, std::min(L, recs.ranked.size())));
                }
                keys.emplace_back(id, L);
            }
        }
        std::vector<std::optional<ScenarioOutcome>> outcomes;
        std::vector<std::string> errors;
        detail::run_scenarios(scenarios, base, config.solver, config.threads, outcomes, errors);
        for (std::size_t n = 0; n < outcomes.size(); ++n) {
            const auto& [id, L] = keys[n];
            if (!outcomes[n]) {
                report.skipped.push_back({algorithm, snapshot->year(), id, errors[n]});
                continue;
            }
            report.rows.push_back({ScenarioMode::FixedL, algorithm, L, snapshot->year(), id, tiers.tier_of(id), *outcomes[n]});
        }
    }
    report.aggregates = aggregate_by_tier(report.rows);
    return report;
}

}  // namespace tradrec
