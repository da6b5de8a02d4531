#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tradrec/common.hpp"
#include "tradrec/diffusion.hpp"
#include "tradrec/trade_graph.hpp"

namespace tradrec {

// Snapshots by year, shared read-only between workers.
class SnapshotSeries {
public:
    void add(BipartiteSnapshot s) {
        int year = s.year();
        by_year_[year] = std::make_shared<const BipartiteSnapshot>(std::move(s));
    }
    std::shared_ptr<const BipartiteSnapshot> find(int year) const {
        auto it = by_year_.find(year);
        return it == by_year_.end() ? nullptr : it->second;
    }
    std::shared_ptr<const BipartiteSnapshot> at(int year) const {
        auto s = find(year);
        if (!s) throw DataError("no snapshot for year " + std::to_string(year));
        return s;
    }
    std::vector<int> years() const {
        std::vector<int> out;
        for (const auto& [y, _] : by_year_) out.push_back(y);
        return out;
    }
    bool empty() const { return by_year_.empty(); }

private:
    std::map<int, std::shared_ptr<const BipartiteSnapshot>> by_year_;
};

// Products linked to `country` in `test` but not in `train`, in id order.
// Links lost between the two years are ignored.
inline std::vector<ProductId> new_exports(const BipartiteSnapshot& train, const BipartiteSnapshot& test,
                                          const CountryId& country) {
    auto ci = train.country_index(country);
    auto cj = test.country_index(country);
    if (!ci || !cj)
        throw DataError("country '" + country + "' missing from " + std::to_string(ci ? test.year() : train.year()));
    std::vector<ProductId> out;
    for (auto a : test.products_of(*cj)) {
        const auto& id = test.products()[a];
        auto p = train.product_index(id);
        if (!p || !train.linked(*ci, *p)) out.push_back(id);
    }
    return out;
}

struct CountryEvaluation {
    CountryId country;
    int hits = 0;         // n_i
    int new_exports = 0;  // E_i
    double precision = 0.0;
    std::optional<double> recall;  // undefined when E_i = 0
};

struct EvaluationRun {
    int train_year = 0;
    int test_year = 0;
    Algorithm algorithm = Algorithm::ProbS;
    RecommenderParams params;
    std::size_t L = 0;
    std::vector<CountryEvaluation> countries;
    double precision = 0.0;
    double recall = 0.0;      // over countries with E_i > 0
    double recall_all = 0.0;  // over every evaluated country, R_i = 0 when E_i = 0
    std::size_t excluded = 0;  // present at train, absent at test
    std::size_t without_new_exports = 0;
    bool recall_defined = false;
};

// Recommendation lists for every country, built from the training
// snapshot (and the one tau years earlier) only.
inline std::vector<RecommendationList> recommend_from_training(Algorithm algorithm, const BipartiteSnapshot& train,
                                                               const BipartiteSnapshot* past, RecommenderParams params,
                                                               std::size_t L, unsigned threads = 1) {
    return recommend_all(score_matrix(algorithm, train, past, params, threads), train, L);
}

inline EvaluationRun precision_recall(const BipartiteSnapshot& train, const BipartiteSnapshot& test,
                                      const std::vector<RecommendationList>& recommendations, std::size_t L) {
    if (L < 1) throw ConfigError("L must be >= 1");
    EvaluationRun run;
    run.train_year = train.year();
    run.test_year = test.year();
    run.L = L;
    if (!recommendations.empty()) {
        run.algorithm = recommendations.front().algorithm;
        run.params = recommendations.front().params;
    }

    std::vector<double> precisions, recalls, recalls_all;
    for (const auto& rec : recommendations) {
        if (rec.snapshot_fingerprint != train.fingerprint())
            throw DataError("recommendations for '" + rec.country + "' were not built from the training snapshot");
        if (!test.country_index(rec.country)) {
            ++run.excluded;
            continue;
        }
        auto added = new_exports(train, test, rec.country);
        CountryEvaluation ce;
        ce.country = rec.country;
        ce.new_exports = static_cast<int>(added.size());
        for (std::size_t n = 0; n < std::min(L, rec.ranked.size()); ++n)
            if (std::binary_search(added.begin(), added.end(), rec.ranked[n].product)) ++ce.hits;
        ce.precision = static_cast<double>(ce.hits) / static_cast<double>(L);
        precisions.push_back(ce.precision);
        if (ce.new_exports > 0) {
            ce.recall = static_cast<double>(ce.hits) / ce.new_exports;
            recalls.push_back(*ce.recall);
            recalls_all.push_back(*ce.recall);
        } else {
            ++run.without_new_exports;
            recalls_all.push_back(0.0);
        }
        run.countries.push_back(std::move(ce));
    }
    auto mean = [](const std::vector<double>& v) {
        return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    run.precision = mean(precisions);
    run.recall = mean(recalls);
    run.recall_all = mean(recalls_all);
    run.recall_defined = !recalls.empty();
    return run;
}

struct SweepRow {
    Algorithm algorithm = Algorithm::ProbS;
    RecommenderParams params;
    int train_year = 0;
    double precision = 0.0;
    double recall = 0.0;
    double recall_all = 0.0;
    std::size_t evaluated = 0;
    std::size_t excluded = 0;
    std::size_t without_new_exports = 0;
};

struct SweepSummary {
    Algorithm algorithm = Algorithm::ProbS;
    RecommenderParams params;
    std::size_t runs = 0;
    double precision = 0.0;
    double recall = 0.0;
    double recall_all = 0.0;
};

struct SweepTable {
    std::vector<SweepRow> rows;  // ordered by algorithm (as requested), then T
    std::vector<SweepSummary> summary;
    std::vector<std::string> missing;  // (T, algorithm) pairs that could not run
};

struct SweepConfig {
    YearRange train_years;
    int horizon = 5;
    std::vector<Algorithm> algorithms{std::begin(kAllAlgorithms), std::end(kAllAlgorithms)};
    RecommenderParams params;
    std::size_t L = 20;
    unsigned threads = 1;
};

// Precision/recall for every (T, algorithm), then the mean over T per algorithm.
inline SweepTable sweep(const SnapshotSeries& series, const SweepConfig& config) {
    if (config.horizon < 1) throw ConfigError("horizon must be >= 1");
    config.params.validate();
    struct Job {
        Algorithm algorithm;
        int year;
    };
    std::vector<Job> jobs;
    for (auto a : config.algorithms)
        for (int t = config.train_years.first; t <= config.train_years.last; ++t) jobs.push_back({a, t});

    std::vector<std::optional<SweepRow>> results(jobs.size());
    std::vector<std::string> reasons(jobs.size());
    parallel_for(jobs.size(), config.threads, [&](std::size_t n) {
        const auto& job = jobs[n];
        auto train = series.find(job.year);
        auto test = series.find(job.year + config.horizon);
        auto past = uses_history(job.algorithm) ? series.find(job.year - config.params.tau) : nullptr;
        auto label = to_string(job.algorithm) + " T=" + std::to_string(job.year) + ": ";
        if (!train) return void(reasons[n] = label + "missing snapshot " + std::to_string(job.year));
        if (!test) return void(reasons[n] = label + "missing snapshot " + std::to_string(job.year + config.horizon));
        if (uses_history(job.algorithm) && !past)
            return void(reasons[n] = label + "missing snapshot " + std::to_string(job.year - config.params.tau));
        auto recs = recommend_from_training(job.algorithm, *train, past.get(), config.params, config.L);
        auto run = precision_recall(*train, *test, recs, config.L);
        results[n] = SweepRow{job.algorithm,   recs.empty() ? config.params : recs.front().params,
                              job.year,        run.precision,
                              run.recall,      run.recall_all,
                              run.countries.size(), run.excluded,
                              run.without_new_exports};
    });

    SweepTable table;
    for (std::size_t n = 0; n < jobs.size(); ++n) {
        if (results[n]) table.rows.push_back(*results[n]);
        else table.missing.push_back(reasons[n]);
    }
    for (auto a : config.algorithms) {
        SweepSummary s;
        s.algorithm = a;
        s.params = config.params;
        for (const auto& row : table.rows) {
            if (row.algorithm != a) continue;
            ++s.runs;
            s.precision += row.precision;
            s.recall += row.recall;
            s.recall_all += row.recall_all;
        }
        if (s.runs > 0) {
            s.precision /= static_cast<double>(s.runs);
            s.recall /= static_cast<double>(s.runs);
            s.recall_all /= static_cast<double>(s.runs);
        }
        table.summary.push_back(s);
    }
    return table;
}

}  // namespace tradrec
