#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "tradrec/evaluation.hpp"

using namespace tradrec;

namespace {

BipartiteSnapshot snap(int year, std::vector<std::string> countries, std::vector<std::string> products,
                       const oracle::Grid& g) {
    Matrix<std::uint8_t> adj(countries.size(), products.size(), 0);
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t p = 0; p < g[i].size(); ++p) adj(i, p) = static_cast<std::uint8_t>(g[i][p]);
    return BipartiteSnapshot::from_adjacency(year, countries, products, adj);
}

RecommendationList hand_list(const BipartiteSnapshot& train, const CountryId& country,
                             const std::vector<std::string>& products) {
    RecommendationList r;
    r.country = country;
    r.year = train.year();
    r.snapshot_fingerprint = train.fingerprint();
    r.requested = products.size();
    double score = 1.0;
    for (const auto& p : products) {
        r.ranked.push_back({p, *train.product_index(p), score});
        score /= 2;
    }
    return r;
}

}  // namespace

TEST(NewExports, GainsOnlyLossesIgnored) {
    auto train = snap(2000, {"A", "B"}, {"p", "q", "r", "s"}, {{1, 1, 0, 0}, {0, 0, 1, 0}});
    auto test = snap(2005, {"A", "B"}, {"p", "q", "r", "s"}, {{0, 1, 1, 1}, {0, 0, 1, 0}});
    EXPECT_EQ(new_exports(train, test, "A"), (std::vector<ProductId>{"r", "s"}));
    EXPECT_TRUE(new_exports(train, test, "B").empty());
    EXPECT_THROW(new_exports(train, test, "Z"), DataError);
}

TEST(PrecisionRecall, HandComputed) {
    // A gains {r, s}; list [r, p2, q2] -> n=1, P=1/3, R=1/2
    // B gains {p}; list [q, r, p] -> n=1, P=1/3, R=1
    // C gains nothing
    std::vector<std::string> ps{"p", "p2", "q", "q2", "r", "s"};
    auto train = snap(2000, {"A", "B", "C"}, ps, {{1, 0, 1, 0, 0, 0}, {0, 0, 0, 0, 0, 1}, {1, 0, 0, 0, 0, 0}});
    auto test = snap(2005, {"A", "B", "C"}, ps, {{1, 0, 1, 0, 1, 1}, {1, 0, 0, 0, 0, 1}, {1, 0, 0, 0, 0, 0}});
    std::vector<RecommendationList> recs{hand_list(train, "A", {"r", "p2", "q2"}),
                                         hand_list(train, "B", {"q", "r", "p"}),
                                         hand_list(train, "C", {"q", "r", "s"})};
    auto run = precision_recall(train, test, recs, 3);
    ASSERT_EQ(run.countries.size(), 3u);
    EXPECT_EQ(run.countries[0].hits, 1);
    EXPECT_EQ(run.countries[0].new_exports, 2);
    EXPECT_DOUBLE_EQ(*run.countries[0].recall, 0.5);
    EXPECT_DOUBLE_EQ(*run.countries[1].recall, 1.0);
    EXPECT_FALSE(run.countries[2].recall.has_value());
    EXPECT_DOUBLE_EQ(run.precision, (1.0 / 3 + 1.0 / 3 + 0.0) / 3);
    EXPECT_DOUBLE_EQ(run.recall, 0.75);
    EXPECT_DOUBLE_EQ(run.recall_all, 0.5);
    EXPECT_EQ(run.without_new_exports, 1u);
    EXPECT_TRUE(run.recall_defined);
}

TEST(PrecisionRecall, SingleCountryExample) {
    // L = 20, E = 10, 3 hits
    std::vector<std::string> ps;
    for (int n = 0; n < 40; ++n) ps.push_back(oracle::product_name(n));
    oracle::Grid tr(1, std::vector<int>(40, 0)), te(1, std::vector<int>(40, 0));
    tr[0][0] = te[0][0] = 1;
    for (int n = 1; n <= 10; ++n) te[0][n] = 1;
    auto train = snap(2000, {"A"}, ps, tr);
    auto test = snap(2005, {"A"}, ps, te);
    std::vector<std::string> list{ps[1], ps[2], ps[3]};
    for (int n = 11; n < 28; ++n) list.push_back(ps[n]);
    auto run = precision_recall(train, test, {hand_list(train, "A", list)}, 20);
    EXPECT_DOUBLE_EQ(run.precision, 0.15);
    EXPECT_DOUBLE_EQ(run.recall, 0.3);
}

TEST(PrecisionRecall, PerfectRecommender) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        auto g0 = oracle::random_grid(rng, 5, 12, 0.3);
        auto g1 = g0;
        for (auto& row : g1)
            for (auto& v : row) v = v || std::bernoulli_distribution(0.2)(rng);
        auto train = oracle::to_snapshot(g0, 2000), test = oracle::to_snapshot(g1, 2005);
        std::size_t L = 0;
        std::vector<std::vector<ProductId>> added;
        for (const auto& c : train.countries()) {
            added.push_back(new_exports(train, test, c));
            L = std::max(L, added.back().size());
        }
        if (L == 0) continue;
        std::vector<RecommendationList> recs;
        for (std::size_t i = 0; i < added.size(); ++i) recs.push_back(hand_list(train, train.countries()[i], added[i]));
        auto run = precision_recall(train, test, recs, L);
        EXPECT_DOUBLE_EQ(run.recall, 1.0);
        for (std::size_t i = 0; i < added.size(); ++i)
            EXPECT_DOUBLE_EQ(run.countries[i].precision, static_cast<double>(added[i].size()) / L);
    }
}

TEST(PrecisionRecall, IdenticalYearsGiveZero) {
    std::mt19937_64 rng(10);
    auto s = oracle::to_snapshot(oracle::random_grid(rng, 6, 10, 0.4));
    auto recs = recommend_from_training(Algorithm::ProbS, s, nullptr, {}, 3);
    auto run = precision_recall(s, s, recs, 3);
    EXPECT_EQ(run.precision, 0.0);
    EXPECT_FALSE(run.recall_defined);
    EXPECT_EQ(run.recall_all, 0.0);
}

TEST(PrecisionRecall, MissingTestCountryExcluded) {
    auto train = snap(2000, {"A", "B"}, {"p", "q"}, {{1, 0}, {0, 1}});
    auto test = snap(2005, {"A"}, {"p", "q"}, {{1, 1}});
    auto recs = recommend_from_training(Algorithm::ProbS, train, nullptr, {}, 1);
    auto run = precision_recall(train, test, recs, 1);
    EXPECT_EQ(run.excluded, 1u);
    ASSERT_EQ(run.countries.size(), 1u);
    EXPECT_EQ(run.countries[0].country, "A");
}

TEST(PrecisionRecall, RejectsListsFromOtherSnapshots) {
    std::mt19937_64 rng(11);
    auto g0 = oracle::random_grid(rng, 5, 8, 0.4);
    auto train = oracle::to_snapshot(g0, 2000);
    auto test = oracle::to_snapshot(oracle::random_grid(rng, 5, 8, 0.4), 2005);
    // lists built on the test year must not be scored against it
    auto leaked = recommend_from_training(Algorithm::HeatS, test, nullptr, {}, 2);
    EXPECT_THROW(precision_recall(train, test, leaked, 2), DataError);
    EXPECT_THROW(precision_recall(train, test, {}, 0), ConfigError);
}

TEST(Sweep, AveragesOverTrainingYears) {
    // T=2000: A gains q (hit), B gains nothing -> precision 1/2
    // T=2001: nothing gained -> precision 0
    SnapshotSeries series;
    std::vector<std::string> ps{"p", "q"};
    series.add(snap(2000, {"A", "B"}, ps, {{1, 0}, {1, 1}}));
    series.add(snap(2001, {"A", "B"}, ps, {{1, 1}, {1, 1}}));
    series.add(snap(2002, {"A", "B"}, ps, {{1, 1}, {1, 1}}));
    SweepConfig cfg;
    cfg.train_years = {2000, 2001};
    cfg.horizon = 1;
    cfg.algorithms = {Algorithm::ProbS, Algorithm::DI};
    cfg.L = 1;
    auto t = sweep(series, cfg);
    ASSERT_EQ(t.rows.size(), 3u);  // DI at 2000 lacks 1999
    ASSERT_EQ(t.missing.size(), 1u);
    EXPECT_NE(t.missing[0].find("1999"), std::string::npos);
    EXPECT_DOUBLE_EQ(t.rows[0].precision, 0.5);
    EXPECT_DOUBLE_EQ(t.rows[1].precision, 0.0);
    EXPECT_DOUBLE_EQ(t.summary[0].precision, 0.25);
    EXPECT_EQ(t.summary[0].runs, 2u);
    EXPECT_EQ(t.summary[1].runs, 1u);
}

TEST(Sweep, ParallelMatchesSerial) {
    std::mt19937_64 rng(12);
    SnapshotSeries series;
    auto g = oracle::random_grid(rng, 8, 15, 0.3);
    for (int y = 2000; y <= 2008; ++y) {
        for (auto& row : g)
            for (auto& v : row) v = v || std::bernoulli_distribution(0.05)(rng);
        series.add(oracle::to_snapshot(g, y));
    }
    SweepConfig cfg;
    cfg.train_years = {2001, 2003};
    cfg.horizon = 5;
    cfg.L = 4;
    auto serial = sweep(series, cfg);
    cfg.threads = 4;
    auto parallel = sweep(series, cfg);
    ASSERT_EQ(serial.rows.size(), parallel.rows.size());
    for (std::size_t n = 0; n < serial.rows.size(); ++n) {
        EXPECT_EQ(serial.rows[n].precision, parallel.rows[n].precision);
        EXPECT_EQ(serial.rows[n].recall, parallel.rows[n].recall);
    }
}
