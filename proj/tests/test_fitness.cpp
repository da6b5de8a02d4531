#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "oracles.hpp"
#include "tradrec/fitness.hpp"

using namespace tradrec;

namespace {

oracle::Grid nested(std::size_t n) {
    // country i exports products 0..i
    oracle::Grid g(n, std::vector<int>(n, 0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p <= i; ++p) g[i][p] = 1;
    return g;
}

double mean(const std::vector<double>& v, const std::vector<int>& k = {}) {
    double s = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (k.empty() || k[i] > 0) s += v[i], ++n;
    return s / n;
}

}  // namespace

TEST(ComplexityStep, WeakestExporterDominates) {
    const double weak[] = {0.2, 15.0};
    EXPECT_NEAR(complexity_step(weak), 0.197, 5e-4);
    const double strong[] = {10.0, 15.0};
    EXPECT_NEAR(complexity_step(strong), 6.0, 1e-9);
    EXPECT_THROW(complexity_step(std::span<const double>{}), std::invalid_argument);
}

TEST(SolveFitness, ToyIsSymmetric) {
    auto r = solve_fitness(oracle::toy());
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.fitness[0], 1.0, 1e-12);
    EXPECT_NEAR(r.fitness[1], 1.0, 1e-12);
    EXPECT_EQ(r.rank, (std::vector<int>{1, 2}));  // tie broken by id
}

TEST(SolveFitness, NestedOrderFollowsDiversification) {
    auto g = nested(4);
    auto r = solve_fitness(oracle::to_snapshot(g));
    ASSERT_TRUE(r.converged);
    EXPECT_EQ(r.order, (std::vector<std::size_t>{3, 2, 1, 0}));
    auto naive = oracle::naive_fitness(g, r.iterations);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(r.fitness[i], naive.fitness[i], 1e-9);
    for (std::size_t p = 0; p < 4; ++p) EXPECT_NEAR(r.complexity[p], naive.complexity[p], 1e-9);
}

TEST(SolveFitness, RejectsZeroDegreeCountry) {
    Matrix<std::uint8_t> adj(2, 2, 0);
    adj(0, 0) = 1;
    auto s = BipartiteSnapshot::from_adjacency(2001, {"A", "B"}, {"p", "q"}, adj);
    EXPECT_THROW(solve_fitness(s), DataError);
    EXPECT_THROW(solve_fitness(oracle::toy(), {0, 50}), ConfigError);
}

TEST(SolveFitness, NonConvergenceIsReported) {
    auto r = solve_fitness(oracle::to_snapshot(nested(5)), {3, 50});
    EXPECT_FALSE(r.converged);
    EXPECT_EQ(r.iterations, 3);
    EXPECT_EQ(r.rank_changes.size(), 3u);
}

TEST(SolveFitness, UnexportedProductsExcluded) {
    Matrix<std::uint8_t> adj(2, 3, 0);
    adj(0, 0) = adj(1, 0) = adj(1, 1) = 1;
    auto s = BipartiteSnapshot::from_adjacency(2001, {"A", "B"}, {"p", "q", "r"}, adj);
    auto r = solve_fitness(s);
    EXPECT_EQ(r.complexity[2], 0.0);
    EXPECT_NEAR(mean(r.complexity, s.product_degrees()), 1.0, 1e-12);
}

TEST(FitnessProperties, NormalisationEveryIteration) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        auto s = oracle::to_snapshot(oracle::random_grid(rng, 6, 8, 0.4));
        for (int n : {1, 2, 5, 17}) {
            auto r = solve_fitness(s, {n, 1000000});
            EXPECT_NEAR(mean(r.fitness), 1.0, 1e-12);
            EXPECT_NEAR(mean(r.complexity, s.product_degrees()), 1.0, 1e-12);
        }
    }
}

TEST(FitnessProperties, MatchesNaiveIteration) {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<std::size_t> U(1, 8), I(1, 8);
    for (int trial = 0; trial < 200; ++trial) {
        auto g = oracle::random_grid(rng, U(rng), I(rng), 0.45);
        auto r = solve_fitness(oracle::to_snapshot(g));
        auto naive = oracle::naive_fitness(g, r.iterations);
        for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(r.fitness[i], naive.fitness[i], 1e-9);
        for (std::size_t p = 0; p < g[0].size(); ++p) EXPECT_NEAR(r.complexity[p], naive.complexity[p], 1e-9);
    }
}

TEST(FitnessProperties, PermutationEquivariance) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t U = 6, I = 8;
        auto g = oracle::random_grid(rng, U, I, 0.4);
        std::vector<std::size_t> pc(U), pp(I);
        std::iota(pc.begin(), pc.end(), 0);
        std::iota(pp.begin(), pp.end(), 0);
        std::shuffle(pc.begin(), pc.end(), rng);
        std::shuffle(pp.begin(), pp.end(), rng);
        oracle::Grid h(U, std::vector<int>(I, 0));
        for (std::size_t i = 0; i < U; ++i)
            for (std::size_t p = 0; p < I; ++p) h[pc[i]][pp[p]] = g[i][p];
        auto a = solve_fitness(oracle::to_snapshot(g), {300, 1000000});
        auto b = solve_fitness(oracle::to_snapshot(h), {300, 1000000});
        for (std::size_t i = 0; i < U; ++i) EXPECT_EQ(a.fitness[i], b.fitness[pc[i]]);
        for (std::size_t p = 0; p < I; ++p) EXPECT_EQ(a.complexity[p], b.complexity[pp[p]]);
    }
}

TEST(FitnessProperties, MonotoneDominanceAndHarmonicBound) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        auto g = oracle::random_grid(rng, 6, 8, 0.45);
        auto s = oracle::to_snapshot(g);
        auto check = [&](const FitnessResult& r) {
            for (std::size_t i = 0; i < g.size(); ++i)
                for (std::size_t j = 0; j < g.size(); ++j) {
                    bool superset = true;
                    for (std::size_t p = 0; p < g[0].size(); ++p) superset &= g[i][p] >= g[j][p];
                    if (superset) {
                        EXPECT_GE(r.fitness[i], r.fitness[j]);
                    }
                }
            // the raw harmonic update never exceeds its weakest exporter
            auto q = complexity_step(s, r.fitness);
            for (std::size_t p = 0; p < g[0].size(); ++p) {
                double weakest = INFINITY;
                for (std::size_t i = 0; i < g.size(); ++i)
                    if (g[i][p]) weakest = std::min(weakest, r.fitness[i]);
                if (std::isfinite(weakest)) {
                    EXPECT_LE(q[p], weakest * (1 + 1e-15));  // 1/(1/F) may round up
                }
            }
        };
        for (int n : {1, 2, 3, 10}) check(solve_fitness(s, {n, 1000000}));
        check(solve_fitness(s));
    }
}

TEST(AssignTiers, RemainderGoesToLowerTiers) {
    auto sizes = [](std::size_t U) {
        FitnessResult r;
        for (std::size_t i = 0; i < U; ++i) {
            r.countries.push_back(oracle::country_name(i));
            r.order.push_back(i);
        }
        auto t = assign_tiers(r);
        return std::vector<std::size_t>{t.sizes[0], t.sizes[1], t.sizes[2]};
    };
    EXPECT_EQ(sizes(192), (std::vector<std::size_t>{64, 64, 64}));
    EXPECT_EQ(sizes(181), (std::vector<std::size_t>{60, 60, 61}));
    EXPECT_EQ(sizes(182), (std::vector<std::size_t>{60, 61, 61}));
}

TEST(AssignTiers, OnePerTierByFitness) {
    FitnessResult r;
    r.countries = {"A", "B", "C"};
    r.fitness = {2.0, 1.0, 3.0};
    r.order = {2, 0, 1};
    auto t = assign_tiers(r);
    EXPECT_EQ(t.tier_of("C"), Tier::Top);
    EXPECT_EQ(t.tier_of("A"), Tier::Middle);
    EXPECT_EQ(t.tier_of("B"), Tier::Low);
    r.countries.pop_back();
    r.order = {0, 1};
    EXPECT_THROW(assign_tiers(r), DataError);
}
