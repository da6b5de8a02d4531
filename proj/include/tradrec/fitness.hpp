#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tradrec/common.hpp"
#include "tradrec/trade_graph.hpp"

namespace tradrec {

struct SolverConfig {
    int max_iter = 5000;
    // Stop once the full country ordering has not changed for this many
    // consecutive iterations.
    int stability_window = 50;

    void validate() const {
        if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
        if (stability_window < 1) throw ConfigError("stability window must be >= 1");
    }
};

// Harmonic complexity of one product: 1 / sum(1 / F) over its exporters.
// Dominated by the weakest exporter.
inline double complexity_step(std::span<const double> exporter_fitness) {
    if (exporter_fitness.empty()) throw std::invalid_argument("complexity_step needs at least one exporter");
    std::vector<double> inv;
    inv.reserve(exporter_fitness.size());
    for (double f : exporter_fitness) inv.push_back(1.0 / f);
    return 1.0 / order_invariant_sum(std::move(inv));
}

// Un-normalised F_i = sum_a a_ia Q_a. Each country's terms are added in
// ascending Q order; the result does not depend on labelling.
inline std::vector<double> fitness_step(const BipartiteSnapshot& s, std::span<const double> complexity) {
    std::vector<std::size_t> order(s.num_products());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto x, auto y) { return complexity[x] < complexity[y]; });
    std::vector<double> f(s.num_countries(), 0.0);
    for (auto a : order)
        for (auto i : s.countries_of(a)) f[i] += complexity[a];
    return f;
}

// Un-normalised Q_a = 1 / sum_i a_ia / F_i. Products without exporters
// get 0 and are excluded from normalisation.
inline std::vector<double> complexity_step(const BipartiteSnapshot& s, std::span<const double> fitness) {
    std::vector<double> inv(s.num_countries());
    for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 / fitness[i];
    std::vector<std::size_t> order(s.num_countries());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto x, auto y) { return inv[x] < inv[y]; });
    std::vector<double> acc(s.num_products(), 0.0);
    for (auto i : order)
        for (auto a : s.products_of(i)) acc[a] += inv[i];
    std::vector<double> q(s.num_products(), 0.0);
    for (std::size_t a = 0; a < q.size(); ++a)
        if (s.product_degrees()[a] > 0) q[a] = 1.0 / acc[a];
    return q;
}

struct FitnessResult {
    int year = 0;
    std::uint64_t snapshot_fingerprint = 0;
    std::vector<CountryId> countries;
    std::vector<ProductId> products;
    std::vector<double> fitness;     // mean 1
    std::vector<double> complexity;  // mean 1 over products with exporters; 0 otherwise
    std::vector<std::size_t> order;  // country indices, best first
    std::vector<int> rank;           // 1-based rank per country index
    int iterations = 0;
    bool converged = false;
    std::vector<int> rank_changes;  // per iteration: countries whose position moved

    int rank_of(const CountryId& id) const {
        auto it = std::lower_bound(countries.begin(), countries.end(), id);
        if (it == countries.end() || *it != id) throw DataError("country '" + id + "' not in fitness result");
        return rank[static_cast<std::size_t>(it - countries.begin())];
    }
    double fitness_of(const CountryId& id) const {
        auto it = std::lower_bound(countries.begin(), countries.end(), id);
        if (it == countries.end() || *it != id) throw DataError("country '" + id + "' not in fitness result");
        return fitness[static_cast<std::size_t>(it - countries.begin())];
    }
};

namespace detail {

// Mean over entries whose degree is positive (all entries if `degrees` is empty).
inline double mean_of(const std::vector<double>& v, const std::vector<int>& degrees) {
    std::vector<double> kept;
    kept.reserve(v.size());
    for (std::size_t n = 0; n < v.size(); ++n)
        if (degrees.empty() || degrees[n] > 0) kept.push_back(v[n]);
    const auto count = static_cast<double>(kept.size());
    return order_invariant_sum(std::move(kept)) / count;
}

// Fitness descending, ties by country id (= index) ascending.
inline std::vector<std::size_t> ordering(const std::vector<double>& fitness) {
    std::vector<std::size_t> order(fitness.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return fitness[x] > fitness[y]; });
    return order;
}

}  // namespace detail

// Iterates F^n = norm(fitness_step(Q^{n-1})), Q^n = norm(complexity_step(F^{n-1}))
// from F = Q = 1, where norm divides by the mean. Stops on rank stability or
// max_iter; `converged` reports which.
inline FitnessResult solve_fitness(const BipartiteSnapshot& s, SolverConfig config = {}) {
    config.validate();
    if (s.num_countries() == 0) throw DataError("snapshot " + std::to_string(s.year()) + " has no countries");
    for (std::size_t i = 0; i < s.num_countries(); ++i)
        if (s.country_degrees()[i] == 0)
            throw DataError("country '" + s.countries()[i] + "' has no exports in snapshot " + std::to_string(s.year()));

    const auto& active = s.product_degrees();
    FitnessResult r;
    r.year = s.year();
    r.snapshot_fingerprint = s.fingerprint();
    r.countries = s.countries();
    r.products = s.products();
    r.fitness.assign(s.num_countries(), 1.0);
    r.complexity.assign(s.num_products(), 0.0);
    for (std::size_t a = 0; a < s.num_products(); ++a)
        if (active[a] > 0) r.complexity[a] = 1.0;
    r.order = detail::ordering(r.fitness);

    int stable = 0;
    while (r.iterations < config.max_iter) {
        auto f = fitness_step(s, r.complexity);
        auto q = complexity_step(s, r.fitness);
        const double f_mean = detail::mean_of(f, {});
        const double q_mean = detail::mean_of(q, active);
        for (auto& v : f) v /= f_mean;
        for (auto& v : q) v /= q_mean;
        r.fitness = std::move(f);
        r.complexity = std::move(q);
        ++r.iterations;

        auto order = detail::ordering(r.fitness);
        int changed = 0;
        for (std::size_t n = 0; n < order.size(); ++n) changed += order[n] != r.order[n];
        r.order = std::move(order);
        r.rank_changes.push_back(changed);

        if (std::any_of(r.fitness.begin(), r.fitness.end(), [](double v) { return !(v > 0.0) || !std::isfinite(v); }))
            break;  // underflow: not converged
        stable = changed == 0 ? stable + 1 : 0;
        if (stable >= config.stability_window) {
            r.converged = true;
            break;
        }
    }
    r.rank.assign(r.countries.size(), 0);
    for (std::size_t n = 0; n < r.order.size(); ++n) r.rank[r.order[n]] = static_cast<int>(n + 1);
    return r;
}

enum class Tier { Top, Middle, Low };

inline std::string to_string(Tier t) {
    switch (t) {
        case Tier::Top: return "top";
        case Tier::Middle: return "middle";
        case Tier::Low: return "low";
    }
    return "?";
}

struct TierAssignment {
    std::vector<CountryId> countries;  // same order as the fitness result
    std::vector<Tier> tiers;
    std::size_t sizes[3] = {0, 0, 0};  // top, middle, low

    Tier tier_of(const CountryId& id) const {
        auto it = std::lower_bound(countries.begin(), countries.end(), id);
        if (it == countries.end() || *it != id) throw DataError("country '" + id + "' has no tier");
        return tiers[static_cast<std::size_t>(it - countries.begin())];
    }
};

// Equal thirds by fitness rank; the remainder goes to the low tier first,
// then the middle tier (181 -> 60/60/61).
inline TierAssignment assign_tiers(const FitnessResult& r) {
    const std::size_t U = r.countries.size();
    if (U < 3) throw DataError("tier assignment needs at least 3 countries, got " + std::to_string(U));
    TierAssignment t;
    t.countries = r.countries;
    t.tiers.assign(U, Tier::Low);
    const std::size_t base = U / 3, extra = U % 3;
    t.sizes[0] = base;
    t.sizes[1] = base + (extra == 2 ? 1 : 0);
    t.sizes[2] = base + (extra >= 1 ? 1 : 0);
    for (std::size_t n = 0; n < U; ++n) {
        Tier tier = n < t.sizes[0] ? Tier::Top : n < t.sizes[0] + t.sizes[1] ? Tier::Middle : Tier::Low;
        t.tiers[r.order[n]] = tier;
    }
    return t;
}

}  // namespace tradrec
