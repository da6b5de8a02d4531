#pragma once

// Independent reference computations for the tests. Nothing here calls into
// the library's numeric code; inputs are plain nested vectors.

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "tradrec/matrix.hpp"
#include "tradrec/trade_graph.hpp"

namespace oracle {

using Grid = std::vector<std::vector<int>>;  // countries x products, 0/1

// RCA by scalar arithmetic on a (country -> product -> value) map.
inline double rca(const std::map<std::string, std::map<std::string, double>>& e, const std::string& country,
                  const std::string& product) {
    double product_total = 0, country_total = 0, world = 0;
    for (const auto& [c, row] : e)
        for (const auto& [p, v] : row) {
            world += v;
            if (p == product) product_total += v;
            if (c == country) country_total += v;
        }
    double own = 0;
    if (auto it = e.find(country); it != e.end())
        if (auto jt = it->second.find(product); jt != it->second.end()) own = jt->second;
    if (product_total == 0 || country_total == 0) return 0;
    return (own / product_total) / (country_total / world);
}

// Mass-diffusion scores by following every item -> country -> item walk.
// One unit of resource starts on each exported item, splits evenly over
// that item's exporters, then evenly over each exporter's items.
inline std::vector<double> walk_probs(const Grid& a, std::size_t country) {
    const std::size_t U = a.size(), I = a.empty() ? 0 : a[0].size();
    std::vector<int> ku(U, 0), ki(I, 0);
    for (std::size_t j = 0; j < U; ++j)
        for (std::size_t p = 0; p < I; ++p) {
            ku[j] += a[j][p];
            ki[p] += a[j][p];
        }
    std::vector<double> s(I, 0.0);
    for (std::size_t start = 0; start < I; ++start) {
        if (!a[country][start]) continue;
        for (std::size_t j = 0; j < U; ++j) {
            if (!a[j][start]) continue;
            const double at_country = 1.0 / ki[start];
            for (std::size_t end = 0; end < I; ++end)
                if (a[j][end]) s[end] += at_country / ku[j];
        }
    }
    return s;
}

// Heat-conduction scores: each item averages over its exporters, each
// exporter averages the initial temperatures of its items.
inline std::vector<double> walk_heats(const Grid& a, std::size_t country) {
    const std::size_t U = a.size(), I = a.empty() ? 0 : a[0].size();
    std::vector<double> temp_country(U, 0.0);
    for (std::size_t j = 0; j < U; ++j) {
        int k = 0;
        double t = 0;
        for (std::size_t p = 0; p < I; ++p)
            if (a[j][p]) {
                ++k;
                t += a[country][p];
            }
        temp_country[j] = k ? t / k : 0.0;
    }
    std::vector<double> h(I, 0.0);
    for (std::size_t p = 0; p < I; ++p) {
        int k = 0;
        double t = 0;
        for (std::size_t j = 0; j < U; ++j)
            if (a[j][p]) {
                ++k;
                t += temp_country[j];
            }
        h[p] = k ? t / k : 0.0;
    }
    return h;
}

struct NaiveFitness {
    std::vector<double> fitness, complexity;
};

// Direct loop implementation of the coupled map with mean normalisation,
// run for exactly `iterations` steps from F = Q = 1.
inline NaiveFitness naive_fitness(const Grid& a, int iterations) {
    const std::size_t U = a.size(), I = a[0].size();
    std::vector<int> ki(I, 0);
    for (std::size_t j = 0; j < U; ++j)
        for (std::size_t p = 0; p < I; ++p) ki[p] += a[j][p];
    std::size_t active = 0;
    for (int k : ki) active += k > 0;
    NaiveFitness r{std::vector<double>(U, 1.0), std::vector<double>(I, 0.0)};
    for (std::size_t p = 0; p < I; ++p)
        if (ki[p]) r.complexity[p] = 1.0;
    for (int n = 0; n < iterations; ++n) {
        std::vector<double> f(U, 0.0), q(I, 0.0);
        for (std::size_t j = 0; j < U; ++j)
            for (std::size_t p = 0; p < I; ++p) f[j] += a[j][p] * r.complexity[p];
        for (std::size_t p = 0; p < I; ++p) {
            if (!ki[p]) continue;
            double d = 0;
            for (std::size_t j = 0; j < U; ++j)
                if (a[j][p]) d += 1.0 / r.fitness[j];
            q[p] = 1.0 / d;
        }
        double fm = 0, qm = 0;
        for (double v : f) fm += v;
        for (double v : q) qm += v;
        fm /= U;
        qm /= active;
        for (auto& v : f) v /= fm;
        for (auto& v : q) v /= qm;
        r.fitness = f;
        r.complexity = q;
    }
    return r;
}

// Random 0/1 grid where every country exports at least one product.
inline Grid random_grid(std::mt19937_64& rng, std::size_t U, std::size_t I, double density) {
    std::bernoulli_distribution link(density);
    std::uniform_int_distribution<std::size_t> any(0, I - 1);
    Grid a(U, std::vector<int>(I, 0));
    for (auto& row : a) {
        for (auto& v : row) v = link(rng);
        if (std::none_of(row.begin(), row.end(), [](int v) { return v; })) row[any(rng)] = 1;
    }
    return a;
}

inline std::string country_name(std::size_t i) { return "C" + std::to_string(100 + i); }
inline std::string product_name(std::size_t p) { return "P" + std::to_string(100 + p); }

inline tradrec::BipartiteSnapshot to_snapshot(const Grid& a, int year = 2000) {
    const std::size_t U = a.size(), I = a.empty() ? 0 : a[0].size();
    std::vector<std::string> cs, ps;
    for (std::size_t i = 0; i < U; ++i) cs.push_back(country_name(i));
    for (std::size_t p = 0; p < I; ++p) ps.push_back(product_name(p));
    tradrec::Matrix<std::uint8_t> adj(U, I, 0);
    for (std::size_t i = 0; i < U; ++i)
        for (std::size_t p = 0; p < I; ++p) adj(i, p) = static_cast<std::uint8_t>(a[i][p]);
    return tradrec::BipartiteSnapshot::from_adjacency(year, cs, ps, adj);
}

// A = {p, q}, B = {q, r}.
inline tradrec::BipartiteSnapshot toy(int year = 2001) {
    tradrec::Matrix<std::uint8_t> adj(2, 3, 0);
    adj(0, 0) = adj(0, 1) = adj(1, 1) = adj(1, 2) = 1;
    return tradrec::BipartiteSnapshot::from_adjacency(year, {"A", "B"}, {"p", "q", "r"}, adj);
}

}  // namespace oracle
