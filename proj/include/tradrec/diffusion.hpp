#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tradrec/common.hpp"
#include "tradrec/matrix.hpp"
#include "tradrec/trade_graph.hpp"

namespace tradrec {

enum class Algorithm { ProbS, HeatS, DI, TProbS, Degree };

inline constexpr Algorithm kAllAlgorithms[] = {Algorithm::ProbS, Algorithm::HeatS, Algorithm::DI, Algorithm::TProbS,
                                               Algorithm::Degree};

inline std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::ProbS: return "probs";
        case Algorithm::HeatS: return "heats";
        case Algorithm::DI: return "di";
        case Algorithm::TProbS: return "tprobs";
        case Algorithm::Degree: return "degree";
    }
    return "?";
}

inline Algorithm parse_algorithm(std::string_view name) {
    for (auto a : kAllAlgorithms)
        if (to_string(a) == name) return a;
    throw ConfigError("unknown algorithm '" + std::string(name) + "' (expected probs, heats, di, tprobs or degree)");
}

// Algorithms that read the snapshot at t - tau.
inline bool uses_history(Algorithm a) { return a == Algorithm::DI || a == Algorithm::TProbS; }

struct RecommenderParams {
    double theta = 0.2;
    int tau = 1;
    double epsilon = 1e-6;

    void validate() const {
        if (!std::isfinite(theta)) throw ConfigError("theta must be finite");
        if (tau < 1) throw ConfigError("tau must be >= 1");
        if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("epsilon must be positive");
    }
};

enum class Masking { None, Exported };

namespace detail {

// C(a, b) = sum_j a_ja a_jb / k_j. Both (a, b) and (b, a) accumulate the
// same terms in the same country order, so C is exactly symmetric.
inline Matrix<double> cooccurrence(const BipartiteSnapshot& s) {
    const std::size_t I = s.num_products();
    Matrix<double> c(I, I, 0.0);
    for (std::size_t j = 0; j < s.num_countries(); ++j) {
        const auto& items = s.products_of(j);
        if (items.empty()) continue;
        const double share = 1.0 / s.country_degrees()[j];
        for (auto a : items)
            for (auto b : items) c(a, b) += share;
    }
    return c;
}

inline void mask(std::vector<double>& scores, const BipartiteSnapshot& s, std::size_t country) {
    for (auto a : s.products_of(country)) scores[a] = 0.0;
}

}  // namespace detail

// Column-normalised mass-diffusion matrix: W(a, b) = C(a, b) / k_b.
// Columns of products without exporters are zero.
inline Matrix<double> probs_matrix(const BipartiteSnapshot& s) {
    Matrix<double> w = detail::cooccurrence(s);
    const auto& k = s.product_degrees();
    for (std::size_t a = 0; a < w.rows(); ++a)
        for (std::size_t b = 0; b < w.cols(); ++b) w(a, b) = k[b] > 0 ? w(a, b) / k[b] : 0.0;
    return w;
}

// Row-normalised heat-conduction matrix: W'(a, b) = C(a, b) / k_a, which
// equals probs_matrix(s)(b, a) bit for bit.
inline Matrix<double> heats_matrix(const BipartiteSnapshot& s) {
    Matrix<double> w = detail::cooccurrence(s);
    const auto& k = s.product_degrees();
    for (std::size_t a = 0; a < w.rows(); ++a)
        for (std::size_t b = 0; b < w.cols(); ++b) w(a, b) = k[a] > 0 ? w(a, b) / k[a] : 0.0;
    return w;
}

// score = M * f with f the country's binary export row.
inline std::vector<double> spread(const Matrix<double>& m, const BipartiteSnapshot& s, std::size_t country,
                                  Masking masking = Masking::Exported) {
    std::vector<double> out(m.rows(), 0.0);
    const auto& items = s.products_of(country);
    for (std::size_t a = 0; a < m.rows(); ++a) {
        double acc = 0.0;
        for (auto b : items) acc += m(a, b);
        out[a] = acc;
    }
    if (masking == Masking::Exported) detail::mask(out, s, country);
    return out;
}

inline std::vector<double> probs_scores(const BipartiteSnapshot& s, const CountryId& country,
                                        Masking masking = Masking::Exported) {
    return spread(probs_matrix(s), s, s.require_country(country), masking);
}

inline std::vector<double> heats_scores(const BipartiteSnapshot& s, const CountryId& country,
                                        Masking masking = Masking::Exported) {
    return spread(heats_matrix(s), s, s.require_country(country), masking);
}

inline std::vector<double> degree_scores(const BipartiteSnapshot& s) {
    const auto& k = s.product_degrees();
    return {k.begin(), k.end()};
}

struct DegreeIncrease {
    std::vector<double> scores;  // dk' = dk + eps * k(t)
    std::vector<int> delta;      // dk = k(t) - k(t - tau)
    std::vector<int> current;    // k(t)
    double epsilon = 0.0;        // value actually used
};

namespace detail {

// True when ordering by `scores` reproduces the lexicographic (dk, k(t))
// order, including exact ties where both keys tie.
inline bool preserves_delta_ranking(const DegreeIncrease& d) {
    std::vector<std::size_t> order(d.scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto x, auto y) {
        return std::pair(d.delta[x], d.current[x]) > std::pair(d.delta[y], d.current[y]);
    });
    for (std::size_t n = 1; n < order.size(); ++n) {
        auto x = order[n - 1], y = order[n];
        bool tied = d.delta[x] == d.delta[y] && d.current[x] == d.current[y];
        if (tied ? d.scores[x] != d.scores[y] : !(d.scores[x] > d.scores[y])) return false;
    }
    return true;
}

}  // namespace detail

// Degree growth over the window, with eps * k(t) as a tie-break. If the
// supplied epsilon would reorder products with different dk, it is divided
// by 10 until the dk ranking is preserved.
inline DegreeIncrease degree_increase_scores(const BipartiteSnapshot& current, const BipartiteSnapshot& past,
                                             double epsilon = 1e-6) {
    if (current.products() != past.products())
        throw DataError("snapshots " + std::to_string(current.year()) + " and " + std::to_string(past.year()) +
                        " do not share a product index");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    DegreeIncrease d;
    const std::size_t I = current.num_products();
    d.delta.resize(I);
    d.current = current.product_degrees();
    for (std::size_t a = 0; a < I; ++a) d.delta[a] = current.product_degrees()[a] - past.product_degrees()[a];
    for (d.epsilon = epsilon;; d.epsilon /= 10.0) {
        d.scores.resize(I);
        for (std::size_t a = 0; a < I; ++a) d.scores[a] = d.delta[a] + d.epsilon * d.current[a];
        if (detail::preserves_delta_ranking(d) || d.epsilon < 1e-300) break;
    }
    return d;
}

// Growth multiplier (dk'/k)^theta. Zero when the product has no exporters
// at t or, for theta != 0, when dk' <= 0; exactly one when theta == 0.
inline double tprobs_multiplier(double delta_prime, int degree, double theta) {
    if (degree <= 0) return 0.0;
    if (theta == 0.0) return 1.0;
    const double base = delta_prime / degree;
    if (!(base > 0.0)) return 0.0;
    return std::pow(base, theta);
}

inline std::vector<double> tprobs_from(const std::vector<double>& probs, const DegreeIncrease& d, double theta) {
    if (!std::isfinite(theta)) throw ConfigError("theta must be finite");
    std::vector<double> u(probs.size(), 0.0);
    for (std::size_t a = 0; a < probs.size(); ++a)
        u[a] = probs[a] == 0.0 ? 0.0 : probs[a] * tprobs_multiplier(d.scores[a], d.current[a], theta);
    return u;
}

inline std::vector<double> tprobs_scores(const BipartiteSnapshot& current, const BipartiteSnapshot& past,
                                         const CountryId& country, double theta, double epsilon = 1e-6,
                                         Masking masking = Masking::Exported) {
    if (!std::isfinite(theta)) throw ConfigError("theta must be finite");
    auto d = degree_increase_scores(current, past, epsilon);
    return tprobs_from(probs_scores(current, country, masking), d, theta);
}

// Scores of every country for one algorithm. Exported pairs are zero.
struct ScoreMatrix {
    Algorithm algorithm = Algorithm::ProbS;
    int year = 0;
    RecommenderParams params;  // epsilon is the value actually used
    Matrix<double> scores;     // countries x products
    std::uint64_t snapshot_fingerprint = 0;
};

// `past` is the snapshot at year - tau; required for DI and TProbS.
inline ScoreMatrix score_matrix(Algorithm algorithm, const BipartiteSnapshot& current, const BipartiteSnapshot* past,
                                RecommenderParams params = {}, unsigned threads = 1) {
    params.validate();
    if (uses_history(algorithm) && !past)
        throw DataError(to_string(algorithm) + " needs the snapshot at " + std::to_string(current.year() - params.tau));

    ScoreMatrix out;
    out.algorithm = algorithm;
    out.year = current.year();
    out.snapshot_fingerprint = current.fingerprint();
    const std::size_t U = current.num_countries(), I = current.num_products();
    out.scores = Matrix<double>(U, I, 0.0);

    std::optional<DegreeIncrease> growth;
    if (uses_history(algorithm)) {
        growth = degree_increase_scores(current, *past, params.epsilon);
        params.epsilon = growth->epsilon;
    }
    out.params = params;

    Matrix<double> w;
    if (algorithm == Algorithm::ProbS || algorithm == Algorithm::TProbS) w = probs_matrix(current);
    if (algorithm == Algorithm::HeatS) w = heats_matrix(current);
    const auto degree = degree_scores(current);

    parallel_for(U, threads, [&](std::size_t i) {
        std::vector<double> row;
        switch (algorithm) {
            case Algorithm::ProbS:
            case Algorithm::HeatS: row = spread(w, current, i); break;
            case Algorithm::TProbS: row = tprobs_from(spread(w, current, i), *growth, params.theta); break;
            case Algorithm::DI:
                row = growth->scores;
                detail::mask(row, current, i);
                break;
            case Algorithm::Degree:
                row = degree;
                detail::mask(row, current, i);
                break;
        }
        std::copy(row.begin(), row.end(), out.scores.row(i).begin());
    });
    return out;
}

struct RankedProduct {
    ProductId product;
    std::size_t index = 0;
    double score = 0.0;
};

struct RecommendationList {
    CountryId country;
    Algorithm algorithm = Algorithm::ProbS;
    RecommenderParams params;
    int year = 0;
    std::uint64_t snapshot_fingerprint = 0;
    std::size_t requested = 0;
    std::vector<RankedProduct> ranked;
    bool padded = false;     // includes zero-score products
    bool truncated = false;  // fewer than `requested` candidates existed
};

// Top-L non-exported products ordered by (score desc, product id asc).
// Negative scores never occur for the built-in algorithms; they sort last.
inline RecommendationList top_l(std::span<const double> scores, const BipartiteSnapshot& s, const CountryId& country,
                                std::size_t L) {
    if (L < 1) throw ConfigError("L must be >= 1");
    if (scores.size() != s.num_products()) throw DataError("score vector does not match snapshot products");
    const std::size_t c = s.require_country(country);

    std::vector<std::size_t> candidates;
    candidates.reserve(s.num_products());
    for (std::size_t a = 0; a < s.num_products(); ++a)
        if (!s.linked(c, a)) candidates.push_back(a);
    // product indices follow id order, so index ascending is id ascending
    auto better = [&](std::size_t x, std::size_t y) { return scores[x] != scores[y] ? scores[x] > scores[y] : x < y; };

    RecommendationList out;
    out.country = country;
    out.year = s.year();
    out.snapshot_fingerprint = s.fingerprint();
    out.requested = L;
    const std::size_t take = std::min(L, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take), candidates.end(), better);
    for (std::size_t n = 0; n < take; ++n) {
        auto a = candidates[n];
        out.ranked.push_back({s.products()[a], a, scores[a]});
        if (!(scores[a] > 0.0)) out.padded = true;
    }
    out.truncated = take < L;
    return out;
}

inline std::vector<RecommendationList> recommend_all(const ScoreMatrix& m, const BipartiteSnapshot& s, std::size_t L) {
    if (m.snapshot_fingerprint != s.fingerprint())
        throw DataError("score matrix was computed on a different snapshot");
    std::vector<RecommendationList> out;
    out.reserve(s.num_countries());
    for (std::size_t i = 0; i < s.num_countries(); ++i) {
        auto list = top_l(m.scores.row(i), s, s.countries()[i], L);
        list.algorithm = m.algorithm;
        list.params = m.params;
        out.push_back(std::move(list));
    }
    return out;
}

}  // namespace tradrec
