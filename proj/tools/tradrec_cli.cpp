#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "tradrec/tradrec.hpp"

namespace fs = std::filesystem;
using namespace tradrec;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitConvergence = 4;

struct Options {
    std::string input;
    std::string years;
    std::string T;
    std::string year;
    int horizon = 5;
    std::vector<std::string> algos;
    double theta = 0.2;
    int tau = 1;
    double epsilon = 1e-6;
    int L = 20;
    std::string mode = "fixed_L";
    unsigned threads = 1;
    std::uint64_t seed = 0;
    std::string out = ".";
    std::string cache;
    double threshold = 1.0;
    int max_iter = 5000;
    int window = 50;
    std::string tier = "middle";
    std::size_t sample = 30;
    std::vector<std::size_t> lengths{0, 5, 10, 20, 40};
    std::vector<std::string> countries;

    fs::path cache_dir() const { return cache.empty() ? fs::path(out) / "cache" : fs::path(cache); }

    RecommenderParams params() const {
        RecommenderParams p{theta, tau, epsilon};
        p.validate();
        return p;
    }

    SolverConfig solver() const {
        SolverConfig s{max_iter, window};
        s.validate();
        return s;
    }

    std::size_t list_length() const {
        if (L < 1) throw ConfigError("--L must be >= 1");
        return static_cast<std::size_t>(L);
    }

    std::vector<Algorithm> algorithms(std::vector<Algorithm> fallback) const {
        if (algos.empty()) return fallback;
        std::vector<Algorithm> out;
        for (const auto& a : algos) out.push_back(parse_algorithm(a));
        return out;
    }
};

YearRange required_range(const std::string& text, const std::string& flag) {
    if (text.empty()) throw ConfigError(flag + " is required");
    return parse_year_range(text);
}

std::string join(const std::vector<Algorithm>& algos) {
    std::string s;
    for (auto a : algos) s += (s.empty() ? "" : ",") + to_string(a);
    return s;
}

template <class T>
std::string join(const std::vector<T>& items) {
    std::ostringstream s;
    for (std::size_t n = 0; n < items.size(); ++n) s << (n ? "," : "") << items[n];
    return s.str();
}

std::string range_text(YearRange r) { return std::to_string(r.first) + ":" + std::to_string(r.last); }

void write_file(const fs::path& path, const std::string& body) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write '" + path.string() + "'");
    f << body;
    if (!f) throw DataError("failed writing '" + path.string() + "'");
    std::cerr << "wrote " << path.string() << "\n";
}

template <class Body>
void write_csv(const fs::path& path, const Provenance& p, Body&& body) {
    std::ostringstream s;
    write_provenance(s, p);
    body(s);
    write_file(path, s.str());
}

fs::path snapshot_path(const Options& o, int year) {
    return o.cache_dir() / ("snapshot_" + std::to_string(year) + ".txt");
}

std::shared_ptr<const BipartiteSnapshot> load_cached(const Options& o, int year, bool required) {
    auto path = snapshot_path(o, year);
    std::ifstream f(path);
    if (!f) {
        if (required) throw DataError("no cached snapshot for " + std::to_string(year) + " at '" + path.string() +
                                      "' (run ingest first)");
        return nullptr;
    }
    return std::make_shared<const BipartiteSnapshot>(read_snapshot(f, path.string()));
}

SnapshotSeries load_series(const Options& o, int first, int last) {
    SnapshotSeries series;
    for (int y = first; y <= last; ++y)
        if (auto s = load_cached(o, y, false)) series.add(*s);
    if (series.empty())
        throw DataError("no cached snapshots between " + std::to_string(first) + " and " + std::to_string(last) +
                        " in '" + o.cache_dir().string() + "'");
    return series;
}

std::string snapshot_hash(std::initializer_list<const BipartiteSnapshot*> used) {
    Fnv1a h;
    for (auto s : used)
        if (s) h.update(s->fingerprint());
    return h.hex();
}

std::string series_hash(const SnapshotSeries& series) {
    Fnv1a h;
    for (int y : series.years()) h.update(series.at(y)->fingerprint());
    return h.hex();
}

int run_ingest(const Options& o) {
    if (o.input.empty()) throw ConfigError("--input is required");
    auto range = required_range(o.years, "--years");
    if (!(o.threshold > 0.0)) throw ConfigError("--threshold must be > 0");

    auto table = load_exports(o.input, range);
    std::ifstream raw(o.input, std::ios::binary);
    Fnv1a file_hash;
    file_hash.update(std::string(std::istreambuf_iterator<char>(raw), {}));

    Provenance p;
    p.config = {{"command", "ingest"},
                {"input", fs::path(o.input).filename().string()},
                {"years", range_text(range)},
                {"threshold", format_real(o.threshold)}};
    p.input_hash = file_hash.hex();

    fs::create_directories(o.cache_dir());
    std::ostringstream summary;
    summary << "year,raw_countries,retained_countries,products,links\n";
    int written = 0;
    for (int y = range.first; y <= range.last; ++y) {
        if (!table.has_year(y)) {
            summary << "# missing: " << y << "\n";
            std::cerr << "warning: no records for " << y << "\n";
            continue;
        }
        auto s = build_snapshot(table, y, o.threshold);
        write_csv(snapshot_path(o, y), p, [&](std::ostream& out) { write_snapshot(out, s); });
        summary << y << "," << s.raw_country_count() << "," << s.num_countries() << "," << s.num_products() << ","
                << s.link_count() << "\n";
        ++written;
    }
    if (written == 0) throw DataError("'" + o.input + "' has no records in " + range_text(range));
    write_csv(fs::path(o.out) / "ingest_summary.csv", p, [&](std::ostream& out) { out << summary.str(); });
    return 0;
}

int run_recommend(const Options& o) {
    auto range = required_range(o.T.empty() ? o.year : o.T, "--T");
    auto params = o.params();
    auto L = o.list_length();
    auto algos = o.algorithms({std::begin(kAllAlgorithms), std::end(kAllAlgorithms)});
    fs::create_directories(o.out);
    for (int t = range.first; t <= range.last; ++t) {
        auto current = load_cached(o, t, true);
        for (auto a : algos) {
            auto past = uses_history(a) ? load_cached(o, t - params.tau, true) : nullptr;
            auto recs = recommend_from_training(a, *current, past.get(), params, L, o.threads);
            Provenance p;
            p.config = {{"command", "recommend"}, {"algorithm", to_string(a)},       {"T", std::to_string(t)},
                        {"L", std::to_string(L)}, {"theta", format_real(params.theta)}, {"tau", std::to_string(params.tau)},
                        {"epsilon", format_real(params.epsilon)}};
            p.input_hash = snapshot_hash({current.get(), past.get()});
            std::ostringstream s;
            write_provenance_json(s, p);
            write_recommendations(s, recs);
            write_file(fs::path(o.out) / ("recommendations_" + to_string(a) + "_" + std::to_string(t) + ".jsonl"),
                       s.str());
        }
    }
    return 0;
}

int run_fitness(const Options& o) {
    auto range = required_range(o.year.empty() ? o.T : o.year, "--year");
    auto solver = o.solver();
    fs::create_directories(o.out);
    int code = 0;
    for (int y = range.first; y <= range.last; ++y) {
        auto s = load_cached(o, y, true);
        auto r = solve_fitness(*s, solver);
        Provenance p;
        p.config = {{"command", "fitness"},
                    {"year", std::to_string(y)},
                    {"max_iter", std::to_string(solver.max_iter)},
                    {"window", std::to_string(solver.stability_window)}};
        p.input_hash = snapshot_hash({s.get()});
        auto status = [&](std::ostream& out) {
            out << "# converged: " << (r.converged ? "true" : "false") << ", iterations: " << r.iterations << "\n";
        };
        write_csv(fs::path(o.out) / ("fitness_" + std::to_string(y) + ".csv"), p, [&](std::ostream& out) {
            status(out);
            write_fitness(out, r);
        });
        write_csv(fs::path(o.out) / ("complexity_" + std::to_string(y) + ".csv"), p, [&](std::ostream& out) {
            status(out);
            write_complexity(out, r, *s);
        });
        if (!r.converged) {
            std::cerr << "error: fitness for " << y << " did not converge within " << r.iterations << " iterations\n";
            code = kExitConvergence;
        }
    }
    return code;
}

int run_evaluate(const Options& o) {
    SweepConfig cfg;
    cfg.train_years = required_range(o.T.empty() ? o.years : o.T, "--T");
    cfg.horizon = o.horizon;
    if (cfg.horizon < 1) throw ConfigError("--horizon must be >= 1");
    cfg.params = o.params();
    cfg.L = o.list_length();
    cfg.algorithms = o.algorithms({std::begin(kAllAlgorithms), std::end(kAllAlgorithms)});
    cfg.threads = o.threads;

    auto series = load_series(o, cfg.train_years.first - cfg.params.tau, cfg.train_years.last + cfg.horizon);
    auto table = sweep(series, cfg);
    for (const auto& m : table.missing) std::cerr << "warning: skipped " << m << "\n";
    if (table.rows.empty()) throw DataError("no (T, algorithm) pair had the snapshots it needs");

    Provenance p;
    p.config = {{"command", "evaluate"},
                {"T", range_text(cfg.train_years)},
                {"horizon", std::to_string(cfg.horizon)},
                {"algorithms", join(cfg.algorithms)},
                {"L", std::to_string(cfg.L)},
                {"theta", format_real(cfg.params.theta)},
                {"tau", std::to_string(cfg.params.tau)},
                {"epsilon", format_real(cfg.params.epsilon)}};
    p.input_hash = series_hash(series);
    fs::create_directories(o.out);
    write_csv(fs::path(o.out) / "evaluation.csv", p, [&](std::ostream& out) { write_sweep(out, table); });
    write_csv(fs::path(o.out) / "evaluation_details.csv", p, [&](std::ostream& out) { write_sweep_details(out, table); });
    return 0;
}

Tier parse_tier(const std::string& s) {
    if (s == "top") return Tier::Top;
    if (s == "middle") return Tier::Middle;
    if (s == "low") return Tier::Low;
    throw ConfigError("unknown tier '" + s + "' (expected top, middle or low)");
}

int run_simulate(const Options& o) {
    CounterfactualConfig cfg;
    cfg.algorithms = o.algorithms({Algorithm::HeatS, Algorithm::TProbS});
    cfg.params = o.params();
    cfg.solver = o.solver();
    cfg.threads = o.threads;
    const bool history = std::any_of(cfg.algorithms.begin(), cfg.algorithms.end(), uses_history);
    fs::create_directories(o.out);

    Provenance p;
    p.config = {{"command", "simulate"},
                {"mode", o.mode},
                {"algorithms", join(cfg.algorithms)},
                {"theta", format_real(cfg.params.theta)},
                {"tau", std::to_string(cfg.params.tau)},
                {"epsilon", format_real(cfg.params.epsilon)},
                {"max_iter", std::to_string(cfg.solver.max_iter)},
                {"window", std::to_string(cfg.solver.stability_window)}};

    auto report_skips = [](const CounterfactualReport& r) {
        for (const auto& s : r.skipped)
            std::cerr << "warning: skipped " << to_string(s.algorithm) << " " << s.year << " " << s.country << ": "
                      << s.reason << "\n";
    };

    if (o.mode == "fixed_L" || o.mode == "L_sweep") {
        auto range = required_range(o.year.empty() ? o.T : o.year, "--year");
        if (range.first != range.last) throw ConfigError("--year takes a single year in " + o.mode + " mode");
        const int t = range.first;
        auto s = load_cached(o, t, true);
        auto past = history ? load_cached(o, t - cfg.params.tau, true) : nullptr;
        p.config.emplace_back("year", std::to_string(t));
        p.input_hash = snapshot_hash({s.get(), past.get()});

        if (o.mode == "fixed_L") {
            cfg.L = o.list_length();
            p.config.emplace_back("L", std::to_string(cfg.L));
            auto r = tier_report(s, past.get(), cfg);
            report_skips(r);
            const auto stem = "fixed_L_" + std::to_string(t) + ".csv";
            write_csv(fs::path(o.out) / ("counterfactual_" + stem), p, [&](std::ostream& out) { write_counterfactual(out, r); });
            write_csv(fs::path(o.out) / ("counterfactual_tiers_" + stem), p,
                      [&](std::ostream& out) { write_tier_aggregates(out, r); });
            return 0;
        }

        std::vector<CountryId> chosen = o.countries;
        if (chosen.empty()) {
            auto tiers = assign_tiers(solve_fitness(*s, cfg.solver));
            chosen = sample_tier(tiers, parse_tier(o.tier), o.sample, o.seed);
            p.config.emplace_back("tier", o.tier);
            p.config.emplace_back("sample", std::to_string(o.sample));
            p.config.emplace_back("seed", std::to_string(o.seed));
        } else {
            p.config.emplace_back("countries", join(chosen));
        }
        p.config.emplace_back("lengths", join(o.lengths));
        auto r = length_sweep(s, past.get(), chosen, o.lengths, cfg);
        report_skips(r);
        write_csv(fs::path(o.out) / ("counterfactual_L_sweep_" + std::to_string(t) + ".csv"), p,
                  [&](std::ostream& out) { write_counterfactual(out, r); });
        return 0;
    }

    // virtual
    auto range = required_range(o.T.empty() ? o.years : o.T, "--T");
    if (o.horizon < 1) throw ConfigError("--horizon must be >= 1");
    p.config.emplace_back("T", range_text(range));
    p.config.emplace_back("horizon", std::to_string(o.horizon));
    auto series = load_series(o, range.first - cfg.params.tau, range.last + o.horizon);
    p.input_hash = series_hash(series);
    auto v = virtual_report(series, range, o.horizon, cfg);
    for (const auto& s : v.report.skipped)
        if (s.country == "*") std::cerr << "warning: skipped " << s.year << ": " << s.reason << "\n";
    if (v.report.rows.empty()) throw DataError("no virtual-network scenario could be evaluated");

    for (int t = range.first; t <= range.last; ++t) {
        CounterfactualReport year;
        for (const auto& r : v.report.rows)
            if (r.year == t) year.rows.push_back(r);
        for (const auto& s : v.report.skipped)
            if (s.year == t) year.skipped.push_back(s);
        if (year.rows.empty()) continue;
        write_csv(fs::path(o.out) / ("counterfactual_virtual_" + std::to_string(t) + ".csv"), p,
                  [&](std::ostream& out) { write_counterfactual(out, year); });
    }
    write_csv(fs::path(o.out) / "counterfactual_tiers_virtual.csv", p,
              [&](std::ostream& out) { write_tier_aggregates(out, v.report); });
    write_csv(fs::path(o.out) / "virtual_summary.csv", p, [&](std::ostream& out) { write_virtual_summary(out, v); });
    for (const auto& [a, n] : v.countries) {
        auto it = v.improved.find(a);
        std::cerr << to_string(a) << ": " << (it == v.improved.end() ? 0 : it->second) << " of " << n
                  << " countries improve\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Product recommendation and economic fitness for country-product export networks", "tradrec"};
    app.set_version_flag("--version", kVersion);
    app.set_config("--config", "", "key = value file; command-line flags take precedence");
    app.require_subcommand(1);
    app.fallthrough();

    Options o;
    app.add_option("--input", o.input, "export table CSV (year,country,product,value)");
    app.add_option("--years", o.years, "year range A:B");
    app.add_option("--T", o.T, "training year range A:B");
    app.add_option("--year", o.year, "single year (or range A:B)");
    app.add_option("--horizon", o.horizon, "years between training and test snapshot")->capture_default_str();
    app.add_option("--algo,--algos", o.algos, "comma-separated: probs,heats,di,tprobs,degree")->delimiter(',');
    app.add_option("--theta", o.theta, "TProbS exponent")->capture_default_str();
    app.add_option("--tau", o.tau, "degree-increase lag in years")->capture_default_str();
    app.add_option("--epsilon", o.epsilon, "degree-increase tie-break weight")->capture_default_str();
    app.add_option("--L", o.L, "recommendation list length")->capture_default_str();
    app.add_option("--mode", o.mode, "simulate mode")
        ->check(CLI::IsMember({"fixed_L", "virtual", "L_sweep"}))
        ->capture_default_str();
    app.add_option("--threads", o.threads, "worker threads")->check(CLI::Range(1u, 1024u))->capture_default_str();
    app.add_option("--seed", o.seed, "seed for tier sampling")->capture_default_str();
    app.add_option("--out", o.out, "output directory")->capture_default_str();
    app.add_option("--cache", o.cache, "snapshot cache directory (default <out>/cache)");
    app.add_option("--threshold", o.threshold, "RCA threshold for a link")->capture_default_str();
    app.add_option("--max-iter", o.max_iter, "fitness iteration cap")->capture_default_str();
    app.add_option("--window", o.window, "iterations of unchanged ranking that count as converged")
        ->capture_default_str();
    app.add_option("--tier", o.tier, "tier sampled in L_sweep mode")->capture_default_str();
    app.add_option("--sample", o.sample, "countries sampled in L_sweep mode")->capture_default_str();
    app.add_option("--lengths", o.lengths, "list lengths in L_sweep mode")->delimiter(',');
    app.add_option("--countries", o.countries, "explicit countries for L_sweep mode")->delimiter(',');

    auto* ingest = app.add_subcommand("ingest", "build and cache one snapshot per year");
    auto* recommend = app.add_subcommand("recommend", "write top-L recommendation lists");
    auto* fitness = app.add_subcommand("fitness", "solve fitness and complexity");
    auto* evaluate = app.add_subcommand("evaluate", "precision/recall sweep over training years");
    auto* simulate = app.add_subcommand("simulate", "counterfactual fitness experiments");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (ingest->parsed()) return run_ingest(o);
        if (recommend->parsed()) return run_recommend(o);
        if (fitness->parsed()) return run_fitness(o);
        if (evaluate->parsed()) return run_evaluate(o);
        if (simulate->parsed()) return run_simulate(o);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const ConvergenceError& e) {
        std::cerr << "convergence error: " << e.what() << "\n";
        return kExitConvergence;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitConfig;
}
