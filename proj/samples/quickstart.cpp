// Loads an export table, recommends products for one country and checks
// how many of them it actually exported five years later.

#include <iostream>

#include "tradrec/tradrec.hpp"

using namespace tradrec;

int main(int argc, char** argv) {
    const std::string path = argc > 1 ? argv[1] : "trade_small.csv";
    const int T = 2005, horizon = 5;
    try {
        auto table = load_exports(path, {T - 1, T + horizon});
        auto past = build_snapshot(table, T - 1);
        auto train = build_snapshot(table, T);
        auto test = build_snapshot(table, T + horizon);
        std::cout << "snapshot " << T << ": " << train.num_countries() << " countries, " << train.num_products()
                  << " products, " << train.link_count() << " links\n";

        const auto& country = train.countries().front();
        auto scores = tprobs_scores(train, past, country, 0.2, 1e-6);
        auto recs = top_l(scores, train, country, 5);
        auto added = new_exports(train, test, country);
        std::cout << "TProbS top 5 for " << country << ":\n";
        for (const auto& r : recs.ranked) {
            bool hit = std::find(added.begin(), added.end(), r.product) != added.end();
            std::cout << "  " << r.product << "  " << format_real(r.score) << (hit ? "  (exported by " : "")
                      << (hit ? std::to_string(T + horizon) + ")" : "") << "\n";
        }

        auto fit = solve_fitness(train);
        std::cout << "fitness leaders " << T << (fit.converged ? "" : " (not converged)") << ":\n";
        for (std::size_t n = 0; n < std::min<std::size_t>(5, fit.order.size()); ++n) {
            auto i = fit.order[n];
            std::cout << "  " << n + 1 << ". " << fit.countries[i] << "  " << format_real(fit.fitness[i]) << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    return 0;
}
