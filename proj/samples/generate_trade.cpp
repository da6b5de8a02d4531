// Writes a synthetic export table with nested capabilities that grow over
// time, so later years contain new exports for the recommenders to find.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tradrec/trade_graph.hpp"

int main(int argc, char** argv) {
    CLI::App app{"synthetic year,country,product,value table"};
    int countries = 24, products = 40;
    std::string years = "2001:2015", out = "-";
    std::uint64_t seed = 2024;
    app.add_option("--countries", countries)->check(CLI::Range(3, 100000))->capture_default_str();
    app.add_option("--products", products)->check(CLI::Range(2, 100000))->capture_default_str();
    app.add_option("--years", years)->capture_default_str();
    app.add_option("--seed", seed)->capture_default_str();
    app.add_option("--out", out, "output path, '-' for stdout")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    auto range = tradrec::parse_year_range(years);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::lognormal_distribution<double> size(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 0.3);

    std::vector<double> mass(countries), capability(countries), growth(countries);
    for (int i = 0; i < countries; ++i) {
        mass[i] = size(rng);
        capability[i] = 0.1 + 0.8 * unit(rng);
        growth[i] = 0.03 * unit(rng);
    }
    std::vector<double> complexity(products), share(products);
    for (int a = 0; a < products; ++a) {
        complexity[a] = unit(rng);
        share[a] = size(rng);
    }

    std::ofstream file;
    if (out != "-") {
        file.open(out);
        if (!file) {
            std::cerr << "cannot write '" << out << "'\n";
            return 3;
        }
    }
    std::ostream& os = out == "-" ? std::cout : file;
    os << "year,country,product,value\n";
    char buf[64];
    for (int t = range.first; t <= range.last; ++t)
        for (int i = 0; i < countries; ++i) {
            const double cap = capability[i] + growth[i] * (t - range.first);
            for (int a = 0; a < products; ++a) {
                const double gap = complexity[a] - cap;
                const double draw = noise(rng);
                if (gap > 0.25) continue;
                const double value = 1000.0 * mass[i] * share[a] * std::exp(draw) * (gap <= 0 ? 1.0 : 0.05);
                std::snprintf(buf, sizeof buf, "%.2f", value);
                os << t << ",C" << 100 + i << ",P" << 1000 + a << "," << buf << "\n";
            }
        }
    return 0;
}
