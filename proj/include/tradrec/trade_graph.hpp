#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "tradrec/common.hpp"
#include "tradrec/matrix.hpp"

namespace tradrec {

struct YearRange {
    int first = 0;
    int last = 0;

    bool contains(int year) const { return year >= first && year <= last; }
};

// Parses "A:B" (or a single "A") into an inclusive range.
inline YearRange parse_year_range(std::string_view text) {
    auto parts = split(text, ':');
    auto to_int = [&](std::string_view s) {
        s = trim(s);
        int v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size() || s.empty())
            throw ConfigError("invalid year range '" + std::string(text) + "'");
        return v;
    };
    if (parts.size() == 1) {
        int y = to_int(parts[0]);
        return {y, y};
    }
    if (parts.size() != 2) throw ConfigError("invalid year range '" + std::string(text) + "'");
    YearRange r{to_int(parts[0]), to_int(parts[1])};
    if (r.first > r.last) throw ConfigError("year range '" + std::string(text) + "' is reversed");
    return r;
}

struct ExportRecord {
    int year = 0;
    CountryId country;
    ProductId product;
    double value = 0.0;

    bool operator==(const ExportRecord&) const = default;
};

// Export amounts keyed by (year, country, product). Duplicate keys are
// summed on construction; records are kept sorted by key.
class ExportTable {
public:
    ExportTable() = default;

    explicit ExportTable(const std::vector<ExportRecord>& records) {
        std::map<std::tuple<int, CountryId, ProductId>, double> merged;
        for (const auto& r : records) {
            if (!(r.value >= 0.0) || !std::isfinite(r.value))
                throw DataError("negative or non-finite export value for (" + std::to_string(r.year) + ", " + r.country +
                                ", " + r.product + ")");
            merged[{r.year, r.country, r.product}] += r.value;
        }
        records_.reserve(merged.size());
        std::set<ProductId> products;
        for (auto& [key, value] : merged) {
            records_.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), value});
            products.insert(std::get<2>(key));
            if (years_.empty() || years_.back() != std::get<0>(key)) years_.push_back(std::get<0>(key));
        }
        products_.assign(products.begin(), products.end());
    }

    const std::vector<ExportRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    // Years with at least one record, ascending.
    const std::vector<int>& years() const { return years_; }
    bool has_year(int year) const { return std::binary_search(years_.begin(), years_.end(), year); }

    // Union of products over every year in the table, lexicographic.
    const std::vector<ProductId>& products() const { return products_; }

    std::span<const ExportRecord> records_for(int year) const {
        auto lo = std::lower_bound(records_.begin(), records_.end(), year,
                                   [](const ExportRecord& r, int y) { return r.year < y; });
        auto hi = std::upper_bound(records_.begin(), records_.end(), year,
                                   [](int y, const ExportRecord& r) { return y < r.year; });
        return {records_.data() + (lo - records_.begin()), static_cast<std::size_t>(hi - lo)};
    }

    ExportTable scaled(double factor) const {
        std::vector<ExportRecord> copy = records_;
        for (auto& r : copy) r.value *= factor;
        return ExportTable(copy);
    }

private:
    std::vector<ExportRecord> records_;
    std::vector<int> years_;
    std::vector<ProductId> products_;
};

// Reads `year,country,product,value` rows. `source` names the input in errors.
inline ExportTable parse_exports(std::istream& in, YearRange years, const std::string& source = "<input>") {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw DataError(source + ": empty file");
    ++line_no;
    {
        auto header = split(trim(line), ',');
        const std::vector<std::string> expected{"year", "country", "product", "value"};
        bool ok = header.size() == expected.size();
        for (std::size_t i = 0; ok && i < header.size(); ++i) ok = trim(header[i]) == expected[i];
        if (!ok) throw DataError(source + ":1: expected header 'year,country,product,value'");
    }
    std::vector<ExportRecord> records;
    while (std::getline(in, line)) {
        ++line_no;
        auto view = trim(line);
        if (view.empty()) continue;
        auto where = [&] { return source + ":" + std::to_string(line_no) + ": "; };
        auto fields = split(view, ',');
        if (fields.size() != 4) throw DataError(where() + "expected 4 fields, got " + std::to_string(fields.size()));
        ExportRecord r;
        auto year_text = trim(fields[0]);
        auto [yp, yec] = std::from_chars(year_text.data(), year_text.data() + year_text.size(), r.year);
        if (yec != std::errc{} || yp != year_text.data() + year_text.size() || year_text.empty())
            throw DataError(where() + "malformed year '" + std::string(year_text) + "'");
        r.country = std::string(trim(fields[1]));
        r.product = std::string(trim(fields[2]));
        if (r.country.empty() || r.product.empty()) throw DataError(where() + "empty country or product id");
        auto value_text = trim(fields[3]);
        auto [vp, vec] = std::from_chars(value_text.data(), value_text.data() + value_text.size(), r.value);
        if (vec != std::errc{} || vp != value_text.data() + value_text.size() || value_text.empty())
            throw DataError(where() + "malformed value '" + std::string(value_text) + "'");
        if (!(r.value >= 0.0) || !std::isfinite(r.value))
            throw DataError(where() + "export value must be a finite non-negative number, got '" +
                            std::string(value_text) + "'");
        if (years.contains(r.year)) records.push_back(std::move(r));
    }
    if (records.empty())
        throw DataError(source + ": no records in years " + std::to_string(years.first) + ":" + std::to_string(years.last));
    return ExportTable(records);
}

inline ExportTable load_exports(const std::string& path, YearRange years) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open input file '" + path + "'");
    return parse_exports(in, years, path);
}

struct RcaMatrix {
    int year = 0;
    std::vector<CountryId> countries;  // countries with records in `year`
    std::vector<ProductId> products;   // product union of the table
    Matrix<double> values;
};

// Balassa index: (e_ia / sum_j e_ja) / (sum_b e_ib / sum_jb e_jb).
// Pairs whose country total or product total is zero get 0.
inline RcaMatrix compute_rca(const ExportTable& table, int year) {
    if (!table.has_year(year)) throw DataError("year " + std::to_string(year) + " not present in export table");
    auto records = table.records_for(year);

    RcaMatrix out;
    out.year = year;
    out.products = table.products();
    for (const auto& r : records)
        if (out.countries.empty() || out.countries.back() != r.country) out.countries.push_back(r.country);
    // records are sorted by (year, country, product)
    const std::size_t U = out.countries.size(), I = out.products.size();

    Matrix<double> exports(U, I, 0.0);
    std::size_t c = 0;
    for (const auto& r : records) {
        while (out.countries[c] != r.country) ++c;
        auto p = std::lower_bound(out.products.begin(), out.products.end(), r.product) - out.products.begin();
        exports(c, static_cast<std::size_t>(p)) = r.value;
    }

    std::vector<double> country_total(U, 0.0), product_total(I, 0.0);
    double world = 0.0;
    for (std::size_t i = 0; i < U; ++i)
        for (std::size_t a = 0; a < I; ++a) {
            country_total[i] += exports(i, a);
            product_total[a] += exports(i, a);
        }
    for (double t : country_total) world += t;
    if (!(world > 0.0)) throw DataError("world export total is zero in year " + std::to_string(year));

    out.values = Matrix<double>(U, I, 0.0);
    for (std::size_t i = 0; i < U; ++i) {
        if (country_total[i] <= 0.0) continue;
        const double country_share = country_total[i] / world;
        for (std::size_t a = 0; a < I; ++a) {
            if (product_total[a] <= 0.0) continue;
            out.values(i, a) = (exports(i, a) / product_total[a]) / country_share;
        }
    }
    return out;
}

// Binary country x product network for one year. Countries and products
// are in lexicographic order; degree vectors mirror the adjacency.
class BipartiteSnapshot {
public:
    BipartiteSnapshot() = default;

    // Throws DataError if ids are unsorted/duplicated or shapes mismatch.
    static BipartiteSnapshot from_adjacency(int year, std::vector<CountryId> countries, std::vector<ProductId> products,
                                            Matrix<std::uint8_t> adjacency, std::size_t raw_country_count = 0) {
        auto strictly_sorted = [](const auto& ids) {
            return std::adjacent_find(ids.begin(), ids.end(), [](const auto& a, const auto& b) { return !(a < b); }) ==
                   ids.end();
        };
        if (!strictly_sorted(countries) || !strictly_sorted(products))
            throw DataError("snapshot ids must be unique and sorted");
        if (adjacency.rows() != countries.size() || adjacency.cols() != products.size())
            throw DataError("snapshot adjacency shape does not match id lists");

        BipartiteSnapshot s;
        s.year_ = year;
        s.countries_ = std::move(countries);
        s.products_ = std::move(products);
        s.adjacency_ = std::move(adjacency);
        s.raw_country_count_ = raw_country_count == 0 ? s.countries_.size() : raw_country_count;
        s.index();
        return s;
    }

    int year() const { return year_; }
    const std::vector<CountryId>& countries() const { return countries_; }
    const std::vector<ProductId>& products() const { return products_; }
    std::size_t num_countries() const { return countries_.size(); }
    std::size_t num_products() const { return products_.size(); }
    // Countries with any record in the year, before zero-degree removal.
    std::size_t raw_country_count() const { return raw_country_count_; }

    const Matrix<std::uint8_t>& adjacency() const { return adjacency_; }
    bool linked(std::size_t country, std::size_t product) const { return adjacency_(country, product) != 0; }

    const std::vector<int>& country_degrees() const { return country_degrees_; }
    const std::vector<int>& product_degrees() const { return product_degrees_; }
    const std::vector<std::uint32_t>& products_of(std::size_t country) const { return country_products_[country]; }
    const std::vector<std::uint32_t>& countries_of(std::size_t product) const { return product_countries_[product]; }
    std::size_t link_count() const { return links_; }

    std::optional<std::size_t> country_index(const CountryId& id) const { return find(countries_, id); }
    std::optional<std::size_t> product_index(const ProductId& id) const { return find(products_, id); }

    std::size_t require_country(const CountryId& id) const {
        auto idx = country_index(id);
        if (!idx) throw DataError("country '" + id + "' not present in snapshot " + std::to_string(year_));
        return *idx;
    }

    // Content hash over year, ids and links.
    std::uint64_t fingerprint() const { return fingerprint_; }

    // Copy with one country's row edited. Products listed in `remove`
    // are unlinked first, then `add` is linked.
    BipartiteSnapshot with_row_edit(std::size_t country, const std::vector<std::size_t>& add,
                                    const std::vector<std::size_t>& remove = {}) const {
        Matrix<std::uint8_t> adj = adjacency_;
        for (auto p : remove) adj(country, p) = 0;
        for (auto p : add) adj(country, p) = 1;
        return from_adjacency(year_, countries_, products_, std::move(adj), raw_country_count_);
    }

    bool operator==(const BipartiteSnapshot& o) const {
        return year_ == o.year_ && countries_ == o.countries_ && products_ == o.products_ && adjacency_ == o.adjacency_ &&
               raw_country_count_ == o.raw_country_count_;
    }

private:
    template <class Id>
    static std::optional<std::size_t> find(const std::vector<Id>& ids, const Id& id) {
        auto it = std::lower_bound(ids.begin(), ids.end(), id);
        if (it == ids.end() || *it != id) return std::nullopt;
        return static_cast<std::size_t>(it - ids.begin());
    }

    void index() {
        const std::size_t U = countries_.size(), I = products_.size();
        country_degrees_.assign(U, 0);
        product_degrees_.assign(I, 0);
        country_products_.assign(U, {});
        product_countries_.assign(I, {});
        links_ = 0;
        Fnv1a h;
        h.update(static_cast<std::uint64_t>(year_));
        for (const auto& c : countries_) h.update(c), h.update(std::string_view("\n"));
        for (const auto& p : products_) h.update(p), h.update(std::string_view("\n"));
        for (std::size_t i = 0; i < U; ++i)
            for (std::size_t a = 0; a < I; ++a) {
                if (!adjacency_(i, a)) continue;
                adjacency_(i, a) = 1;
                ++country_degrees_[i];
                ++product_degrees_[a];
                country_products_[i].push_back(static_cast<std::uint32_t>(a));
                product_countries_[a].push_back(static_cast<std::uint32_t>(i));
                ++links_;
                h.update(static_cast<std::uint64_t>(i * I + a));
            }
        fingerprint_ = h.value();
    }

    int year_ = 0;
    std::vector<CountryId> countries_;
    std::vector<ProductId> products_;
    Matrix<std::uint8_t> adjacency_;
    std::size_t raw_country_count_ = 0;
    std::vector<int> country_degrees_;
    std::vector<int> product_degrees_;
    std::vector<std::vector<std::uint32_t>> country_products_;
    std::vector<std::vector<std::uint32_t>> product_countries_;
    std::size_t links_ = 0;
    std::uint64_t fingerprint_ = 0;
};

// RCA values within this relative distance below the threshold still count
// as links.
inline constexpr double kRcaRelativeSlack = 1e-12;

inline BipartiteSnapshot snapshot_from_rca(const RcaMatrix& rca, double threshold = 1.0) {
    const double cut = threshold * (1.0 - kRcaRelativeSlack);
    std::vector<CountryId> kept;
    std::vector<std::size_t> kept_rows;
    for (std::size_t i = 0; i < rca.countries.size(); ++i) {
        auto row = rca.values.row(i);
        if (std::any_of(row.begin(), row.end(), [&](double v) { return v >= cut && v > 0.0; })) {
            kept.push_back(rca.countries[i]);
            kept_rows.push_back(i);
        }
    }
    Matrix<std::uint8_t> adj(kept.size(), rca.products.size(), 0);
    for (std::size_t k = 0; k < kept_rows.size(); ++k)
        for (std::size_t a = 0; a < rca.products.size(); ++a) {
            double v = rca.values(kept_rows[k], a);
            adj(k, a) = (v >= cut && v > 0.0) ? 1 : 0;
        }
    return BipartiteSnapshot::from_adjacency(rca.year, std::move(kept), rca.products, std::move(adj),
                                             rca.countries.size());
}

inline BipartiteSnapshot build_snapshot(const ExportTable& table, int year, double threshold = 1.0) {
    if (!(threshold > 0.0) || !std::isfinite(threshold)) throw ConfigError("RCA threshold must be positive");
    return snapshot_from_rca(compute_rca(table, year), threshold);
}

// Snapshot cache format (text, one token or id per line):
//
//   tradrec-snapshot 1
//   year <int>
//   raw_countries <int>
//   countries <U>        followed by U id lines
//   products <I>         followed by I id lines
//   links <K>            followed by K "<country-index> <product-index>" lines
//
// Links are listed row-major. Reading back yields an identical snapshot.
inline void write_snapshot(std::ostream& out, const BipartiteSnapshot& s) {
    out << "tradrec-snapshot 1\n";
    out << "year " << s.year() << "\n";
    out << "raw_countries " << s.raw_country_count() << "\n";
    out << "countries " << s.num_countries() << "\n";
    for (const auto& c : s.countries()) out << c << "\n";
    out << "products " << s.num_products() << "\n";
    for (const auto& p : s.products()) out << p << "\n";
    out << "links " << s.link_count() << "\n";
    for (std::size_t i = 0; i < s.num_countries(); ++i)
        for (auto a : s.products_of(i)) out << i << " " << a << "\n";
}

inline BipartiteSnapshot read_snapshot(std::istream& in, const std::string& source = "<snapshot>") {
    std::string line;
    auto next = [&]() -> std::string {
        if (!std::getline(in, line)) throw DataError(source + ": truncated snapshot file");
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
    };
    auto keyed = [&](const std::string& key) -> std::size_t {
        std::string l = next();
        std::istringstream ss(l);
        std::string k;
        long long v = -1;
        if (!(ss >> k >> v) || k != key || v < 0) throw DataError(source + ": expected '" + key + " <n>', got '" + l + "'");
        return static_cast<std::size_t>(v);
    };
    std::string magic = next();
    while (!magic.empty() && magic.front() == '#') magic = next();  // provenance header
    if (magic != "tradrec-snapshot 1") throw DataError(source + ": not a snapshot file");
    std::string yl = next();
    int year = 0;
    {
        std::istringstream ss(yl);
        std::string k;
        if (!(ss >> k >> year) || k != "year") throw DataError(source + ": bad year line");
    }
    std::size_t raw = keyed("raw_countries");
    std::vector<CountryId> countries(keyed("countries"));
    for (auto& c : countries) c = next();
    std::vector<ProductId> products(keyed("products"));
    for (auto& p : products) p = next();
    std::size_t links = keyed("links");
    Matrix<std::uint8_t> adj(countries.size(), products.size(), 0);
    for (std::size_t k = 0; k < links; ++k) {
        std::istringstream ss(next());
        std::size_t i = 0, a = 0;
        if (!(ss >> i >> a) || i >= countries.size() || a >= products.size())
            throw DataError(source + ": bad link line '" + line + "'");
        adj(i, a) = 1;
    }
    return BipartiteSnapshot::from_adjacency(year, std::move(countries), std::move(products), std::move(adj), raw);
}

}  // namespace tradrec
