#include "rpv/pi0.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace rpv {

std::string to_string(EstimatorVariant variant) {
    return variant == EstimatorVariant::plain ? "plain" : "storey-plus";
}

EstimatorVariant parse_estimator_variant(const std::string& name) {
    if (name == "plain") return EstimatorVariant::plain;
    if (name == "storey-plus" || name == "storey_plus") return EstimatorVariant::storey_plus;
    throw std::invalid_argument("unknown estimator variant '" + name + "'");
}

void EstimatorConfig::validate() const {
    if (!(lambda > 0.0 && lambda < 1.0)) {
        std::ostringstream msg;
        msg << "lambda must lie in (0, 1), got " << lambda;
        throw std::invalid_argument(msg.str());
    }
}

double ecdf(std::span<const double> p, double t) {
    if (p.empty()) {
        throw std::invalid_argument("ecdf: empty p-value vector");
    }
    const auto hits = std::ranges::count_if(p, [t](double v) { return v <= t; });
    return static_cast<double>(hits) / static_cast<double>(p.size());
}

double ecdf(const PValueVector& p, double t) { return ecdf(p.values(), t); }

double schweder_spjotvoll_from_count(std::size_t count_at_most_lambda, std::size_t m,
                                     const EstimatorConfig& cfg) {
    cfg.validate();
    const double md = static_cast<double>(m);
    const double tail = 1.0 - static_cast<double>(count_at_most_lambda) / md;
    double estimate = tail / (1.0 - cfg.lambda);
    if (cfg.variant == EstimatorVariant::storey_plus) {
        estimate += 1.0 / (md * (1.0 - cfg.lambda));
    }
    return estimate;
}

double schweder_spjotvoll(const PValueVector& p, const EstimatorConfig& cfg) {
    const auto values = p.values();
    const auto hits = std::ranges::count_if(values, [&](double v) { return v <= cfg.lambda; });
    return schweder_spjotvoll_from_count(static_cast<std::size_t>(hits), values.size(), cfg);
}

PopulationSpec::PopulationSpec(std::vector<PopulationGroup> groups) : groups_(std::move(groups)) {
    if (groups_.empty()) {
        throw std::invalid_argument("PopulationSpec: no groups");
    }
    for (const auto& g : groups_) {
        if (g.count < 1) {
            throw std::invalid_argument("PopulationSpec: group counts must be >= 1");
        }
        m_ += g.count;
    }
    if (m_ < 2) {
        throw std::invalid_argument("PopulationSpec: need m >= 2 hypotheses");
    }
}

double PopulationSpec::pi0() const noexcept {
    std::size_t nulls = 0;
    for (const auto& g : groups_) {
        if (g.law.is_null()) nulls += g.count;
    }
    return static_cast<double>(nulls) / static_cast<double>(m_);
}

std::string PopulationSpec::describe() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < groups_.size(); ++i) {
        if (i) out << ';';
        out << groups_[i].count << 'x' << groups_[i].law.describe();
    }
    return out.str();
}

std::string spec_digest(const std::string& canonical) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char ch : canonical) {
        hash ^= ch;
        hash *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

double expected_ecdf(const PopulationSpec& spec, double lambda, double c) {
    if (!(lambda > 0.0 && lambda < 1.0)) {
        throw std::invalid_argument("expected_ecdf: lambda must lie in (0, 1)");
    }
    if (!(c >= 0.0 && c <= 1.0)) {
        throw std::invalid_argument("expected_ecdf: c must lie in [0, 1]");
    }
    double total = 0.0;
    for (const auto& g : spec.groups()) {
        // Continuous laws: P(p >= c) = 1 - F(c).
        const double term = lambda * (1.0 - g.law.cdf(c)) + g.law.cdf(c * lambda);
        total += static_cast<double>(g.count) * term;
    }
    return total / static_cast<double>(spec.m());
}

std::string to_string(CurveQuantity quantity) {
    switch (quantity) {
    case CurveQuantity::h: return "h";
    case CurveQuantity::variance: return "variance";
    case CurveQuantity::mse: return "mse";
    case CurveQuantity::cdf: return "cdf";
    }
    return "unknown";
}

void write_csv(std::ostream& out, const CurveTable& table) {
    char buf[64];
    out << "# quantity=" << to_string(table.quantity);
    if (table.lambda) {
        std::snprintf(buf, sizeof buf, "%.17g", *table.lambda);
        out << " lambda=" << buf;
    }
    if (table.fixed_c) {
        std::snprintf(buf, sizeof buf, "%.17g", *table.fixed_c);
        out << " c=" << buf;
    }
    out << " spec=" << table.spec_digest << '\n';
    out << table.key_name << ",value\n";
    for (const auto& row : table.rows) {
        std::snprintf(buf, sizeof buf, "%.17g,", row.key);
        out << buf;
        std::snprintf(buf, sizeof buf, "%.17g", row.value);
        out << buf << '\n';
    }
}

namespace {

void check_c_grid(std::span<const double> c_grid) {
    if (c_grid.empty()) {
        throw std::invalid_argument("c grid is empty");
    }
    for (std::size_t i = 0; i < c_grid.size(); ++i) {
        if (!(c_grid[i] >= 0.0 && c_grid[i] <= 1.0)) {
            throw std::invalid_argument("c grid values must lie in [0, 1]");
        }
        if (i > 0 && !(c_grid[i] > c_grid[i - 1])) {
            throw std::invalid_argument("c grid must be strictly increasing");
        }
    }
}

double h_value(const PopulationSpec& spec, double lambda, double c, EstimatorVariant variant) {
    double h = (1.0 - expected_ecdf(spec, lambda, c)) / (1.0 - lambda);
    if (variant == EstimatorVariant::storey_plus) {
        h += 1.0 / (static_cast<double>(spec.m()) * (1.0 - lambda));
    }
    return h;
}

} // namespace

CurveTable h_curve(const PopulationSpec& spec, double lambda, std::span<const double> c_grid,
                   EstimatorVariant variant) {
    EstimatorConfig{lambda, variant}.validate();
    check_c_grid(c_grid);
    CurveTable table;
    table.quantity = CurveQuantity::h;
    table.lambda = lambda;
    table.spec_digest = spec_digest(spec.describe());
    table.rows.resize(c_grid.size());
    const auto n = static_cast<std::ptrdiff_t>(c_grid.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        table.rows[i] = {c_grid[i], h_value(spec, lambda, c_grid[i], variant)};
    }
    return table;
}

CStarResult cstar_search(const PopulationSpec& spec, double lambda, double resolution,
                         EstimatorVariant variant) {
    if (!(resolution > 0.0 && resolution <= 1e-3)) {
        throw std::invalid_argument("cstar_search: resolution must lie in (0, 1e-3]");
    }
    const auto steps = static_cast<std::size_t>(std::ceil(1.0 / resolution - 1e-9));
    std::vector<double> grid(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) {
        grid[i] = static_cast<double>(i) / static_cast<double>(steps);
    }
    const CurveTable curve = h_curve(spec, lambda, grid, variant);

    double best = curve.rows[0].value;
    for (const auto& row : curve.rows) best = std::min(best, row.value);
    std::size_t best_i = 0;
    while (curve.rows[best_i].value > best + kAnalyticTolerance) ++best_i;

    CStarResult result{grid[best_i], curve.rows[best_i].value};

    // Golden-section search on the bracketing cells.
    double a = grid[best_i == 0 ? 0 : best_i - 1];
    double b = grid[std::min(best_i + 1, steps)];
    auto h = [&](double c) { return h_value(spec, lambda, c, variant); };
    constexpr double inv_phi = 0.6180339887498949;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = h(x1);
    double f2 = h(x2);
    for (int iter = 0; iter < 80 && b - a > 1e-12; ++iter) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = h(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = h(x2);
        }
    }
    const double refined_c = f1 <= f2 ? x1 : x2;
    const double refined_h = std::min(f1, f2);
    if (refined_h < result.h_min - kAnalyticTolerance) {
        result = {refined_c, refined_h};
    }
    return result;
}

std::vector<double> make_grid(double start, double step, double stop) {
    if (!(step > 0.0) || !(stop >= start)) {
        throw std::invalid_argument("make_grid: need step > 0 and stop >= start");
    }
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9));
    std::vector<double> grid(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        const double v = start + static_cast<double>(i) * step;
        grid[i] = std::round(v * 1e12) / 1e12;
    }
    return grid;
}

} // namespace rpv
