#include "rpv/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace rpv {

namespace {

void check_lambda(double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0)) {
        throw std::invalid_argument("lambda must lie in (0, 1)");
    }
}

} // namespace

double g_value(std::span<const double> p, double lambda, double c) {
    check_lambda(lambda);
    if (!(c >= 0.0 && c <= 1.0)) {
        throw std::invalid_argument("g_value: c must lie in [0, 1]");
    }
    std::size_t upper = 0;
    std::size_t lower = 0;
    const double scaled = lambda * c;
    for (double v : p) {
        upper += v >= c;
        lower += v <= scaled;
    }
    return lambda * static_cast<double>(upper) + static_cast<double>(lower);
}

double g_value(const PValueVector& p, double lambda, double c) {
    return g_value(p.values(), lambda, c);
}

double conditional_expectation(const PValueVector& p, double lambda, double c,
                               EstimatorVariant variant) {
    const double m = static_cast<double>(p.size());
    double value = (1.0 - g_value(p, lambda, c) / m) / (1.0 - lambda);
    if (variant == EstimatorVariant::storey_plus) {
        value += 1.0 / (m * (1.0 - lambda));
    }
    return value;
}

CandidateSet candidate_set(const PValueVector& p, double lambda) {
    check_lambda(lambda);
    std::vector<std::pair<double, CandidateSource>> raw;
    raw.reserve(2 * p.size() + 2);
    raw.emplace_back(0.0, CandidateSource::grid);
    raw.emplace_back(1.0, CandidateSource::grid);
    for (double v : p.values()) {
        raw.emplace_back(v, CandidateSource::p_value);
        double scaled = v / lambda;
        while (lambda * scaled < v) {
            scaled = std::nextafter(scaled, std::numeric_limits<double>::infinity());
        }
        if (scaled <= 1.0) {
            raw.emplace_back(scaled, CandidateSource::scaled);
        }
    }
    // Stable sort keeps the first-listed source for duplicated points.
    std::ranges::stable_sort(raw, {}, &std::pair<double, CandidateSource>::first);
    CandidateSet set;
    set.points.reserve(raw.size());
    set.sources.reserve(raw.size());
    for (const auto& [point, source] : raw) {
        if (!set.points.empty() && set.points.back() == point) continue;
        set.points.push_back(point);
        set.sources.push_back(source);
    }
    return set;
}

C0Selection select_c0(const PValueVector& p, double lambda, EstimatorVariant variant) {
    check_lambda(lambda);
    const CandidateSet set = candidate_set(p, lambda);

    std::vector<double> sorted(p.values().begin(), p.values().end());
    std::ranges::sort(sorted);
    const auto m = sorted.size();

    const auto n = static_cast<std::ptrdiff_t>(set.points.size());
    double best_g = -1.0;
    std::ptrdiff_t best_i = n;
#pragma omp parallel
    {
        double local_g = -1.0;
        std::ptrdiff_t local_i = n;
#pragma omp for schedule(static) nowait
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const double c = set.points[i];
            // #{p >= c} and #{p <= lambda c} by binary search on the sorted values.
            const auto upper = m - static_cast<std::size_t>(
                                       std::ranges::lower_bound(sorted, c) - sorted.begin());
            const auto lower = static_cast<std::size_t>(
                std::ranges::upper_bound(sorted, lambda * c) - sorted.begin());
            const double g = lambda * static_cast<double>(upper) + static_cast<double>(lower);
            if (g > local_g || (g == local_g && i < local_i)) {
                local_g = g;
                local_i = i;
            }
        }
#pragma omp critical
        {
            if (local_g > best_g || (local_g == best_g && local_i < best_i)) {
                best_g = local_g;
                best_i = local_i;
            }
        }
    }

    C0Selection out;
    out.c0 = set.points[static_cast<std::size_t>(best_i)];
    out.g_max = best_g;
    out.candidates = set.points.size();
    const double md = static_cast<double>(m);
    out.conditional_expectation = (1.0 - best_g / md) / (1.0 - lambda);
    if (variant == EstimatorVariant::storey_plus) {
        out.conditional_expectation += 1.0 / (md * (1.0 - lambda));
    }
    return out;
}

} // namespace rpv
