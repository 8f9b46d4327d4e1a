#pragma once

#include <array>
#include <cmath>
#include <numbers>

namespace rpv::detail {

struct GaussLegendre20 {
    std::array<double, 20> nodes{};
    std::array<double, 20> weights{};

    GaussLegendre20() {
        constexpr int n = 20;
        for (int i = 0; i < n; ++i) {
            double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int iter = 0; iter < 100; ++iter) {
                double p0 = 1.0;
                double p1 = x;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::fabs(dx) < 1e-16) break;
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
    }
};

inline const GaussLegendre20& gauss_legendre() {
    static const GaussLegendre20 rule;
    return rule;
}

template <class F>
double composite_gauss_legendre(F&& f, double lo, double hi, int panels) {
    const auto& rule = gauss_legendre();
    const double width = (hi - lo) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double mid = lo + (p + 0.5) * width;
        double panel = 0.0;
        for (int i = 0; i < 20; ++i) {
            panel += rule.weights[i] * f(mid + 0.5 * width * rule.nodes[i]);
        }
        total += 0.5 * width * panel;
    }
    return total;
}

} // namespace rpv::detail
