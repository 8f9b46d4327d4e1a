#pragma once

#include <span>
#include <vector>

#include "rpv/pi0.hpp"
#include "rpv/pvalues.hpp"

namespace rpv {

// g(c) = sum_j (lambda 1{p_j >= c} + 1{p_j <= lambda c})
double g_value(std::span<const double> p, double lambda, double c);
double g_value(const PValueVector& p, double lambda, double c);

// E[pi0_hat(lambda, c) | data] = (1 - g(c)/m) / (1 - lambda) (+ 1/(m(1 - lambda)) for storey_plus).
double conditional_expectation(const PValueVector& p, double lambda, double c,
                               EstimatorVariant variant = EstimatorVariant::plain);

enum class CandidateSource { grid, p_value, scaled };

struct CandidateSet {
    // Sorted ascending, no duplicates, all in [0, 1].
    std::vector<double> points;
    std::vector<CandidateSource> sources;
};

// {0, 1} u {p_j} u {p_j / lambda <= 1}. A scaled point is nudged up to the
// smallest double c with lambda * c >= p_j so the jump of 1{p_j <= lambda c}
// is seen at the candidate itself.
CandidateSet candidate_set(const PValueVector& p, double lambda);

struct C0Selection {
    double c0;
    double g_max;
    double conditional_expectation;
    std::size_t candidates;
};

// Maximizes g over the candidate set; ties resolve to the smallest c.
C0Selection select_c0(const PValueVector& p, double lambda,
                      EstimatorVariant variant = EstimatorVariant::plain);

} // namespace rpv
