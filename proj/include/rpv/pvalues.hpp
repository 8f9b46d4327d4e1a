#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rpv/statdist.hpp"

namespace rpv {

// Tolerance for analytic inequalities evaluated on finite grids.
inline constexpr double kAnalyticTolerance = 1e-12;

enum class PValueKind { lfc, randomized, external };

std::string to_string(PValueKind kind);

// m >= 2 values in [0, 1].
class PValueVector {
public:
    PValueVector(std::vector<double> values, PValueKind kind);

    std::span<const double> values() const noexcept { return values_; }
    PValueKind kind() const noexcept { return kind_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t j) const noexcept { return values_[j]; }

private:
    std::vector<double> values_;
    PValueKind kind_;
};

// Law of an upper-tail LFC p-value p = 1 - F_0(T) under a fixed parameter.
//
// Z-test: T*sqrt(n) ~ N(theta*sqrt(n), 1), so P(p <= u) = Phi(Phi^{-1}(u) + theta_scaled).
// Two-sample t: T ~ t_{df, ncp}, so P(p <= u) = 1 - G_ncp(F_t^{-1}(1 - u)).
class MarginalLaw {
public:
    struct ZTest {
        double theta_scaled;
        friend bool operator==(const ZTest&, const ZTest&) = default;
    };
    struct TwoSampleT {
        double ncp;
        int df;
        friend bool operator==(const TwoSampleT&, const TwoSampleT&) = default;
    };

    static MarginalLaw z_test(double theta_scaled);
    static MarginalLaw two_sample_t(double ncp, int df);

    // u -> P(p^LFC <= u); clamps outside [0, 1].
    double cdf(double u) const;
    // v -> inf{u : cdf(u) >= v}, for v in (0, 1).
    double quantile(double v) const;

    // Location parameter on the test-statistic scale (theta*sqrt(n) or ncp).
    double shift() const noexcept;
    // True when the law is Uni[0,1] (parameter on the LFC boundary).
    bool is_uniform() const noexcept { return shift() == 0.0; }
    bool is_null() const noexcept { return shift() <= 0.0; }

    const std::variant<ZTest, TwoSampleT>& model() const noexcept { return model_; }
    std::string describe() const;

    friend bool operator==(const MarginalLaw&, const MarginalLaw&) = default;

private:
    explicit MarginalLaw(std::variant<ZTest, TwoSampleT> model) : model_(model) {}
    std::variant<ZTest, TwoSampleT> model_;
};

// Constant threshold c, or a random threshold R independent of data and U.
class RandomizationRule {
public:
    struct Constant {
        double c;
    };
    struct Uniform {
        double lo;
        double hi;
    };

    static RandomizationRule constant(double c);
    // R ~ Uniform[lo, hi], 0 <= lo <= hi <= 1; lo == hi is a point mass.
    static RandomizationRule uniform(double lo, double hi);

    bool is_constant() const noexcept { return std::holds_alternative<Constant>(rule_); }
    // Draws R (consumes one uniform for the random variant).
    double threshold(RngStream& rng) const;
    const std::variant<Constant, Uniform>& rule() const noexcept { return rule_; }

private:
    explicit RandomizationRule(std::variant<Constant, Uniform> rule) : rule_(rule) {}
    std::variant<Constant, Uniform> rule_;
};

double lfc_pvalue_z(double t_stat, int n);
double lfc_pvalue_t(double t_stat, int df);

// u * 1{p >= c} + (p / c) * 1{p < c}; c = 0 returns u.
double randomize(double p_lfc, double u, double threshold);
// The random variant requires rng to draw R.
double randomize(double p_lfc, double u, const RandomizationRule& rule, RngStream* rng = nullptr);

// P(p^rand <= t) = t * (1 - F(c)) + F(t * c).
double randomized_cdf(double t, double c, const MarginalLaw& law);
// Random threshold: E_R[t * (1 - F(R)) + F(t * R)].
double randomized_cdf(double t, const RandomizationRule& rule, const MarginalLaw& law);

// Element j uses uniform draw j of rng; random thresholds are drawn after all m uniforms.
PValueVector randomize_vector(const PValueVector& p_lfc, const RandomizationRule& rule,
                              RngStream& rng);

struct ConditionCheck {
    double max_violation = 0.0;
    bool passed() const noexcept { return max_violation <= kAnalyticTolerance; }
};

struct ValidityReport {
    // F(t c) <= t F(c)
    ConditionCheck scaled_cdf_bound;
    // F(t) / t non-decreasing
    ConditionCheck ratio_monotone;
    // F convex
    ConditionCheck convexity;

    bool all_passed() const noexcept {
        return scaled_cdf_bound.passed() && ratio_monotone.passed() && convexity.passed();
    }
};

ValidityReport validity_diagnostic(const MarginalLaw& law, std::span<const double> t_grid,
                                   std::span<const double> c_grid);

struct StochasticOrderReport {
    // max_t [cdf(t, c2) - cdf(t, c1)]; <= tol means p^rand(c1) <=_st p^rand(c2).
    double max_forward = 0.0;
    // max_t [cdf(t, c1) - cdf(t, c2)]; <= tol means the reversed ordering.
    double max_reversed = 0.0;

    bool forward_holds() const noexcept { return max_forward <= kAnalyticTolerance; }
    bool reversed_holds() const noexcept { return max_reversed <= kAnalyticTolerance; }
};

StochasticOrderReport stochastic_order_diagnostic(const MarginalLaw& law, double c1, double c2,
                                                  std::span<const double> t_grid);

} // namespace rpv
