#include "rpv/pvalues.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "quadrature.hpp"

namespace rpv {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_probability(double x, const char* what) {
    if (!(x >= 0.0 && x <= 1.0)) {
        std::ostringstream msg;
        msg << what << " must lie in [0, 1], got " << x;
        throw std::invalid_argument(msg.str());
    }
}

} // namespace

std::string to_string(PValueKind kind) {
    switch (kind) {
    case PValueKind::lfc: return "lfc";
    case PValueKind::randomized: return "randomized";
    case PValueKind::external: return "external";
    }
    return "unknown";
}

PValueVector::PValueVector(std::vector<double> values, PValueKind kind)
    : values_(std::move(values)), kind_(kind) {
    if (values_.size() < 2) {
        throw std::invalid_argument("PValueVector: need at least 2 p-values, got " +
                                    std::to_string(values_.size()));
    }
    for (std::size_t j = 0; j < values_.size(); ++j) {
        if (!(values_[j] >= 0.0 && values_[j] <= 1.0)) {
            std::ostringstream msg;
            msg << "PValueVector: value " << j << " = " << values_[j] << " outside [0, 1]";
            throw std::invalid_argument(msg.str());
        }
    }
}

MarginalLaw MarginalLaw::z_test(double theta_scaled) {
    if (!std::isfinite(theta_scaled)) {
        throw std::invalid_argument("MarginalLaw::z_test: theta_scaled must be finite");
    }
    return MarginalLaw(ZTest{theta_scaled});
}

MarginalLaw MarginalLaw::two_sample_t(double ncp, int df) {
    if (!std::isfinite(ncp)) {
        throw std::invalid_argument("MarginalLaw::two_sample_t: ncp must be finite");
    }
    if (df < 1) {
        throw std::invalid_argument("MarginalLaw::two_sample_t: df must be >= 1");
    }
    return MarginalLaw(TwoSampleT{ncp, df});
}

double MarginalLaw::shift() const noexcept {
    return std::visit(overloaded{[](const ZTest& z) { return z.theta_scaled; },
                                 [](const TwoSampleT& t) { return t.ncp; }},
                      model_);
}

double MarginalLaw::cdf(double u) const {
    if (std::isnan(u)) {
        throw std::invalid_argument("MarginalLaw::cdf: NaN argument");
    }
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    return std::visit(
        overloaded{[u](const ZTest& z) {
                       return std_normal_cdf(std_normal_quantile(u) + z.theta_scaled);
                   },
                   [u](const TwoSampleT& t) {
                       if (t.ncp == 0.0) return u;
                       // p <= u  <=>  T >= F_t^{-1}(1 - u) = -F_t^{-1}(u)
                       const double x = -student_t_quantile(u, t.df);
                       return noncentral_t_sf(x, t.df, t.ncp);
                   }},
        model_);
}

double MarginalLaw::quantile(double v) const {
    if (!(v > 0.0 && v < 1.0)) {
        throw std::invalid_argument("MarginalLaw::quantile: v must lie in (0, 1)");
    }
    return std::visit(
        overloaded{[v](const ZTest& z) {
                       return std_normal_cdf(std_normal_quantile(v) - z.theta_scaled);
                   },
                   [v](const TwoSampleT& t) {
                       if (t.ncp == 0.0) return v;
                       // p = 1 - F_t(T) with T at its (1 - v)-quantile
                       const double x = noncentral_t_quantile(1.0 - v, t.df, t.ncp);
                       return student_t_cdf(-x, t.df);
                   }},
        model_);
}

std::string MarginalLaw::describe() const {
    std::ostringstream out;
    out.precision(17);
    std::visit(overloaded{[&](const ZTest& z) { out << "z(" << z.theta_scaled << ")"; },
                          [&](const TwoSampleT& t) {
                              out << "t(" << t.ncp << ";" << t.df << ")";
                          }},
               model_);
    return out.str();
}

RandomizationRule RandomizationRule::constant(double c) {
    require_probability(c, "RandomizationRule::constant: c");
    return RandomizationRule(Constant{c});
}

RandomizationRule RandomizationRule::uniform(double lo, double hi) {
    require_probability(lo, "RandomizationRule::uniform: lower bound");
    require_probability(hi, "RandomizationRule::uniform: upper bound");
    if (lo > hi) {
        throw std::invalid_argument("RandomizationRule::uniform: lower bound exceeds upper bound");
    }
    return RandomizationRule(Uniform{lo, hi});
}

double RandomizationRule::threshold(RngStream& rng) const {
    return std::visit(overloaded{[](const Constant& k) { return k.c; },
                                 [&rng](const Uniform& r) {
                                     const double u = uniform_sample(rng);
                                     if (r.lo == r.hi) return r.lo;
                                     return std::min(r.hi, r.lo + (r.hi - r.lo) * u);
                                 }},
                      rule_);
}

double lfc_pvalue_z(double t_stat, int n) {
    if (n < 1) {
        throw std::invalid_argument("lfc_pvalue_z: sample size must be >= 1");
    }
    if (!std::isfinite(t_stat)) {
        throw std::invalid_argument("lfc_pvalue_z: non-finite test statistic");
    }
    // 1 - Phi(x) evaluated as Phi(-x) to keep the upper tail accurate.
    return std_normal_cdf(-t_stat * std::sqrt(static_cast<double>(n)));
}

double lfc_pvalue_t(double t_stat, int df) {
    if (df < 1) {
        throw std::invalid_argument("lfc_pvalue_t: degrees of freedom must be >= 1");
    }
    if (std::isnan(t_stat)) {
        throw std::invalid_argument("lfc_pvalue_t: NaN test statistic");
    }
    return student_t_cdf(-t_stat, df);
}

double randomize(double p_lfc, double u, double threshold) {
    require_probability(p_lfc, "randomize: p_lfc");
    require_probability(u, "randomize: u");
    require_probability(threshold, "randomize: threshold");
    if (p_lfc >= threshold) {
        return u;
    }
    return p_lfc / threshold;
}

double randomize(double p_lfc, double u, const RandomizationRule& rule, RngStream* rng) {
    if (!rule.is_constant() && rng == nullptr) {
        throw std::invalid_argument("randomize: random threshold requires an RngStream");
    }
    if (rule.is_constant()) {
        return randomize(p_lfc, u, std::get<RandomizationRule::Constant>(rule.rule()).c);
    }
    return randomize(p_lfc, u, rule.threshold(*rng));
}

double randomized_cdf(double t, double c, const MarginalLaw& law) {
    require_probability(t, "randomized_cdf: t");
    require_probability(c, "randomized_cdf: c");
    return t * (1.0 - law.cdf(c)) + law.cdf(t * c);
}

double randomized_cdf(double t, const RandomizationRule& rule, const MarginalLaw& law) {
    if (rule.is_constant()) {
        return randomized_cdf(t, std::get<RandomizationRule::Constant>(rule.rule()).c, law);
    }
    const auto [lo, hi] = std::get<RandomizationRule::Uniform>(rule.rule());
    if (lo == hi) {
        return randomized_cdf(t, lo, law);
    }
    require_probability(t, "randomized_cdf: t");
    const double integral = detail::composite_gauss_legendre(
        [&](double r) { return randomized_cdf(t, r, law); }, lo, hi, 8);
    return integral / (hi - lo);
}

PValueVector randomize_vector(const PValueVector& p_lfc, const RandomizationRule& rule,
                              RngStream& rng) {
    const std::size_t m = p_lfc.size();
    std::vector<double> out(m);
    for (std::size_t j = 0; j < m; ++j) {
        out[j] = uniform_sample(rng);
    }
    for (std::size_t j = 0; j < m; ++j) {
        out[j] = randomize(p_lfc[j], out[j], rule.threshold(rng));
    }
    return PValueVector(std::move(out), PValueKind::randomized);
}

ValidityReport validity_diagnostic(const MarginalLaw& law, std::span<const double> t_grid,
                                   std::span<const double> c_grid) {
    if (t_grid.empty() || c_grid.empty()) {
        throw std::invalid_argument("validity_diagnostic: empty grid");
    }
    for (double t : t_grid) {
        if (!(t > 0.0 && t <= 1.0)) {
            throw std::invalid_argument("validity_diagnostic: t grid must lie in (0, 1]");
        }
    }
    for (double c : c_grid) {
        if (!(c > 0.0 && c <= 1.0)) {
            throw std::invalid_argument("validity_diagnostic: c grid must lie in (0, 1]");
        }
    }

    ValidityReport report;
    std::vector<double> cdf_c(c_grid.size());
    std::ranges::transform(c_grid, cdf_c.begin(), [&](double c) { return law.cdf(c); });
    for (double t : t_grid) {
        for (std::size_t k = 0; k < c_grid.size(); ++k) {
            const double excess = law.cdf(t * c_grid[k]) - t * cdf_c[k];
            report.scaled_cdf_bound.max_violation =
                std::max(report.scaled_cdf_bound.max_violation, excess);
        }
    }

    std::vector<double> ts(t_grid.begin(), t_grid.end());
    std::ranges::sort(ts);
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    std::vector<double> cdf_t(ts.size());
    std::ranges::transform(ts, cdf_t.begin(), [&](double t) { return law.cdf(t); });
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
        const double drop = cdf_t[i] / ts[i] - cdf_t[i + 1] / ts[i + 1];
        report.ratio_monotone.max_violation = std::max(report.ratio_monotone.max_violation, drop);
    }
    // Second difference normalized so a uniform grid gives F(t+h) - 2F(t) + F(t-h).
    for (std::size_t i = 1; i + 1 < ts.size(); ++i) {
        const double left = ts[i] - ts[i - 1];
        const double right = ts[i + 1] - ts[i];
        const double second =
            (cdf_t[i + 1] - cdf_t[i]) - (right / left) * (cdf_t[i] - cdf_t[i - 1]);
        report.convexity.max_violation = std::max(report.convexity.max_violation, -second);
    }
    return report;
}

StochasticOrderReport stochastic_order_diagnostic(const MarginalLaw& law, double c1, double c2,
                                                  std::span<const double> t_grid) {
    require_probability(c1, "stochastic_order_diagnostic: c1");
    require_probability(c2, "stochastic_order_diagnostic: c2");
    if (c1 > c2) {
        throw std::invalid_argument("stochastic_order_diagnostic: c1 must not exceed c2");
    }
    if (t_grid.empty()) {
        throw std::invalid_argument("stochastic_order_diagnostic: empty grid");
    }
    StochasticOrderReport report;
    for (double t : t_grid) {
        const double diff = randomized_cdf(t, c2, law) - randomized_cdf(t, c1, law);
        report.max_forward = std::max(report.max_forward, diff);
        report.max_reversed = std::max(report.max_reversed, -diff);
    }
    return report;
}

} // namespace rpv
