#include "rpv/simkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace rpv {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kTinyProbability = 1e-300;

// Phi^{-1}(exp(-y)) without losing the upper tail when exp(-y) is near 1.
double normal_score_of_exp_neg(double y) {
    if (y < std::log(2.0)) {
        const double upper = std::max(-std::expm1(-y), kTinyProbability);
        return -std_normal_quantile(upper);
    }
    return std_normal_quantile(std::max(std::exp(-y), kTinyProbability));
}

// y_j = (E_j / S)^(1/nu); the copula uniforms are exp(-y_j).
void gumbel_exponents(double nu, RngStream& rng, std::span<double> y) {
    if (!(nu >= 1.0) || !std::isfinite(nu)) {
        throw std::invalid_argument("gumbel copula parameter nu must be a finite value >= 1");
    }
    const double alpha = 1.0 / nu;
    const double frailty = positive_stable_sample(alpha, rng);
    for (double& v : y) {
        v = std::pow(exponential_sample(rng) / frailty, alpha);
    }
}

// Monotone piecewise cubic Hermite interpolant (Fritsch-Carlson).
class MonotoneCubic {
public:
    MonotoneCubic() = default;
    MonotoneCubic(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t n = x_.size();
        if (n < 2) {
            throw std::invalid_argument("MonotoneCubic: need at least 2 knots");
        }
        std::vector<double> secant(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            secant[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
        }
        slope_.assign(n, 0.0);
        slope_[0] = secant[0];
        slope_[n - 1] = secant[n - 2];
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (secant[i - 1] * secant[i] > 0.0) {
                const double w1 = 2.0 * (x_[i + 1] - x_[i]) + (x_[i] - x_[i - 1]);
                const double w2 = (x_[i + 1] - x_[i]) + 2.0 * (x_[i] - x_[i - 1]);
                slope_[i] = (w1 + w2) / (w1 / secant[i - 1] + w2 / secant[i]);
            }
        }
    }

    bool covers(double x) const noexcept { return !x_.empty() && x >= x_.front() && x <= x_.back(); }

    double operator()(double x) const {
        const auto it = std::upper_bound(x_.begin(), x_.end(), x);
        std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
        i = std::min(i, x_.size() - 2);
        const double h = x_[i + 1] - x_[i];
        const double t = (x - x_[i]) / h;
        const double t2 = t * t;
        const double t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * y_[i] + (t3 - 2 * t2 + t) * h * slope_[i] +
               (-2 * t3 + 3 * t2) * y_[i + 1] + (t3 - t2) * h * slope_[i + 1];
    }

private:
    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> slope_;
};

// x(zeta) with G(x) = Phi(zeta), G the non-central t cdf.
MonotoneCubic tabulate_noncentral_t_quantile(int df, double ncp) {
    constexpr int knots = 1201;
    constexpr double z_range = 8.0;
    std::vector<double> zeta;
    std::vector<double> x;
    zeta.reserve(knots);
    x.reserve(knots);
    for (int k = 0; k < knots; ++k) {
        const double z = -z_range + 2.0 * z_range * k / (knots - 1);
        const double xk = student_t_quantile(std_normal_cdf(z), df) + ncp;
        const double lower = noncentral_t_cdf(xk, df, ncp);
        double score;
        if (lower < 0.5) {
            if (!(lower > 0.0)) continue;
            score = std_normal_quantile(lower);
        } else {
            const double upper = noncentral_t_sf(xk, df, ncp);
            if (!(upper > 0.0)) continue;
            score = -std_normal_quantile(upper);
        }
        if (!zeta.empty() && !(score > zeta.back() && xk > x.back())) continue;
        zeta.push_back(score);
        x.push_back(xk);
    }
    return MonotoneCubic(std::move(zeta), std::move(x));
}

} // namespace

ModelSpec::ModelSpec(Model model, std::vector<HypothesisGroup> groups, Dependence dependence)
    : model_(model), groups_(std::move(groups)), dependence_(dependence) {
    std::visit(overloaded{[](const ZTestsModel& z) {
                              if (z.n < 1) throw std::invalid_argument("z model: n must be >= 1");
                          },
                          [](const TwoSampleModel& t) {
                              if (t.n1 < 1 || t.n2 < 1 || t.n1 + t.n2 < 3) {
                                  throw std::invalid_argument(
                                      "two-sample model: need n1, n2 >= 1 and n1 + n2 >= 3");
                              }
                              if (!(t.sigma > 0.0) || !std::isfinite(t.sigma)) {
                                  throw std::invalid_argument("two-sample model: sigma must be > 0");
                              }
                          }},
               model_);
    if (const auto* g = std::get_if<GumbelHougaard>(&dependence_)) {
        if (!(g->nu >= 1.0) || !std::isfinite(g->nu)) {
            throw std::invalid_argument("gumbel copula parameter nu must be a finite value >= 1");
        }
    }
    if (groups_.empty()) {
        throw std::invalid_argument("model spec: no hypothesis groups");
    }
    for (const auto& g : groups_) {
        if (g.count < 1) throw std::invalid_argument("model spec: group counts must be >= 1");
        if (!std::isfinite(g.theta)) throw std::invalid_argument("model spec: theta must be finite");
        m_ += g.count;
    }
    if (m_ < 2) {
        throw std::invalid_argument("model spec: need m >= 2 hypotheses");
    }
}

double ModelSpec::pi0() const noexcept {
    std::size_t nulls = 0;
    for (const auto& g : groups_) {
        if (g.theta <= 0.0) nulls += g.count;
    }
    return static_cast<double>(nulls) / static_cast<double>(m_);
}

MarginalLaw ModelSpec::law(const HypothesisGroup& group) const {
    return std::visit(
        overloaded{[&](const ZTestsModel& z) {
                       return MarginalLaw::z_test(group.theta * std::sqrt(static_cast<double>(z.n)));
                   },
                   [&](const TwoSampleModel& t) {
                       const double n1 = t.n1;
                       const double n2 = t.n2;
                       const double ncp = std::sqrt(n1 * n2 / (n1 + n2)) * group.theta / t.sigma;
                       return MarginalLaw::two_sample_t(ncp, t.n1 + t.n2 - 2);
                   }},
        model_);
}

PopulationSpec ModelSpec::population() const {
    std::vector<PopulationGroup> out;
    out.reserve(groups_.size());
    for (const auto& g : groups_) {
        out.push_back({g.count, law(g)});
    }
    return PopulationSpec(std::move(out));
}

std::string ModelSpec::describe() const {
    std::ostringstream out;
    out.precision(17);
    std::visit(overloaded{[&](const ZTestsModel& z) { out << "z(n=" << z.n << ")"; },
                          [&](const TwoSampleModel& t) {
                              out << "two-sample(n1=" << t.n1 << ",n2=" << t.n2
                                  << ",sigma=" << t.sigma << ")";
                          }},
               model_);
    for (const auto& g : groups_) {
        out << ';' << g.count << 'x' << g.theta;
    }
    std::visit(overloaded{[&](const Independent&) { out << ";independent"; },
                          [&](const GumbelHougaard& g) { out << ";gumbel(" << g.nu << ")"; }},
               dependence_);
    return out.str();
}

std::vector<double> gumbel_uniforms(std::size_t m, double nu, RngStream& rng) {
    std::vector<double> v(m);
    gumbel_exponents(nu, rng, v);
    for (double& x : v) x = std::exp(-x);
    return v;
}

struct PValueGenerator::Impl {
    ModelSpec spec;
    std::vector<MarginalLaw> laws;
    std::vector<double> shifts;
    // Only filled for two-sample groups with non-zero ncp under dependence.
    std::vector<MonotoneCubic> quantile_tables;
};

PValueGenerator::PValueGenerator(const ModelSpec& spec) : impl_(std::make_unique<Impl>(Impl{spec, {}, {}, {}})) {
    const bool dependent = std::holds_alternative<GumbelHougaard>(spec.dependence());
    const bool two_sample = std::holds_alternative<TwoSampleModel>(spec.model());
    for (const auto& g : spec.groups()) {
        impl_->laws.push_back(spec.law(g));
        impl_->shifts.push_back(impl_->laws.back().shift());
        if (dependent && two_sample && impl_->shifts.back() != 0.0) {
            const auto& t = std::get<MarginalLaw::TwoSampleT>(impl_->laws.back().model());
            impl_->quantile_tables.push_back(tabulate_noncentral_t_quantile(t.df, t.ncp));
        } else {
            impl_->quantile_tables.emplace_back();
        }
    }
}

PValueGenerator::~PValueGenerator() = default;
PValueGenerator::PValueGenerator(PValueGenerator&&) noexcept = default;
PValueGenerator& PValueGenerator::operator=(PValueGenerator&&) noexcept = default;

const ModelSpec& PValueGenerator::spec() const noexcept { return impl_->spec; }

double PValueGenerator::transform(std::size_t group, double z) const {
    const MarginalLaw& law = impl_->laws.at(group);
    return std::visit(
        overloaded{[&](const MarginalLaw::ZTest& zt) { return std_normal_cdf(z - zt.theta_scaled); },
                   [&](const MarginalLaw::TwoSampleT& t) {
                       if (t.ncp == 0.0) return std_normal_cdf(z);
                       // T sits at its Phi(-z) quantile.
                       const MonotoneCubic& table = impl_->quantile_tables[group];
                       double x;
                       if (table.covers(-z)) {
                           x = table(-z);
                       } else {
                           const double v = std_normal_cdf(-z);
                           if (!(v > 0.0)) return 1.0;
                           if (!(v < 1.0)) return 0.0;
                           x = noncentral_t_quantile(v, t.df, t.ncp);
                       }
                       return student_t_cdf(-x, t.df);
                   }},
        law.model());
}

void PValueGenerator::generate(RngStream& rng, std::span<double> out) const {
    const ModelSpec& spec = impl_->spec;
    if (out.size() != spec.m()) {
        throw std::invalid_argument("PValueGenerator::generate: output size must equal m");
    }
    if (const auto* gumbel = std::get_if<GumbelHougaard>(&spec.dependence())) {
        gumbel_exponents(gumbel->nu, rng, out);
        std::size_t j = 0;
        for (std::size_t gi = 0; gi < spec.groups().size(); ++gi) {
            for (std::size_t k = 0; k < spec.groups()[gi].count; ++k, ++j) {
                out[j] = transform(gi, normal_score_of_exp_neg(out[j]));
            }
        }
        return;
    }

    std::size_t j = 0;
    std::visit(
        overloaded{[&](const ZTestsModel&) {
                       for (std::size_t gi = 0; gi < spec.groups().size(); ++gi) {
                           const double shift = impl_->shifts[gi];
                           for (std::size_t k = 0; k < spec.groups()[gi].count; ++k, ++j) {
                               // sqrt(n) T = theta sqrt(n) + Z; p = 1 - Phi(sqrt(n) T)
                               out[j] = std_normal_cdf(-(shift + normal_sample(rng)));
                           }
                       }
                   },
                   [&](const TwoSampleModel& t) {
                       const int df = t.n1 + t.n2 - 2;
                       const double scale = std::sqrt(static_cast<double>(t.n1) * t.n2 / (t.n1 + t.n2));
                       for (const auto& g : spec.groups()) {
                           for (std::size_t k = 0; k < g.count; ++k, ++j) {
                               double sum_x = 0.0, sum_xx = 0.0;
                               for (int i = 0; i < t.n1; ++i) {
                                   const double v = g.theta + t.sigma * normal_sample(rng);
                                   sum_x += v;
                                   sum_xx += v * v;
                               }
                               double sum_y = 0.0, sum_yy = 0.0;
                               for (int i = 0; i < t.n2; ++i) {
                                   const double v = t.sigma * normal_sample(rng);
                                   sum_y += v;
                                   sum_yy += v * v;
                               }
                               const double mean_x = sum_x / t.n1;
                               const double mean_y = sum_y / t.n2;
                               const double ss = (sum_xx - t.n1 * mean_x * mean_x) +
                                                 (sum_yy - t.n2 * mean_y * mean_y);
                               const double pooled_sd = std::sqrt(std::max(ss, 0.0) / df);
                               const double stat = scale * (mean_x - mean_y) / pooled_sd;
                               out[j] = lfc_pvalue_t(stat, df);
                           }
                       }
                   }},
        spec.model());
}

PValueVector gen_lfc_pvalues(const ModelSpec& spec, RngStream& rng) {
    PValueGenerator gen(spec);
    std::vector<double> out(spec.m());
    gen.generate(rng, out);
    return PValueVector(std::move(out), PValueKind::lfc);
}

void SimulationPlan::validate() const {
    EstimatorConfig{lambda, variant}.validate();
    if (replicates < 1) {
        throw std::invalid_argument("simulation plan: replicates must be >= 1");
    }
    if (c_grid.empty()) {
        throw std::invalid_argument("simulation plan: empty c grid");
    }
    for (std::size_t i = 0; i < c_grid.size(); ++i) {
        if (!(c_grid[i] >= 0.0 && c_grid[i] <= 1.0)) {
            throw std::invalid_argument("simulation plan: c grid values must lie in [0, 1]");
        }
        if (i > 0 && !(c_grid[i] > c_grid[i - 1])) {
            throw std::invalid_argument("simulation plan: c grid must be strictly increasing");
        }
    }
    if (c_grid.size() >= std::numeric_limits<std::uint32_t>::max()) {
        throw std::invalid_argument("simulation plan: c grid too large");
    }
}

std::vector<double> mc_estimates(const SimulationPlan& plan) {
    plan.validate();
    const PValueGenerator gen(plan.spec);
    const std::size_t m = plan.spec.m();
    const std::size_t grid = plan.c_grid.size();
    const EstimatorConfig cfg{plan.lambda, plan.variant};
    std::vector<double> estimates(plan.replicates * grid);
    const auto reps = static_cast<std::ptrdiff_t>(plan.replicates);

#pragma omp parallel
    {
        std::vector<double> p(m);
#pragma omp for schedule(dynamic, 16)
        for (std::ptrdiff_t r = 0; r < reps; ++r) {
            const auto rep = static_cast<std::uint64_t>(r);
            RngStream data_rng(plan.seed, rep, 0);
            gen.generate(data_rng, p);
            for (std::size_t k = 0; k < grid; ++k) {
                const double c = plan.c_grid[k];
                RngStream u_rng(plan.seed, rep, static_cast<std::uint32_t>(k + 1));
                std::size_t hits = 0;
                for (std::size_t j = 0; j < m; ++j) {
                    hits += randomize(p[j], uniform_sample(u_rng), c) <= plan.lambda;
                }
                estimates[rep * grid + k] = schweder_spjotvoll_from_count(hits, m, cfg);
            }
        }
    }
    return estimates;
}

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 8) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

McSummary summarize_estimates(const SimulationPlan& plan, std::span<const double> estimates) {
    const std::size_t grid = plan.c_grid.size();
    const std::size_t reps = plan.replicates;
    if (estimates.size() != grid * reps) {
        throw std::invalid_argument("summarize_estimates: size mismatch");
    }
    McSummary summary;
    summary.replicates = reps;
    summary.seed = plan.seed;
    summary.lambda = plan.lambda;
    summary.pi0 = plan.spec.pi0();
    summary.spec_digest = spec_digest(plan.spec.describe());

    const double n = static_cast<double>(reps);
    std::vector<double> column(reps);
    std::vector<double> work(reps);
    for (std::size_t k = 0; k < grid; ++k) {
        for (std::size_t r = 0; r < reps; ++r) column[r] = estimates[r * grid + k];
        McPoint point{};
        point.c = plan.c_grid[k];
        point.mean = pairwise_sum(column) / n;

        for (std::size_t r = 0; r < reps; ++r) {
            const double d = column[r] - point.mean;
            work[r] = d * d;
        }
        point.variance = pairwise_sum(work) / n;
        for (std::size_t r = 0; r < reps; ++r) work[r] = (work[r] - point.variance) * (work[r] - point.variance);
        const double var_of_sq_dev = pairwise_sum(work) / n;

        for (std::size_t r = 0; r < reps; ++r) {
            const double d = column[r] - summary.pi0;
            work[r] = d * d;
        }
        point.mse = pairwise_sum(work) / n;
        for (std::size_t r = 0; r < reps; ++r) work[r] = (work[r] - point.mse) * (work[r] - point.mse);
        const double var_of_sq_err = pairwise_sum(work) / n;

        point.bias = point.mean - summary.pi0;
        point.se_mean = reps > 1 ? std::sqrt(point.variance / (n - 1.0)) : 0.0;
        point.se_variance = std::sqrt(var_of_sq_dev / n);
        point.se_mse = std::sqrt(var_of_sq_err / n);
        summary.points.push_back(point);
    }
    return summary;
}

McSummary run_mc(const SimulationPlan& plan) {
    const std::vector<double> estimates = mc_estimates(plan);
    return summarize_estimates(plan, estimates);
}

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

void write_csv(std::ostream& out, const McSummary& summary) {
    out << "# seed=" << summary.seed << '\n';
    out << "# spec=" << summary.spec_digest << '\n';
    out << "# replicates=" << summary.replicates << " lambda=" << fmt17(summary.lambda)
        << " pi0=" << fmt17(summary.pi0) << '\n';
    out << "c,mean,variance,mse,bias,se_mean\n";
    for (const auto& p : summary.points) {
        out << fmt17(p.c) << ',' << fmt17(p.mean) << ',' << fmt17(p.variance) << ','
            << fmt17(p.mse) << ',' << fmt17(p.bias) << ',' << fmt17(p.se_mean) << '\n';
    }
}

std::vector<CurveTable> cdf_curves(const MarginalLaw& law, std::span<const double> c_list,
                                   std::span<const double> t_grid) {
    if (c_list.empty() || t_grid.empty()) {
        throw std::invalid_argument("cdf_curves: empty c list or t grid");
    }
    std::vector<CurveTable> tables;
    tables.reserve(c_list.size());
    const std::string digest = spec_digest(law.describe());
    for (double c : c_list) {
        CurveTable table;
        table.quantity = CurveQuantity::cdf;
        table.spec_digest = digest;
        table.key_name = "t";
        table.fixed_c = c;
        table.rows.reserve(t_grid.size());
        for (double t : t_grid) {
            table.rows.push_back({t, randomized_cdf(t, c, law)});
        }
        tables.push_back(std::move(table));
    }
    return tables;
}

void write_cdf_csv(std::ostream& out, const MarginalLaw& law, std::span<const CurveTable> tables) {
    out << "# quantity=cdf law=" << law.describe() << " spec=" << spec_digest(law.describe()) << '\n';
    out << "c,t,value\n";
    for (const auto& table : tables) {
        const double c = table.fixed_c.value_or(std::numeric_limits<double>::quiet_NaN());
        for (const auto& row : table.rows) {
            out << fmt17(c) << ',' << fmt17(row.key) << ',' << fmt17(row.value) << '\n';
        }
    }
}

} // namespace rpv
