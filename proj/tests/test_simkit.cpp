#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rpv/simkit.hpp"

using namespace rpv;

namespace {

const double kRootN = std::sqrt(50.0);

ModelSpec fig_spec(std::size_t m, ModelSpec::Dependence dep = Independent{}) {
    const auto nulls = static_cast<std::size_t>(std::lround(0.7 * static_cast<double>(m)));
    return ModelSpec(ZTestsModel{50}, {{nulls, -1.0 / kRootN}, {m - nulls, 2.5 / kRootN}}, dep);
}

// Pools p-values of one group over several replicate vectors.
std::vector<double> pooled_group(const ModelSpec& spec, std::size_t first, std::size_t count,
                                 int reps, std::uint64_t seed) {
    const PValueGenerator gen(spec);
    std::vector<double> buf(spec.m()), out;
    for (int r = 0; r < reps; ++r) {
        RngStream rng(seed, static_cast<std::uint64_t>(r));
        gen.generate(rng, buf);
        out.insert(out.end(), buf.begin() + first, buf.begin() + first + count);
    }
    return out;
}

double kendall_tau_disjoint_pairs(const std::vector<std::pair<double, double>>& xy) {
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i + 1 < xy.size(); i += 2, ++n) {
        const double a = (xy[i].first - xy[i + 1].first) * (xy[i].second - xy[i + 1].second);
        s += a > 0 ? 1.0 : (a < 0 ? -1.0 : 0.0);
    }
    return s / static_cast<double>(n);
}

SimulationPlan plan_for(ModelSpec spec, std::size_t reps, std::uint64_t seed) {
    return SimulationPlan{std::move(spec), 0.5, make_grid(0.0, 0.05, 1.0), reps, seed,
                          EstimatorVariant::plain};
}

} // namespace

TEST(ModelSpec, Validation) {
    EXPECT_THROW(ModelSpec(ZTestsModel{0}, {{5, 0.0}}), std::invalid_argument);
    EXPECT_THROW(ModelSpec(TwoSampleModel{1, 1, 1.0}, {{5, 0.0}}), std::invalid_argument);
    EXPECT_THROW(ModelSpec(TwoSampleModel{5, 5, 0.0}, {{5, 0.0}}), std::invalid_argument);
    EXPECT_THROW(ModelSpec(ZTestsModel{5}, {{5, 0.0}}, GumbelHougaard{0.5}), std::invalid_argument);
    EXPECT_THROW(ModelSpec(ZTestsModel{5}, {{0, 0.0}, {3, 1.0}}), std::invalid_argument);
    EXPECT_THROW(ModelSpec(ZTestsModel{5}, {{1, 0.0}}), std::invalid_argument);
    EXPECT_THROW(ModelSpec(ZTestsModel{5}, {}), std::invalid_argument);
}

TEST(ModelSpec, LawsAndPi0) {
    const auto spec = fig_spec(1000);
    EXPECT_EQ(spec.m(), 1000u);
    EXPECT_DOUBLE_EQ(spec.pi0(), 0.7);
    EXPECT_NEAR(spec.law(spec.groups()[0]).shift(), -1.0, 1e-15);
    EXPECT_NEAR(spec.law(spec.groups()[1]).shift(), 2.5, 1e-15);

    const ModelSpec t(TwoSampleModel{10, 15, 2.0}, {{4, 0.0}, {6, 1.0}});
    const auto law = t.law(t.groups()[1]);
    const auto& tt = std::get<MarginalLaw::TwoSampleT>(law.model());
    EXPECT_NEAR(tt.ncp, std::sqrt(150.0 / 25.0) * 0.5, 1e-15);
    EXPECT_EQ(tt.df, 23);
    EXPECT_DOUBLE_EQ(t.pi0(), 0.4);
    EXPECT_EQ(t.population().m(), 10u);
}

TEST(ModelSpec, DescribeDistinguishesDependence) {
    EXPECT_NE(fig_spec(100).describe(), fig_spec(100, GumbelHougaard{2.0}).describe());
    EXPECT_EQ(fig_spec(100).describe(), fig_spec(100).describe());
}

TEST(GenLfc, ZNullIsUniform) {
    const ModelSpec spec(ZTestsModel{50}, {{1000, 0.0}});
    const auto xs = pooled_group(spec, 0, 1000, 100, 1);
    EXPECT_LE(oracle::ks_statistic(xs, [](double x) { return x; }), oracle::ks_critical_99(xs.size()));
}

TEST(GenLfc, ZAlternativeMatchesMarginalLaw) {
    const ModelSpec spec(ZTestsModel{50}, {{2, 0.0}, {998, 2.5 / kRootN}});
    const auto xs = pooled_group(spec, 2, 998, 1000, 2);
    const auto law = MarginalLaw::z_test(2.5);
    EXPECT_LE(oracle::ks_statistic(xs, [&](double u) { return law.cdf(u); }), oracle::dkw_band(xs.size()));
}

TEST(GenLfc, TwoSampleNullIsUniform) {
    const ModelSpec spec(TwoSampleModel{6, 9, 1.5}, {{1000, 0.0}});
    const auto xs = pooled_group(spec, 0, 1000, 100, 3);
    EXPECT_LE(oracle::ks_statistic(xs, [](double x) { return x; }), oracle::ks_critical_99(xs.size()));
}

TEST(GenLfc, TwoSampleStatisticMatchesNoncentralLaw) {
    for (double theta : {-0.8, 1.2}) {
        const ModelSpec spec(TwoSampleModel{6, 9, 1.5}, {{1000, theta}});
        const auto xs = pooled_group(spec, 0, 1000, 100, 4);
        const auto law = spec.law(spec.groups()[0]);
        EXPECT_LE(oracle::ks_statistic(xs, [&](double u) { return law.cdf(u); }),
                  oracle::dkw_band(xs.size()))
            << theta;
    }
}

TEST(GenLfc, DependentMarginalsArePreserved) {
    // Coordinates within one vector are dependent, so take one per group per replicate.
    const ModelSpec z(ZTestsModel{50}, {{2, -1.0 / kRootN}, {2, 2.5 / kRootN}}, GumbelHougaard{2.0});
    const ModelSpec t(TwoSampleModel{8, 8, 1.0}, {{2, -0.5}, {2, 1.0}}, GumbelHougaard{2.0});
    for (const ModelSpec* spec : {&z, &t}) {
        for (std::size_t g = 0; g < 2; ++g) {
            const auto xs = pooled_group(*spec, 2 * g, 1, 100'000, 6);
            const auto law = spec->law(spec->groups()[g]);
            EXPECT_LE(oracle::ks_statistic(xs, [&](double u) { return law.cdf(u); }),
                      oracle::dkw_band(xs.size()))
                << spec->describe() << ' ' << g;
        }
    }
}

TEST(GenLfc, TabulatedQuantileMatchesExactTransform) {
    const ModelSpec t(TwoSampleModel{8, 8, 1.0}, {{2, 1.0}}, GumbelHougaard{2.0});
    const PValueGenerator gen(t);
    const auto law = t.law(t.groups()[0]);
    for (double z = -7.9; z <= 7.9; z += 0.173) {
        // Copula coordinate z = Phi^{-1}(V), and p = Q(V) with Q the law's quantile.
        const double exact = law.quantile(std_normal_cdf(z));
        EXPECT_NEAR(gen.transform(0, z), exact, 1e-7 * std::max(exact, 1e-3)) << z;
    }
}

TEST(GenLfc, Reproducible) {
    const auto spec = fig_spec(200, GumbelHougaard{2.0});
    RngStream a(9, 1), b(9, 1);
    const auto pa = gen_lfc_pvalues(spec, a);
    const auto pb = gen_lfc_pvalues(spec, b);
    EXPECT_TRUE(std::ranges::equal(pa.values(), pb.values()));
    EXPECT_EQ(pa.kind(), PValueKind::lfc);
}

TEST(GumbelUniforms, IndependentAtNuOne) {
    RngStream rng(10, 0);
    std::vector<std::pair<double, double>> xy;
    std::vector<double> first;
    for (int i = 0; i < 200'000; ++i) {
        const auto v = gumbel_uniforms(2, 1.0, rng);
        xy.emplace_back(v[0], v[1]);
        first.push_back(v[0]);
    }
    const double tau = kendall_tau_disjoint_pairs(xy);
    EXPECT_NEAR(tau, 0.0, 3.0 / std::sqrt(100'000.0));
    first.resize(100'000);
    EXPECT_LE(oracle::ks_statistic(first, [](double x) { return x; }), oracle::ks_critical_99(first.size()));
}

TEST(GumbelUniforms, KendallTauAtNuTwo) {
    RngStream rng(11, 0);
    std::vector<std::pair<double, double>> xy;
    std::vector<double> first, second;
    for (int i = 0; i < 200'000; ++i) {
        const auto v = gumbel_uniforms(2, 2.0, rng);
        xy.emplace_back(v[0], v[1]);
        if (i < 100'000) first.push_back(v[0]), second.push_back(v[1]);
    }
    EXPECT_NEAR(kendall_tau_disjoint_pairs(xy), 1.0 - 1.0 / 2.0, 0.01);
    EXPECT_LE(oracle::ks_statistic(first, [](double x) { return x; }), oracle::ks_critical_99(first.size()));
    EXPECT_LE(oracle::ks_statistic(second, [](double x) { return x; }), oracle::ks_critical_99(second.size()));
    EXPECT_THROW(gumbel_uniforms(2, 0.9, rng), std::invalid_argument);
}

TEST(RunMc, MseDecompositionAndBoundaryMean) {
    const auto summary = run_mc(plan_for(fig_spec(100), 1000, 7));
    ASSERT_EQ(summary.points.size(), 21u);
    for (const auto& p : summary.points) {
        EXPECT_NEAR(p.mse, p.variance + p.bias * p.bias, 1e-10 * p.mse);
        EXPECT_NEAR(p.bias, p.mean - 0.7, 1e-15);
    }
    EXPECT_NEAR(summary.points[0].mean, 1.0, 3.0 * summary.points[0].se_mean);
    EXPECT_EQ(summary.replicates, 1000u);
    EXPECT_EQ(summary.seed, 7u);
}

TEST(RunMc, ReproducibleBitwise) {
    const auto plan = plan_for(fig_spec(100, GumbelHougaard{2.0}), 300, 5);
    const auto a = mc_estimates(plan);
    const auto b = mc_estimates(plan);
    EXPECT_EQ(a, b);
    const auto other = mc_estimates(plan_for(fig_spec(100, GumbelHougaard{2.0}), 300, 6));
    EXPECT_NE(a, other);
}

TEST(RunMc, MeanMatchesExactCurve) {
    const auto spec = fig_spec(200);
    const auto plan = plan_for(spec, 4000, 13);
    const auto summary = run_mc(plan);
    const auto exact = h_curve(spec.population(), 0.5, plan.c_grid);
    for (std::size_t k = 0; k < plan.c_grid.size(); ++k) {
        EXPECT_NEAR(summary.points[k].mean, exact.rows[k].value, 3.0 * summary.points[k].se_mean)
            << plan.c_grid[k];
    }
}

TEST(RunMc, TwoSampleMeanMatchesExactCurve) {
    const ModelSpec spec(TwoSampleModel{10, 10, 1.0}, {{140, -0.4}, {60, 1.2}});
    const auto plan = plan_for(spec, 3000, 17);
    const auto summary = run_mc(plan);
    const auto exact = h_curve(spec.population(), 0.5, plan.c_grid);
    for (std::size_t k = 0; k < plan.c_grid.size(); ++k) {
        EXPECT_NEAR(summary.points[k].mean, exact.rows[k].value, 3.0 * summary.points[k].se_mean)
            << plan.c_grid[k];
    }
}

TEST(RunMc, CopulaLeavesMeanUnchangedAndInflatesVariance) {
    const auto ind = run_mc(plan_for(fig_spec(200), 4000, 21));
    const auto dep = run_mc(plan_for(fig_spec(200, GumbelHougaard{2.0}), 4000, 22));
    for (std::size_t k = 0; k < ind.points.size(); ++k) {
        const double joint = std::hypot(ind.points[k].se_mean, dep.points[k].se_mean);
        EXPECT_NEAR(ind.points[k].mean, dep.points[k].mean, 3.0 * joint) << ind.points[k].c;
    }
    const auto& i1 = ind.points.back();
    const auto& d1 = dep.points.back();
    EXPECT_GT(d1.variance - i1.variance, 3.0 * std::hypot(d1.se_variance, i1.se_variance));
    // Randomizing near the bias-optimal c lowers the variance under dependence.
    const auto& d_star = dep.points[7];
    EXPECT_EQ(d_star.c, 0.35);
    EXPECT_GT(d1.variance - d_star.variance, 3.0 * std::hypot(d1.se_variance, d_star.se_variance));
}

TEST(RunMc, PlanValidation) {
    auto plan = plan_for(fig_spec(100), 0, 1);
    EXPECT_THROW(run_mc(plan), std::invalid_argument);
    plan = plan_for(fig_spec(100), 10, 1);
    plan.c_grid = {0.5, 0.2};
    EXPECT_THROW(run_mc(plan), std::invalid_argument);
    plan.c_grid = {0.5};
    plan.lambda = 1.0;
    EXPECT_THROW(run_mc(plan), std::invalid_argument);
}

TEST(RunMc, CsvLayout) {
    const auto summary = run_mc(plan_for(fig_spec(20), 50, 3));
    std::ostringstream out;
    write_csv(out, summary);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "# seed=3");
    std::getline(in, line);
    EXPECT_EQ(line, "# spec=" + spec_digest(fig_spec(20).describe()));
    std::getline(in, line);
    EXPECT_EQ(line.rfind("# replicates=50 lambda=0.5", 0), 0u);
    std::getline(in, line);
    EXPECT_EQ(line, "c,mean,variance,mse,bias,se_mean");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 21);
}

TEST(PairwiseSum, MatchesCompensatedReference) {
    std::vector<double> v(100'001);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 / static_cast<double>(i + 1);
    long double ref = 0.0L;
    for (double x : v) ref += x;
    EXPECT_NEAR(pairwise_sum(v), static_cast<double>(ref), 1e-13);
    EXPECT_EQ(pairwise_sum(std::span<const double>{}), 0.0);
}

TEST(CdfCurves, BoundariesAndOrdering) {
    const std::vector<double> cs{0.0, 0.25, 0.5, 0.75, 1.0};
    std::vector<double> ts;
    for (int i = 0; i <= 200; ++i) ts.push_back(i / 200.0);
    for (double shift : {-1.0, 1.0}) {
        const auto law = MarginalLaw::z_test(shift);
        const auto tables = cdf_curves(law, cs, ts);
        ASSERT_EQ(tables.size(), cs.size());
        for (std::size_t i = 0; i < ts.size(); ++i) {
            EXPECT_NEAR(tables[0].rows[i].value, ts[i], 1e-15);
            EXPECT_NEAR(tables[4].rows[i].value, law.cdf(ts[i]), 1e-15);
            for (std::size_t k = 0; k + 1 < cs.size(); ++k) {
                const double lo = tables[k].rows[i].value, hi = tables[k + 1].rows[i].value;
                if (shift < 0) EXPECT_LE(hi, lo + 1e-12);
                else EXPECT_GE(hi, lo - 1e-12);
            }
        }
        EXPECT_EQ(tables[2].fixed_c.value(), 0.5);
        EXPECT_EQ(tables[2].key_name, "t");
        EXPECT_EQ(tables[2].quantity, CurveQuantity::cdf);
    }
}

TEST(CdfCurves, LongCsv) {
    const auto law = MarginalLaw::z_test(-1.0);
    const std::vector<double> cs{0.0, 1.0};
    const std::vector<double> ts{0.0, 0.5, 1.0};
    std::ostringstream out;
    write_cdf_csv(out, law, cdf_curves(law, cs, ts));
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line.rfind("# quantity=cdf law=z(-1)", 0), 0u);
    std::getline(in, line);
    EXPECT_EQ(line, "c,t,value");
    std::getline(in, line);
    EXPECT_EQ(line, "0,0,0");
    int rows = 1;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 6);
}
