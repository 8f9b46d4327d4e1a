#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rpv/pi0.hpp"

using namespace rpv;

namespace {

PopulationSpec z_spec(std::size_t nulls, double null_shift, std::size_t alts, double alt_shift) {
    std::vector<PopulationGroup> groups;
    if (nulls > 0) groups.push_back({nulls, MarginalLaw::z_test(null_shift)});
    if (alts > 0) groups.push_back({alts, MarginalLaw::z_test(alt_shift)});
    return PopulationSpec(std::move(groups));
}

const PopulationSpec& fig3_spec() {
    static const PopulationSpec spec = z_spec(700, -1.0, 300, 2.5);
    return spec;
}

// h computed from scratch with Boost's normal distribution.
double h_oracle(double null_shift, double alt_shift, double pi0, double lambda, double c) {
    boost::math::normal_distribution<double> nd;
    auto cdf = [&](double shift, double u) {
        if (u <= 0.0) return 0.0;
        if (u >= 1.0) return 1.0;
        return boost::math::cdf(nd, boost::math::quantile(nd, u) + shift);
    };
    auto ef = [&](double shift) { return lambda * (1.0 - cdf(shift, c)) + cdf(shift, c * lambda); };
    const double e = pi0 * ef(null_shift) + (1.0 - pi0) * ef(alt_shift);
    return (1.0 - e) / (1.0 - lambda);
}

} // namespace

TEST(Ecdf, Counts) {
    const PValueVector p({0.1, 0.5, 0.9}, PValueKind::external);
    EXPECT_EQ(ecdf(p, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(ecdf(p, 0.5), 2.0 / 3.0);
    EXPECT_EQ(ecdf(p, 0.0), 0.0);
    EXPECT_THROW(ecdf(std::span<const double>{}, 0.5), std::invalid_argument);
}

TEST(SchwederSpjotvoll, Examples) {
    const EstimatorConfig cfg{0.5, EstimatorVariant::plain};
    // Empty ecdf at lambda gives 1 / (1 - lambda).
    EXPECT_EQ(schweder_spjotvoll(PValueVector({0.6, 0.7, 0.9}, PValueKind::external), cfg), 2.0);
    EXPECT_DOUBLE_EQ(schweder_spjotvoll(PValueVector({0.6, 0.7, 0.9}, PValueKind::external), {0.55}), 1.0 / 0.45);
    EXPECT_EQ(schweder_spjotvoll(PValueVector({0.1, 0.2, 0.5}, PValueKind::external), cfg), 0.0);
    EXPECT_EQ(schweder_spjotvoll(PValueVector({0.1, 0.2, 0.6, 0.8}, PValueKind::external), cfg), 1.0);
    // No clipping: a sample with few small p-values can exceed one under storey-plus.
    const EstimatorConfig plus{0.5, EstimatorVariant::storey_plus};
    EXPECT_GT(schweder_spjotvoll(PValueVector({0.6, 0.7, 0.9}, PValueKind::external), plus), 1.0);
    EXPECT_THROW((EstimatorConfig{1.0, EstimatorVariant::plain}.validate()), std::invalid_argument);
    EXPECT_THROW((EstimatorConfig{0.0, EstimatorVariant::plain}.validate()), std::invalid_argument);
}

TEST(SchwederSpjotvoll, DirectRecount) {
    const std::vector<std::vector<double>> cases{
        {0.01, 0.49, 0.5}, {0.25, 0.75, 1.0}, {0.0, 0.333, 0.999}, {0.2, 0.2, 0.2}};
    for (double lambda : {0.25, 0.5, 0.8}) {
        for (const auto& v : cases) {
            int below = 0;
            for (double x : v) below += x <= lambda ? 1 : 0;
            const double direct = (1.0 - below / 3.0) / (1.0 - lambda);
            EXPECT_DOUBLE_EQ(schweder_spjotvoll(PValueVector(v, PValueKind::external), {lambda}), direct);
        }
    }
}

TEST(SchwederSpjotvoll, StoreyPlusOffsetIsExact) {
    const PValueVector p({0.02, 0.3, 0.41, 0.66, 0.9}, PValueKind::external);
    for (double lambda : {0.2, 0.5, 0.75}) {
        const double plain = schweder_spjotvoll(p, {lambda, EstimatorVariant::plain});
        const double plus = schweder_spjotvoll(p, {lambda, EstimatorVariant::storey_plus});
        EXPECT_NEAR(plus - plain, 1.0 / (5.0 * (1.0 - lambda)), 1e-15);
    }
}

TEST(EstimatorVariant, Names) {
    EXPECT_EQ(to_string(EstimatorVariant::storey_plus), "storey-plus");
    EXPECT_EQ(parse_estimator_variant("plain"), EstimatorVariant::plain);
    EXPECT_EQ(parse_estimator_variant("storey-plus"), EstimatorVariant::storey_plus);
    EXPECT_THROW(parse_estimator_variant("bogus"), std::invalid_argument);
}

TEST(PopulationSpec, Basics) {
    const auto& spec = fig3_spec();
    EXPECT_EQ(spec.m(), 1000u);
    EXPECT_DOUBLE_EQ(spec.pi0(), 0.7);
    EXPECT_EQ(spec.describe(), "700xz(-1);300xz(2.5)");
    EXPECT_EQ(spec_digest(spec.describe()).size(), 16u);
    EXPECT_EQ(spec_digest("a"), spec_digest("a"));
    EXPECT_NE(spec_digest("a"), spec_digest("b"));
    EXPECT_EQ(spec_digest(""), "cbf29ce484222325");  // FNV-1a offset basis
    EXPECT_THROW(PopulationSpec({{1, MarginalLaw::z_test(0.0)}}), std::invalid_argument);
    EXPECT_THROW(PopulationSpec({{0, MarginalLaw::z_test(0.0)}, {5, MarginalLaw::z_test(1.0)}}),
                 std::invalid_argument);
}

TEST(ExpectedEcdf, Boundaries) {
    const auto& spec = fig3_spec();
    for (double lambda : {0.25, 0.5, 0.75}) {
        EXPECT_NEAR(expected_ecdf(spec, lambda, 0.0), lambda, 1e-15);
        const double lfc = (700 * MarginalLaw::z_test(-1.0).cdf(lambda) +
                            300 * MarginalLaw::z_test(2.5).cdf(lambda)) / 1000.0;
        EXPECT_NEAR(expected_ecdf(spec, lambda, 1.0), lfc, 1e-15);
    }
    EXPECT_THROW(expected_ecdf(spec, 0.5, 1.2), std::invalid_argument);
    EXPECT_THROW(expected_ecdf(spec, 1.0, 0.5), std::invalid_argument);
}

TEST(HCurve, MatchesIndependentOracle) {
    const auto grid = make_grid(0.0, 0.01, 1.0);
    const auto table = h_curve(fig3_spec(), 0.5, grid);
    ASSERT_EQ(table.rows.size(), 101u);
    for (const auto& row : table.rows) {
        EXPECT_NEAR(row.value, h_oracle(-1.0, 2.5, 0.7, 0.5, row.key), 1e-13) << row.key;
    }
    // The minimum of the oracle curve sits next to the reported value.
    const double at_cstar = h_oracle(-1.0, 2.5, 0.7, 0.5, 0.3276);
    EXPECT_NEAR(at_cstar, 0.7508, 1e-4);
    EXPECT_NEAR((1.0 - expected_ecdf(fig3_spec(), 0.5, 0.3276)) / 0.5, at_cstar, 1e-13);
}

TEST(HCurve, EqualsOneAtZero) {
    const std::vector<PopulationSpec> specs{fig3_spec(), z_spec(700, 0.0, 300, 2.5),
                                            z_spec(50, -3.0, 950, 0.5), z_spec(10, 0.0, 0, 0.0)};
    for (const auto& spec : specs) {
        for (double lambda : {0.25, 0.5, 0.75}) {
            const double grid[] = {0.0};
            EXPECT_NEAR(h_curve(spec, lambda, grid).rows[0].value, 1.0, 1e-12);
        }
    }
}

TEST(HCurve, FlatForAllLfcNulls) {
    const auto grid = make_grid(0.0, 0.05, 1.0);
    for (const auto& row : h_curve(z_spec(1000, 0.0, 0, 0.0), 0.5, grid).rows) {
        EXPECT_NEAR(row.value, 1.0, 1e-12);
    }
}

TEST(HCurve, NonNegativeBiasForValidNulls) {
    const auto grid = make_grid(0.0, 0.01, 1.0);
    for (double null_shift : {-2.0, -1.0, -0.3, 0.0}) {
        for (double alt_shift : {0.5, 2.5, 4.0}) {
            const auto spec = z_spec(600, null_shift, 400, alt_shift);
            for (const auto& row : h_curve(spec, 0.5, grid).rows) {
                EXPECT_GE(row.value, spec.pi0() - 1e-9);
            }
        }
    }
}

TEST(HCurve, StoreyPlusShiftsByConstant) {
    const auto grid = make_grid(0.0, 0.05, 1.0);
    const auto plain = h_curve(fig3_spec(), 0.5, grid);
    const auto plus = h_curve(fig3_spec(), 0.5, grid, EstimatorVariant::storey_plus);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        EXPECT_NEAR(plus.rows[i].value - plain.rows[i].value, 1.0 / (1000 * 0.5), 1e-15);
    }
    const auto a = cstar_search(fig3_spec(), 0.5);
    const auto b = cstar_search(fig3_spec(), 0.5, 1e-3, EstimatorVariant::storey_plus);
    EXPECT_EQ(a.c_star, b.c_star);
}

TEST(HCurve, RejectsBadGrid) {
    EXPECT_THROW(h_curve(fig3_spec(), 0.5, std::vector<double>{0.5, 0.2}), std::invalid_argument);
    EXPECT_THROW(h_curve(fig3_spec(), 0.5, std::vector<double>{0.5, 1.5}), std::invalid_argument);
    EXPECT_THROW(h_curve(fig3_spec(), 0.5, std::vector<double>{}), std::invalid_argument);
}

TEST(CStar, Fig3Spec) {
    const auto r = cstar_search(fig3_spec(), 0.5);
    EXPECT_NEAR(r.c_star, 0.3276, 0.005);
    EXPECT_NEAR(r.h_min, 0.7508, 0.001);
    // Grid-free check: no grid point of a 1e-4 sweep goes below the refined minimum.
    const auto fine = h_curve(fig3_spec(), 0.5, make_grid(0.0, 1e-4, 1.0));
    for (const auto& row : fine.rows) EXPECT_GE(row.value, r.h_min - 1e-12);
}

TEST(CStar, LfcNullsGiveOne) {
    EXPECT_EQ(cstar_search(z_spec(700, 0.0, 300, 2.5), 0.5).c_star, 1.0);
}

TEST(CStar, FlatCurveTiesToSmallest) {
    const auto r = cstar_search(z_spec(1000, 0.0, 0, 0.0), 0.5);
    EXPECT_EQ(r.c_star, 0.0);
    EXPECT_NEAR(r.h_min, 1.0, 1e-12);
    EXPECT_THROW(cstar_search(fig3_spec(), 0.5, 0.01), std::invalid_argument);
}

TEST(MakeGrid, Endpoints) {
    const auto g = make_grid(0.0, 0.05, 1.0);
    ASSERT_EQ(g.size(), 21u);
    EXPECT_EQ(g.front(), 0.0);
    EXPECT_EQ(g.back(), 1.0);
    EXPECT_EQ(g[7], 0.35);
}

TEST(CurveTable, CsvLayout) {
    const auto table = h_curve(z_spec(10, 0.0, 0, 0.0), 0.5, std::vector<double>{0.0, 0.5});
    std::ostringstream out;
    write_csv(out, table);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "# quantity=h lambda=0.5 spec=" + spec_digest("10xz(0)"));
    std::getline(in, line);
    EXPECT_EQ(line, "c,value");
    std::getline(in, line);
    EXPECT_EQ(line, "0,1");
    std::getline(in, line);
    EXPECT_EQ(line, "0.5,1");
}
