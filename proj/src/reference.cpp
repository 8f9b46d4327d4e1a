#include "rpv/reference.hpp"

namespace rpv::reference {

CurveTable h_curve(const PopulationSpec& spec, double lambda, std::span<const double> c_grid,
                   EstimatorVariant variant) {
    CurveTable table;
    table.quantity = CurveQuantity::h;
    table.lambda = lambda;
    table.spec_digest = spec_digest(spec.describe());
    const double md = static_cast<double>(spec.m());
    for (double c : c_grid) {
        double h = (1.0 - expected_ecdf(spec, lambda, c)) / (1.0 - lambda);
        if (variant == EstimatorVariant::storey_plus) h += 1.0 / (md * (1.0 - lambda));
        table.rows.push_back({c, h});
    }
    return table;
}

C0Selection select_c0(const PValueVector& p, double lambda, EstimatorVariant variant) {
    const CandidateSet set = candidate_set(p, lambda);
    C0Selection out{set.points.front(), -1.0, 0.0, set.points.size()};
    for (double c : set.points) {
        const double g = g_value(p, lambda, c);
        if (g > out.g_max) {
            out.g_max = g;
            out.c0 = c;
        }
    }
    out.conditional_expectation = conditional_expectation(p, lambda, out.c0, variant);
    return out;
}

std::vector<double> mc_estimates(const SimulationPlan& plan) {
    plan.validate();
    const PValueGenerator gen(plan.spec);
    const std::size_t grid = plan.c_grid.size();
    const EstimatorConfig cfg{plan.lambda, plan.variant};
    std::vector<double> estimates;
    estimates.reserve(plan.replicates * grid);
    std::vector<double> buffer(plan.spec.m());
    for (std::size_t r = 0; r < plan.replicates; ++r) {
        RngStream data_rng(plan.seed, r, 0);
        gen.generate(data_rng, buffer);
        const PValueVector p(buffer, PValueKind::lfc);
        for (std::size_t k = 0; k < grid; ++k) {
            RngStream u_rng(plan.seed, r, static_cast<std::uint32_t>(k + 1));
            const PValueVector q =
                randomize_vector(p, RandomizationRule::constant(plan.c_grid[k]), u_rng);
            estimates.push_back(schweder_spjotvoll(q, cfg));
        }
    }
    return estimates;
}

} // namespace rpv::reference
