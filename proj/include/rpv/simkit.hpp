#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rpv/pi0.hpp"
#include "rpv/pvalues.hpp"

namespace rpv {

// X ~ N(theta, 1) per observation, n observations per hypothesis.
struct ZTestsModel {
    int n;
};

// X ~ N(theta, sigma^2) (n1 obs) vs Y ~ N(0, sigma^2) (n2 obs), pooled t test.
struct TwoSampleModel {
    int n1;
    int n2;
    double sigma;
};

struct Independent {};

struct GumbelHougaard {
    double nu;
};

struct HypothesisGroup {
    std::size_t count;
    // Raw effect: the mean (Z) or the mean difference (two-sample). Null iff theta <= 0.
    double theta;
};

class ModelSpec {
public:
    using Model = std::variant<ZTestsModel, TwoSampleModel>;
    using Dependence = std::variant<Independent, GumbelHougaard>;

    ModelSpec(Model model, std::vector<HypothesisGroup> groups, Dependence dependence = Independent{});

    const Model& model() const noexcept { return model_; }
    std::span<const HypothesisGroup> groups() const noexcept { return groups_; }
    const Dependence& dependence() const noexcept { return dependence_; }

    std::size_t m() const noexcept { return m_; }
    double pi0() const noexcept;
    // Exact marginal law of the LFC p-value for a group.
    MarginalLaw law(const HypothesisGroup& group) const;
    // Marginal description (ignores dependence).
    PopulationSpec population() const;
    std::string describe() const;

private:
    Model model_;
    std::vector<HypothesisGroup> groups_;
    Dependence dependence_;
    std::size_t m_ = 0;
};

// V_j = exp(-(E_j / S)^(1/nu)), S positive stable with index 1/nu, E_j iid Exp(1).
std::vector<double> gumbel_uniforms(std::size_t m, double nu, RngStream& rng);

// Precomputes per-group marginal transforms so repeated draws are cheap.
// Two-sample groups under dependence use a monotone cubic table of the
// non-central t quantile (exact root finding outside the tabulated range).
class PValueGenerator {
public:
    explicit PValueGenerator(const ModelSpec& spec);
    ~PValueGenerator();
    PValueGenerator(PValueGenerator&&) noexcept;
    PValueGenerator& operator=(PValueGenerator&&) noexcept;

    // Fills out (size m) with one LFC p-value vector.
    void generate(RngStream& rng, std::span<double> out) const;
    // p-value with the group's marginal law at copula coordinate
    // z = Phi^{-1}(V), for the given group index.
    double transform(std::size_t group, double z) const;

    const ModelSpec& spec() const noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

PValueVector gen_lfc_pvalues(const ModelSpec& spec, RngStream& rng);

struct SimulationPlan {
    ModelSpec spec;
    double lambda = 0.5;
    std::vector<double> c_grid;
    std::size_t replicates = 10000;
    std::uint64_t seed = 1;
    EstimatorVariant variant = EstimatorVariant::plain;

    void validate() const;
};

struct McPoint {
    double c;
    double mean;
    double variance;  // 1/R normalization, so mse = variance + bias^2
    double mse;
    double bias;
    double se_mean;
    double se_variance;
    double se_mse;
};

struct McSummary {
    std::vector<McPoint> points;
    std::size_t replicates = 0;
    std::uint64_t seed = 0;
    double lambda = 0.5;
    double pi0 = 0.0;
    std::string spec_digest;
};

// Replicate r draws its data from stream (seed, r, 0) and the uniforms for
// grid point k from (seed, r, k + 1). Output does not depend on thread count.
McSummary run_mc(const SimulationPlan& plan);

// Per-replicate estimates, row-major [replicate][grid point].
std::vector<double> mc_estimates(const SimulationPlan& plan);
McSummary summarize_estimates(const SimulationPlan& plan, std::span<const double> estimates);

// Writes seed/spec/replicates comment lines then "c,mean,variance,mse,bias,se_mean".
void write_csv(std::ostream& out, const McSummary& summary);

// One table per c, keyed by t, quantity cdf.
std::vector<CurveTable> cdf_curves(const MarginalLaw& law, std::span<const double> c_list,
                                   std::span<const double> t_grid);

// Long format "c,t,value" with a metadata comment line.
void write_cdf_csv(std::ostream& out, const MarginalLaw& law, std::span<const CurveTable> tables);

// Pairwise summation.
double pairwise_sum(std::span<const double> values);

} // namespace rpv
