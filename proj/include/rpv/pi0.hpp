#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rpv/pvalues.hpp"

namespace rpv {

enum class EstimatorVariant { plain, storey_plus };

std::string to_string(EstimatorVariant variant);
EstimatorVariant parse_estimator_variant(const std::string& name);

struct EstimatorConfig {
    double lambda = 0.5;
    EstimatorVariant variant = EstimatorVariant::plain;

    void validate() const;
};

// (1/m) #{j : p_j <= t}
double ecdf(std::span<const double> p, double t);
double ecdf(const PValueVector& p, double t);

// (1 - ecdf(lambda)) / (1 - lambda), plus 1/(m(1 - lambda)) for storey_plus. Not clipped.
double schweder_spjotvoll(const PValueVector& p, const EstimatorConfig& cfg);
// Same estimator from the count #{p_j <= lambda}.
double schweder_spjotvoll_from_count(std::size_t count_at_most_lambda, std::size_t m,
                                     const EstimatorConfig& cfg);

struct PopulationGroup {
    std::size_t count;
    MarginalLaw law;
};

// Hypotheses grouped by identical marginal law. A group is null when its
// law's shift is <= 0.
class PopulationSpec {
public:
    explicit PopulationSpec(std::vector<PopulationGroup> groups);

    std::span<const PopulationGroup> groups() const noexcept { return groups_; }
    std::size_t m() const noexcept { return m_; }
    double pi0() const noexcept;
    std::string describe() const;

private:
    std::vector<PopulationGroup> groups_;
    std::size_t m_ = 0;
};

// 64-bit FNV-1a of a canonical description, as 16 hex digits.
std::string spec_digest(const std::string& canonical);

// (1/m) sum_j [lambda P(p_j >= c) + P(p_j <= c lambda)]
double expected_ecdf(const PopulationSpec& spec, double lambda, double c);

enum class CurveQuantity { h, variance, mse, cdf };

std::string to_string(CurveQuantity quantity);

struct CurveRow {
    double key;
    double value;
};

struct CurveTable {
    CurveQuantity quantity = CurveQuantity::h;
    std::optional<double> lambda;
    std::string spec_digest;
    // Column name of the key; "c" for curves over the randomization constant.
    std::string key_name = "c";
    // For cdf tables keyed by t, the constant c the table was computed at.
    std::optional<double> fixed_c;
    std::vector<CurveRow> rows;
};

// Writes "# quantity=... [lambda=...] [c=...] spec=..." then "<key>,value" and rows.
void write_csv(std::ostream& out, const CurveTable& table);

// c -> E[pi0_hat(lambda, c)] on the grid (strictly increasing, within [0, 1]).
CurveTable h_curve(const PopulationSpec& spec, double lambda, std::span<const double> c_grid,
                   EstimatorVariant variant = EstimatorVariant::plain);

struct CStarResult {
    double c_star;
    double h_min;
};

// Grid search at the given resolution, then golden-section refinement around
// the best grid point. Values within kAnalyticTolerance of the minimum count as
// ties and resolve to the smallest c.
CStarResult cstar_search(const PopulationSpec& spec, double lambda, double resolution = 1e-3,
                         EstimatorVariant variant = EstimatorVariant::plain);

// Evenly spaced grid start, start + step, ..., stop (inclusive within rounding).
std::vector<double> make_grid(double start, double step, double stop);

} // namespace rpv
