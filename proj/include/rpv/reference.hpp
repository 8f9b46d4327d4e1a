#pragma once

#include <span>
#include <vector>

#include "rpv/pi0.hpp"
#include "rpv/simkit.hpp"
#include "rpv/tuning.hpp"

// Serial, straightforward versions of the parallel kernels. Used by the tests
// and the benchmark as the baseline the optimized paths must match bitwise.
namespace rpv::reference {

CurveTable h_curve(const PopulationSpec& spec, double lambda, std::span<const double> c_grid,
                   EstimatorVariant variant = EstimatorVariant::plain);

// Evaluates g_value at every candidate by a full pass over the data.
C0Selection select_c0(const PValueVector& p, double lambda,
                      EstimatorVariant variant = EstimatorVariant::plain);

// Same stream layout as rpv::mc_estimates, built from the public vector APIs.
std::vector<double> mc_estimates(const SimulationPlan& plan);

} // namespace rpv::reference
