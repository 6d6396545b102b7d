#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dpq/rng.hpp"

namespace dpq::gauss {

// The normal CDF in double precision is trustworthy to roughly 1e-15
// absolute, so delta targets below this floor are clamped (with a warning).
inline constexpr double kDeltaFloor = 1e-12;

// Relative width at which the sigma bisection stops.
inline constexpr double kSigmaTolerance = 1e-9;

// Feasibility floor for the epsilon search in translateVanilla.
inline constexpr double kEpsilonFloor = 1e-6;

// Standard normal CDF, evaluated through the complementary error function.
double normalCdf(double x);

// Exact delta of the Gaussian mechanism at (epsilon, sigma, sensitivity):
//   Phi(D/(2s) - e*s/D) - exp(e) * Phi(-D/(2s) - e*s/D).
// Strictly decreasing in sigma; clamped to [0, 1].
double deltaAt(double epsilon, double sigma, double sensitivity);

// The textbook calibration sensitivity * sqrt(2 ln(1.25/delta)) / epsilon.
// Valid as a DP bound only for epsilon <= 1; used here as a bracket seed and
// as the comparison bound in tests.
double classicalSigma(double epsilon, double delta, double sensitivity);

// Smallest sigma (to kSigmaTolerance, relative) with
// deltaAt(epsilon, sigma, sensitivity) <= delta. Returns the upper end of the
// final bracket so the condition always holds at the returned value.
double sigmaFor(double epsilon, double delta, double sensitivity);

// Inverse of deltaAt in epsilon at fixed sigma: smallest epsilon whose exact
// delta is <= delta. Used for privacy audits of already-materialized noise.
double epsilonAt(double sigma, double delta, double sensitivity);

// Minimal budget (within precision, never below the accuracy contract) whose
// calibrated noise variance is <= targetVariance. Searches (kEpsilonFloor,
// epsilonCap]; std::nullopt means even epsilonCap cannot meet the target and
// the caller must reject or relax.
std::optional<double> translateVanilla(double sensitivity, double targetVariance,
                                       double delta, double precision,
                                       double epsilonCap);

struct AnalystBudget {
  std::string analystId;
  double epsilon = 0.0;
};

// Correlated Gaussian release: one base draw at the smallest calibrated sigma,
// then chained increments so analyst j's vector is analyst j-1's plus
// N(0, sigma_j^2 - sigma_{j-1}^2) per coordinate. Each analyst's marginal
// noise is exactly N(0, sigma_j^2); any coalition learns no more than the
// best-budget release. Budgets are sorted by ascending sigma, which stays
// correct even if delta ever varies per call site.
std::map<std::string, std::vector<double>> additiveGM(
    const std::vector<double>& trueAnswer,
    const std::vector<AnalystBudget>& budgets, double delta,
    double sensitivity, Rng& rng);

}  // namespace dpq::gauss
