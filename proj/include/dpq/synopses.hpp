#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "dpq/core.hpp"
#include "dpq/rng.hpp"

namespace dpq {

enum class SynopsisKind { global, local };

// One convex-combination component of a synopsis, kept so the variance
// bookkeeping stays auditable after repeated combines.
struct LineageRecord {
  double weight = 0.0;
  double sourceVariance = 0.0;
};

struct Synopsis {
  std::string viewId;
  SynopsisKind kind = SynopsisKind::global;
  std::string analystId;  // owner, for locals only
  std::vector<double> noisyCounts;
  double perBinVariance = 0.0;
  PrivacyBudget budget;  // cumulative for globals, released level for locals
  double sensitivity = 1.0;
  std::vector<LineageRecord> lineage;
};

struct AnswerResult {
  double value = 0.0;
  double variance = 0.0;
};

// Inverse-variance weight given to the fresh draw when merging it into an
// existing synopsis, and the variance of that merge.
double combineWeight(double oldVariance, double freshVariance);
double combinedVariance(double oldVariance, double freshVariance);

// Full-view Gaussian release at (epsilon, delta).
Synopsis buildGlobal(const HistogramView& view, double epsilon, double delta, Rng& rng);

// Draws a fresh release at freshEpsilon and merges it into `old` with the
// inverse-variance weight; the budget accumulates both coordinates.
Synopsis combineGlobal(const Synopsis& old, const HistogramView& view, double freshEpsilon,
                       double delta, Rng& rng);

// Analyst-facing synopsis at epsilon <= the global's level, produced by
// adding the variance shortfall on top of the global counts. Requesting a
// level whose variance is below the global's is a sequencing error here.
Synopsis deriveLocal(const Synopsis& global, const std::string& analystId, double epsilon,
                     double delta, Rng& rng);

// Dot product of the query against the noisy counts, with its exact
// variance under the synopsis bookkeeping.
AnswerResult answer(const Synopsis& synopsis, const LinearQuery& q);

nlohmann::json synopsisToJson(const Synopsis& synopsis);

}  // namespace dpq
