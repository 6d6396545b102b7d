#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "dpq/core.hpp"
#include "dpq/engine.hpp"
#include "dpq/rng.hpp"

namespace dpq {

struct NormalParams {
  double mean = 0.0;
  double stddev = 1.0;
};

enum class Scheduler { roundRobin, random };

std::string toString(Scheduler scheduler);
Scheduler schedulerFromString(const std::string& name);

struct RrqConfig {
  int queriesPerAnalyst = 500;
  // One weight per schema attribute; empty means 1/(rank+1), normalized.
  std::vector<double> attributeBias;
  // Per-attribute draw parameters; empty means mean (d-1)/2, spread d/4 for
  // starts and mean d/8, spread d/8 for offsets, with d the domain size.
  std::vector<NormalParams> rangeStart;
  std::vector<NormalParams> rangeOffset;
  Scheduler scheduler = Scheduler::roundRobin;
  std::uint64_t seed = 1;
  // Per-bin variance target, drawn log-uniformly; the query-level target
  // scales with the number of bins the range covers.
  double perBinAccuracyLow = 20.0;
  double perBinAccuracyHigh = 200.0;
};

// Rounds a normal draw to the nearest integer and clamps it into [lo, hi];
// `clamped` reports whether the rounded draw fell outside.
long clampedNormalIndex(Rng& rng, const NormalParams& params, long lo, long hi, bool& clamped);

// Range queries over single-attribute views named after their attribute,
// interleaved across analysts per the scheduler. Deterministic under seed.
std::vector<LinearQuery> generateRrq(const RrqConfig& config,
                                     const std::vector<AttributeSpec>& schema,
                                     const std::vector<Analyst>& analysts);

struct BfsConfig {
  std::vector<std::string> rootAttributes{"age"};
  int branchingFactor = 2;
  // A node whose noisy count lands strictly inside (low, high) stops; one
  // outside the band splits while its range is divisible.
  double thresholdLow = 0.0;
  double thresholdHigh = 900.0;
  double perNodeVariance = 8000.0;
};

struct BfsVisit {
  std::size_t lo = 0;
  std::size_t hi = 0;  // inclusive bin range
  bool answered = false;
  double noisyCount = 0.0;
  bool expanded = false;
  double cumulativeEpsilon = 0.0;
  std::string reason;  // rejection cause, empty when answered
};

struct BfsTrace {
  std::vector<BfsVisit> visits;
  bool completed = true;  // false when a rejection ended the walk early
};

std::string bfsViewId(const BfsConfig& config);

// Breadth-first decomposition of the view's bin range, one accuracy-mode
// range query per visited node. A rejection terminates the whole task.
BfsTrace runBfsTask(Engine& engine, const BfsConfig& config, const std::string& analystId);

struct FairnessScore {
  double dcfg = 0.0;
  double ndcfg = 0.0;
};

// dcfg = sum of answered / log2(1/privilege + 1); ndcfg divides by the total
// answered count and is 0 when nothing was answered.
FairnessScore computeNdcfg(const std::map<std::string, int>& answeredCounts,
                           const std::map<std::string, int>& privileges);

// |trueValue - noisyValue| / max(trueValue, floor); floor must be positive.
double computeRelativeError(double trueValue, double noisyValue, double floor);

// Census-shaped categorical dataset: age, workclass, education, marital,
// occupation, race, sex, hours. Category weights fall off as 1/(rank+1)^skew;
// age and hours follow clamped rounded normals.
Dataset syntheticAdultLike(std::size_t rows, std::uint64_t seed, double skew = 1.0);

struct RunReport {
  std::map<std::string, int> submitted;
  std::map<std::string, int> answered;
  std::map<std::string, int> rejected;
  std::map<std::string, double> cumulativeEpsilon;
  std::map<std::string, int> rejectionReasons;
  double dcfg = 0.0;
  double ndcfg = 0.0;
  std::vector<double> relativeErrors;  // answered queries, submission order
  double meanRelativeError = 0.0;
  double totalDelta = 0.0;
  double runtimeMs = 0.0;
  double meanQueryMs = 0.0;
  int clampEvents = 0;
};

nlohmann::json reportToJson(const RunReport& report);

// Feeds the queries through the engine in order, collecting counts, budgets,
// fairness, and error metrics. Outcomes are appended to `outcomes` when given.
RunReport runRrqWorkload(Engine& engine, const std::vector<LinearQuery>& queries,
                         const std::map<std::string, int>& privileges,
                         double relativeErrorFloor = 1.0,
                         std::vector<QueryOutcome>* outcomes = nullptr);

struct BfsCellResult {
  RunReport report;
  std::map<std::string, BfsTrace> traces;
};

// One decomposition task per analyst, run to completion in analyst order.
BfsCellResult runBfsWorkload(Engine& engine, const BfsConfig& config,
                             const std::vector<Analyst>& analysts,
                             double relativeErrorFloor = 1.0);

struct ExperimentCell {
  MechanismKind mechanism = MechanismKind::dprovdb;
  double psiTable = 0.0;
  std::uint64_t seed = 0;
  RunReport report;
};

// Runs every mechanism x table-budget x seed cell of the spec (see README
// for the spec schema) and writes CSV/JSON artifacts when the spec names an
// output directory. Returns the cells in execution order.
std::vector<ExperimentCell> runExperiment(const nlohmann::json& spec);

std::string summaryCsv(const std::vector<ExperimentCell>& cells);
std::string analystCsv(const std::vector<ExperimentCell>& cells,
                       const std::vector<Analyst>& analysts);
nlohmann::json cellsToJson(const std::vector<ExperimentCell>& cells);

// Means over seeds per (mechanism, table budget), from cellsToJson output.
std::string aggregateCsv(const nlohmann::json& cells);

}  // namespace dpq
