#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dpq/accountant.hpp"
#include "dpq/core.hpp"
#include "dpq/provenance.hpp"
#include "dpq/rng.hpp"
#include "dpq/synopses.hpp"

namespace dpq {

enum class MechanismKind { chorus, chorusP, vanilla, dprovdb, sPrivateSql };
enum class ConstraintMode { sumNormalized, maxNormalized };

std::string toString(MechanismKind kind);
std::string toString(ConstraintMode mode);
MechanismKind mechanismFromString(const std::string& name);
ConstraintMode constraintModeFromString(const std::string& name);

struct EngineConfig {
  MechanismKind mechanism = MechanismKind::dprovdb;
  double psiTable = 1.0;
  double delta = 1e-9;               // per Gaussian draw
  double translatePrecision = 1e-3;  // epsilon units
  ConstraintMode constraintMode = ConstraintMode::maxNormalized;
  double tau = 1.0;  // row-cap expansion factor under maxNormalized
  double maxPrivilege = 10.0;
  CompositionMode reportMode = CompositionMode::basic;
  std::uint64_t seed = 1;
};

struct QueryOutcome {
  bool answered = false;
  double value = 0.0;
  double varianceBound = 0.0;
  double chargedEpsilon = 0.0;
  std::string reason;  // rejection cause, empty when answered
  std::string analystId;
  std::size_t queryId = 0;         // per-analyst submission ordinal
  std::size_t timestampIndex = 0;  // global submission ordinal
};

nlohmann::json outcomeToJson(const QueryOutcome& outcome);

// Weight w* kept on an existing estimate of variance vPrime when a fresh
// draw is merged in so the merge lands exactly on target, and the variance
// the fresh draw must have for that to work. Requires 0 < target < vPrime.
double additiveWeight(double target, double vPrime);
double additiveFreshVariance(double target, double vPrime);

struct AdditiveTranslation {
  bool degraded = false;  // priced as if no reusable global existed
  double epsilon = 0.0;   // total level the analyst ends up requesting
  double extraEpsilon = 0.0;  // fresh-draw budget on top of the current global
  double freshPerBinVariance = 0.0;
};

// Prices an accuracy demand against the current global synopsis. Falls back
// to the plain per-bin translation when there is no global or the global
// alone already meets the target; otherwise prices only the fresh increment
// that, merged into the global, lands on the target. nullopt means the
// demand is not reachable even at epsilonCap.
std::optional<AdditiveTranslation> translateAdditive(const LinearQuery& q, double targetVariance,
                                                     const HistogramView& view,
                                                     const Synopsis* currentGlobal, double delta,
                                                     double precision, double epsilonCap);

// Serves one analyst population against one view collection with a fixed
// mechanism, charging a shared provenance table. Queries are strictly
// sequential; all randomness comes from the seeded generator, so equal seeds
// and configs replay identical traces.
class Engine {
 public:
  Engine(EngineConfig config, std::vector<HistogramView> views, std::vector<Analyst> analysts,
         std::size_t datasetRows);

  QueryOutcome handleQuery(const LinearQuery& q);

  const EngineConfig& config() const { return config_; }
  const ProvenanceTable& table() const { return table_; }
  const PrivacyLedger& ledger() const { return ledger_; }
  const HistogramView& view(const std::string& viewId) const;
  std::vector<std::string> viewIds() const;
  const Synopsis* globalSynopsis(const std::string& viewId) const;
  const Synopsis* localSynopsis(const std::string& analystId, const std::string& viewId) const;
  double chorusSpent() const { return chorusSpent_; }
  double staticEpsilon() const { return staticEpsilon_; }

  // Budget consumed by one analyst as the constraint system sees it: the
  // provenance row where rows exist, the ledger total where they do not.
  double consumedEpsilon(const std::string& analystId) const;

  // Demand clamps and other engine-level events, in occurrence order.
  const std::vector<std::string>& notes() const { return notes_; }

  nlohmann::json snapshot() const;

 private:
  struct DirectStyle {
    bool perAnalystRows = false;
  };

  void runDirect(const LinearQuery& q, const HistogramView& v, bool budgetMode, double target,
                 DirectStyle style, QueryOutcome& out);
  void runVanilla(const LinearQuery& q, const HistogramView& v, bool budgetMode, double target,
                  QueryOutcome& out);
  void runAdditive(const LinearQuery& q, const HistogramView& v, bool budgetMode, double target,
                   QueryOutcome& out);
  void runStatic(const LinearQuery& q, const HistogramView& v, bool budgetMode, double target,
                 QueryOutcome& out);

  void reject(QueryOutcome& out, const std::string& analystId, const std::string& viewId,
              std::string reason);
  void storeLocal(const std::string& analystId, const std::string& viewId, Synopsis synopsis);
  std::string demandKey(const LinearQuery& q) const;
  double clampedDemand(const LinearQuery& q, bool budgetMode, double requested);
  void recordGrant(const LinearQuery& q, bool budgetMode, double granted);

  EngineConfig config_;
  std::map<std::string, HistogramView> views_;
  ProvenanceTable table_;
  PrivacyLedger ledger_;
  Rng rng_;
  std::map<std::string, Synopsis> globals_;
  std::map<std::string, std::map<std::string, Synopsis>> locals_;
  std::map<std::string, Synopsis> statics_;
  std::map<std::string, double> viewDelta_;  // delta consumed by each view's global draws
  std::map<std::string, std::map<std::string, double>> bestAccuracy_;  // analyst -> shape -> v
  std::map<std::string, std::map<std::string, double>> bestBudget_;    // analyst -> shape -> eps
  std::map<std::string, std::size_t> analystSubmissions_;
  std::vector<std::string> notes_;
  double chorusSpent_ = 0.0;
  double staticEpsilon_ = 0.0;
  std::size_t submissions_ = 0;
};

}  // namespace dpq
