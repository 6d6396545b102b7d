#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "dpq/core.hpp"

namespace dpq {

struct CheckResult {
  bool pass = false;
  std::string reason;          // failing constraint: "row-cap" | "column-cap" | "table-cap"
  double chargeEpsilon = 0.0;  // what to charge the analyst's cell on pass
  double globalGrowth = 0.0;   // how much the view's shared level must grow
};

// Per-(analyst, view) cumulative privacy-loss matrix with row, column, and
// table caps, plus the delta tally kept against its own ceiling. Rejection
// is soft: a failed check leaves the table untouched.
class ProvenanceTable {
 public:
  explicit ProvenanceTable(double psiTable, double deltaCap = 1.0);

  void registerAnalyst(const std::string& analystId, double rowCap);
  void registerView(const std::string& viewId, double columnCap);
  bool hasAnalyst(const std::string& analystId) const;
  bool hasView(const std::string& viewId) const;

  // Row caps proportional to privilege shares; needs the full analyst set.
  std::map<std::string, double> configureAnalystConstraintsSumNormalized(
      const std::vector<Analyst>& analysts);
  // Row caps anchored to the top privilege, expandable by tau and clamped at
  // the table cap. Safe to call again later for newly arriving analysts.
  std::map<std::string, double> configureAnalystConstraintsMaxNormalized(
      const std::vector<Analyst>& analysts, double maxPrivilege = 10.0, double tau = 1.0);
  std::map<std::string, double> configureViewConstraintsWaterFilling(
      const std::vector<std::string>& viewIds);
  std::map<std::string, double> configureViewConstraintsStatic(
      const std::vector<std::string>& viewIds);

  double psiTable() const { return psiTable_; }
  double rowCap(const std::string& analystId) const;
  double columnCap(const std::string& viewId) const;

  double entry(const std::string& analystId, const std::string& viewId) const;
  double entryDelta(const std::string& analystId, const std::string& viewId) const;
  double rowTotal(const std::string& analystId) const;
  double columnTotal(const std::string& viewId) const;
  double columnMax(const std::string& viewId) const;
  double tableTotal() const;
  double sumColumnMax() const;

  // Pass iff totals stay within row, column, and table caps when epsilon is
  // added to every aggregate this analyst touches.
  CheckResult checkVanilla(const std::string& analystId, const std::string& viewId,
                           double epsilon) const;
  // Shared-view variant: the column and table consume only the growth of the
  // view's shared level, and the chargeable amount tops the cell up to
  // min(max(globalEpsilon, epsilon), cell + epsilon).
  CheckResult checkAdditive(const std::string& analystId, const std::string& viewId,
                            double epsilon, double globalEpsilon) const;

  void applyCharge(const std::string& analystId, const std::string& viewId,
                   double epsilonPrime);
  void logRejection(const std::string& analystId, const std::string& viewId,
                    const std::string& reason);

  // Delta bookkeeping: per-cell tallies plus a run-level total checked
  // against the ceiling.
  void addCellDelta(const std::string& analystId, const std::string& viewId, double delta);
  void raiseCellDelta(const std::string& analystId, const std::string& viewId, double level);
  void noteDeltaEvent(double delta);
  double totalDelta() const { return totalDelta_; }
  double deltaCap() const { return deltaCap_; }
  void setDeltaCap(double cap);
  bool deltaWouldExceed(double extraDelta) const;

  const std::vector<std::string>& auditLog() const { return auditLog_; }
  std::vector<std::string> analystIds() const;
  std::vector<std::string> viewIds() const;

  nlohmann::json toJson() const;
  static ProvenanceTable fromJson(const nlohmann::json& j);

 private:
  struct Cell {
    double epsilon = 0.0;
    double delta = 0.0;
  };

  const Cell* findCell(const std::string& analystId, const std::string& viewId) const;
  Cell& cell(const std::string& analystId, const std::string& viewId);
  void requireAnalyst(const std::string& analystId) const;
  void requireView(const std::string& viewId) const;

  double psiTable_ = 0.0;
  double deltaCap_ = 1.0;
  double totalDelta_ = 0.0;
  std::map<std::string, double> rowCaps_;
  std::map<std::string, double> columnCaps_;
  std::map<std::string, std::map<std::string, Cell>> cells_;  // analyst -> view -> cell
  std::vector<std::string> auditLog_;
};

// Analyst collusion structure: row budgets may be granted per connected
// component as long as every component stays below the corruption bound.
class CorruptionGraph {
 public:
  CorruptionGraph(std::vector<std::string> nodes,
                  std::vector<std::pair<std::string, std::string>> edges, std::size_t bound);

  const std::vector<std::string>& nodes() const { return nodes_; }
  std::size_t bound() const { return bound_; }
  std::vector<std::vector<std::string>> components() const;
  bool satisfiesBound() const;

 private:
  std::vector<std::string> nodes_;
  std::vector<std::pair<std::string, std::string>> edges_;
  std::size_t bound_ = 0;
};

// Privilege-proportional row caps granted independently per component, each
// component receiving the full table budget.
std::map<std::string, double> assignComponentBudgets(const CorruptionGraph& graph,
                                                     const std::vector<Analyst>& analysts,
                                                     double psiTable);

}  // namespace dpq
