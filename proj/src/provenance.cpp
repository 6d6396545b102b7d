#include "dpq/provenance.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace dpq {

namespace {

// Absorbs float dust so that charges landing exactly on a cap pass.
constexpr double kCapTolerance = 1e-12;

std::string formatEps(double x) {
  std::ostringstream out;
  out.precision(12);
  out << x;
  return out.str();
}

}  // namespace

ProvenanceTable::ProvenanceTable(double psiTable, double deltaCap)
    : psiTable_(psiTable), deltaCap_(deltaCap) {
  if (!(psiTable > 0.0) || !std::isfinite(psiTable)) {
    throw std::invalid_argument("table cap must be positive and finite");
  }
  if (!(deltaCap > 0.0)) throw std::invalid_argument("delta cap must be positive");
}

void ProvenanceTable::registerAnalyst(const std::string& analystId, double rowCap) {
  if (!(rowCap >= 0.0) || !std::isfinite(rowCap)) {
    throw std::invalid_argument("row cap must be non-negative and finite");
  }
  rowCaps_[analystId] = std::min(rowCap, psiTable_);
  cells_.try_emplace(analystId);
}

void ProvenanceTable::registerView(const std::string& viewId, double columnCap) {
  if (!(columnCap >= 0.0) || !std::isfinite(columnCap)) {
    throw std::invalid_argument("column cap must be non-negative and finite");
  }
  columnCaps_[viewId] = std::min(columnCap, psiTable_);
}

bool ProvenanceTable::hasAnalyst(const std::string& analystId) const {
  return rowCaps_.count(analystId) > 0;
}

bool ProvenanceTable::hasView(const std::string& viewId) const {
  return columnCaps_.count(viewId) > 0;
}

std::map<std::string, double> ProvenanceTable::configureAnalystConstraintsSumNormalized(
    const std::vector<Analyst>& analysts) {
  if (analysts.empty()) throw std::invalid_argument("no analysts to configure");
  double privilegeSum = 0.0;
  for (const Analyst& a : analysts) {
    if (a.privilege < 1) throw std::invalid_argument("privilege must be at least 1");
    privilegeSum += a.privilege;
  }
  std::map<std::string, double> caps;
  for (const Analyst& a : analysts) {
    double cap = (a.privilege / privilegeSum) * psiTable_;
    registerAnalyst(a.id, cap);
    caps[a.id] = rowCap(a.id);
  }
  return caps;
}

std::map<std::string, double> ProvenanceTable::configureAnalystConstraintsMaxNormalized(
    const std::vector<Analyst>& analysts, double maxPrivilege, double tau) {
  if (!(tau >= 1.0)) throw std::invalid_argument("expansion factor must be at least 1");
  std::map<std::string, double> caps;
  for (const Analyst& a : analysts) {
    if (a.privilege < 1 || a.privilege > maxPrivilege) {
      throw std::invalid_argument("privilege out of range for analyst '" + a.id + "'");
    }
    double cap = std::min(psiTable_, tau * (a.privilege / maxPrivilege) * psiTable_);
    registerAnalyst(a.id, cap);
    caps[a.id] = rowCap(a.id);
  }
  return caps;
}

std::map<std::string, double> ProvenanceTable::configureViewConstraintsWaterFilling(
    const std::vector<std::string>& viewIds) {
  std::map<std::string, double> caps;
  for (const std::string& v : viewIds) {
    registerView(v, psiTable_);
    caps[v] = columnCap(v);
  }
  return caps;
}

std::map<std::string, double> ProvenanceTable::configureViewConstraintsStatic(
    const std::vector<std::string>& viewIds) {
  if (viewIds.empty()) throw std::invalid_argument("no views to configure");
  std::map<std::string, double> caps;
  double share = psiTable_ / static_cast<double>(viewIds.size());
  for (const std::string& v : viewIds) {
    registerView(v, share);
    caps[v] = columnCap(v);
  }
  return caps;
}

double ProvenanceTable::rowCap(const std::string& analystId) const {
  requireAnalyst(analystId);
  return rowCaps_.at(analystId);
}

double ProvenanceTable::columnCap(const std::string& viewId) const {
  requireView(viewId);
  return columnCaps_.at(viewId);
}

const ProvenanceTable::Cell* ProvenanceTable::findCell(const std::string& analystId,
                                                       const std::string& viewId) const {
  auto row = cells_.find(analystId);
  if (row == cells_.end()) return nullptr;
  auto it = row->second.find(viewId);
  return it == row->second.end() ? nullptr : &it->second;
}

ProvenanceTable::Cell& ProvenanceTable::cell(const std::string& analystId,
                                             const std::string& viewId) {
  requireAnalyst(analystId);
  requireView(viewId);
  return cells_[analystId][viewId];
}

void ProvenanceTable::requireAnalyst(const std::string& analystId) const {
  if (!hasAnalyst(analystId)) throw std::out_of_range("unknown analyst '" + analystId + "'");
}

void ProvenanceTable::requireView(const std::string& viewId) const {
  if (!hasView(viewId)) throw std::out_of_range("unknown view '" + viewId + "'");
}

double ProvenanceTable::entry(const std::string& analystId, const std::string& viewId) const {
  requireAnalyst(analystId);
  requireView(viewId);
  const Cell* c = findCell(analystId, viewId);
  return c ? c->epsilon : 0.0;
}

double ProvenanceTable::entryDelta(const std::string& analystId,
                                   const std::string& viewId) const {
  requireAnalyst(analystId);
  requireView(viewId);
  const Cell* c = findCell(analystId, viewId);
  return c ? c->delta : 0.0;
}

double ProvenanceTable::rowTotal(const std::string& analystId) const {
  requireAnalyst(analystId);
  double total = 0.0;
  auto row = cells_.find(analystId);
  if (row != cells_.end()) {
    for (const auto& [viewId, c] : row->second) total += c.epsilon;
  }
  return total;
}

double ProvenanceTable::columnTotal(const std::string& viewId) const {
  requireView(viewId);
  double total = 0.0;
  for (const auto& [analystId, row] : cells_) {
    auto it = row.find(viewId);
    if (it != row.end()) total += it->second.epsilon;
  }
  return total;
}

double ProvenanceTable::columnMax(const std::string& viewId) const {
  requireView(viewId);
  double best = 0.0;
  for (const auto& [analystId, row] : cells_) {
    auto it = row.find(viewId);
    if (it != row.end()) best = std::max(best, it->second.epsilon);
  }
  return best;
}

double ProvenanceTable::tableTotal() const {
  double total = 0.0;
  for (const auto& [analystId, row] : cells_) {
    for (const auto& [viewId, c] : row) total += c.epsilon;
  }
  return total;
}

double ProvenanceTable::sumColumnMax() const {
  double total = 0.0;
  for (const auto& [viewId, cap] : columnCaps_) total += columnMax(viewId);
  return total;
}

CheckResult ProvenanceTable::checkVanilla(const std::string& analystId,
                                          const std::string& viewId, double epsilon) const {
  requireAnalyst(analystId);
  requireView(viewId);
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("check epsilon must be non-negative and finite");
  }
  CheckResult r;
  r.chargeEpsilon = epsilon;
  if (rowTotal(analystId) + epsilon > rowCaps_.at(analystId) + kCapTolerance) {
    r.reason = "row-cap";
    return r;
  }
  if (columnTotal(viewId) + epsilon > columnCaps_.at(viewId) + kCapTolerance) {
    r.reason = "column-cap";
    return r;
  }
  if (tableTotal() + epsilon > psiTable_ + kCapTolerance) {
    r.reason = "table-cap";
    return r;
  }
  r.pass = true;
  return r;
}

CheckResult ProvenanceTable::checkAdditive(const std::string& analystId,
                                           const std::string& viewId, double epsilon,
                                           double globalEpsilon) const {
  requireAnalyst(analystId);
  requireView(viewId);
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("check epsilon must be non-negative and finite");
  }
  if (!(globalEpsilon >= 0.0) || !std::isfinite(globalEpsilon)) {
    throw std::invalid_argument("global epsilon must be non-negative and finite");
  }
  double current = entry(analystId, viewId);
  double requiredGlobal = std::max(globalEpsilon, epsilon);
  CheckResult r;
  r.globalGrowth = requiredGlobal - globalEpsilon;
  r.chargeEpsilon = std::max(0.0, std::min(requiredGlobal, current + epsilon) - current);
  if (columnMax(viewId) + r.globalGrowth > columnCaps_.at(viewId) + kCapTolerance) {
    r.reason = "column-cap";
    return r;
  }
  if (sumColumnMax() + r.globalGrowth > psiTable_ + kCapTolerance) {
    r.reason = "table-cap";
    return r;
  }
  if (rowTotal(analystId) + r.chargeEpsilon > rowCaps_.at(analystId) + kCapTolerance) {
    r.reason = "row-cap";
    return r;
  }
  r.pass = true;
  return r;
}

void ProvenanceTable::applyCharge(const std::string& analystId, const std::string& viewId,
                                  double epsilonPrime) {
  if (!(epsilonPrime >= 0.0) || !std::isfinite(epsilonPrime)) {
    throw std::invalid_argument("charge must be non-negative and finite");
  }
  Cell& c = cell(analystId, viewId);
  c.epsilon += epsilonPrime;
  double bound = std::min({rowCaps_.at(analystId), columnCaps_.at(viewId), psiTable_});
  if (c.epsilon > bound + 1e-9) {
    throw std::logic_error("charge pushed entry past its caps; check was skipped or stale");
  }
  auditLog_.push_back("charge analyst=" + analystId + " view=" + viewId +
                      " eps=" + formatEps(epsilonPrime) + " cell=" + formatEps(c.epsilon) +
                      " row=" + formatEps(rowTotal(analystId)));
}

void ProvenanceTable::logRejection(const std::string& analystId, const std::string& viewId,
                                   const std::string& reason) {
  auditLog_.push_back("reject analyst=" + analystId + " view=" + viewId + " reason=" + reason);
}

void ProvenanceTable::addCellDelta(const std::string& analystId, const std::string& viewId,
                                   double delta) {
  if (!(delta >= 0.0)) throw std::invalid_argument("delta must be non-negative");
  cell(analystId, viewId).delta += delta;
}

void ProvenanceTable::raiseCellDelta(const std::string& analystId, const std::string& viewId,
                                     double level) {
  if (!(level >= 0.0)) throw std::invalid_argument("delta level must be non-negative");
  Cell& c = cell(analystId, viewId);
  c.delta = std::max(c.delta, level);
}

void ProvenanceTable::noteDeltaEvent(double delta) {
  if (!(delta >= 0.0)) throw std::invalid_argument("delta must be non-negative");
  totalDelta_ += delta;
}

void ProvenanceTable::setDeltaCap(double cap) {
  if (!(cap > 0.0)) throw std::invalid_argument("delta cap must be positive");
  deltaCap_ = cap;
}

bool ProvenanceTable::deltaWouldExceed(double extraDelta) const {
  return totalDelta_ + extraDelta > deltaCap_ * (1.0 + 1e-12);
}

std::vector<std::string> ProvenanceTable::analystIds() const {
  std::vector<std::string> ids;
  for (const auto& [id, cap] : rowCaps_) ids.push_back(id);
  return ids;
}

std::vector<std::string> ProvenanceTable::viewIds() const {
  std::vector<std::string> ids;
  for (const auto& [id, cap] : columnCaps_) ids.push_back(id);
  return ids;
}

nlohmann::json ProvenanceTable::toJson() const {
  nlohmann::json j;
  j["psiTable"] = psiTable_;
  j["deltaCap"] = deltaCap_;
  j["totalDelta"] = totalDelta_;
  j["rowCaps"] = rowCaps_;
  j["columnCaps"] = columnCaps_;
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [analystId, row] : cells_) {
    for (const auto& [viewId, c] : row) {
      entries.push_back({{"analyst", analystId},
                         {"view", viewId},
                         {"epsilon", c.epsilon},
                         {"delta", c.delta}});
    }
  }
  j["entries"] = std::move(entries);
  return j;
}

ProvenanceTable ProvenanceTable::fromJson(const nlohmann::json& j) {
  ProvenanceTable table(j.at("psiTable").get<double>(), j.at("deltaCap").get<double>());
  for (const auto& [id, cap] : j.at("rowCaps").items()) {
    table.registerAnalyst(id, cap.get<double>());
  }
  for (const auto& [id, cap] : j.at("columnCaps").items()) {
    table.registerView(id, cap.get<double>());
  }
  for (const auto& e : j.at("entries")) {
    Cell& c = table.cell(e.at("analyst").get<std::string>(), e.at("view").get<std::string>());
    c.epsilon = e.at("epsilon").get<double>();
    c.delta = e.at("delta").get<double>();
  }
  table.totalDelta_ = j.at("totalDelta").get<double>();
  return table;
}

CorruptionGraph::CorruptionGraph(std::vector<std::string> nodes,
                                 std::vector<std::pair<std::string, std::string>> edges,
                                 std::size_t bound)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), bound_(bound) {
  if (bound_ == 0) throw std::invalid_argument("corruption bound must be positive");
  for (const auto& [a, b] : edges_) {
    auto known = [this](const std::string& n) {
      return std::find(nodes_.begin(), nodes_.end(), n) != nodes_.end();
    };
    if (!known(a) || !known(b)) throw std::invalid_argument("edge references unknown analyst");
  }
}

std::vector<std::vector<std::string>> CorruptionGraph::components() const {
  std::map<std::string, std::string> parent;
  for (const std::string& n : nodes_) parent[n] = n;
  std::function<std::string(const std::string&)> find = [&](const std::string& n) {
    return parent[n] == n ? n : parent[n] = find(parent[n]);
  };
  for (const auto& [a, b] : edges_) parent[find(a)] = find(b);

  std::map<std::string, std::vector<std::string>> groups;
  for (const std::string& n : nodes_) groups[find(n)].push_back(n);
  std::vector<std::vector<std::string>> out;
  out.reserve(groups.size());
  for (auto& [root, members] : groups) out.push_back(std::move(members));
  return out;
}

bool CorruptionGraph::satisfiesBound() const {
  for (const auto& component : components()) {
    if (component.size() >= bound_) return false;
  }
  return true;
}

std::map<std::string, double> assignComponentBudgets(const CorruptionGraph& graph,
                                                     const std::vector<Analyst>& analysts,
                                                     double psiTable) {
  if (!(psiTable > 0.0)) throw std::invalid_argument("table cap must be positive");
  std::map<std::string, int> privilege;
  for (const Analyst& a : analysts) privilege[a.id] = a.privilege;
  std::map<std::string, double> caps;
  for (const auto& component : graph.components()) {
    double privilegeSum = 0.0;
    for (const std::string& id : component) {
      auto it = privilege.find(id);
      if (it == privilege.end()) {
        throw std::invalid_argument("graph node '" + id + "' has no registered privilege");
      }
      privilegeSum += it->second;
    }
    for (const std::string& id : component) {
      caps[id] = (privilege[id] / privilegeSum) * psiTable;
    }
  }
  return caps;
}

}  // namespace dpq
