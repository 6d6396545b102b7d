#include "dpq/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "dpq/gauss.hpp"
#include "dpq/log.hpp"

namespace dpq {

namespace {

constexpr double kCapTolerance = 1e-12;

std::string formatNumber(double value) {
  std::ostringstream s;
  s.precision(12);
  s << value;
  return s.str();
}

}  // namespace

std::string toString(MechanismKind kind) {
  switch (kind) {
    case MechanismKind::chorus:
      return "chorus";
    case MechanismKind::chorusP:
      return "chorusP";
    case MechanismKind::vanilla:
      return "vanilla";
    case MechanismKind::dprovdb:
      return "dprovdb";
    case MechanismKind::sPrivateSql:
      return "sPrivateSql";
  }
  return "unknown";
}

std::string toString(ConstraintMode mode) {
  return mode == ConstraintMode::sumNormalized ? "sumNormalized" : "maxNormalized";
}

MechanismKind mechanismFromString(const std::string& name) {
  if (name == "chorus") return MechanismKind::chorus;
  if (name == "chorusP") return MechanismKind::chorusP;
  if (name == "vanilla") return MechanismKind::vanilla;
  if (name == "dprovdb") return MechanismKind::dprovdb;
  if (name == "sPrivateSql") return MechanismKind::sPrivateSql;
  throw std::invalid_argument("unknown mechanism: " + name);
}

ConstraintMode constraintModeFromString(const std::string& name) {
  if (name == "sumNormalized" || name == "sum") return ConstraintMode::sumNormalized;
  if (name == "maxNormalized" || name == "max") return ConstraintMode::maxNormalized;
  throw std::invalid_argument("unknown constraint mode: " + name);
}

nlohmann::json outcomeToJson(const QueryOutcome& outcome) {
  return nlohmann::json{{"answered", outcome.answered},
                        {"value", outcome.value},
                        {"varianceBound", outcome.varianceBound},
                        {"chargedEpsilon", outcome.chargedEpsilon},
                        {"reason", outcome.reason},
                        {"analyst", outcome.analystId},
                        {"queryId", outcome.queryId},
                        {"timestamp", outcome.timestampIndex}};
}

double additiveWeight(double target, double vPrime) {
  if (!(target > 0.0) || !(vPrime > target)) {
    throw std::invalid_argument("weight needs 0 < target < existing variance");
  }
  return target / vPrime;
}

double additiveFreshVariance(double target, double vPrime) {
  if (!(target > 0.0) || !(vPrime > target)) {
    throw std::invalid_argument("fresh variance needs 0 < target < existing variance");
  }
  return target * vPrime / (vPrime - target);
}

std::optional<AdditiveTranslation> translateAdditive(const LinearQuery& q, double targetVariance,
                                                     const HistogramView& view,
                                                     const Synopsis* currentGlobal, double delta,
                                                     double precision, double epsilonCap) {
  if (!(targetVariance > 0.0)) throw std::invalid_argument("target variance must be positive");
  double normSq = coefficientNormSquared(q);
  double globalLevel = currentGlobal ? currentGlobal->budget.epsilon : 0.0;
  double vPrime = currentGlobal ? normSq * currentGlobal->perBinVariance : 0.0;

  AdditiveTranslation t;
  if (currentGlobal == nullptr || vPrime <= targetVariance) {
    t.degraded = true;
    if (currentGlobal != nullptr) {
      // The global alone already meets the target; the request level only
      // prices what the analyst walks away with, never a fresh draw.
      auto eps = gauss::translateVanilla(view.sensitivity, targetVariance / normSq, delta,
                                         precision, epsilonCap);
      if (!eps) return std::nullopt;
      t.epsilon = std::min(*eps, globalLevel);
      return t;
    }
    auto eps = gauss::translateVanilla(view.sensitivity, targetVariance / normSq, delta,
                                       precision, epsilonCap);
    if (!eps) return std::nullopt;
    t.epsilon = *eps;
    t.extraEpsilon = *eps;
    t.freshPerBinVariance = targetVariance / normSq;
    return t;
  }

  t.freshPerBinVariance = additiveFreshVariance(targetVariance, vPrime) / normSq;
  double room = epsilonCap - globalLevel;
  if (room <= gauss::kEpsilonFloor) return std::nullopt;
  auto extra =
      gauss::translateVanilla(view.sensitivity, t.freshPerBinVariance, delta, precision, room);
  if (!extra) return std::nullopt;
  t.extraEpsilon = *extra;
  t.epsilon = globalLevel + *extra;
  return t;
}

Engine::Engine(EngineConfig config, std::vector<HistogramView> views,
               std::vector<Analyst> analysts, std::size_t datasetRows)
    : config_(config),
      table_(config.psiTable, datasetRows > 0 ? 1.0 / static_cast<double>(datasetRows) : 1.0),
      ledger_(config.reportMode),
      rng_(config.seed) {
  if (views.empty()) throw std::invalid_argument("engine needs at least one view");
  if (analysts.empty()) throw std::invalid_argument("engine needs at least one analyst");
  for (auto& v : views) {
    if (v.id.empty()) throw std::invalid_argument("views must be named");
    std::string id = v.id;
    if (!views_.emplace(id, std::move(v)).second) {
      throw std::invalid_argument("duplicate view id: " + id);
    }
  }
  for (const auto& a : analysts) {
    if (ledger_.knows(a.id)) throw std::invalid_argument("duplicate analyst id: " + a.id);
    ledger_.registerAnalyst(a.id);
  }

  if (config_.constraintMode == ConstraintMode::sumNormalized) {
    table_.configureAnalystConstraintsSumNormalized(analysts);
  } else {
    table_.configureAnalystConstraintsMaxNormalized(analysts, config_.maxPrivilege, config_.tau);
  }
  std::vector<std::string> ids;
  ids.reserve(views_.size());
  for (const auto& [id, v] : views_) ids.push_back(id);
  if (config_.mechanism == MechanismKind::sPrivateSql) {
    table_.configureViewConstraintsStatic(ids);
    staticEpsilon_ = config_.psiTable / static_cast<double>(views_.size());
    for (const auto& [id, v] : views_) {
      statics_.emplace(id, buildGlobal(v, staticEpsilon_, config_.delta, rng_));
      table_.noteDeltaEvent(config_.delta);
      notes_.push_back("static view=" + id + " eps=" + formatNumber(staticEpsilon_));
    }
  } else {
    table_.configureViewConstraintsWaterFilling(ids);
  }
}

const HistogramView& Engine::view(const std::string& viewId) const {
  auto it = views_.find(viewId);
  if (it == views_.end()) throw std::out_of_range("unknown view: " + viewId);
  return it->second;
}

std::vector<std::string> Engine::viewIds() const {
  std::vector<std::string> ids;
  ids.reserve(views_.size());
  for (const auto& [id, v] : views_) ids.push_back(id);
  return ids;
}

const Synopsis* Engine::globalSynopsis(const std::string& viewId) const {
  auto it = globals_.find(viewId);
  return it == globals_.end() ? nullptr : &it->second;
}

const Synopsis* Engine::localSynopsis(const std::string& analystId,
                                      const std::string& viewId) const {
  auto a = locals_.find(analystId);
  if (a == locals_.end()) return nullptr;
  auto it = a->second.find(viewId);
  return it == a->second.end() ? nullptr : &it->second;
}

double Engine::consumedEpsilon(const std::string& analystId) const {
  if (config_.mechanism == MechanismKind::chorus) {
    return ledger_.totalUnder(CompositionMode::basic, analystId).epsilon;
  }
  return table_.rowTotal(analystId);
}

QueryOutcome Engine::handleQuery(const LinearQuery& q) {
  const HistogramView& v = view(q.viewId);
  if (!ledger_.knows(q.analystId)) throw std::out_of_range("unknown analyst: " + q.analystId);
  validateQuery(q, v);

  QueryOutcome out;
  out.analystId = q.analystId;
  out.timestampIndex = submissions_++;
  out.queryId = analystSubmissions_[q.analystId]++;

  bool budgetMode = std::holds_alternative<BudgetDemand>(q.demand);
  double requested;
  if (budgetMode) {
    const auto& d = std::get<BudgetDemand>(q.demand);
    if (d.delta > 0.0 && std::abs(d.delta - config_.delta) > 1e-15) {
      throw std::invalid_argument("budget demand delta must match the engine delta");
    }
    requested = d.epsilon;
  } else {
    requested = std::get<AccuracyDemand>(q.demand).targetVariance;
  }
  double target = clampedDemand(q, budgetMode, requested);

  switch (config_.mechanism) {
    case MechanismKind::chorus:
      runDirect(q, v, budgetMode, target, DirectStyle{false}, out);
      break;
    case MechanismKind::chorusP:
      runDirect(q, v, budgetMode, target, DirectStyle{true}, out);
      break;
    case MechanismKind::vanilla:
      runVanilla(q, v, budgetMode, target, out);
      break;
    case MechanismKind::dprovdb:
      runAdditive(q, v, budgetMode, target, out);
      break;
    case MechanismKind::sPrivateSql:
      runStatic(q, v, budgetMode, target, out);
      break;
  }
  if (out.answered) recordGrant(q, budgetMode, target);
  return out;
}

void Engine::reject(QueryOutcome& out, const std::string& analystId, const std::string& viewId,
                    std::string reason) {
  out.answered = false;
  out.reason = std::move(reason);
  table_.logRejection(analystId, viewId, out.reason);
}

void Engine::runDirect(const LinearQuery& q, const HistogramView& v, bool budgetMode,
                       double target, DirectStyle style, QueryOutcome& out) {
  double sens = querySensitivity(q, v);
  double epsI;
  if (budgetMode) {
    epsI = target;
  } else {
    auto t = gauss::translateVanilla(sens, target, config_.delta, config_.translatePrecision,
                                     config_.psiTable);
    if (!t) {
      reject(out, q.analystId, q.viewId, "infeasible");
      return;
    }
    epsI = *t;
  }
  if (style.perAnalystRows) {
    CheckResult check = table_.checkVanilla(q.analystId, q.viewId, epsI);
    if (!check.pass) {
      reject(out, q.analystId, q.viewId, check.reason);
      return;
    }
  } else if (chorusSpent_ + epsI > config_.psiTable + kCapTolerance) {
    reject(out, q.analystId, q.viewId, "table-cap");
    return;
  }
  if (table_.deltaWouldExceed(config_.delta)) {
    reject(out, q.analystId, q.viewId, "delta-cap");
    return;
  }

  double sigma = gauss::sigmaFor(epsI, config_.delta, sens);
  out.value = evaluateQueryTrue(v, q) + rng_.gaussian(sigma);
  out.varianceBound = sigma * sigma;
  out.chargedEpsilon = epsI;
  out.answered = true;
  if (style.perAnalystRows) {
    table_.applyCharge(q.analystId, q.viewId, epsI);
    table_.addCellDelta(q.analystId, q.viewId, config_.delta);
  } else {
    chorusSpent_ += epsI;
  }
  table_.noteDeltaEvent(config_.delta);
  ledger_.charge(q.analystId, PrivacyBudget{epsI, config_.delta}, sigma / sens);
}

void Engine::runVanilla(const LinearQuery& q, const HistogramView& v, bool budgetMode,
                        double target, QueryOutcome& out) {
  double normSq = coefficientNormSquared(q);
  if (const Synopsis* cached = localSynopsis(q.analystId, q.viewId)) {
    bool sufficient = budgetMode ? cached->budget.epsilon >= target
                                 : normSq * cached->perBinVariance <= target;
    if (sufficient) {
      AnswerResult ans = answer(*cached, q);
      out.value = ans.value;
      out.varianceBound = ans.variance;
      out.answered = true;
      return;
    }
  }
  double epsI;
  if (budgetMode) {
    epsI = target;
  } else {
    auto t = gauss::translateVanilla(v.sensitivity, target / normSq, config_.delta,
                                     config_.translatePrecision, config_.psiTable);
    if (!t) {
      reject(out, q.analystId, q.viewId, "infeasible");
      return;
    }
    epsI = *t;
  }
  CheckResult check = table_.checkVanilla(q.analystId, q.viewId, epsI);
  if (!check.pass) {
    reject(out, q.analystId, q.viewId, check.reason);
    return;
  }
  if (table_.deltaWouldExceed(config_.delta)) {
    reject(out, q.analystId, q.viewId, "delta-cap");
    return;
  }

  Synopsis fresh = buildGlobal(v, epsI, config_.delta, rng_);
  fresh.kind = SynopsisKind::local;
  fresh.analystId = q.analystId;
  AnswerResult ans = answer(fresh, q);
  out.value = ans.value;
  out.varianceBound = ans.variance;
  out.chargedEpsilon = epsI;
  out.answered = true;
  table_.applyCharge(q.analystId, q.viewId, epsI);
  table_.addCellDelta(q.analystId, q.viewId, config_.delta);
  table_.noteDeltaEvent(config_.delta);
  ledger_.charge(q.analystId, PrivacyBudget{epsI, config_.delta},
                 std::sqrt(fresh.perBinVariance) / v.sensitivity);
  storeLocal(q.analystId, q.viewId, std::move(fresh));
}

void Engine::runAdditive(const LinearQuery& q, const HistogramView& v, bool budgetMode,
                         double target, QueryOutcome& out) {
  double normSq = coefficientNormSquared(q);
  if (const Synopsis* cached = localSynopsis(q.analystId, q.viewId)) {
    bool sufficient = budgetMode ? cached->budget.epsilon >= target
                                 : normSq * cached->perBinVariance <= target;
    if (sufficient) {
      AnswerResult ans = answer(*cached, q);
      out.value = ans.value;
      out.varianceBound = ans.variance;
      out.answered = true;
      return;
    }
  }

  auto globalIt = globals_.find(q.viewId);
  Synopsis* global = globalIt == globals_.end() ? nullptr : &globalIt->second;
  double globalLevel = global ? global->budget.epsilon : 0.0;

  double epsI;
  if (budgetMode) {
    epsI = target;
  } else {
    auto t = translateAdditive(q, target, v, global, config_.delta, config_.translatePrecision,
                               config_.psiTable);
    if (!t) {
      reject(out, q.analystId, q.viewId, "infeasible");
      return;
    }
    epsI = t->epsilon;
  }

  CheckResult check = table_.checkAdditive(q.analystId, q.viewId, epsI, globalLevel);
  if (!check.pass) {
    reject(out, q.analystId, q.viewId, check.reason);
    return;
  }
  bool growGlobal = global == nullptr || epsI > globalLevel;
  if (growGlobal && table_.deltaWouldExceed(config_.delta)) {
    reject(out, q.analystId, q.viewId, "delta-cap");
    return;
  }

  if (growGlobal) {
    if (global == nullptr) {
      global = &globals_.emplace(q.viewId, buildGlobal(v, epsI, config_.delta, rng_)).first->second;
    } else {
      *global = combineGlobal(*global, v, epsI - globalLevel, config_.delta, rng_);
    }
    viewDelta_[q.viewId] += config_.delta;
    table_.noteDeltaEvent(config_.delta);
  }

  // Incremental merging can leave the global noisier than an all-at-once
  // draw at epsI would be. The global itself is then the closest release the
  // chain can offer, and sharing it adds no privacy loss beyond its level.
  double sigma = gauss::sigmaFor(epsI, config_.delta, v.sensitivity);
  Synopsis local;
  if (sigma * sigma < global->perBinVariance * (1.0 - 1e-12)) {
    local = *global;
    local.kind = SynopsisKind::local;
    local.analystId = q.analystId;
    local.budget = PrivacyBudget{epsI, config_.delta};
  } else {
    local = deriveLocal(*global, q.analystId, epsI, config_.delta, rng_);
  }

  AnswerResult ans = answer(local, q);
  out.value = ans.value;
  out.varianceBound = ans.variance;
  out.chargedEpsilon = check.chargeEpsilon;
  out.answered = true;
  table_.applyCharge(q.analystId, q.viewId, check.chargeEpsilon);
  table_.raiseCellDelta(q.analystId, q.viewId, viewDelta_[q.viewId]);
  ledger_.charge(q.analystId,
                 PrivacyBudget{check.chargeEpsilon, growGlobal ? config_.delta : 0.0},
                 std::sqrt(local.perBinVariance) / v.sensitivity);
  storeLocal(q.analystId, q.viewId, std::move(local));
}

void Engine::runStatic(const LinearQuery& q, const HistogramView&, bool budgetMode,
                       double target, QueryOutcome& out) {
  const Synopsis& synopsis = statics_.at(q.viewId);
  double normSq = coefficientNormSquared(q);
  bool sufficient = budgetMode ? target <= staticEpsilon_ + kCapTolerance
                               : normSq * synopsis.perBinVariance <= target;
  if (!sufficient) {
    reject(out, q.analystId, q.viewId, "static-insufficient");
    return;
  }
  AnswerResult ans = answer(synopsis, q);
  out.value = ans.value;
  out.varianceBound = ans.variance;
  out.answered = true;
}

void Engine::storeLocal(const std::string& analystId, const std::string& viewId,
                        Synopsis synopsis) {
  auto& slot = locals_[analystId];
  auto it = slot.find(viewId);
  if (it == slot.end()) {
    slot.emplace(viewId, std::move(synopsis));
    return;
  }
  // The analyst keeps everything ever handed out, so the cache tracks the
  // best variance and the highest level simultaneously.
  synopsis.budget.epsilon = std::max(synopsis.budget.epsilon, it->second.budget.epsilon);
  synopsis.budget.delta = std::max(synopsis.budget.delta, it->second.budget.delta);
  if (it->second.perBinVariance < synopsis.perBinVariance) {
    synopsis.noisyCounts = it->second.noisyCounts;
    synopsis.perBinVariance = it->second.perBinVariance;
    synopsis.lineage = it->second.lineage;
  }
  it->second = std::move(synopsis);
}

std::string Engine::demandKey(const LinearQuery& q) const {
  std::string key = q.viewId;
  key.push_back('\0');
  std::size_t offset = key.size();
  key.resize(offset + q.coefficients.size() * sizeof(double));
  std::memcpy(key.data() + offset, q.coefficients.data(),
              q.coefficients.size() * sizeof(double));
  return key;
}

double Engine::clampedDemand(const LinearQuery& q, bool budgetMode, double requested) {
  auto& perAnalyst = budgetMode ? bestBudget_[q.analystId] : bestAccuracy_[q.analystId];
  auto it = perAnalyst.find(demandKey(q));
  if (it == perAnalyst.end()) return requested;
  bool looser = budgetMode ? requested < it->second : requested > it->second;
  if (!looser) return requested;
  std::string line = "clamp analyst=" + q.analystId + " view=" + q.viewId +
                     (budgetMode ? " eps " : " variance ") + formatNumber(requested) + " -> " +
                     formatNumber(it->second);
  notes_.push_back(line);
  warn(line);
  return it->second;
}

void Engine::recordGrant(const LinearQuery& q, bool budgetMode, double granted) {
  auto& perAnalyst = budgetMode ? bestBudget_[q.analystId] : bestAccuracy_[q.analystId];
  auto [it, inserted] = perAnalyst.emplace(demandKey(q), granted);
  if (!inserted) {
    it->second = budgetMode ? std::max(it->second, granted) : std::min(it->second, granted);
  }
}

nlohmann::json Engine::snapshot() const {
  nlohmann::json globals = nlohmann::json::array();
  for (const auto& [id, g] : globals_) {
    globals.push_back({{"view", id},
                       {"epsilon", g.budget.epsilon},
                       {"delta", g.budget.delta},
                       {"perBinVariance", g.perBinVariance}});
  }
  nlohmann::json locals = nlohmann::json::array();
  for (const auto& [analyst, perView] : locals_) {
    for (const auto& [id, s] : perView) {
      locals.push_back({{"analyst", analyst},
                        {"view", id},
                        {"epsilon", s.budget.epsilon},
                        {"perBinVariance", s.perBinVariance}});
    }
  }
  return nlohmann::json{{"mechanism", toString(config_.mechanism)},
                        {"psiTable", config_.psiTable},
                        {"delta", config_.delta},
                        {"chorusSpent", chorusSpent_},
                        {"staticEpsilon", staticEpsilon_},
                        {"table", table_.toJson()},
                        {"ledger", ledger_.toJson()},
                        {"globals", globals},
                        {"locals", locals},
                        {"notes", notes_}};
}

}  // namespace dpq
