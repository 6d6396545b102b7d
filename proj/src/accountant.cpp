#include "dpq/accountant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dpq/gauss.hpp"

namespace dpq {

namespace {

// Loop guard for the slack-index sum; far above the contractual 10^4.
constexpr std::size_t kMaxComposeK = 1'000'000;

// Total delta headroom granted to the amplification term when the ledger
// picks a slack index automatically.
constexpr double kAdvancedSlack = 1e-6;

constexpr double kDeltaFloorRdp = 1e-12;

long double logChoose(std::size_t k, std::size_t l) {
  return std::lgamma(static_cast<long double>(k) + 1.0L) -
         std::lgamma(static_cast<long double>(l) + 1.0L) -
         std::lgamma(static_cast<long double>(k - l) + 1.0L);
}

// delta_i of the k-fold composition theorem, in log space. Every term is a
// binomial probability times a factor in (0, 1), so the sum never overflows.
long double deltaSlackSum(double epsilon, std::size_t k, std::size_t i) {
  long double eps = epsilon;
  long double logPerMechanism = eps + std::log1p(std::exp(-eps));
  long double sum = 0.0L;
  for (std::size_t l = 0; l < i; ++l) {
    long double logTerm = logChoose(k, l) + static_cast<long double>(k - l) * eps -
                          static_cast<long double>(k) * logPerMechanism;
    long double factor = -std::expm1(-2.0L * static_cast<long double>(i - l) * eps);
    sum += std::exp(logTerm) * factor;
  }
  return std::clamp(sum, 0.0L, 1.0L);
}

double clamp01(long double x) { return static_cast<double>(std::clamp(x, 0.0L, 1.0L)); }

void validateCharge(const PrivacyBudget& b, double noiseRatio) {
  if (!(b.epsilon >= 0.0) || !std::isfinite(b.epsilon)) {
    throw std::invalid_argument("charge epsilon must be non-negative and finite");
  }
  if (!(b.delta >= 0.0) || b.delta >= 1.0) {
    throw std::invalid_argument("charge delta must lie in [0, 1)");
  }
  if (!(noiseRatio >= 0.0) || !std::isfinite(noiseRatio)) {
    throw std::invalid_argument("noise ratio must be non-negative and finite");
  }
}

PrivacyBudget basicTotal(const std::vector<ChargeRecord>& charges) {
  PrivacyBudget total;
  for (const auto& c : charges) {
    total.epsilon += c.epsilon;
    total.delta += c.delta;
  }
  return total;
}

// Advanced-mode total. Charges are uniformized at the running per-charge
// maxima, and the reported epsilon is the running maximum over prefixes of
// the best feasible slack bound, which keeps the total non-decreasing as
// charges accrue even though the slack index moves discretely.
PrivacyBudget advancedTotal(const std::vector<ChargeRecord>& charges) {
  if (charges.empty()) return {0.0, 0.0};
  double epsTotal = 0.0;
  double epsMax = 0.0;
  double deltaMax = 0.0;
  std::size_t best = 0;
  for (std::size_t j = 1; j <= charges.size(); ++j) {
    const ChargeRecord& c = charges[j - 1];
    bool epsGrew = c.epsilon > epsMax;
    epsMax = std::max(epsMax, c.epsilon);
    deltaMax = std::max(deltaMax, c.delta);
    if (epsMax <= 0.0) continue;
    if (epsGrew) best = 0;
    while (best > 0 && deltaSlackSum(epsMax, j, best) > kAdvancedSlack) --best;
    while (best + 1 <= j / 2 && deltaSlackSum(epsMax, j, best + 1) <= kAdvancedSlack) ++best;
    epsTotal = std::max(epsTotal, static_cast<double>(j - 2 * best) * epsMax);
  }
  long double k = static_cast<long double>(charges.size());
  double deltaTotal =
      clamp01(-std::expm1(k * std::log1p(-static_cast<long double>(deltaMax)) +
                          std::log1p(-static_cast<long double>(kAdvancedSlack))));
  return {epsTotal, deltaTotal};
}

// Renyi-mode total. The conversion target follows the summed delta, which
// shrinks the ln(1/delta) offset as charges accrue, so the reported epsilon
// is the running maximum over prefixes; each prefix value is a valid bound
// and the maximum keeps the total non-decreasing.
PrivacyBudget rdpTotal(const std::vector<ChargeRecord>& charges,
                       const std::vector<double>& alphaGrid) {
  if (charges.empty()) return {0.0, 0.0};
  std::vector<double> summed(alphaGrid.size(), 0.0);
  bool anyCurve = false;
  double deltaSum = 0.0;
  double epsTotal = 0.0;
  for (const auto& c : charges) {
    deltaSum += c.delta;
    double ratio = c.noiseRatio;
    if (ratio <= 0.0 && c.epsilon > 0.0) {
      ratio = gauss::sigmaFor(c.epsilon, std::max(c.delta, kDeltaFloorRdp), 1.0);
    }
    if (ratio > 0.0) {
      anyCurve = true;
      for (std::size_t a = 0; a < alphaGrid.size(); ++a) {
        summed[a] += alphaGrid[a] / (2.0 * ratio * ratio);
      }
    }
    if (!anyCurve) continue;
    double target = std::clamp(deltaSum, kDeltaFloorRdp, 0.999);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < alphaGrid.size(); ++a) {
      best = std::min(best, summed[a] + std::log(1.0 / target) / (alphaGrid[a] - 1.0));
    }
    epsTotal = std::max(epsTotal, best);
  }
  if (!anyCurve) return {0.0, deltaSum};
  return {epsTotal, std::clamp(deltaSum, kDeltaFloorRdp, 0.999)};
}

nlohmann::json budgetJson(const PrivacyBudget& b) {
  return {{"epsilon", b.epsilon}, {"delta", b.delta}};
}

}  // namespace

std::string toString(CompositionMode mode) {
  switch (mode) {
    case CompositionMode::basic: return "basic";
    case CompositionMode::advanced: return "advanced";
    case CompositionMode::rdp: return "rdp";
  }
  return "unknown";
}

PrivacyBudget composeBasic(const std::vector<PrivacyBudget>& charges) {
  PrivacyBudget total;
  for (const auto& c : charges) {
    total.epsilon += c.epsilon;
    total.delta += c.delta;
  }
  return total;
}

PrivacyBudget composeAdvanced(double epsilon, double delta, std::size_t k, std::size_t i) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("epsilon must be positive and finite");
  }
  if (!(delta >= 0.0) || delta >= 1.0) {
    throw std::invalid_argument("delta must lie in [0, 1)");
  }
  if (k == 0) throw std::invalid_argument("k must be positive");
  if (i > k / 2) throw std::invalid_argument("slack index exceeds floor(k/2)");
  if (k > kMaxComposeK) throw std::overflow_error("composition length too large");
  double epsTotal = static_cast<double>(k - 2 * i) * epsilon;
  if (!std::isfinite(epsTotal)) throw std::overflow_error("composed epsilon overflows");
  long double deltaI = deltaSlackSum(epsilon, k, i);
  long double deltaTotal =
      -std::expm1(static_cast<long double>(k) * std::log1p(-static_cast<long double>(delta)) +
                  std::log1p(-deltaI));
  return {epsTotal, clamp01(deltaTotal)};
}

std::vector<double> defaultAlphaGrid() { return {1.5, 2.0, 3.0, 4.0, 8.0, 16.0, 32.0, 64.0}; }

RdpCurve gaussianRdpCurve(double sigma, double sensitivity,
                          const std::vector<double>& alphas) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("sigma must be positive and finite");
  }
  if (!(sensitivity > 0.0) || !std::isfinite(sensitivity)) {
    throw std::invalid_argument("sensitivity must be positive and finite");
  }
  if (alphas.empty()) throw std::invalid_argument("alpha grid is empty");
  RdpCurve curve;
  curve.alphas = alphas;
  curve.epsAlpha.reserve(alphas.size());
  for (double a : alphas) {
    if (!(a > 1.0) || !std::isfinite(a)) {
      throw std::invalid_argument("alpha values must exceed 1");
    }
    curve.epsAlpha.push_back(a * sensitivity * sensitivity / (2.0 * sigma * sigma));
  }
  return curve;
}

PrivacyBudget composeRdpAndConvert(const std::vector<RdpCurve>& charges, double targetDelta) {
  if (!(targetDelta > 0.0) || !(targetDelta < 1.0)) {
    throw std::invalid_argument("target delta must lie in (0, 1)");
  }
  if (charges.empty()) return {0.0, 0.0};
  const std::vector<double>& grid = charges.front().alphas;
  if (grid.empty()) throw std::invalid_argument("alpha grid is empty");
  std::vector<double> summed(grid.size(), 0.0);
  for (const auto& c : charges) {
    if (c.alphas != grid) throw std::invalid_argument("curves must share one alpha grid");
    if (c.epsAlpha.size() != grid.size()) {
      throw std::invalid_argument("curve length does not match its grid");
    }
    for (std::size_t a = 0; a < grid.size(); ++a) summed[a] += c.epsAlpha[a];
  }
  double bestEps = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < grid.size(); ++a) {
    if (!(grid[a] > 1.0)) throw std::invalid_argument("alpha values must exceed 1");
    double eps = summed[a] + std::log(1.0 / targetDelta) / (grid[a] - 1.0);
    bestEps = std::min(bestEps, eps);
  }
  return {bestEps, targetDelta};
}

PrivacyLedger::PrivacyLedger(CompositionMode mode, std::vector<double> alphaGrid)
    : mode_(mode), alphaGrid_(std::move(alphaGrid)) {
  if (alphaGrid_.empty()) throw std::invalid_argument("alpha grid is empty");
  for (double a : alphaGrid_) {
    if (!(a > 1.0) || !std::isfinite(a)) {
      throw std::invalid_argument("alpha values must exceed 1");
    }
  }
}

void PrivacyLedger::registerAnalyst(const std::string& analystId) {
  entries_.try_emplace(analystId);
}

bool PrivacyLedger::knows(const std::string& analystId) const {
  return entries_.count(analystId) > 0;
}

void PrivacyLedger::charge(const std::string& analystId, PrivacyBudget budget,
                           double noiseRatio) {
  validateCharge(budget, noiseRatio);
  entries_[analystId].push_back({budget.epsilon, budget.delta, noiseRatio});
}

std::vector<std::string> PrivacyLedger::analysts() const {
  std::vector<std::string> ids;
  ids.reserve(entries_.size());
  for (const auto& [id, charges] : entries_) ids.push_back(id);
  return ids;
}

const std::vector<ChargeRecord>& PrivacyLedger::chargesFor(const std::string& analystId) const {
  auto it = entries_.find(analystId);
  if (it == entries_.end()) throw std::out_of_range("unknown analyst '" + analystId + "'");
  return it->second;
}

PrivacyBudget PrivacyLedger::totalFor(const std::string& analystId) const {
  return totalUnder(mode_, analystId);
}

PrivacyBudget PrivacyLedger::totalUnder(CompositionMode mode,
                                        const std::string& analystId) const {
  const std::vector<ChargeRecord>& charges = chargesFor(analystId);
  switch (mode) {
    case CompositionMode::basic: return basicTotal(charges);
    case CompositionMode::advanced: return advancedTotal(charges);
    case CompositionMode::rdp: return rdpTotal(charges, alphaGrid_);
  }
  throw std::logic_error("unreachable composition mode");
}

nlohmann::json PrivacyLedger::toJson() const {
  nlohmann::json out;
  out["mode"] = toString(mode_);
  out["alphaGrid"] = alphaGrid_;
  nlohmann::json analystsJson = nlohmann::json::object();
  for (const auto& [id, charges] : entries_) {
    nlohmann::json entry;
    entry["charges"] = charges.size();
    entry["basic"] = budgetJson(totalUnder(CompositionMode::basic, id));
    entry["advanced"] = budgetJson(totalUnder(CompositionMode::advanced, id));
    entry["rdp"] = budgetJson(totalUnder(CompositionMode::rdp, id));
    analystsJson[id] = std::move(entry);
  }
  out["analysts"] = std::move(analystsJson);
  return out;
}

PrivacyBudget multiAnalystTotal(const PrivacyLedger& ledger, const std::string& analystId) {
  return ledger.totalFor(analystId);
}

}  // namespace dpq
