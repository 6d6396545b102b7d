#include "dpq/synopses.hpp"

#include <cmath>
#include <stdexcept>

#include "dpq/gauss.hpp"

namespace dpq {

namespace {

void requirePositive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument(std::string(what) + " must be positive and finite");
  }
}

}  // namespace

double combineWeight(double oldVariance, double freshVariance) {
  requirePositive(oldVariance, "old variance");
  requirePositive(freshVariance, "fresh variance");
  return oldVariance / (freshVariance + oldVariance);
}

double combinedVariance(double oldVariance, double freshVariance) {
  requirePositive(oldVariance, "old variance");
  requirePositive(freshVariance, "fresh variance");
  return oldVariance * freshVariance / (oldVariance + freshVariance);
}

Synopsis buildGlobal(const HistogramView& view, double epsilon, double delta, Rng& rng) {
  requirePositive(epsilon, "epsilon");
  double sigma = gauss::sigmaFor(epsilon, delta, view.sensitivity);
  Synopsis s;
  s.viewId = view.id;
  s.kind = SynopsisKind::global;
  s.sensitivity = view.sensitivity;
  s.perBinVariance = sigma * sigma;
  s.budget = {epsilon, delta};
  s.noisyCounts.reserve(view.binCount());
  for (std::int64_t count : view.trueCounts) {
    s.noisyCounts.push_back(static_cast<double>(count) + rng.gaussian(sigma));
  }
  s.lineage.push_back({1.0, s.perBinVariance});
  return s;
}

Synopsis combineGlobal(const Synopsis& old, const HistogramView& view, double freshEpsilon,
                       double delta, Rng& rng) {
  if (old.kind != SynopsisKind::global) {
    throw std::invalid_argument("only global synopses can be combined");
  }
  if (old.viewId != view.id || old.noisyCounts.size() != view.binCount()) {
    throw std::invalid_argument("synopsis does not belong to this view");
  }
  requirePositive(freshEpsilon, "fresh epsilon");

  Synopsis fresh = buildGlobal(view, freshEpsilon, delta, rng);
  double w = combineWeight(old.perBinVariance, fresh.perBinVariance);

  Synopsis out;
  out.viewId = old.viewId;
  out.kind = SynopsisKind::global;
  out.sensitivity = old.sensitivity;
  out.perBinVariance = combinedVariance(old.perBinVariance, fresh.perBinVariance);
  out.budget = {old.budget.epsilon + freshEpsilon, old.budget.delta + delta};
  out.noisyCounts.resize(old.noisyCounts.size());
  for (std::size_t b = 0; b < out.noisyCounts.size(); ++b) {
    out.noisyCounts[b] = (1.0 - w) * old.noisyCounts[b] + w * fresh.noisyCounts[b];
  }
  out.lineage.reserve(old.lineage.size() + 1);
  for (const LineageRecord& r : old.lineage) {
    out.lineage.push_back({(1.0 - w) * r.weight, r.sourceVariance});
  }
  out.lineage.push_back({w, fresh.perBinVariance});
  return out;
}

Synopsis deriveLocal(const Synopsis& global, const std::string& analystId, double epsilon,
                     double delta, Rng& rng) {
  if (global.kind != SynopsisKind::global) {
    throw std::invalid_argument("locals derive from a global synopsis");
  }
  requirePositive(epsilon, "epsilon");
  double sigma = gauss::sigmaFor(epsilon, delta, global.sensitivity);
  double targetVariance = sigma * sigma;
  if (targetVariance < global.perBinVariance * (1.0 - 1e-12)) {
    throw std::runtime_error("local level is tighter than the global it derives from");
  }
  double increment = std::max(0.0, targetVariance - global.perBinVariance);
  double incrementSigma = std::sqrt(increment);

  Synopsis local;
  local.viewId = global.viewId;
  local.kind = SynopsisKind::local;
  local.analystId = analystId;
  local.sensitivity = global.sensitivity;
  local.perBinVariance = targetVariance;
  local.budget = {epsilon, delta};
  local.noisyCounts.reserve(global.noisyCounts.size());
  for (double count : global.noisyCounts) {
    local.noisyCounts.push_back(count + rng.gaussian(incrementSigma));
  }
  local.lineage.push_back({1.0, targetVariance});
  return local;
}

AnswerResult answer(const Synopsis& synopsis, const LinearQuery& q) {
  if (q.viewId != synopsis.viewId) {
    throw std::invalid_argument("query view '" + q.viewId + "' does not match synopsis view '" +
                                synopsis.viewId + "'");
  }
  if (q.coefficients.size() != synopsis.noisyCounts.size()) {
    throw std::invalid_argument("coefficient arity does not match the synopsis");
  }
  AnswerResult r;
  double normSq = 0.0;
  for (std::size_t b = 0; b < q.coefficients.size(); ++b) {
    r.value += q.coefficients[b] * synopsis.noisyCounts[b];
    normSq += q.coefficients[b] * q.coefficients[b];
  }
  r.variance = normSq * synopsis.perBinVariance;
  return r;
}

nlohmann::json synopsisToJson(const Synopsis& synopsis) {
  nlohmann::json j;
  j["viewId"] = synopsis.viewId;
  j["kind"] = synopsis.kind == SynopsisKind::global ? "global" : "local";
  if (synopsis.kind == SynopsisKind::local) j["analystId"] = synopsis.analystId;
  j["epsilon"] = synopsis.budget.epsilon;
  j["delta"] = synopsis.budget.delta;
  j["perBinVariance"] = synopsis.perBinVariance;
  j["sensitivity"] = synopsis.sensitivity;
  j["counts"] = synopsis.noisyCounts;
  nlohmann::json lineage = nlohmann::json::array();
  for (const LineageRecord& r : synopsis.lineage) {
    lineage.push_back({{"weight", r.weight}, {"sourceVariance", r.sourceVariance}});
  }
  j["lineage"] = std::move(lineage);
  return j;
}

}  // namespace dpq
