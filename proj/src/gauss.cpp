#include "dpq/gauss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dpq/log.hpp"

namespace dpq::gauss {

namespace {

void requirePositiveFinite(double value, const char* name) {
  if (!std::isfinite(value) || value <= 0.0) {
    throw std::invalid_argument(std::string(name) + " must be positive and finite");
  }
}

double clampDelta(double delta) {
  if (delta >= kDeltaFloor) return delta;
  warn("delta " + std::to_string(delta) + " below " + std::to_string(kDeltaFloor) +
       " clamped (normal CDF accuracy limit)");
  return kDeltaFloor;
}

}  // namespace

double normalCdf(double x) { return std::erfc(-x / std::sqrt(2.0)) / 2.0; }

double deltaAt(double epsilon, double sigma, double sensitivity) {
  requirePositiveFinite(epsilon, "epsilon");
  requirePositiveFinite(sigma, "sigma");
  requirePositiveFinite(sensitivity, "sensitivity");
  const double a = sensitivity / (2.0 * sigma);
  const double b = epsilon * sigma / sensitivity;
  const double delta = normalCdf(a - b) - std::exp(epsilon) * normalCdf(-a - b);
  // exp(epsilon) can overflow while the CDF term underflows to zero faster;
  // the true delta in that regime is numerically zero.
  if (std::isnan(delta)) return 0.0;
  return std::clamp(delta, 0.0, 1.0);
}

double classicalSigma(double epsilon, double delta, double sensitivity) {
  requirePositiveFinite(epsilon, "epsilon");
  requirePositiveFinite(sensitivity, "sensitivity");
  if (delta <= 0.0 || delta >= 1.0) throw std::invalid_argument("delta must lie in (0, 1)");
  return sensitivity * std::sqrt(2.0 * std::log(1.25 / delta)) / epsilon;
}

double sigmaFor(double epsilon, double delta, double sensitivity) {
  requirePositiveFinite(epsilon, "epsilon");
  requirePositiveFinite(sensitivity, "sensitivity");
  if (delta <= 0.0 || delta >= 1.0) throw std::invalid_argument("delta must lie in (0, 1)");
  delta = clampDelta(delta);

  // Bracket: lower must violate the condition, upper must satisfy it.
  double lower = sensitivity / 10.0;
  for (int i = 0; i < 64 && deltaAt(epsilon, lower, sensitivity) <= delta; ++i) {
    lower /= 10.0;
  }
  double upper = 2.0 * classicalSigma(epsilon, delta, sensitivity);
  upper = std::max(upper, 2.0 * lower);
  int growth = 0;
  while (deltaAt(epsilon, upper, sensitivity) > delta) {
    upper *= 2.0;
    if (++growth > 200) throw std::runtime_error("sigmaFor: no bracketing interval found");
  }

  while (upper - lower > kSigmaTolerance * lower) {
    const double mid = 0.5 * (lower + upper);
    if (deltaAt(epsilon, mid, sensitivity) > delta) {
      lower = mid;
    } else {
      upper = mid;
    }
  }
  // Upper end of the bracket: the condition is guaranteed at the returned value.
  return upper;
}

double epsilonAt(double sigma, double delta, double sensitivity) {
  requirePositiveFinite(sigma, "sigma");
  requirePositiveFinite(sensitivity, "sensitivity");
  if (delta <= 0.0 || delta >= 1.0) throw std::invalid_argument("delta must lie in (0, 1)");
  delta = clampDelta(delta);

  double lower = 1e-12;  // deltaAt is decreasing in epsilon at fixed sigma
  double upper = 1.0;
  int growth = 0;
  while (deltaAt(upper, sigma, sensitivity) > delta) {
    upper *= 2.0;
    if (++growth > 200) throw std::runtime_error("epsilonAt: no bracketing interval found");
  }
  if (deltaAt(lower, sigma, sensitivity) <= delta) return lower;
  while (upper - lower > kSigmaTolerance * upper) {
    const double mid = 0.5 * (lower + upper);
    if (deltaAt(mid, sigma, sensitivity) > delta) {
      lower = mid;
    } else {
      upper = mid;
    }
  }
  return upper;
}

std::optional<double> translateVanilla(double sensitivity, double targetVariance,
                                       double delta, double precision,
                                       double epsilonCap) {
  requirePositiveFinite(targetVariance, "targetVariance");
  requirePositiveFinite(precision, "precision");
  requirePositiveFinite(epsilonCap, "epsilonCap");

  const auto feasible = [&](double eps) {
    const double s = sigmaFor(eps, delta, sensitivity);
    return s * s <= targetVariance;
  };

  if (!feasible(epsilonCap)) return std::nullopt;

  double lower = std::min(kEpsilonFloor, epsilonCap);
  if (feasible(lower)) return lower;

  // Invalid/valid bisection: lower always fails the target, upper always
  // meets it; stop once the bracket is narrower than the precision.
  double upper = epsilonCap;
  while (upper - lower > precision) {
    const double mid = 0.5 * (lower + upper);
    if (feasible(mid)) {
      upper = mid;
    } else {
      lower = mid;
    }
  }
  return upper;
}

std::map<std::string, std::vector<double>> additiveGM(
    const std::vector<double>& trueAnswer,
    const std::vector<AnalystBudget>& budgets, double delta,
    double sensitivity, Rng& rng) {
  if (budgets.empty()) throw std::invalid_argument("additiveGM: budgets must be non-empty");
  requirePositiveFinite(sensitivity, "sensitivity");

  struct Entry {
    std::string analystId;
    double sigma;
  };
  std::vector<Entry> order;
  order.reserve(budgets.size());
  for (const auto& b : budgets) {
    if (b.epsilon <= 0.0) throw std::invalid_argument("additiveGM: epsilon must be positive");
    order.push_back({b.analystId, sigmaFor(b.epsilon, delta, sensitivity)});
  }
  std::stable_sort(order.begin(), order.end(),
                   [](const Entry& x, const Entry& y) { return x.sigma < y.sigma; });
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      if (order[i].analystId == order[j].analystId) {
        throw std::invalid_argument("additiveGM: duplicate analystId " + order[i].analystId);
      }
    }
  }

  std::map<std::string, std::vector<double>> out;
  std::vector<double> current(trueAnswer);
  double prevVariance = 0.0;
  for (std::size_t j = 0; j < order.size(); ++j) {
    const double variance = order[j].sigma * order[j].sigma;
    const double increment = std::max(0.0, variance - prevVariance);
    const double stddev = std::sqrt(increment);
    for (double& value : current) value += rng.gaussian(stddev);
    out.emplace(order[j].analystId, current);
    prevVariance = variance;
  }
  return out;
}

}  // namespace dpq::gauss
