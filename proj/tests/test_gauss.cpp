#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "dpq/gauss.hpp"
#include "dpq/log.hpp"
#include "dpq/rng.hpp"

using namespace dpq;
using namespace dpq::gauss;

namespace {

// Independent evaluation of the exact Gaussian-mechanism delta, written
// against erf (not erfc) in long double, as a dual-path oracle.
long double deltaOracle(long double eps, long double sigma, long double sens) {
  const auto cdf = [](long double x) {
    return 0.5L * (1.0L + std::erf(x / std::sqrt(2.0L)));
  };
  const long double a = sens / (2.0L * sigma);
  const long double b = eps * sigma / sens;
  return cdf(a - b) - std::exp(eps) * cdf(-a - b);
}

double sampleVariance(const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(xs.size() - 1);
}

}  // namespace

TEST_SUITE("gauss") {

TEST_CASE("normal CDF matches reference values") {
  CHECK(normalCdf(0.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(normalCdf(1.96) == doctest::Approx(0.9750021048517795).epsilon(1e-10));
  CHECK(normalCdf(-1.0) == doctest::Approx(0.15865525393145707).epsilon(1e-10));
  CHECK(normalCdf(-8.0) == doctest::Approx(6.22096057427178e-16).epsilon(1e-3));
}

TEST_CASE("deltaAt: huge sigma drives delta to zero") {
  CHECK(deltaAt(1.0, 1e6, 1.0) < 1e-6);
}

TEST_CASE("deltaAt: strictly decreasing in sigma") {
  for (double eps : {0.1, 1.0, 5.0}) {
    double prev = 2.0;
    // keep eps * sigma small enough that the tail stays representable
    for (double sigma = 0.3; eps * sigma < 30.0; sigma *= 1.7) {
      const double d = deltaAt(eps, sigma, 1.0);
      CHECK(d < prev);
      prev = d;
    }
  }
}

TEST_CASE("deltaAt agrees with a long-double dual-path oracle") {
  for (double eps : {0.2, 1.0, 3.0}) {
    for (double sigma : {0.5, 2.0, 8.0}) {
      for (double sens : {1.0, 2.0}) {
        const double expected =
            static_cast<double>(deltaOracle(eps, sigma, sens));
        const double got = deltaAt(eps, sigma, sens);
        CHECK(got == doctest::Approx(std::clamp(expected, 0.0, 1.0)).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("deltaAt rejects non-finite or non-positive inputs") {
  CHECK_THROWS_AS(deltaAt(0.0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(deltaAt(1.0, -1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(deltaAt(std::nan(""), 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(deltaAt(1.0, std::numeric_limits<double>::infinity(), 1.0),
                  std::invalid_argument);
}

TEST_CASE("sigmaFor beats the classical bound and meets the condition") {
  const double sigma = sigmaFor(1.0, 1e-6, 1.0);
  const double classical = classicalSigma(1.0, 1e-6, 1.0);
  CHECK(classical == doctest::Approx(std::sqrt(2.0 * std::log(1.25e6))).epsilon(1e-12));
  CHECK(sigma <= classical);
  CHECK(deltaAt(1.0, sigma, 1.0) <= 1e-6);
}

TEST_CASE("sigmaFor: fixed point of deltaAt within a one-sided window") {
  const double sigma = sigmaFor(1.0, 1e-6, 1.0);
  const double d = deltaAt(1.0, sigma, 1.0);
  CHECK(d <= 1e-6);
  // The bisection stops within relative tolerance, so the achieved delta
  // sits just under the target rather than far below it.
  CHECK(d >= 1e-6 * (1.0 - 1e-6));
}

TEST_CASE("sigmaFor: doubling sensitivity doubles sigma") {
  for (double eps : {0.3, 1.0, 4.0}) {
    const double s1 = sigmaFor(eps, 1e-9, 1.0);
    const double s2 = sigmaFor(eps, 1e-9, 2.0);
    CHECK(s2 == doctest::Approx(2.0 * s1).epsilon(1e-8));
  }
}

TEST_CASE("sigmaFor: strictly decreasing in epsilon") {
  double prev = std::numeric_limits<double>::infinity();
  for (double eps = 0.1; eps <= 10.0; eps += 0.7) {
    const double s = sigmaFor(eps, 1e-9, 1.0);
    CHECK(s < prev);
    prev = s;
  }
}

TEST_CASE("sigmaFor: calibration holds across a grid") {
  for (double eps : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0}) {
    for (double delta : {1e-9, 1e-6, 1e-3}) {
      for (double sens : {1.0, 2.0}) {
        const double sigma = sigmaFor(eps, delta, sens);
        CHECK(deltaAt(eps, sigma, sens) <= delta);
      }
    }
  }
}

TEST_CASE("sigmaFor clamps delta below the CDF accuracy floor") {
  int warned = 0;
  auto previous = setWarnHook([&](const std::string&) { ++warned; });
  const double clamped = sigmaFor(1.0, 1e-15, 1.0);
  const double floor = sigmaFor(1.0, kDeltaFloor, 1.0);
  setWarnHook(previous);
  CHECK(warned > 0);
  CHECK(clamped == doctest::Approx(floor).epsilon(1e-9));
}

TEST_CASE("epsilonAt inverts sigmaFor") {
  for (double eps : {0.4, 1.0, 3.0}) {
    const double sigma = sigmaFor(eps, 1e-9, 1.0);
    CHECK(epsilonAt(sigma, 1e-9, 1.0) == doctest::Approx(eps).epsilon(1e-6));
  }
}

TEST_CASE("translateVanilla round-trips sigmaFor") {
  const double delta = 1e-9;
  const double target = std::pow(sigmaFor(1.0, delta, 1.0), 2);
  const auto eps = translateVanilla(1.0, target, delta, 1e-3, 10.0);
  REQUIRE(eps.has_value());
  CHECK(*eps >= 1.0 - 1e-6);
  CHECK(*eps <= 1.0 + 1e-3);
}

TEST_CASE("translateVanilla: loose targets fall to the feasibility floor") {
  const auto eps = translateVanilla(1.0, 1e12, 1e-9, 1e-3, 10.0);
  REQUIRE(eps.has_value());
  CHECK(*eps <= kEpsilonFloor + 1e-3);
}

TEST_CASE("translateVanilla: halving the target raises epsilon") {
  double target = 400.0;
  double prev = *translateVanilla(1.0, target, 1e-9, 1e-4, 10.0);
  for (int i = 0; i < 5; ++i) {
    target /= 2.0;
    const double eps = *translateVanilla(1.0, target, 1e-9, 1e-4, 10.0);
    CHECK(eps > prev);
    prev = eps;
  }
}

TEST_CASE("translateVanilla never violates the accuracy contract") {
  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    const double target = std::exp(std::log(2.0) + rng.uniform() * std::log(5e4));
    const auto eps = translateVanilla(1.0, target, 1e-9, 1e-3, 8.0);
    if (!eps.has_value()) continue;
    const double sigma = sigmaFor(*eps, 1e-9, 1.0);
    CHECK(sigma * sigma <= target);
  }
}

TEST_CASE("translateVanilla reports infeasible targets") {
  CHECK_FALSE(translateVanilla(1.0, 1e-4, 1e-9, 1e-3, 0.5).has_value());
}

TEST_CASE("additiveGM: equal budgets yield identical vectors") {
  Rng rng(11);
  const std::vector<double> truth{10.0, 20.0, 30.0};
  const auto out = additiveGM(truth, {{"a", 1.0}, {"b", 1.0}}, 1e-9, 1.0, rng);
  REQUIRE(out.size() == 2);
  CHECK(out.at("a") == out.at("b"));
}

TEST_CASE("additiveGM: single analyst equals one plain calibrated draw") {
  const std::vector<double> truth{5.0, -2.0};
  const double sigma = sigmaFor(1.0, 1e-9, 1.0);
  Rng a(42);
  const auto out = additiveGM(truth, {{"only", 1.0}}, 1e-9, 1.0, a);
  Rng b(42);
  std::vector<double> manual(truth);
  for (double& v : manual) v += b.gaussian(sigma);
  CHECK(out.at("only") == manual);
}

TEST_CASE("additiveGM rejects duplicates and non-positive budgets") {
  Rng rng(1);
  const std::vector<double> truth{1.0};
  CHECK_THROWS_AS(additiveGM(truth, {{"a", 1.0}, {"a", 0.5}}, 1e-9, 1.0, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(additiveGM(truth, {{"a", 0.0}}, 1e-9, 1.0, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(additiveGM(truth, {}, 1e-9, 1.0, rng), std::invalid_argument);
}

TEST_CASE("additiveGM: marginal and pairwise variances match calibration") {
  const double delta = 1e-9;
  const double sStrong = sigmaFor(1.0, delta, 1.0);
  const double sWeak = sigmaFor(0.5, delta, 1.0);
  const int n = 20000;
  std::vector<double> strong(n), weak(n), diff(n);
  Rng rng(2024);
  for (int i = 0; i < n; ++i) {
    const auto out = additiveGM({0.0}, {{"strong", 1.0}, {"weak", 0.5}}, delta, 1.0, rng);
    strong[i] = out.at("strong")[0];
    weak[i] = out.at("weak")[0];
    diff[i] = weak[i] - strong[i];
  }
  CHECK(sampleVariance(strong) ==
        doctest::Approx(sStrong * sStrong).epsilon(0.03));
  CHECK(sampleVariance(weak) == doctest::Approx(sWeak * sWeak).epsilon(0.03));
  // Chained increments: the pairwise difference is exactly the incremental
  // noise, with variance sigma_weak^2 - sigma_strong^2.
  CHECK(sampleVariance(diff) ==
        doctest::Approx(sWeak * sWeak - sStrong * sStrong).epsilon(0.04));
}

TEST_CASE("additiveGM: chained structure collapses when increments are zero") {
  // With equal budgets every increment is exactly zero, so all analysts see
  // the base release: the collusion bound is structural, not statistical.
  Rng rng(3);
  const std::vector<double> truth{1.0, 2.0, 3.0, 4.0};
  const auto out = additiveGM(
      truth, {{"a", 0.8}, {"b", 0.8}, {"c", 0.8}}, 1e-9, 1.0, rng);
  CHECK(out.at("a") == out.at("b"));
  CHECK(out.at("b") == out.at("c"));
}

}  // TEST_SUITE
