#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "dpq/gauss.hpp"
#include "dpq/synopses.hpp"

using namespace dpq;

namespace {

constexpr double kDelta = 1e-9;

HistogramView miniView(std::vector<std::int64_t> counts, std::string id = "v") {
  HistogramView v;
  v.id = std::move(id);
  v.attributes = {"x"};
  v.widths = {1};
  v.indexer = BinIndexer({counts.size()});
  v.trueCounts = std::move(counts);
  return v;
}

LinearQuery queryOn(const HistogramView& v, std::vector<double> coefficients) {
  LinearQuery q;
  q.viewId = v.id;
  q.analystId = "a";
  q.coefficients = std::move(coefficients);
  q.demand = AccuracyDemand{1.0};
  return q;
}

double sampleVariance(const std::vector<double>& xs) {
  double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return ss / (xs.size() - 1);
}

}  // namespace

TEST_SUITE("synopses") {

TEST_CASE("near-zero noise at huge epsilon") {
  HistogramView v = miniView({100, 200, 300});
  Rng rng(1);
  Synopsis s = buildGlobal(v, 1000.0, kDelta, rng);
  double sigma = std::sqrt(s.perBinVariance);
  CHECK(sigma < 0.01);
  for (std::size_t b = 0; b < 3; ++b) {
    CHECK(std::abs(s.noisyCounts[b] - static_cast<double>(v.trueCounts[b])) <= 5.0 * sigma);
  }
}

TEST_CASE("variance bookkeeping is definitional") {
  HistogramView v = miniView({10});
  Rng rng(2);
  Synopsis s = buildGlobal(v, 0.8, kDelta, rng);
  double sigma = gauss::sigmaFor(0.8, kDelta, 1.0);
  CHECK(s.perBinVariance == sigma * sigma);
  CHECK(s.budget.epsilon == 0.8);
  CHECK(s.budget.delta == kDelta);
  REQUIRE(s.lineage.size() == 1);
  CHECK(s.lineage[0].weight == 1.0);
  CHECK(s.lineage[0].sourceVariance == s.perBinVariance);
}

TEST_CASE("empirical build noise matches the bookkept variance") {
  HistogramView v = miniView({50});
  Rng rng(3);
  std::vector<double> noise;
  noise.reserve(100000);
  double expected = 0.0;
  for (int trial = 0; trial < 100000; ++trial) {
    Synopsis s = buildGlobal(v, 1.0, kDelta, rng);
    expected = s.perBinVariance;
    noise.push_back(s.noisyCounts[0] - 50.0);
  }
  CHECK(sampleVariance(noise) == doctest::Approx(expected).epsilon(0.02));
}

TEST_CASE("combine weight and variance closed forms") {
  CHECK(combineWeight(1.0, 3.0) == doctest::Approx(0.25));
  CHECK(combinedVariance(1.0, 3.0) == doctest::Approx(0.75));

  // Grid search confirms the weight minimizes (1-w)^2 v_old + w^2 v_fresh.
  std::mt19937 gen(17);
  std::uniform_real_distribution<double> var(0.1, 20.0);
  for (int trial = 0; trial < 25; ++trial) {
    double vOld = var(gen), vFresh = var(gen);
    double w = combineWeight(vOld, vFresh);
    double atW = (1.0 - w) * (1.0 - w) * vOld + w * w * vFresh;
    CHECK(atW == doctest::Approx(combinedVariance(vOld, vFresh)).epsilon(1e-12));
    for (int g = 0; g <= 100; ++g) {
      double wg = g / 100.0;
      double atG = (1.0 - wg) * (1.0 - wg) * vOld + wg * wg * vFresh;
      CHECK(atW <= atG + 1e-12);
    }
    CHECK(combinedVariance(vOld, vFresh) < std::min(vOld, vFresh));
  }
}

TEST_CASE("symmetric combine halves the variance") {
  HistogramView v = miniView({40, 60});
  Rng rng(4);
  Synopsis first = buildGlobal(v, 0.5, kDelta, rng);
  Synopsis merged = combineGlobal(first, v, 0.5, kDelta, rng);
  CHECK(merged.perBinVariance == doctest::Approx(first.perBinVariance / 2.0).epsilon(1e-12));
  REQUIRE(merged.lineage.size() == 2);
  CHECK(merged.lineage[0].weight == doctest::Approx(0.5));
  CHECK(merged.lineage[1].weight == doctest::Approx(0.5));
  CHECK(merged.budget.epsilon == doctest::Approx(1.0));
  CHECK(merged.budget.delta == doctest::Approx(2.0 * kDelta));
}

TEST_CASE("lineage stays a convex combination with exact variance") {
  HistogramView v = miniView({25});
  Rng rng(5);
  std::mt19937 gen(6);
  std::uniform_real_distribution<double> eps(0.05, 0.6);
  Synopsis s = buildGlobal(v, eps(gen), kDelta, rng);
  for (int step = 0; step < 6; ++step) {
    s = combineGlobal(s, v, eps(gen), kDelta, rng);
    double weightSum = 0.0, varianceSum = 0.0;
    for (const LineageRecord& r : s.lineage) {
      weightSum += r.weight;
      varianceSum += r.weight * r.weight * r.sourceVariance;
    }
    CHECK(weightSum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(varianceSum == doctest::Approx(s.perBinVariance).epsilon(1e-10));
  }
}

TEST_CASE("sequential combining beats every sampled weight vector") {
  HistogramView v = miniView({30});
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> eps(0.05, 0.8);
  std::exponential_distribution<double> expo(1.0);
  for (int trial = 0; trial < 5; ++trial) {
    Rng rng(100 + trial);
    Synopsis s = buildGlobal(v, eps(gen), kDelta, rng);
    for (int t = 2; t <= 4; ++t) {
      s = combineGlobal(s, v, eps(gen), kDelta, rng);
      std::vector<double> variances;
      for (const LineageRecord& r : s.lineage) variances.push_back(r.sourceVariance);
      // 100 random points on the weight simplex over the same components.
      for (int p = 0; p < 100; ++p) {
        std::vector<double> w(variances.size());
        double total = 0.0;
        for (double& x : w) {
          x = expo(gen);
          total += x;
        }
        double candidate = 0.0;
        for (std::size_t c = 0; c < w.size(); ++c) {
          w[c] /= total;
          candidate += w[c] * w[c] * variances[c];
        }
        CHECK(s.perBinVariance <= candidate + 1e-12);
      }
    }
  }
}

TEST_CASE("combining costs more than spending the budget at once") {
  HistogramView v = miniView({10});
  for (double eps1 : {0.1, 0.3, 0.8}) {
    for (double eps2 : {0.1, 0.4, 1.0}) {
      Rng rng(8);
      Synopsis s = buildGlobal(v, eps1, kDelta, rng);
      s = combineGlobal(s, v, eps2, kDelta, rng);
      double allAtOnce = std::pow(gauss::sigmaFor(eps1 + eps2, kDelta, 1.0), 2.0);
      CHECK(s.perBinVariance > allAtOnce);
    }
  }
}

TEST_CASE("combined synopsis stays unbiased") {
  HistogramView v = miniView({80});
  Rng rng(9);
  std::vector<double> values;
  values.reserve(20000);
  for (int trial = 0; trial < 20000; ++trial) {
    Synopsis s = buildGlobal(v, 0.3, kDelta, rng);
    s = combineGlobal(s, v, 0.2, kDelta, rng);
    s = combineGlobal(s, v, 0.4, kDelta, rng);
    values.push_back(s.noisyCounts[0]);
  }
  double mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  double se = std::sqrt(sampleVariance(values) / values.size());
  CHECK(std::abs(mean - 80.0) <= 3.0 * se);
}

TEST_CASE("local at the global level is the global itself") {
  HistogramView v = miniView({5, 15, 25});
  Rng rng(10);
  Synopsis global = buildGlobal(v, 0.5, kDelta, rng);
  auto before = rng.raw();
  Synopsis local = deriveLocal(global, "alice", 0.5, kDelta, rng);
  CHECK(local.noisyCounts == global.noisyCounts);
  CHECK(local.perBinVariance == doctest::Approx(global.perBinVariance).epsilon(1e-12));
  CHECK(local.kind == SynopsisKind::local);
  CHECK(local.analystId == "alice");
  // Zero-width noise must not consume randomness, so later draws stay aligned.
  CHECK(rng.raw() == before);

  // A second colluding analyst at the same level sees the identical counts.
  Synopsis other = deriveLocal(global, "carol", 0.5, kDelta, rng);
  CHECK(other.noisyCounts == global.noisyCounts);
}

TEST_CASE("weaker locals carry more variance") {
  HistogramView v = miniView({50});
  Rng rng(11);
  Synopsis global = buildGlobal(v, 1.0, kDelta, rng);
  Synopsis strong = deriveLocal(global, "a", 0.9, kDelta, rng);
  Synopsis weak = deriveLocal(global, "a", 0.05, kDelta, rng);
  CHECK(weak.perBinVariance > 10.0 * strong.perBinVariance);
  CHECK(weak.perBinVariance == doctest::Approx(std::pow(gauss::sigmaFor(0.05, kDelta, 1.0), 2)));
}

TEST_CASE("two-analyst derivation bookkeeping") {
  HistogramView v = miniView({100});
  Rng rng(12);
  Synopsis global = buildGlobal(v, 0.5, kDelta, rng);
  Synopsis alice = deriveLocal(global, "alice", 0.5, kDelta, rng);
  Synopsis bob = deriveLocal(global, "bob", 0.3, kDelta, rng);
  CHECK(alice.noisyCounts == global.noisyCounts);
  double bobSigma = gauss::sigmaFor(0.3, kDelta, 1.0);
  CHECK(bob.perBinVariance == bobSigma * bobSigma);
  CHECK(bob.budget.epsilon == 0.3);
  CHECK(bob.noisyCounts[0] != global.noisyCounts[0]);
}

TEST_CASE("local noise is gaussian at the released level") {
  HistogramView v = miniView({100});
  Rng rng(13);
  double target = std::pow(gauss::sigmaFor(0.3, kDelta, 1.0), 2);
  std::vector<double> noise;
  noise.reserve(20000);
  for (int trial = 0; trial < 20000; ++trial) {
    Synopsis global = buildGlobal(v, 0.5, kDelta, rng);
    Synopsis local = deriveLocal(global, "bob", 0.3, kDelta, rng);
    noise.push_back(local.noisyCounts[0] - 100.0);
  }
  CHECK(sampleVariance(noise) == doctest::Approx(target).epsilon(0.04));
}

TEST_CASE("deriving below the global variance is a sequencing error") {
  Synopsis fake;
  fake.viewId = "v";
  fake.kind = SynopsisKind::global;
  fake.noisyCounts = {1.0};
  fake.perBinVariance = 100.0 * std::pow(gauss::sigmaFor(1.0, kDelta, 1.0), 2);
  fake.budget = {1.0, kDelta};
  Rng rng(14);
  CHECK_THROWS_AS(deriveLocal(fake, "a", 1.0, kDelta, rng), std::runtime_error);
}

TEST_CASE("answers carry exact variance bookkeeping") {
  HistogramView v = miniView({10, 20, 30, 40});
  Rng rng(15);
  Synopsis s = buildGlobal(v, 0.5, kDelta, rng);

  AnswerResult zero = answer(s, queryOn(v, {0, 0, 0, 0}));
  CHECK(zero.value == 0.0);
  CHECK(zero.variance == 0.0);

  AnswerResult single = answer(s, queryOn(v, {0, 1, 0, 0}));
  CHECK(single.value == s.noisyCounts[1]);
  CHECK(single.variance == doctest::Approx(s.perBinVariance));

  AnswerResult range = answer(s, queryOn(v, {1, 1, 1, 1}));
  CHECK(range.variance == doctest::Approx(4.0 * s.perBinVariance));
}

TEST_CASE("range query error matches its variance bound empirically") {
  HistogramView v = miniView({10, 20, 30, 40});
  Rng rng(16);
  LinearQuery q = queryOn(v, {1, 1, 1, 1});
  std::vector<double> errors;
  errors.reserve(100000);
  double bound = 0.0;
  for (int trial = 0; trial < 100000; ++trial) {
    Synopsis s = buildGlobal(v, 1.0, kDelta, rng);
    AnswerResult r = answer(s, q);
    bound = r.variance;
    errors.push_back(r.value - 100.0);
  }
  CHECK(sampleVariance(errors) == doctest::Approx(bound).epsilon(0.02));
}

TEST_CASE("shape and kind violations throw") {
  HistogramView v = miniView({1, 2});
  HistogramView other = miniView({1, 2}, "w");
  Rng rng(17);
  Synopsis s = buildGlobal(v, 0.5, kDelta, rng);
  CHECK_THROWS_AS(combineGlobal(s, v, 0.0, kDelta, rng), std::invalid_argument);
  CHECK_THROWS_AS(combineGlobal(s, other, 0.5, kDelta, rng), std::invalid_argument);
  Synopsis local = deriveLocal(s, "a", 0.4, kDelta, rng);
  CHECK_THROWS_AS(combineGlobal(local, v, 0.5, kDelta, rng), std::invalid_argument);
  CHECK_THROWS_AS(deriveLocal(local, "a", 0.3, kDelta, rng), std::invalid_argument);
  CHECK_THROWS_AS(answer(s, queryOn(other, {1, 0})), std::invalid_argument);
  CHECK_THROWS_AS(answer(s, queryOn(v, {1, 0, 0})), std::invalid_argument);
}

TEST_CASE("snapshot export carries the bookkeeping") {
  HistogramView v = miniView({7, 9});
  Rng rng(18);
  Synopsis s = combineGlobal(buildGlobal(v, 0.3, kDelta, rng), v, 0.2, kDelta, rng);
  nlohmann::json j = synopsisToJson(s);
  CHECK(j["viewId"] == "v");
  CHECK(j["kind"] == "global");
  CHECK(j["epsilon"].get<double>() == doctest::Approx(0.5));
  CHECK(j["perBinVariance"].get<double>() == doctest::Approx(s.perBinVariance));
  CHECK(j["counts"].size() == 2);
  CHECK(j["lineage"].size() == 2);

  Synopsis local = deriveLocal(s, "alice", 0.1, kDelta, rng);
  nlohmann::json lj = synopsisToJson(local);
  CHECK(lj["kind"] == "local");
  CHECK(lj["analystId"] == "alice");
}

}  // TEST_SUITE
