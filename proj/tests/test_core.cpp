#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"

#include "dpq/core.hpp"
#include "dpq/text_io.hpp"

using namespace dpq;

namespace {

// Small synthetic dataset with two categorical and one integer attribute.
Dataset toyDataset() {
  Dataset d;
  d.schema.push_back({"color", {"red", "green", "blue"}});
  d.schema.push_back({"size", {"S", "M"}});
  AttributeSpec age{"age", {}};
  for (int v = 0; v < 10; ++v) age.domain.push_back(std::to_string(v));
  d.schema.push_back(age);
  return d;
}

Dataset randomDataset(std::size_t rows, unsigned seed) {
  Dataset d = toyDataset();
  std::mt19937 gen(seed);
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<std::string> row(3);
    row[0] = d.schema[0].domain[gen() % 3];
    row[1] = d.schema[1].domain[gen() % 2];
    row[2] = d.schema[2].domain[gen() % 10];
    d.addRow(row);
  }
  return d;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("dpq_test_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void writeText(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
}

}  // namespace

TEST_SUITE("core") {

TEST_CASE("attribute index lookup and rejection") {
  AttributeSpec a{"color", {"red", "green", "blue"}};
  CHECK(a.indexOf("red") == 0);
  CHECK(a.indexOf("blue") == 2);
  CHECK_THROWS_AS(a.indexOf("mauve"), std::invalid_argument);
}

TEST_CASE("addRow validates arity and membership") {
  Dataset d = toyDataset();
  d.addRow({"red", "S", "3"});
  CHECK(d.rows.size() == 1);
  CHECK(d.rows[0] == std::vector<std::uint32_t>{0, 0, 3});
  CHECK_THROWS_AS(d.addRow({"red", "S"}), std::invalid_argument);
  CHECK_THROWS_AS(d.addRow({"red", "XL", "3"}), std::invalid_argument);
}

TEST_CASE("bin indexer round trip is exhaustive over mixed radix") {
  BinIndexer idx({4, 5, 7, 3});
  CHECK(idx.binCount() == 4 * 5 * 7 * 3);
  for (std::size_t bin = 0; bin < idx.binCount(); ++bin) {
    auto coords = idx.valueOf(bin);
    CHECK(idx.indexOf(coords) == bin);
  }
  // Distinct coordinates never collide: the round trip above covers all
  // binCount() ids, so injectivity follows from surjectivity.
  CHECK_THROWS_AS(idx.indexOf({4, 0, 0, 0}), std::out_of_range);
  CHECK_THROWS_AS(idx.valueOf(idx.binCount()), std::out_of_range);
  CHECK_THROWS_AS(BinIndexer({3, 0}), std::invalid_argument);
}

TEST_CASE("view construction matches a brute-force projection") {
  Dataset d = randomDataset(500, 42);
  HistogramView v = buildView(d, {"color", "size"});
  CHECK(v.id == "color+size");
  CHECK(v.binCount() == 6);
  CHECK(v.sensitivity == 1.0);

  // Count projections by scanning rows directly.
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::int64_t> expected;
  for (const auto& row : d.rows) ++expected[{row[0], row[1]}];
  for (std::size_t bin = 0; bin < v.binCount(); ++bin) {
    auto coords = v.indexer.valueOf(bin);
    auto key = std::make_pair(static_cast<std::uint32_t>(coords[0]),
                              static_cast<std::uint32_t>(coords[1]));
    std::int64_t want = expected.count(key) ? expected[key] : 0;
    CHECK(v.trueCounts[bin] == want);
  }
}

TEST_CASE("zero-count bins are materialized") {
  Dataset d = toyDataset();
  d.addRow({"red", "S", "0"});
  HistogramView v = buildView(d, {"color"});
  REQUIRE(v.binCount() == 3);
  CHECK(v.trueCounts[0] == 1);
  CHECK(v.trueCounts[1] == 0);
  CHECK(v.trueCounts[2] == 0);
}

TEST_CASE("count conservation under any view choice") {
  Dataset d = randomDataset(777, 7);
  for (auto attrs : std::vector<std::vector<std::string>>{
           {"color"}, {"size"}, {"age"}, {"color", "age"}, {"color", "size", "age"}}) {
    HistogramView v = buildView(d, attrs);
    std::int64_t total = std::accumulate(v.trueCounts.begin(), v.trueCounts.end(),
                                         std::int64_t{0});
    CHECK(total == static_cast<std::int64_t>(d.rows.size()));
  }
}

TEST_CASE("coarsening groups adjacent values and conserves counts") {
  Dataset d = toyDataset();
  for (int v = 0; v < 10; ++v) d.addRow({"red", "S", std::to_string(v)});
  HistogramView fine = buildView(d, {"age"});
  HistogramView coarse = buildView(d, {"age"}, {4});
  // Domain of 10 under width 4 gives bins {0..3}, {4..7}, {8..9}.
  REQUIRE(coarse.binCount() == 3);
  CHECK(coarse.trueCounts[0] == 4);
  CHECK(coarse.trueCounts[1] == 4);
  CHECK(coarse.trueCounts[2] == 2);
  CHECK(std::accumulate(coarse.trueCounts.begin(), coarse.trueCounts.end(), std::int64_t{0}) ==
        std::accumulate(fine.trueCounts.begin(), fine.trueCounts.end(), std::int64_t{0}));
  CHECK(coarse.sensitivity == 1.0);
  CHECK(coarse.id == "age");
}

TEST_CASE("oversized cross products are rejected") {
  Dataset d;
  AttributeSpec a{"a", {}}, b{"b", {}};
  for (int v = 0; v < 1001; ++v) a.domain.push_back(std::to_string(v));
  for (int v = 0; v < 1000; ++v) b.domain.push_back(std::to_string(v));
  d.schema = {a, b};
  CHECK_THROWS_AS(buildView(d, {"a", "b"}), std::invalid_argument);
  // A single attribute of the same size is fine.
  CHECK_NOTHROW(buildView(d, {"b"}));
}

TEST_CASE("true query evaluation matches a row scan") {
  Dataset d = randomDataset(300, 99);
  HistogramView v = buildView(d, {"color", "size"});
  std::mt19937 gen(5);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    LinearQuery q;
    q.viewId = v.id;
    q.analystId = "a";
    q.demand = AccuracyDemand{10.0};
    q.coefficients.resize(v.binCount());
    for (auto& c : q.coefficients) c = coef(gen);

    // Independent oracle: accumulate the coefficient of each row's bin.
    double scan = 0.0;
    for (const auto& row : d.rows) {
      std::size_t bin = v.indexer.indexOf({row[0], row[1]});
      scan += q.coefficients[bin];
    }
    CHECK(evaluateQueryTrue(v, q) == doctest::Approx(scan).epsilon(1e-12));
  }
}

TEST_CASE("query sensitivity bounds single-tuple perturbation") {
  // Two-bin view; adding or removing one row moves exactly one count by one,
  // so the answer moves by that bin's |coefficient|.
  Dataset d;
  d.schema.push_back({"flag", {"yes", "no"}});
  d.addRow({"yes"});
  d.addRow({"no"});
  d.addRow({"no"});
  HistogramView v = buildView(d, {"flag"});

  LinearQuery q;
  q.viewId = v.id;
  q.analystId = "a";
  q.demand = AccuracyDemand{10.0};
  q.coefficients = {0.5, -1.5};
  double bound = querySensitivity(q, v);
  CHECK(bound == doctest::Approx(1.5));

  double base = evaluateQueryTrue(v, q);
  // Enumerate every add/remove of a single tuple and compare the shift.
  for (std::size_t bin = 0; bin < v.binCount(); ++bin) {
    for (int shift : {-1, +1}) {
      if (v.trueCounts[bin] == 0 && shift < 0) continue;
      HistogramView mutated = v;
      mutated.trueCounts[bin] += shift;
      double moved = std::abs(evaluateQueryTrue(mutated, q) - base);
      CHECK(moved <= bound + 1e-12);
    }
  }
}

TEST_CASE("query validation rejects malformed input") {
  Dataset d = toyDataset();
  d.addRow({"red", "S", "1"});
  HistogramView v = buildView(d, {"size"});
  LinearQuery q;
  q.viewId = v.id;
  q.analystId = "a";
  q.coefficients = {1.0};  // wrong arity
  CHECK_THROWS_AS(validateQuery(q, v), std::invalid_argument);
  q.coefficients = {0.0, 0.0};
  CHECK_THROWS_AS(validateQuery(q, v), std::invalid_argument);
  q.coefficients = {1.0, 0.0};
  q.demand = AccuracyDemand{0.0};
  CHECK_THROWS_AS(validateQuery(q, v), std::invalid_argument);
  q.demand = BudgetDemand{-0.5, 0.0};
  CHECK_THROWS_AS(validateQuery(q, v), std::invalid_argument);
  q.demand = BudgetDemand{0.5, 1e-9};
  CHECK_NOTHROW(validateQuery(q, v));
  CHECK(coefficientNormSquared(q) == doctest::Approx(1.0));
}

TEST_CASE("schema parser handles lists, ranges, and comments") {
  auto schema = parseSchema(
      "# demographic attributes\n"
      "sex: Male, Female\n"
      "\n"
      "age: range 17 20\n");
  REQUIRE(schema.size() == 2);
  CHECK(schema[0].name == "sex");
  CHECK(schema[0].domain == std::vector<std::string>{"Male", "Female"});
  CHECK(schema[1].name == "age");
  CHECK(schema[1].domain == std::vector<std::string>{"17", "18", "19", "20"});
}

TEST_CASE("schema parser rejects malformed lines") {
  CHECK_THROWS_AS(parseSchema("sex Male, Female\n"), std::runtime_error);
  CHECK_THROWS_AS(parseSchema("age: range 90 17\n"), std::runtime_error);
  CHECK_THROWS_AS(parseSchema("a: x\na: y\n"), std::runtime_error);
  CHECK_THROWS_AS(parseSchema("# nothing\n"), std::runtime_error);
}

TEST_CASE("csv ingestion and binary round trip") {
  TempDir tmp;
  writeText(tmp.file("schema.txt"),
            "color: red, green, blue\n"
            "age: range 0 4\n");
  writeText(tmp.file("rows.csv"),
            "red,0\n"
            "green, 3\n"
            "blue,4\n");
  auto schema = loadSchema(tmp.file("schema.txt"));
  Dataset d = loadCsv(tmp.file("rows.csv"), schema);
  REQUIRE(d.rows.size() == 3);
  CHECK(d.rows[1] == std::vector<std::uint32_t>{1, 3});

  saveDataset(d, tmp.file("data.bin"));
  Dataset back = loadDataset(tmp.file("data.bin"));
  CHECK(back.rows == d.rows);
  REQUIRE(back.schema.size() == d.schema.size());
  for (std::size_t i = 0; i < d.schema.size(); ++i) {
    CHECK(back.schema[i].name == d.schema[i].name);
    CHECK(back.schema[i].domain == d.schema[i].domain);
  }
}

TEST_CASE("csv ingestion reports offending line on bad values") {
  TempDir tmp;
  writeText(tmp.file("schema.txt"), "color: red, green\n");
  writeText(tmp.file("rows.csv"), "red\npurple\n");
  auto schema = loadSchema(tmp.file("schema.txt"));
  CHECK_THROWS_WITH_AS(loadCsv(tmp.file("rows.csv"), schema),
                       doctest::Contains("rows.csv:2"), std::runtime_error);
}

TEST_CASE("views built from ingested data only see declared domains") {
  // The "blue" value never occurs in the rows; the view must still carry its
  // bin so the histogram shape reveals nothing about which values are active.
  TempDir tmp;
  writeText(tmp.file("schema.txt"), "color: red, green, blue\n");
  writeText(tmp.file("rows.csv"), "red\nred\ngreen\n");
  Dataset d = loadCsv(tmp.file("rows.csv"), loadSchema(tmp.file("schema.txt")));
  HistogramView v = buildView(d, {"color"});
  REQUIRE(v.binCount() == 3);
  CHECK(v.trueCounts[2] == 0);
}

}  // TEST_SUITE
