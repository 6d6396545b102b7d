#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace dpq {

// Hard ceiling on materialized histogram size; exceeding it is an error, not
// a silent truncation.
inline constexpr std::size_t kMaxBins = 1'000'000;

struct AttributeSpec {
  std::string name;
  std::vector<std::string> domain;  // ordered, unique, non-empty

  // Index of a value in the domain; throws if absent.
  std::uint32_t indexOf(const std::string& value) const;
};

struct Dataset {
  std::vector<AttributeSpec> schema;
  // One value index per schema attribute, in schema order.
  std::vector<std::vector<std::uint32_t>> rows;

  std::size_t attributeIndex(const std::string& name) const;
  // Validates membership of every value and appends the encoded row.
  void addRow(const std::vector<std::string>& values);
};

// Bijection between per-attribute coordinates and flat bin ids, mixed-radix
// with the last attribute varying fastest.
class BinIndexer {
 public:
  BinIndexer() = default;
  explicit BinIndexer(std::vector<std::size_t> sizes);

  std::size_t binCount() const { return binCount_; }
  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::size_t indexOf(const std::vector<std::size_t>& coords) const;
  std::vector<std::size_t> valueOf(std::size_t bin) const;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> strides_;
  std::size_t binCount_ = 0;
};

struct HistogramView {
  std::string id;
  std::vector<std::string> attributes;
  std::vector<std::uint32_t> widths;  // per-attribute coarsening, 1 = none
  BinIndexer indexer;
  std::vector<std::int64_t> trueCounts;
  double sensitivity = 1.0;  // l2, add/remove-one-tuple model

  std::size_t binCount() const { return trueCounts.size(); }
};

struct Analyst {
  std::string id;
  int privilege = 1;  // integer in [1, 10]
};

inline constexpr int kMaxPrivilege = 10;

struct PrivacyBudget {
  double epsilon = 0.0;
  double delta = 0.0;
};

// Expected squared error the analyst will accept for the query answer.
struct AccuracyDemand {
  double targetVariance = 0.0;
};

// Explicit budget the analyst offers for the query.
struct BudgetDemand {
  double epsilon = 0.0;
  double delta = 0.0;
};

struct LinearQuery {
  std::string viewId;
  std::string analystId;
  std::vector<double> coefficients;
  std::variant<AccuracyDemand, BudgetDemand> demand = AccuracyDemand{};
};

// Full-domain histogram over the named attributes. widths, when given, must
// match attributes in length; width w groups w adjacent domain values per bin
// (counting sensitivity is unaffected). The view id defaults to the attribute
// names joined with '+'.
HistogramView buildView(const Dataset& dataset,
                        const std::vector<std::string>& attributes,
                        const std::vector<std::uint32_t>& widths = {},
                        std::string id = "");

// Ground truth dot(coefficients, trueCounts); used by the harness metrics.
double evaluateQueryTrue(const HistogramView& view, const LinearQuery& q);

// Worst-case l2 change of the query answer from one tuple added or removed:
// max |coefficient| times the view sensitivity.
double querySensitivity(const LinearQuery& q, const HistogramView& view);

// Squared l2 norm of the coefficient vector.
double coefficientNormSquared(const LinearQuery& q);

// Checks the query against the view (length match, at least one nonzero
// coefficient, positive accuracy target); throws std::invalid_argument.
void validateQuery(const LinearQuery& q, const HistogramView& view);

}  // namespace dpq
