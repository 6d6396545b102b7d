#include "dpq/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace dpq {

std::uint32_t AttributeSpec::indexOf(const std::string& value) const {
  auto it = std::find(domain.begin(), domain.end(), value);
  if (it == domain.end()) {
    throw std::invalid_argument("value '" + value + "' not in domain of attribute '" + name +
                                "'");
  }
  return static_cast<std::uint32_t>(it - domain.begin());
}

std::size_t Dataset::attributeIndex(const std::string& name) const {
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (schema[i].name == name) return i;
  }
  throw std::invalid_argument("unknown attribute '" + name + "'");
}

void Dataset::addRow(const std::vector<std::string>& values) {
  if (values.size() != schema.size()) {
    throw std::invalid_argument("row has " + std::to_string(values.size()) +
                                " values, schema has " + std::to_string(schema.size()));
  }
  std::vector<std::uint32_t> encoded(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    encoded[i] = schema[i].indexOf(values[i]);
  }
  rows.push_back(std::move(encoded));
}

BinIndexer::BinIndexer(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.empty()) throw std::invalid_argument("BinIndexer needs at least one dimension");
  binCount_ = 1;
  for (std::size_t s : sizes_) {
    if (s == 0) throw std::invalid_argument("BinIndexer dimension of size zero");
    if (binCount_ > kMaxBins / s) {
      throw std::invalid_argument("view would exceed the bin ceiling");
    }
    binCount_ *= s;
  }
  strides_.assign(sizes_.size(), 1);
  for (std::size_t i = sizes_.size(); i-- > 1;) {
    strides_[i - 1] = strides_[i] * sizes_[i];
  }
}

std::size_t BinIndexer::indexOf(const std::vector<std::size_t>& coords) const {
  if (coords.size() != sizes_.size()) {
    throw std::invalid_argument("coordinate arity mismatch");
  }
  std::size_t bin = 0;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (coords[i] >= sizes_[i]) throw std::out_of_range("coordinate out of range");
    bin += coords[i] * strides_[i];
  }
  return bin;
}

std::vector<std::size_t> BinIndexer::valueOf(std::size_t bin) const {
  if (bin >= binCount_) throw std::out_of_range("bin id out of range");
  std::vector<std::size_t> coords(sizes_.size());
  for (std::size_t i = 0; i < sizes_.size(); ++i) {
    coords[i] = bin / strides_[i];
    bin %= strides_[i];
  }
  return coords;
}

HistogramView buildView(const Dataset& dataset, const std::vector<std::string>& attributes,
                        const std::vector<std::uint32_t>& widths, std::string id) {
  if (attributes.empty()) throw std::invalid_argument("view needs at least one attribute");
  if (!widths.empty() && widths.size() != attributes.size()) {
    throw std::invalid_argument("widths must match attributes in length");
  }

  HistogramView view;
  view.attributes = attributes;
  view.widths.assign(attributes.size(), 1);

  std::vector<std::size_t> attrPositions(attributes.size());
  std::vector<std::size_t> binSizes(attributes.size());
  for (std::size_t i = 0; i < attributes.size(); ++i) {
    attrPositions[i] = dataset.attributeIndex(attributes[i]);
    std::size_t domainSize = dataset.schema[attrPositions[i]].domain.size();
    std::uint32_t w = widths.empty() ? 1 : widths[i];
    if (w == 0) throw std::invalid_argument("bin width must be positive");
    view.widths[i] = w;
    binSizes[i] = (domainSize + w - 1) / w;
  }

  view.indexer = BinIndexer(binSizes);
  view.trueCounts.assign(view.indexer.binCount(), 0);

  std::vector<std::size_t> coords(attributes.size());
  for (const auto& row : dataset.rows) {
    for (std::size_t i = 0; i < attributes.size(); ++i) {
      coords[i] = row[attrPositions[i]] / view.widths[i];
    }
    ++view.trueCounts[view.indexer.indexOf(coords)];
  }

  if (id.empty()) {
    for (std::size_t i = 0; i < attributes.size(); ++i) {
      if (i) id += '+';
      id += attributes[i];
    }
  }
  view.id = std::move(id);
  return view;
}

double evaluateQueryTrue(const HistogramView& view, const LinearQuery& q) {
  validateQuery(q, view);
  double sum = 0.0;
  for (std::size_t i = 0; i < q.coefficients.size(); ++i) {
    sum += q.coefficients[i] * static_cast<double>(view.trueCounts[i]);
  }
  return sum;
}

double querySensitivity(const LinearQuery& q, const HistogramView& view) {
  double maxAbs = 0.0;
  for (double c : q.coefficients) maxAbs = std::max(maxAbs, std::abs(c));
  return maxAbs * view.sensitivity;
}

double coefficientNormSquared(const LinearQuery& q) {
  double sum = 0.0;
  for (double c : q.coefficients) sum += c * c;
  return sum;
}

void validateQuery(const LinearQuery& q, const HistogramView& view) {
  if (q.coefficients.size() != view.binCount()) {
    throw std::invalid_argument("query has " + std::to_string(q.coefficients.size()) +
                                " coefficients, view '" + view.id + "' has " +
                                std::to_string(view.binCount()) + " bins");
  }
  bool anyNonzero = false;
  for (double c : q.coefficients) {
    if (!std::isfinite(c)) throw std::invalid_argument("non-finite query coefficient");
    if (c != 0.0) anyNonzero = true;
  }
  if (!anyNonzero) throw std::invalid_argument("query has no nonzero coefficient");
  if (const auto* acc = std::get_if<AccuracyDemand>(&q.demand)) {
    if (!(acc->targetVariance > 0.0)) {
      throw std::invalid_argument("accuracy target must be positive");
    }
  } else {
    const auto& b = std::get<BudgetDemand>(q.demand);
    if (!(b.epsilon > 0.0)) throw std::invalid_argument("budget epsilon must be positive");
    if (b.delta < 0.0 || b.delta >= 1.0) throw std::invalid_argument("budget delta out of range");
  }
}

}  // namespace dpq
