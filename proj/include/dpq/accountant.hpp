#pragma once

#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "dpq/core.hpp"

namespace dpq {

enum class CompositionMode { basic, advanced, rdp };

std::string toString(CompositionMode mode);

// Coordinate-wise sum of (epsilon, delta) charges.
PrivacyBudget composeBasic(const std::vector<PrivacyBudget>& charges);

// k-fold composition of one (epsilon, delta) mechanism with slack index i:
// returns ((k - 2i) * epsilon, 1 - (1-delta)^k (1-delta_i)) where delta_i is
// the binomial tail sum
//   sum_{l=0}^{i-1} C(k,l) (e^{(k-l)eps} - e^{(k-2i+l)eps}) / (1+e^eps)^k.
// Each term is evaluated in log space so k up to 10^4 stays stable.
PrivacyBudget composeAdvanced(double epsilon, double delta, std::size_t k, std::size_t i);

struct RdpCurve {
  std::vector<double> alphas;    // shared grid, every alpha > 1
  std::vector<double> epsAlpha;  // same length as alphas
};

std::vector<double> defaultAlphaGrid();

// Renyi curve of the Gaussian mechanism: eps_alpha = alpha * sens^2 / (2 sigma^2).
RdpCurve gaussianRdpCurve(double sigma, double sensitivity, const std::vector<double>& alphas);

// Sums curves pointwise over a shared grid, then converts to (epsilon, delta)
// by min over alpha of eps_alpha + ln(1/targetDelta) / (alpha - 1).
PrivacyBudget composeRdpAndConvert(const std::vector<RdpCurve>& charges, double targetDelta);

struct ChargeRecord {
  double epsilon = 0.0;
  double delta = 0.0;
  // sigma / sensitivity of the Gaussian draw behind this charge, when there
  // is one; 0 means the charge has no Gaussian provenance and its Renyi curve
  // is reconstructed from (epsilon, delta).
  double noiseRatio = 0.0;
};

// Per-analyst privacy-loss ledger. Charges never cross-contaminate between
// analysts; totals are computable under every composition mode regardless of
// the mode picked at construction.
class PrivacyLedger {
 public:
  explicit PrivacyLedger(CompositionMode mode = CompositionMode::basic,
                         std::vector<double> alphaGrid = defaultAlphaGrid());

  void registerAnalyst(const std::string& analystId);
  bool knows(const std::string& analystId) const;
  void charge(const std::string& analystId, PrivacyBudget budget, double noiseRatio = 0.0);

  std::vector<std::string> analysts() const;
  const std::vector<ChargeRecord>& chargesFor(const std::string& analystId) const;

  CompositionMode mode() const { return mode_; }
  PrivacyBudget totalFor(const std::string& analystId) const;
  PrivacyBudget totalUnder(CompositionMode mode, const std::string& analystId) const;

  nlohmann::json toJson() const;

 private:
  CompositionMode mode_;
  std::vector<double> alphaGrid_;
  std::map<std::string, std::vector<ChargeRecord>> entries_;
};

// Total privacy loss of one analyst under the ledger's mode. Unknown analysts
// are an error, registered analysts with no charges total (0, 0).
PrivacyBudget multiAnalystTotal(const PrivacyLedger& ledger, const std::string& analystId);

}  // namespace dpq
