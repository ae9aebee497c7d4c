#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cvarlearn/rng.hpp"

namespace cvarlearn {

/// Tail fraction averaged by CVaR, alpha in (0, 1]. alpha = 1 is the risk-neutral mean.
class RiskLevel {
public:
  /// Throws DomainError unless 0 < alpha <= 1.
  explicit RiskLevel(double alpha);

  double value() const noexcept { return alpha_; }
  bool operator==(const RiskLevel&) const = default;

private:
  double alpha_;
};

/// 1-based rank of the VaR order statistic among t samples: ceil((1 - alpha) t), at least 1.
std::size_t var_rank(std::size_t t, RiskLevel level);

/// Sorted multiset of scalar costs with its empirical distribution function.
class EmpiricalDistribution {
public:
  EmpiricalDistribution() = default;

  /// Copies and sorts; throws DomainError on a non-finite value.
  static EmpiricalDistribution from_samples(std::span<const double> samples);

  /// Sorted insertion (binary search + shift). Duplicates are kept.
  void insert(double value);

  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  std::span<const double> samples() const noexcept { return samples_; }

  /// Fraction of samples <= y.
  double eval(double y) const;

  /// Smallest sample y with eval(y) >= 1 - alpha; the minimum when alpha = 1.
  double var(RiskLevel level) const;

  /// Plug-in CVaR: nu + (1 / (alpha t)) sum_k [s_k - nu]_+ with nu = var(level).
  double cvar(RiskLevel level) const;

  double mean() const;

private:
  void require_nonempty() const;

  std::vector<double> samples_;
};

/// VaR/CVaR of an unsorted sample via selection, O(t). Reorders `scratch`.
/// Same order-statistic convention as EmpiricalDistribution.
double var_select(std::span<double> scratch, RiskLevel level);
std::pair<double, double> var_cvar_select(std::span<double> scratch, RiskLevel level);

/// Histogram approximation of the EDF: `bins` equal-width bins over [0, upper].
/// When `upper` is unset the largest sample is used. Samples outside the range
/// are counted in the nearest end bin.
struct BinnedEdf {
  std::size_t bins = 1000;
  std::optional<double> upper;

  bool operator==(const BinnedEdf&) const = default;
};

/// Right edge of the first bin whose cumulative count reaches var_rank(t, level).
double binned_var(std::span<const double> samples, RiskLevel level, const BinnedEdf& edf);

/// scale * U(lower, upper) + shift. scale = 0 is a point mass at `shift`.
struct ClosedFormDistribution {
  double lower = 0.0;
  double upper = 1.0;
  double scale = 1.0;
  double shift = 0.0;

  static ClosedFormDistribution uniform(double lower, double upper) { return {lower, upper, 1.0, 0.0}; }
  static ClosedFormDistribution scaled_uniform(double scale, double lower, double upper, double shift) {
    return {lower, upper, scale, shift};
  }

  /// Throws DomainError on upper <= lower, negative scale, or non-finite parameters.
  void validate() const;

  double sample(Rng& rng) const;
  double quantile(double p) const;
  /// Density on the support; +inf for a point mass.
  double density() const;
};

/// Exact (VaR_alpha, CVaR_alpha). For U(a, b): a + (1 - alpha)(b - a) and a + (1 - alpha/2)(b - a).
std::pair<double, double> closed_form_var_cvar(const ClosedFormDistribution& dist, RiskLevel level);

/// Half-width eps with P{|nu_hat - nu*| > eps} <= gamma_bar when the cost density is
/// bounded below by p_lower: eps = sqrt(ln(2 / gamma_bar)) / (p_lower sqrt(2 t)).
double dkw_confidence_width(std::size_t t, double gamma_bar, double p_lower);

/// Inverse of dkw_confidence_width: 2 exp(-2 t eps^2 p_lower^2), capped at 1.
double dkw_violation_bound(std::size_t t, double epsilon, double p_lower);

}  // namespace cvarlearn
