#include "cvarlearn/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "cvarlearn/errors.hpp"

namespace cvarlearn {

RiskLevel::RiskLevel(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw DomainError("risk level must lie in (0, 1], got " + std::to_string(alpha));
  }
}

std::size_t var_rank(std::size_t t, RiskLevel level) {
  if (t == 0) throw StateError("var_rank: no samples");
  const double q = (1.0 - level.value()) * static_cast<double>(t);
  // (1 - 0.4) * 10 must give rank 6, not 7: absorb representation error before ceil.
  auto k = static_cast<std::size_t>(std::ceil(q - 1e-9 * std::max(1.0, q)));
  return std::clamp<std::size_t>(k, 1, t);
}

EmpiricalDistribution EmpiricalDistribution::from_samples(std::span<const double> samples) {
  EmpiricalDistribution dist;
  for (double s : samples) {
    if (!std::isfinite(s)) throw DomainError("empirical distribution: non-finite sample");
  }
  dist.samples_.assign(samples.begin(), samples.end());
  std::sort(dist.samples_.begin(), dist.samples_.end());
  return dist;
}

void EmpiricalDistribution::insert(double value) {
  if (!std::isfinite(value)) throw DomainError("empirical distribution: non-finite sample");
  samples_.insert(std::upper_bound(samples_.begin(), samples_.end(), value), value);
}

void EmpiricalDistribution::require_nonempty() const {
  if (samples_.empty()) throw StateError("empirical distribution is empty");
}

double EmpiricalDistribution::eval(double y) const {
  require_nonempty();
  const auto below = std::upper_bound(samples_.begin(), samples_.end(), y) - samples_.begin();
  return static_cast<double>(below) / static_cast<double>(samples_.size());
}

double EmpiricalDistribution::var(RiskLevel level) const {
  require_nonempty();
  return samples_[var_rank(samples_.size(), level) - 1];
}

double EmpiricalDistribution::cvar(RiskLevel level) const {
  const double nu = var(level);
  double excess = 0.0;
  // Sorted: only the upper tail contributes.
  for (auto it = std::upper_bound(samples_.begin(), samples_.end(), nu); it != samples_.end(); ++it) {
    excess += *it - nu;
  }
  return nu + excess / (level.value() * static_cast<double>(samples_.size()));
}

double EmpiricalDistribution::mean() const {
  require_nonempty();
  return std::accumulate(samples_.begin(), samples_.end(), 0.0) / static_cast<double>(samples_.size());
}

double var_select(std::span<double> scratch, RiskLevel level) {
  if (scratch.empty()) throw StateError("var_select: no samples");
  const auto nth = scratch.begin() + static_cast<std::ptrdiff_t>(var_rank(scratch.size(), level) - 1);
  std::nth_element(scratch.begin(), nth, scratch.end());
  return *nth;
}

std::pair<double, double> var_cvar_select(std::span<double> scratch, RiskLevel level) {
  const double nu = var_select(scratch, level);
  double excess = 0.0;
  for (double s : scratch) excess += std::max(s - nu, 0.0);
  return {nu, nu + excess / (level.value() * static_cast<double>(scratch.size()))};
}

double binned_var(std::span<const double> samples, RiskLevel level, const BinnedEdf& edf) {
  if (samples.empty()) throw StateError("binned_var: no samples");
  if (edf.bins == 0) throw DomainError("binned_var: bin count must be positive");
  const double upper = edf.upper ? *edf.upper : *std::max_element(samples.begin(), samples.end());
  if (!(upper > 0.0)) throw DomainError("binned_var: histogram upper edge must be positive");

  const double width = upper / static_cast<double>(edf.bins);
  std::vector<std::size_t> counts(edf.bins, 0);
  for (double s : samples) {
    const double pos = std::floor(s / width);
    const auto idx = pos <= 0.0 ? std::size_t{0} : std::min(static_cast<std::size_t>(pos), edf.bins - 1);
    ++counts[idx];
  }
  const std::size_t rank = var_rank(samples.size(), level);
  std::size_t cumulative = 0;
  for (std::size_t b = 0; b < edf.bins; ++b) {
    cumulative += counts[b];
    if (cumulative >= rank) return width * static_cast<double>(b + 1);
  }
  return upper;
}

void ClosedFormDistribution::validate() const {
  if (!std::isfinite(lower) || !std::isfinite(upper) || !std::isfinite(scale) || !std::isfinite(shift)) {
    throw DomainError("closed-form distribution: non-finite parameter");
  }
  if (!(upper > lower)) throw DomainError("closed-form distribution: need upper > lower");
  if (scale < 0.0) throw DomainError("closed-form distribution: negative scale is not supported");
}

double ClosedFormDistribution::sample(Rng& rng) const {
  return shift + scale * cvarlearn::uniform(rng, lower, upper);
}

double ClosedFormDistribution::quantile(double p) const {
  return shift + scale * (lower + p * (upper - lower));
}

double ClosedFormDistribution::density() const {
  if (scale == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / (scale * (upper - lower));
}

std::pair<double, double> closed_form_var_cvar(const ClosedFormDistribution& dist, RiskLevel level) {
  dist.validate();
  const double alpha = level.value();
  const double width = dist.upper - dist.lower;
  const double var = dist.lower + (1.0 - alpha) * width;
  const double cvar = dist.lower + (1.0 - 0.5 * alpha) * width;
  return {dist.shift + dist.scale * var, dist.shift + dist.scale * cvar};
}

double dkw_confidence_width(std::size_t t, double gamma_bar, double p_lower) {
  if (t == 0) throw DomainError("dkw_confidence_width: t must be positive");
  if (!(gamma_bar > 0.0 && gamma_bar < 1.0)) throw DomainError("dkw_confidence_width: gamma_bar must lie in (0, 1)");
  if (!(p_lower > 0.0)) throw DomainError("dkw_confidence_width: p_lower must be positive");
  return std::sqrt(std::log(2.0 / gamma_bar)) / (p_lower * std::sqrt(2.0 * static_cast<double>(t)));
}

double dkw_violation_bound(std::size_t t, double epsilon, double p_lower) {
  const double tt = static_cast<double>(t);
  return std::min(1.0, 2.0 * std::exp(-2.0 * tt * epsilon * epsilon * p_lower * p_lower));
}

}  // namespace cvarlearn
