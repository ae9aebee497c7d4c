#include "cvarlearn/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cvarlearn/errors.hpp"

namespace cvarlearn {

std::vector<double> running_average(std::span<const double> series) {
  std::vector<double> out(series.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < series.size(); ++k) {
    sum += series[k];
    out[k] = sum / static_cast<double>(k + 1);
  }
  return out;
}

std::vector<double> squared_errors(const RunTrace& trace) {
  if (!trace.has_error()) throw UnsupportedError("trace has no distance to an equilibrium");
  std::vector<double> out;
  out.reserve(trace.records.size());
  for (const auto& r : trace.records) out.push_back(*r.sq_error);
  return out;
}

std::vector<double> time_averaged_error(const RunTrace& trace) { return running_average(squared_errors(trace)); }

std::vector<double> var_errors(const RunTrace& trace, std::size_t agent) {
  if (!trace.has_true_var()) throw UnsupportedError("trace has no true VaR values");
  std::vector<double> out;
  out.reserve(trace.records.size());
  for (const auto& r : trace.records) out.push_back(std::abs(r.var_estimate.at(agent) - r.true_var.at(agent)));
  return out;
}

AggregateTrace aggregate(std::string label, std::span<const std::vector<double>> series) {
  if (series.empty()) throw DomainError("aggregate: no trials");
  const std::size_t len = series.front().size();
  for (const auto& s : series) {
    if (s.size() != len) throw DomainError("aggregate: trials have different lengths");
  }
  AggregateTrace agg;
  agg.label = std::move(label);
  agg.trials = series.size();
  agg.mean.assign(len, 0.0);
  agg.stddev.assign(len, 0.0);
  const double r = static_cast<double>(series.size());
  for (std::size_t t = 0; t < len; ++t) {
    double sum = 0.0;
    for (const auto& s : series) sum += s[t];
    const double mean = sum / r;
    double ss = 0.0;
    for (const auto& s : series) ss += (s[t] - mean) * (s[t] - mean);
    agg.mean[t] = mean;
    agg.stddev[t] = series.size() > 1 ? std::sqrt(ss / (r - 1.0)) : 0.0;
  }
  return agg;
}

BoundReport validate_lemma3(const ClosedFormDistribution& family, RiskLevel level, std::size_t t,
                            std::size_t repeats, double epsilon, double p_lower, Rng& rng) {
  family.validate();
  if (t == 0 || repeats == 0) throw DomainError("validate_lemma3: t and repeats must be positive");
  const double truth = closed_form_var_cvar(family, level).first;

  std::vector<double> samples(t);
  std::size_t violations = 0;
  for (std::size_t r = 0; r < repeats; ++r) {
    for (double& s : samples) s = family.sample(rng);
    if (std::abs(var_select(samples, level) - truth) > epsilon) ++violations;
  }
  BoundReport report;
  report.name = "lemma3";
  report.empirical = static_cast<double>(violations) / static_cast<double>(repeats);
  report.theoretical = dkw_violation_bound(t, epsilon, p_lower);
  const double stderr_ = std::sqrt(report.theoretical * (1.0 - report.theoretical) / static_cast<double>(repeats));
  report.pass = report.empirical <= report.theoretical + 2.0 * stderr_;
  return report;
}

DensityConstants density_constants(const StochasticGame& game, const RunTrace& trace, std::size_t agent) {
  if (trace.records.empty()) throw DomainError("density_constants: empty trace");
  DensityConstants k{std::numeric_limits<double>::infinity(), 0.0};
  for (const auto& r : trace.records) {
    const auto law = game.cost_distribution(agent, r.x);
    if (!law) throw UnsupportedError(game.name() + ": cost law is not available in closed form");
    const double density = law->density();
    k.p_lower = std::min(k.p_lower, density);
    k.lipschitz = std::max(k.lipschitz, density);
  }
  return k;
}

BoundReport validate_lemma4(const RunTrace& trace, std::size_t agent, double lipschitz, double gradient_bound,
                            double p_lower, double gamma) {
  const auto errors = var_errors(trace, agent);
  if (!(p_lower > 0.0) || !(gamma > 0.0 && gamma < 1.0)) throw DomainError("validate_lemma4: need p_lower > 0, gamma in (0, 1)");
  const double alpha = trace.alphas.at(agent);
  const double total = static_cast<double>(errors.size());
  const double proxy_scale = gradient_bound * lipschitz / alpha;
  const double bound_scale = std::sqrt(2.0) * gradient_bound * lipschitz / (alpha * p_lower) *
                             std::sqrt(std::log(2.0 * total / gamma));

  BoundReport report;
  report.name = "lemma4";
  double sum = 0.0;
  double worst_ratio = -1.0;
  for (std::size_t k = 0; k < errors.size(); ++k) {
    sum += proxy_scale * errors[k];
    const double bound = bound_scale * std::sqrt(static_cast<double>(k + 1));
    const double ratio = sum / bound;
    if (ratio > worst_ratio) {
      worst_ratio = ratio;
      report.empirical = sum;
      report.theoretical = bound;
    }
  }
  report.pass = report.empirical <= report.theoretical;
  return report;
}

double fit_rate(std::span<const double> series, std::size_t first, std::size_t last) {
  if (first == 0 || last < first + 1 || last > series.size()) throw DomainError("fit_rate: invalid window");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(last - first + 1);
  for (std::size_t t = first; t <= last; ++t) {
    const double v = series[t - 1];
    if (!(v > 0.0)) throw DomainError("fit_rate: series must be positive over the window");
    const double lx = std::log(static_cast<double>(t));
    const double ly = std::log(v);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::pair<double, double> risk_sums(std::span<const RiskLevel> levels) {
  double s1 = 0.0, s2 = 0.0;
  for (const auto& level : levels) {
    const double inv = 1.0 / level.value();
    s1 += inv;
    s2 += inv * inv;
  }
  return {s1, s2};
}

double convergence_bound(const ConvergenceConstants& k, std::span<const RiskLevel> levels, std::size_t episodes) {
  if (episodes == 0 || !(k.eta > 0.0) || !(k.monotonicity > 0.0) || !(k.p_lower > 0.0)) {
    throw DomainError("convergence_bound: need T > 0, eta > 0, m > 0, p_lower > 0");
  }
  const auto [s1, s2] = risk_sums(levels);
  const double t = static_cast<double>(episodes);
  const double transient = k.diameter * k.diameter / (2.0 * k.eta * k.monotonicity * t);
  const double variance = k.eta * k.gradient_bound * k.gradient_bound * s2 / (2.0 * k.monotonicity);
  const double bias = std::sqrt(2.0) * k.diameter * k.gradient_bound * k.lipschitz * s1 / (k.monotonicity * k.p_lower) *
                      std::sqrt(std::log(2.0 * t / k.gamma)) / std::sqrt(t);
  return transient + variance + bias;
}

}  // namespace cvarlearn
