#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cvarlearn/distributions.hpp"
#include "cvarlearn/games.hpp"
#include "cvarlearn/rng.hpp"
#include "cvarlearn/trace.hpp"

namespace cvarlearn {

/// Prefix means A_T = (1/T) sum_{t<=T} e_t.
std::vector<double> running_average(std::span<const double> series);

/// Per-episode ||x_t - x*||^2 of a trace. Throws UnsupportedError without x*.
std::vector<double> squared_errors(const RunTrace& trace);

/// Running average of squared_errors(trace).
std::vector<double> time_averaged_error(const RunTrace& trace);

/// |nu_{i,t} - nu*_{i,t}| for one agent. Throws UnsupportedError without nu*.
std::vector<double> var_errors(const RunTrace& trace, std::size_t agent);

/// Per-episode mean and sample standard deviation (R - 1 denominator) over R trials.
struct AggregateTrace {
  std::string label;
  std::vector<double> mean;
  std::vector<double> stddev;
  std::size_t trials = 0;
};

/// Series must be nonempty and of equal length. One trial gives zero deviation.
AggregateTrace aggregate(std::string label, std::span<const std::vector<double>> series);

struct BoundReport {
  std::string name;  // lemma3 | lemma4 | theorem1 | theorem1-rate
  std::string subject;
  double empirical = 0.0;
  double theoretical = 0.0;
  bool pass = false;
};

/// Empirical frequency of |nu_hat - nu*| > epsilon over `repeats` sample sets of
/// size t from `family`, against 2 exp(-2 t eps^2 p^2). Passes when the
/// frequency is at most the bound plus two binomial standard errors.
BoundReport validate_lemma3(const ClosedFormDistribution& family, RiskLevel level, std::size_t t,
                            std::size_t repeats, double epsilon, double p_lower, Rng& rng);

/// Density-derived constants of a trace: p_lower = min density, lipschitz = max
/// density of the agent's cost law over all recorded actions.
struct DensityConstants {
  double p_lower = 0.0;
  double lipschitz = 0.0;
};
DensityConstants density_constants(const StochasticGame& game, const RunTrace& trace, std::size_t agent);

/// Running sum of the bias proxy (B L0 / alpha) |nu - nu*| against
/// sqrt(2) B L0 / (alpha p) sqrt(ln(2T / gamma)) sqrt(t) at every prefix t.
/// The report carries the prefix with the largest sum-to-bound ratio, so
/// pass holds exactly when empirical <= theoretical.
BoundReport validate_lemma4(const RunTrace& trace, std::size_t agent, double lipschitz, double gradient_bound,
                            double p_lower, double gamma);

/// OLS slope of log(series[T-1]) on log T for T in [first, last] (1-based episodes).
double fit_rate(std::span<const double> series, std::size_t first, std::size_t last);

/// (S1, S2) = (sum 1/alpha_i, sum 1/alpha_i^2).
std::pair<double, double> risk_sums(std::span<const RiskLevel> levels);

struct ConvergenceConstants {
  double diameter = 0.0;       // D
  double gradient_bound = 0.0; // B
  double eta = 0.0;
  double monotonicity = 0.0;   // m
  double lipschitz = 0.0;      // L0
  double p_lower = 0.0;
  double gamma = 0.05;
};

/// Right-hand side of the time-averaged error bound at horizon T:
/// D^2/(2 eta m T) + eta B^2 S2/(2m) + sqrt(2) D B L0 S1/(m p) sqrt(ln(2T/gamma)) / sqrt(T).
double convergence_bound(const ConvergenceConstants& k, std::span<const RiskLevel> levels, std::size_t episodes);

}  // namespace cvarlearn
