#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cvarlearn/distributions.hpp"
#include "cvarlearn/games.hpp"
#include "cvarlearn/trace.hpp"

namespace cvarlearn {

/// CVaR gradient estimate g_{i,t} with the VaR level it was built from.
struct GradientEstimate {
  Vector g;
  double var_used = 0.0;
  /// Samples with J >= var_used.
  std::size_t tail_count = 0;
};

/// Step size rule. `theory` is eta = (D / B) T^{-1/2} with D the largest box
/// diameter and B the game's gradient bound.
class StepSchedule {
public:
  static StepSchedule theory() { return StepSchedule(std::nullopt); }
  /// Throws DomainError on a negative or non-finite step.
  static StepSchedule constant(double eta);

  bool is_theory() const noexcept { return !eta_; }
  double step_size(const StochasticGame& game, std::size_t episodes) const;

  bool operator==(const StepSchedule&) const = default;

private:
  explicit StepSchedule(std::optional<double> eta) : eta_(eta) {}
  std::optional<double> eta_;
};

/// Knobs that depart from the exact estimator. Defaults reproduce it.
struct EstimatorOptions {
  /// Histogram EDF instead of exact order statistics.
  std::optional<BinnedEdf> binned;
  /// Re-evaluate only the last `window` noise samples each episode.
  std::optional<std::size_t> window;

  bool operator==(const EstimatorOptions&) const = default;
};

/// Scratch buffers reused across episodes.
struct EstimatorWorkspace {
  std::vector<double> costs;
  std::vector<double> grads;
  std::vector<double> scratch;
};

/// Re-evaluates J_i and grad_i J_i at x for every stored noise sample, sets
/// nu_{i,t} to the empirical VaR of those costs and returns
/// (1 / (t alpha)) sum_k 1{J_k >= nu} grad_k.
GradientEstimate cvar_gradient_estimate(const StochasticGame& game, std::size_t agent, const ActionProfile& x,
                                        const NoiseHistory& history, RiskLevel level,
                                        const EstimatorOptions& options = {}, EstimatorWorkspace* workspace = nullptr);

/// Same weighting with nu fixed to `exact_var`, the true VaR of J_i(x, xi_i).
GradientEstimate unbiased_cvar_gradient(const StochasticGame& game, std::size_t agent, const ActionProfile& x,
                                        const NoiseHistory& history, RiskLevel level, double exact_var,
                                        const EstimatorOptions& options = {},
                                        EstimatorWorkspace* workspace = nullptr);

/// Euclidean projection onto a box (componentwise clamp).
Vector project_box(std::span<const double> x, const BoxActionSet& box);

/// Everything one agent carries between episodes.
struct LearnerState {
  std::size_t agent = 0;
  Vector action;
  RiskLevel level{1.0};
  NoiseHistory history;
  Rng rng;
  double step = 0.0;
};

enum class Algorithm { risk_averse_fo, unbiased_fo };

const char* algorithm_name(Algorithm algorithm);

struct RunSettings {
  std::vector<RiskLevel> levels;
  std::size_t episodes = 1;
  StepSchedule schedule = StepSchedule::theory();
  /// Box center when unset.
  std::optional<ActionProfile> x0;
  std::uint64_t seed = 0;
  EstimatorOptions estimator;
};

/// Projected CVaR-gradient play: every episode each agent draws one fresh noise
/// sample, builds its gradient estimate over its whole history at the shared
/// joint action, and all agents then step simultaneously.
RunTrace run_algorithm1(const StochasticGame& game, const RunSettings& settings);

/// The same loop with the game's exact VaR in place of the empirical one.
/// Throws UnsupportedError when the game has no exact VaR.
RunTrace run_unbiased_baseline(const StochasticGame& game, const RunSettings& settings);

RunTrace run_algorithm(Algorithm algorithm, const StochasticGame& game, const RunSettings& settings);

}  // namespace cvarlearn
