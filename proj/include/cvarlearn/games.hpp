#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cvarlearn/distributions.hpp"
#include "cvarlearn/rng.hpp"

namespace cvarlearn {

using Vector = std::vector<double>;

/// Per-agent box X_i = [lower, upper] (componentwise).
struct BoxActionSet {
  Vector lower;
  Vector upper;

  static BoxActionSet interval(double lo, double hi) { return {{lo}, {hi}}; }

  std::size_t dim() const noexcept { return lower.size(); }
  /// Throws DomainError unless lower < upper componentwise and dimensions agree.
  void validate() const;
  bool contains(std::span<const double> x) const;
  Vector center() const;
  /// Euclidean diameter of the box.
  double diameter() const;

  bool operator==(const BoxActionSet&) const = default;
};

/// Joint action x = (x_1, ..., x_N); one block per agent.
struct ActionProfile {
  std::vector<Vector> blocks;

  /// One scalar action per agent.
  static ActionProfile scalars(std::span<const double> values);
  static ActionProfile scalars(std::initializer_list<double> values) {
    return scalars(std::span<const double>(values.begin(), values.size()));
  }

  std::size_t num_agents() const noexcept { return blocks.size(); }
  /// Concatenation of all blocks.
  Vector flatten() const;
  double squared_distance(const ActionProfile& other) const;

  bool operator==(const ActionProfile&) const = default;
};

/// Realizations xi_i^1, ..., xi_i^t of one agent's noise, stored contiguously.
class NoiseHistory {
public:
  explicit NoiseHistory(std::size_t dim = 1) : dim_(dim) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return dim_ == 0 ? 0 : data_.size() / dim_; }
  bool empty() const noexcept { return data_.empty(); }

  void push(std::span<const double> xi);
  std::span<const double> operator[](std::size_t k) const { return {data_.data() + k * dim_, dim_}; }
  void reserve(std::size_t n) { data_.reserve(n * dim_); }

private:
  std::size_t dim_;
  Vector data_;
};

/// Stochastic game with per-agent costs J_i(x, xi_i) and partial gradients.
///
/// Built-in games are immutable after construction and safe to share across
/// threads. The optional closed forms (exact risk-averse gradient, exact VaR,
/// equilibrium, cost law) power the unbiased baseline and the validators;
/// games without them still run the learning algorithm.
class StochasticGame {
public:
  virtual ~StochasticGame() = default;

  virtual std::string name() const = 0;
  virtual std::size_t num_agents() const = 0;
  virtual const std::vector<BoxActionSet>& action_sets() const = 0;
  virtual std::size_t noise_dim(std::size_t agent) const;

  virtual void sample_noise(std::size_t agent, Rng& rng, std::span<double> xi) const = 0;
  virtual double cost(std::size_t agent, const ActionProfile& x, std::span<const double> xi) const = 0;
  /// Writes the partial gradient with respect to the agent's own block into `out`.
  virtual void grad(std::size_t agent, const ActionProfile& x, std::span<const double> xi,
                    std::span<double> out) const = 0;

  /// B with ||grad_i J_i(x, xi)|| <= B on the feasible set and noise support.
  virtual double gradient_bound() const = 0;

  /// Costs and gradients at x for noise samples [first, history.size()).
  /// `costs` has one entry per sample, `grads` is row-major (sample x block dim).
  virtual void evaluate_batch(std::size_t agent, const ActionProfile& x, const NoiseHistory& history,
                              std::size_t first, std::span<double> costs, std::span<double> grads) const;

  virtual std::optional<Vector> exact_risk_averse_gradient(std::size_t agent, const ActionProfile& x,
                                                           RiskLevel level) const;
  virtual std::optional<double> exact_var(std::size_t agent, const ActionProfile& x, RiskLevel level) const;
  /// Law of J_i(x, xi_i) when it is a (scaled) uniform.
  virtual std::optional<ClosedFormDistribution> cost_distribution(std::size_t agent, const ActionProfile& x) const;
  /// Unique risk-averse Nash equilibrium, when it exists in closed form.
  virtual std::optional<ActionProfile> nash_equilibrium(std::span<const RiskLevel> levels) const;
  /// Declared strong-monotonicity constant m of the risk-averse game.
  virtual std::optional<double> strong_monotonicity(std::span<const RiskLevel> levels) const;

  bool is_feasible(const ActionProfile& x) const;
  ActionProfile box_center() const;
};

/// Checks feasibility, then returns (J_i(x, xi), grad_i J_i(x, xi)).
std::pair<double, Vector> evaluate_cost_and_grad(const StochasticGame& game, std::size_t agent,
                                                 const ActionProfile& x, std::span<const double> xi);

/// Two-firm Cournot market: J_i = 1 - (2 - sum_j x_j) x_i + 0.2 x_i + xi_i x_i,
/// xi_i ~ U(0, 1), X_i = [0, 1].
class CournotGame final : public StochasticGame {
public:
  CournotGame();

  std::string name() const override { return "cournot"; }
  std::size_t num_agents() const override { return 2; }
  const std::vector<BoxActionSet>& action_sets() const override { return boxes_; }

  void sample_noise(std::size_t agent, Rng& rng, std::span<double> xi) const override;
  double cost(std::size_t agent, const ActionProfile& x, std::span<const double> xi) const override;
  void grad(std::size_t agent, const ActionProfile& x, std::span<const double> xi,
            std::span<double> out) const override;
  double gradient_bound() const override { return 2.2; }
  void evaluate_batch(std::size_t agent, const ActionProfile& x, const NoiseHistory& history, std::size_t first,
                      std::span<double> costs, std::span<double> grads) const override;

  std::optional<Vector> exact_risk_averse_gradient(std::size_t agent, const ActionProfile& x,
                                                   RiskLevel level) const override;
  std::optional<double> exact_var(std::size_t agent, const ActionProfile& x, RiskLevel level) const override;
  std::optional<ClosedFormDistribution> cost_distribution(std::size_t agent, const ActionProfile& x) const override;
  std::optional<ActionProfile> nash_equilibrium(std::span<const RiskLevel> levels) const override;
  std::optional<double> strong_monotonicity(std::span<const RiskLevel> levels) const override;

private:
  std::vector<BoxActionSet> boxes_;
};

/// Two-agent quadratic game whose risk-neutral version is strongly monotone but
/// whose CVaR_0.5 version has a whole line of equilibria (x_1 + x_2 = b/2):
/// J_i = c + a x_i^2 + a x_i x_-i - a b x_i + (4a / 3d) x_i x_-i xi_i, xi_i ~ U(0, d), X_i = [0, b].
class QuadraticCounterexampleGame final : public StochasticGame {
public:
  struct Params {
    double a = 1.0;
    double b = 1.0;
    double c = 0.0;
    double d = 1.0;
    bool operator==(const Params&) const = default;
  };

  explicit QuadraticCounterexampleGame(Params params);

  std::string name() const override { return "quadratic-counterexample"; }
  std::size_t num_agents() const override { return 2; }
  const std::vector<BoxActionSet>& action_sets() const override { return boxes_; }
  const Params& params() const noexcept { return params_; }

  void sample_noise(std::size_t agent, Rng& rng, std::span<double> xi) const override;
  double cost(std::size_t agent, const ActionProfile& x, std::span<const double> xi) const override;
  void grad(std::size_t agent, const ActionProfile& x, std::span<const double> xi,
            std::span<double> out) const override;
  /// 10ab/3, attained at x = (b, b), xi = d.
  double gradient_bound() const override;

  std::optional<Vector> exact_risk_averse_gradient(std::size_t agent, const ActionProfile& x,
                                                   RiskLevel level) const override;
  std::optional<double> exact_var(std::size_t agent, const ActionProfile& x, RiskLevel level) const override;
  std::optional<ClosedFormDistribution> cost_distribution(std::size_t agent, const ActionProfile& x) const override;
  /// Empty when the equilibrium is not unique (e.g. alpha = (0.5, 0.5)) or not interior.
  std::optional<ActionProfile> nash_equilibrium(std::span<const RiskLevel> levels) const override;
  std::optional<double> strong_monotonicity(std::span<const RiskLevel> levels) const override;

private:
  /// Coefficient of x_-i in grad_i C_i: a + (4a/3)(1 - alpha/2).
  double coupling(RiskLevel level) const;

  Params params_;
  std::vector<BoxActionSet> boxes_;
};

/// Closed-form equilibrium of the Cournot game: solves 2 x_i + x_-i = 0.8 + alpha_i / 2.
ActionProfile cournot_exact_ne(RiskLevel alpha1, RiskLevel alpha2);

struct GameParams {
  QuadraticCounterexampleGame::Params quadratic;
};

/// Registered names: "cournot", "quadratic-counterexample". Throws DomainError otherwise.
std::shared_ptr<const StochasticGame> make_game(const std::string& name, const GameParams& params = {});
std::vector<std::string> game_names();

/// Pseudo-gradient oracle: agent's partial gradient at x.
using GradientOracle = std::function<Vector(std::size_t agent, const ActionProfile& x)>;

/// sum_i <v_i(x) - v_i(x'), x_i - x'_i> / ||x - x'||^2, or empty when ||x - x'|| < 1e-6.
std::optional<double> monotonicity_ratio(const GradientOracle& oracle, const ActionProfile& x,
                                         const ActionProfile& x_prime);

/// Minimum monotonicity ratio over `num_pairs` random feasible pairs: a sampling
/// upper estimate of the strong-monotonicity constant m. When `direction` (a
/// flattened joint vector) is given, pairs are drawn along that direction only.
/// Throws StateError if the degenerate-pair budget runs out.
double monotonicity_probe(const GradientOracle& oracle, std::span<const BoxActionSet> boxes, std::size_t num_pairs,
                          Rng& rng, std::optional<Vector> direction = std::nullopt);

/// Oracle backed by a game's exact risk-averse gradients at the given levels.
GradientOracle exact_gradient_oracle(std::shared_ptr<const StochasticGame> game, std::vector<RiskLevel> levels);

/// Numerical test that J_i(x, xi) - J_i(x, xi') does not depend on x_-i
/// (noise enters only through the agent's own action). Tolerance 1e-9.
bool decomposition_check(const StochasticGame& game, std::size_t num_samples, Rng& rng);

}  // namespace cvarlearn
