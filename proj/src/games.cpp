#include "cvarlearn/games.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cvarlearn/errors.hpp"

namespace cvarlearn {

namespace {

constexpr double kDegeneratePair = 1e-6;
constexpr double kDecompositionTolerance = 1e-9;

// Other agent in a two-player game.
constexpr std::size_t other(std::size_t agent) { return agent == 0 ? 1 : 0; }

void require_agent(const StochasticGame& game, std::size_t agent) {
  if (agent >= game.num_agents()) throw DomainError("agent index out of range");
}

Vector sample_point(const BoxActionSet& box, Rng& rng) {
  Vector x(box.dim());
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = uniform(rng, box.lower[k], box.upper[k]);
  return x;
}

ActionProfile sample_profile(std::span<const BoxActionSet> boxes, Rng& rng) {
  ActionProfile x;
  x.blocks.reserve(boxes.size());
  for (const auto& box : boxes) x.blocks.push_back(sample_point(box, rng));
  return x;
}

}  // namespace

// --- BoxActionSet / ActionProfile / NoiseHistory ---------------------------

void BoxActionSet::validate() const {
  if (lower.size() != upper.size() || lower.empty()) throw DomainError("box: bound dimensions differ or are empty");
  for (std::size_t k = 0; k < lower.size(); ++k) {
    if (!(lower[k] < upper[k])) throw DomainError("box: need lower < upper in every coordinate");
  }
}

bool BoxActionSet::contains(std::span<const double> x) const {
  if (x.size() != dim()) return false;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] >= lower[k] && x[k] <= upper[k])) return false;
  }
  return true;
}

Vector BoxActionSet::center() const {
  Vector c(dim());
  for (std::size_t k = 0; k < c.size(); ++k) c[k] = 0.5 * (lower[k] + upper[k]);
  return c;
}

double BoxActionSet::diameter() const {
  double sq = 0.0;
  for (std::size_t k = 0; k < dim(); ++k) sq += (upper[k] - lower[k]) * (upper[k] - lower[k]);
  return std::sqrt(sq);
}

ActionProfile ActionProfile::scalars(std::span<const double> values) {
  ActionProfile x;
  for (double v : values) x.blocks.push_back({v});
  return x;
}

Vector ActionProfile::flatten() const {
  Vector flat;
  for (const auto& b : blocks) flat.insert(flat.end(), b.begin(), b.end());
  return flat;
}

double ActionProfile::squared_distance(const ActionProfile& other) const {
  if (other.blocks.size() != blocks.size()) throw DomainError("action profiles have different agent counts");
  double sq = 0.0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].size() != other.blocks[i].size()) throw DomainError("action blocks have different dimensions");
    for (std::size_t k = 0; k < blocks[i].size(); ++k) {
      const double d = blocks[i][k] - other.blocks[i][k];
      sq += d * d;
    }
  }
  return sq;
}

void NoiseHistory::push(std::span<const double> xi) {
  if (xi.size() != dim_) throw DomainError("noise sample has wrong dimension");
  data_.insert(data_.end(), xi.begin(), xi.end());
}

// --- StochasticGame defaults -----------------------------------------------

std::size_t StochasticGame::noise_dim(std::size_t) const { return 1; }

void StochasticGame::evaluate_batch(std::size_t agent, const ActionProfile& x, const NoiseHistory& history,
                                    std::size_t first, std::span<double> costs, std::span<double> grads) const {
  const std::size_t dim = x.blocks[agent].size();
  for (std::size_t k = first; k < history.size(); ++k) {
    const std::size_t row = k - first;
    costs[row] = cost(agent, x, history[k]);
    grad(agent, x, history[k], grads.subspan(row * dim, dim));
  }
}

std::optional<Vector> StochasticGame::exact_risk_averse_gradient(std::size_t, const ActionProfile&,
                                                                 RiskLevel) const {
  return std::nullopt;
}

std::optional<double> StochasticGame::exact_var(std::size_t, const ActionProfile&, RiskLevel) const {
  return std::nullopt;
}

std::optional<ClosedFormDistribution> StochasticGame::cost_distribution(std::size_t, const ActionProfile&) const {
  return std::nullopt;
}

std::optional<ActionProfile> StochasticGame::nash_equilibrium(std::span<const RiskLevel>) const {
  return std::nullopt;
}

std::optional<double> StochasticGame::strong_monotonicity(std::span<const RiskLevel>) const { return std::nullopt; }

bool StochasticGame::is_feasible(const ActionProfile& x) const {
  const auto& boxes = action_sets();
  if (x.blocks.size() != boxes.size()) return false;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (!boxes[i].contains(x.blocks[i])) return false;
  }
  return true;
}

ActionProfile StochasticGame::box_center() const {
  ActionProfile x;
  for (const auto& box : action_sets()) x.blocks.push_back(box.center());
  return x;
}

std::pair<double, Vector> evaluate_cost_and_grad(const StochasticGame& game, std::size_t agent,
                                                 const ActionProfile& x, std::span<const double> xi) {
  require_agent(game, agent);
  if (!game.is_feasible(x)) throw DomainError("evaluate_cost_and_grad: action profile is infeasible");
  if (xi.size() != game.noise_dim(agent)) throw DomainError("evaluate_cost_and_grad: noise has wrong dimension");
  Vector g(x.blocks[agent].size());
  game.grad(agent, x, xi, g);
  return {game.cost(agent, x, xi), std::move(g)};
}

// --- Cournot -----------------------------------------------------------------

CournotGame::CournotGame() : boxes_{BoxActionSet::interval(0.0, 1.0), BoxActionSet::interval(0.0, 1.0)} {}

void CournotGame::sample_noise(std::size_t, Rng& rng, std::span<double> xi) const { xi[0] = uniform01(rng); }

double CournotGame::cost(std::size_t agent, const ActionProfile& x, std::span<const double> xi) const {
  const double own = x.blocks[agent][0];
  const double total = own + x.blocks[other(agent)][0];
  return 1.0 - (2.0 - total) * own + 0.2 * own + xi[0] * own;
}

void CournotGame::grad(std::size_t agent, const ActionProfile& x, std::span<const double> xi,
                       std::span<double> out) const {
  const double own = x.blocks[agent][0];
  out[0] = 2.0 * own + x.blocks[other(agent)][0] - 1.8 + xi[0];
}

void CournotGame::evaluate_batch(std::size_t agent, const ActionProfile& x, const NoiseHistory& history,
                                 std::size_t first, std::span<double> costs, std::span<double> grads) const {
  const double own = x.blocks[agent][0];
  const double rival = x.blocks[other(agent)][0];
  // Both are affine in xi: J = base + own * xi, grad = slope0 + xi.
  const double base = 1.0 - (2.0 - own - rival) * own + 0.2 * own;
  const double slope0 = 2.0 * own + rival - 1.8;
  for (std::size_t k = first; k < history.size(); ++k) {
    const double xi = history[k][0];
    costs[k - first] = base + xi * own;
    grads[k - first] = slope0 + xi;
  }
}

std::optional<Vector> CournotGame::exact_risk_averse_gradient(std::size_t agent, const ActionProfile& x,
                                                              RiskLevel level) const {
  // CVaR_alpha[xi x_i] = x_i (1 - alpha/2) for x_i >= 0.
  const double own = x.blocks[agent][0];
  return Vector{2.0 * own + x.blocks[other(agent)][0] - 0.8 - 0.5 * level.value()};
}

std::optional<double> CournotGame::exact_var(std::size_t agent, const ActionProfile& x, RiskLevel level) const {
  const double xi = 1.0 - level.value();
  return cost(agent, x, std::span<const double>(&xi, 1));
}

std::optional<ClosedFormDistribution> CournotGame::cost_distribution(std::size_t agent,
                                                                     const ActionProfile& x) const {
  const double zero = 0.0;
  const double base = cost(agent, x, std::span<const double>(&zero, 1));
  return ClosedFormDistribution::scaled_uniform(x.blocks[agent][0], 0.0, 1.0, base);
}

std::optional<ActionProfile> CournotGame::nash_equilibrium(std::span<const RiskLevel> levels) const {
  if (levels.size() != 2) throw DomainError("cournot: need one risk level per agent");
  return cournot_exact_ne(levels[0], levels[1]);
}

std::optional<double> CournotGame::strong_monotonicity(std::span<const RiskLevel>) const {
  // Pseudo-gradient Jacobian [[2, 1], [1, 2]] for every alpha; smallest eigenvalue 1.
  return 1.0;
}

ActionProfile cournot_exact_ne(RiskLevel alpha1, RiskLevel alpha2) {
  const double r1 = 0.8 + 0.5 * alpha1.value();
  const double r2 = 0.8 + 0.5 * alpha2.value();
  const double x1 = (2.0 * r1 - r2) / 3.0;
  const double x2 = (2.0 * r2 - r1) / 3.0;
  return ActionProfile::scalars({std::clamp(x1, 0.0, 1.0), std::clamp(x2, 0.0, 1.0)});
}

// --- Quadratic counterexample --------------------------------------------------

QuadraticCounterexampleGame::QuadraticCounterexampleGame(Params params) : params_(params) {
  if (!(params_.a > 0.0)) throw DomainError("quadratic-counterexample: a must be positive");
  if (!(params_.b > 0.0)) throw DomainError("quadratic-counterexample: b must be positive");
  if (!(params_.d > 0.0)) throw DomainError("quadratic-counterexample: d must be positive");
  if (!std::isfinite(params_.c)) throw DomainError("quadratic-counterexample: c must be finite");
  boxes_ = {BoxActionSet::interval(0.0, params_.b), BoxActionSet::interval(0.0, params_.b)};
}

void QuadraticCounterexampleGame::sample_noise(std::size_t, Rng& rng, std::span<double> xi) const {
  xi[0] = uniform(rng, 0.0, params_.d);
}

double QuadraticCounterexampleGame::cost(std::size_t agent, const ActionProfile& x,
                                         std::span<const double> xi) const {
  const auto& [a, b, c, d] = params_;
  const double own = x.blocks[agent][0];
  const double rival = x.blocks[other(agent)][0];
  return c + a * own * own + a * own * rival - a * b * own + (4.0 * a / (3.0 * d)) * own * rival * xi[0];
}

void QuadraticCounterexampleGame::grad(std::size_t agent, const ActionProfile& x, std::span<const double> xi,
                                       std::span<double> out) const {
  const auto& [a, b, c, d] = params_;
  const double own = x.blocks[agent][0];
  const double rival = x.blocks[other(agent)][0];
  out[0] = 2.0 * a * own + a * rival - a * b + (4.0 * a / (3.0 * d)) * rival * xi[0];
}

double QuadraticCounterexampleGame::gradient_bound() const {
  return 10.0 * params_.a * params_.b / 3.0;
}

double QuadraticCounterexampleGame::coupling(RiskLevel level) const {
  return params_.a + (4.0 * params_.a / 3.0) * (1.0 - 0.5 * level.value());
}

std::optional<Vector> QuadraticCounterexampleGame::exact_risk_averse_gradient(std::size_t agent,
                                                                              const ActionProfile& x,
                                                                              RiskLevel level) const {
  // Noise slope (4a/3d) x_i x_-i >= 0 on the box, so CVaR of the noise term is slope * d (1 - alpha/2).
  const auto& p = params_;
  const double own = x.blocks[agent][0];
  const double rival = x.blocks[other(agent)][0];
  return Vector{2.0 * p.a * own + coupling(level) * rival - p.a * p.b};
}

std::optional<double> QuadraticCounterexampleGame::exact_var(std::size_t agent, const ActionProfile& x,
                                                             RiskLevel level) const {
  const double xi = params_.d * (1.0 - level.value());
  return cost(agent, x, std::span<const double>(&xi, 1));
}

std::optional<ClosedFormDistribution> QuadraticCounterexampleGame::cost_distribution(std::size_t agent,
                                                                                     const ActionProfile& x) const {
  const double zero = 0.0;
  const double base = cost(agent, x, std::span<const double>(&zero, 1));
  const double slope = (4.0 * params_.a / (3.0 * params_.d)) * x.blocks[agent][0] * x.blocks[other(agent)][0];
  return ClosedFormDistribution::scaled_uniform(slope, 0.0, params_.d, base);
}

std::optional<ActionProfile> QuadraticCounterexampleGame::nash_equilibrium(std::span<const RiskLevel> levels) const {
  if (levels.size() != 2) throw DomainError("quadratic-counterexample: need one risk level per agent");
  // Stationarity: 2a x_1 + k_1 x_2 = ab, k_2 x_1 + 2a x_2 = ab.
  const double a = params_.a;
  const double k1 = coupling(levels[0]);
  const double k2 = coupling(levels[1]);
  const double det = 4.0 * a * a - k1 * k2;
  if (std::abs(det) < 1e-12 * a * a) return std::nullopt;
  const double rhs = a * params_.b;
  const double x1 = rhs * (2.0 * a - k1) / det;
  const double x2 = rhs * (2.0 * a - k2) / det;
  auto x = ActionProfile::scalars({x1, x2});
  if (!is_feasible(x)) return std::nullopt;
  return x;
}

std::optional<double> QuadraticCounterexampleGame::strong_monotonicity(std::span<const RiskLevel> levels) const {
  if (levels.size() != 2) throw DomainError("quadratic-counterexample: need one risk level per agent");
  // Smallest eigenvalue of the symmetric part of [[2a, k_1], [k_2, 2a]].
  const double m = 2.0 * params_.a - 0.5 * (coupling(levels[0]) + coupling(levels[1]));
  if (m <= 1e-12 * params_.a) return std::nullopt;
  return m;
}

// --- Registry ----------------------------------------------------------------

std::shared_ptr<const StochasticGame> make_game(const std::string& name, const GameParams& params) {
  if (name == "cournot") return std::make_shared<CournotGame>();
  if (name == "quadratic-counterexample") return std::make_shared<QuadraticCounterexampleGame>(params.quadratic);
  throw DomainError("unknown game '" + name + "'");
}

std::vector<std::string> game_names() { return {"cournot", "quadratic-counterexample"}; }

// --- Monotonicity probe --------------------------------------------------------

std::optional<double> monotonicity_ratio(const GradientOracle& oracle, const ActionProfile& x,
                                         const ActionProfile& x_prime) {
  const double sq = x.squared_distance(x_prime);
  if (std::sqrt(sq) < kDegeneratePair) return std::nullopt;
  double inner = 0.0;
  for (std::size_t i = 0; i < x.num_agents(); ++i) {
    const Vector g = oracle(i, x);
    const Vector g_prime = oracle(i, x_prime);
    for (std::size_t k = 0; k < g.size(); ++k) inner += (g[k] - g_prime[k]) * (x.blocks[i][k] - x_prime.blocks[i][k]);
  }
  return inner / sq;
}

double monotonicity_probe(const GradientOracle& oracle, std::span<const BoxActionSet> boxes, std::size_t num_pairs,
                          Rng& rng, std::optional<Vector> direction) {
  if (num_pairs == 0) throw DomainError("monotonicity_probe: need at least one pair");
  const std::size_t budget = 100 * num_pairs + 1000;
  double best = std::numeric_limits<double>::infinity();
  std::size_t accepted = 0;

  for (std::size_t attempt = 0; attempt < budget && accepted < num_pairs; ++attempt) {
    ActionProfile x = sample_profile(boxes, rng);
    ActionProfile x_prime;
    if (!direction) {
      x_prime = sample_profile(boxes, rng);
    } else {
      // Feasible step interval [s_lo, s_hi] for x + s * direction, then a uniform step in it.
      double s_lo = -std::numeric_limits<double>::infinity();
      double s_hi = std::numeric_limits<double>::infinity();
      std::size_t flat = 0;
      for (std::size_t i = 0; i < boxes.size(); ++i) {
        for (std::size_t k = 0; k < boxes[i].dim(); ++k, ++flat) {
          const double v = (*direction)[flat];
          if (v == 0.0) continue;
          const double a = (boxes[i].lower[k] - x.blocks[i][k]) / v;
          const double b = (boxes[i].upper[k] - x.blocks[i][k]) / v;
          s_lo = std::max(s_lo, std::min(a, b));
          s_hi = std::min(s_hi, std::max(a, b));
        }
      }
      if (!std::isfinite(s_lo) || !std::isfinite(s_hi)) continue;
      const double s = uniform(rng, s_lo, s_hi);
      x_prime = x;
      flat = 0;
      for (std::size_t i = 0; i < boxes.size(); ++i) {
        for (std::size_t k = 0; k < boxes[i].dim(); ++k, ++flat) {
          x_prime.blocks[i][k] = std::clamp(x.blocks[i][k] + s * (*direction)[flat], boxes[i].lower[k],
                                            boxes[i].upper[k]);
        }
      }
    }
    if (auto ratio = monotonicity_ratio(oracle, x, x_prime)) {
      best = std::min(best, *ratio);
      ++accepted;
    }
  }
  if (accepted < num_pairs) throw StateError("monotonicity_probe: degenerate pair budget exhausted");
  return best;
}

GradientOracle exact_gradient_oracle(std::shared_ptr<const StochasticGame> game, std::vector<RiskLevel> levels) {
  return [game = std::move(game), levels = std::move(levels)](std::size_t agent, const ActionProfile& x) {
    auto g = game->exact_risk_averse_gradient(agent, x, levels.at(agent));
    if (!g) throw UnsupportedError(game->name() + ": no exact risk-averse gradient");
    return *g;
  };
}

// --- Decomposition check -----------------------------------------------------

bool decomposition_check(const StochasticGame& game, std::size_t num_samples, Rng& rng) {
  const auto& boxes = game.action_sets();
  for (std::size_t s = 0; s < num_samples; ++s) {
    for (std::size_t i = 0; i < game.num_agents(); ++i) {
      Vector xi(game.noise_dim(i));
      Vector xi_prime(game.noise_dim(i));
      game.sample_noise(i, rng, xi);
      game.sample_noise(i, rng, xi_prime);

      const ActionProfile x = sample_profile(boxes, rng);
      ActionProfile x_alt = sample_profile(boxes, rng);
      x_alt.blocks[i] = x.blocks[i];

      const double diff = game.cost(i, x, xi) - game.cost(i, x, xi_prime);
      const double diff_alt = game.cost(i, x_alt, xi) - game.cost(i, x_alt, xi_prime);
      if (std::abs(diff - diff_alt) >= kDecompositionTolerance) return false;
    }
  }
  return true;
}

}  // namespace cvarlearn
