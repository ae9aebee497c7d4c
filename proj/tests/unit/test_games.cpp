#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "cvarlearn/distributions.hpp"
#include "cvarlearn/errors.hpp"
#include "cvarlearn/games.hpp"

using namespace cvarlearn;
using Catch::Approx;

namespace {

// Noise is drawn but never used.
class DeterministicGame final : public StochasticGame {
public:
  std::string name() const override { return "deterministic"; }
  std::size_t num_agents() const override { return 2; }
  const std::vector<BoxActionSet>& action_sets() const override { return boxes_; }
  void sample_noise(std::size_t, Rng& rng, std::span<double> xi) const override { xi[0] = uniform01(rng); }
  double cost(std::size_t i, const ActionProfile& x, std::span<const double>) const override {
    const double own = x.blocks[i][0];
    const double rival = x.blocks[1 - i][0];
    return own * own + 3.0 * own * rival;
  }
  void grad(std::size_t i, const ActionProfile& x, std::span<const double>, std::span<double> out) const override {
    out[0] = 2.0 * x.blocks[i][0] + 3.0 * x.blocks[1 - i][0];
  }
  double gradient_bound() const override { return 5.0; }

private:
  std::vector<BoxActionSet> boxes_{BoxActionSet::interval(0, 1), BoxActionSet::interval(0, 1)};
};

double cvar_of(std::vector<double> costs, double alpha) {
  return var_cvar_select(costs, RiskLevel(alpha)).second;
}

// Best response of agent i by golden-section search on Monte Carlo CVaR (common noise).
double best_response(const StochasticGame& game, std::size_t agent, ActionProfile x, const std::vector<double>& noise,
                     double alpha) {
  auto objective = [&](double a) {
    x.blocks[agent][0] = a;
    std::vector<double> costs;
    costs.reserve(noise.size());
    for (double xi : noise) costs.push_back(game.cost(agent, x, std::span<const double>(&xi, 1)));
    return cvar_of(std::move(costs), alpha);
  };
  double lo = 0.0, hi = 1.0;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 40; ++it) {
    const double m1 = hi - phi * (hi - lo);
    const double m2 = lo + phi * (hi - lo);
    if (objective(m1) < objective(m2)) hi = m2; else lo = m1;
  }
  return 0.5 * (lo + hi);
}

// Symmetric-part minimum eigenvalue of a 2x2 Jacobian estimated by central differences.
double min_symmetric_eigenvalue(const GradientOracle& oracle, const ActionProfile& at) {
  const double h = 1e-5;
  double j[2][2];
  for (std::size_t c = 0; c < 2; ++c) {
    ActionProfile plus = at, minus = at;
    plus.blocks[c][0] += h;
    minus.blocks[c][0] -= h;
    for (std::size_t r = 0; r < 2; ++r) j[r][c] = (oracle(r, plus)[0] - oracle(r, minus)[0]) / (2 * h);
  }
  const double a = j[0][0], d = j[1][1], b = 0.5 * (j[0][1] + j[1][0]);
  return 0.5 * (a + d) - std::sqrt(0.25 * (a - d) * (a - d) + b * b);
}

}  // namespace

TEST_CASE("cournot_exact_ne", "[games][cournot]") {
  const auto ne = cournot_exact_ne(RiskLevel(0.4), RiskLevel(0.8));
  CHECK(ne.blocks[0][0] == Approx(0.2667).margin(5e-5));
  CHECK(ne.blocks[1][0] == Approx(0.4667).margin(5e-5));

  const auto sym = cournot_exact_ne(RiskLevel(1.0), RiskLevel(1.0));
  CHECK(sym.blocks[0][0] == Approx(1.3 / 3.0).epsilon(1e-14));
  CHECK(sym.blocks[1][0] == Approx(1.3 / 3.0).epsilon(1e-14));

  for (double a : {0.1, 0.3, 0.77, 1.0}) {
    const auto x = cournot_exact_ne(RiskLevel(a), RiskLevel(a));
    CHECK(x.blocks[0][0] == x.blocks[1][0]);
  }
}

TEST_CASE("cournot_exact_ne matches best-response iteration on Monte Carlo CVaR", "[games][cournot][oracle]") {
  CournotGame game;
  Rng rng(17);
  std::vector<double> noise(20000);
  for (double& v : noise) v = uniform01(rng);
  for (auto alphas : {std::pair{1.0, 1.0}, std::pair{0.4, 0.8}}) {
    ActionProfile x = ActionProfile::scalars({0.5, 0.5});
    for (int round = 0; round < 20; ++round) {
      x.blocks[0][0] = best_response(game, 0, x, noise, alphas.first);
      x.blocks[1][0] = best_response(game, 1, x, noise, alphas.second);
    }
    const auto ne = cournot_exact_ne(RiskLevel(alphas.first), RiskLevel(alphas.second));
    CHECK(x.blocks[0][0] == Approx(ne.blocks[0][0]).margin(0.01));
    CHECK(x.blocks[1][0] == Approx(ne.blocks[1][0]).margin(0.01));
  }
}

TEST_CASE("evaluate_cost_and_grad on the built-in games", "[games]") {
  CournotGame cournot;
  for (double xi : {0.0, 0.3, 1.0}) {
    const auto [cost, grad] = evaluate_cost_and_grad(cournot, 0, ActionProfile::scalars({0.0, 0.5}), std::vector{xi});
    CHECK(cost == Approx(1.0).epsilon(1e-15));
    CHECK(grad[0] == Approx(xi - 1.3).margin(1e-15));
  }

  // At the equilibrium the gradient at the VaR point xi = 0.6 is -0.2; the tail
  // average over xi in [0.6, 1] (mean 0.8) is what vanishes.
  const auto ne = ActionProfile::scalars({0.8 / 3.0, 1.4 / 3.0});
  const auto at_var = evaluate_cost_and_grad(cournot, 0, ne, std::vector{0.6}).second[0];
  CHECK(at_var == Approx(-0.2).margin(1e-12));
  CHECK(evaluate_cost_and_grad(cournot, 0, ne, std::vector{0.8}).second[0] == Approx(0.0).margin(1e-12));

  QuadraticCounterexampleGame quad({1, 1, 0, 1});
  const auto g = evaluate_cost_and_grad(quad, 0, ActionProfile::scalars({0.25, 0.25}), std::vector{0.75}).second;
  CHECK(g[0] == Approx(0.0).margin(1e-15));

  CHECK_THROWS_AS(evaluate_cost_and_grad(cournot, 0, ActionProfile::scalars({1.5, 0.5}), std::vector{0.5}),
                  DomainError);
  CHECK_THROWS_AS(evaluate_cost_and_grad(cournot, 2, ne, std::vector{0.5}), DomainError);
}

TEST_CASE("NE stationarity with exact risk-averse gradients", "[games][cournot]") {
  CournotGame game;
  for (auto [a1, a2] : {std::pair{0.4, 0.8}, std::pair{1.0, 1.0}, std::pair{0.1, 0.9}}) {
    const std::vector<RiskLevel> levels{RiskLevel(a1), RiskLevel(a2)};
    const auto ne = *game.nash_equilibrium(levels);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(std::abs((*game.exact_risk_averse_gradient(i, ne, levels[i]))[0]) < 1e-12);
    }
  }
}

TEST_CASE("Cournot exact gradient matches tail-weighted Monte Carlo", "[games][cournot][oracle]") {
  CournotGame game;
  Rng rng(31);
  const std::size_t n = 1000000;
  std::vector<double> noise(n);
  for (int trial = 0; trial < 4; ++trial) {
    const auto x = ActionProfile::scalars({uniform(rng, 0.1, 1.0), uniform(rng, 0.1, 1.0)});
    for (std::size_t i = 0; i < 2; ++i) {
      const RiskLevel level(uniform(rng, 0.2, 1.0));
      const double exact = (*game.exact_risk_averse_gradient(i, x, level))[0];
      if (std::abs(exact) < 0.1) continue;  // relative tolerance is meaningless near zero
      // True VaR from the closed form of the induced (affine-in-xi) cost law.
      const double nu_star = closed_form_var_cvar(*game.cost_distribution(i, x), level).first;
      for (double& v : noise) v = uniform01(rng);
      double sum = 0.0;
      for (double xi : noise) {
        const std::span<const double> s(&xi, 1);
        if (game.cost(i, x, s) >= nu_star) {
          double g = 0.0;
          game.grad(i, x, s, std::span<double>(&g, 1));
          sum += g;
        }
      }
      const double mc = sum / (static_cast<double>(n) * level.value());
      CHECK(mc == Approx(exact).epsilon(0.01));
    }
  }
}

TEST_CASE("counterexample CVaR_0.5 closed form", "[games][counterexample][oracle]") {
  QuadraticCounterexampleGame game({1, 1, 0, 1});
  const auto x = ActionProfile::scalars({0.3, 0.3});
  Rng rng(5);
  std::vector<double> costs(1000000);
  for (double& c : costs) {
    double xi = 0.0;
    game.sample_noise(0, rng, std::span<double>(&xi, 1));
    c = game.cost(0, x, std::span<const double>(&xi, 1));
  }
  const double cvar = cvar_of(costs, 0.5);
  CHECK(cvar == Approx(0.09 + 2 * 0.09 - 0.3).epsilon(0.01));
  CHECK(closed_form_var_cvar(*game.cost_distribution(0, x), RiskLevel(0.5)).second ==
        Approx(-0.03).epsilon(1e-12));

  // Every point on x1 + x2 = b/2 is stationary for CVaR_0.5.
  const std::vector<RiskLevel> half{RiskLevel(0.5), RiskLevel(0.5)};
  for (double x1 : {0.0, 0.1, 0.25, 0.5}) {
    const auto on_line = ActionProfile::scalars({x1, 0.5 - x1});
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(std::abs((*game.exact_risk_averse_gradient(i, on_line, half[i]))[0]) < 1e-12);
    }
  }
  CHECK_FALSE(game.nash_equilibrium(half).has_value());
  CHECK_FALSE(game.strong_monotonicity(half).has_value());
  CHECK(game.nash_equilibrium(std::vector{RiskLevel(1.0), RiskLevel(1.0)}).has_value());
}

TEST_CASE("gradient bound audit", "[games]") {
  Rng rng(77);
  CournotGame cournot;
  QuadraticCounterexampleGame quad({2, 1.5, 0, 0.5});
  for (const StochasticGame* game : {static_cast<const StochasticGame*>(&cournot),
                                     static_cast<const StochasticGame*>(&quad)}) {
    double worst = 0.0;
    for (int k = 0; k < 100000; ++k) {
      ActionProfile x;
      for (const auto& box : game->action_sets()) x.blocks.push_back({uniform(rng, box.lower[0], box.upper[0])});
      for (std::size_t i = 0; i < 2; ++i) {
        double xi = 0.0, g = 0.0;
        game->sample_noise(i, rng, std::span<double>(&xi, 1));
        game->grad(i, x, std::span<const double>(&xi, 1), std::span<double>(&g, 1));
        worst = std::max(worst, std::abs(g));
      }
    }
    CHECK(worst <= game->gradient_bound());
    CHECK(worst > 0.9 * game->gradient_bound());
  }
  CHECK(cournot.gradient_bound() == 2.2);
}

TEST_CASE("monotonicity_probe", "[games][monotonicity]") {
  auto cournot = std::make_shared<CournotGame>();
  const std::vector<RiskLevel> levels{RiskLevel(0.4), RiskLevel(0.8)};
  const auto oracle = exact_gradient_oracle(cournot, levels);

  const double eig = min_symmetric_eigenvalue(oracle, ActionProfile::scalars({0.5, 0.5}));
  CHECK(eig == Approx(1.0).margin(1e-6));

  Rng rng(1);
  const double m_hat = monotonicity_probe(oracle, cournot->action_sets(), 10000, rng);
  CHECK(m_hat >= 0.95);
  CHECK(m_hat <= 1.05);
  CHECK(m_hat >= eig - 1e-9);  // a sampled minimum can only overestimate m

  auto quad = std::make_shared<QuadraticCounterexampleGame>(QuadraticCounterexampleGame::Params{1, 1, 0, 1});
  const auto averse = exact_gradient_oracle(quad, {RiskLevel(0.5), RiskLevel(0.5)});
  CHECK(std::abs(monotonicity_probe(averse, quad->action_sets(), 2000, rng, Vector{1.0, -1.0})) < 1e-6);
  CHECK(min_symmetric_eigenvalue(averse, ActionProfile::scalars({0.3, 0.3})) == Approx(0.0).margin(1e-6));

  const auto neutral = exact_gradient_oracle(quad, {RiskLevel(1.0), RiskLevel(1.0)});
  const double m_neutral = monotonicity_probe(neutral, quad->action_sets(), 10000, rng);
  CHECK(m_neutral > 0.0);
  CHECK(m_neutral >= min_symmetric_eigenvalue(neutral, ActionProfile::scalars({0.3, 0.3})) - 1e-9);
  CHECK(min_symmetric_eigenvalue(neutral, ActionProfile::scalars({0.3, 0.3})) == Approx(1.0 / 3.0).margin(1e-6));
  CHECK(*quad->strong_monotonicity(std::vector{RiskLevel(1.0), RiskLevel(1.0)}) == Approx(1.0 / 3.0));
}

TEST_CASE("monotonicity_probe rejects degenerate pairs", "[games][monotonicity]") {
  auto cournot = std::make_shared<CournotGame>();
  const auto oracle = exact_gradient_oracle(cournot, {RiskLevel(0.4), RiskLevel(0.8)});
  const auto x = ActionProfile::scalars({0.3, 0.6});
  CHECK_FALSE(monotonicity_ratio(oracle, x, x).has_value());
  Rng rng(2);
  CHECK_THROWS_AS(monotonicity_probe(oracle, cournot->action_sets(), 10, rng, Vector{0.0, 0.0}), StateError);
  CHECK_THROWS_AS(monotonicity_probe(oracle, cournot->action_sets(), 0, rng), DomainError);
}

TEST_CASE("decomposition_check", "[games][decomposition]") {
  Rng rng(9);
  CHECK(decomposition_check(CournotGame{}, 1000, rng));
  CHECK_FALSE(decomposition_check(QuadraticCounterexampleGame({1, 1, 0, 1}), 1000, rng));
  CHECK(decomposition_check(DeterministicGame{}, 1000, rng));
}

TEST_CASE("game registry", "[games]") {
  CHECK(make_game("cournot")->name() == "cournot");
  GameParams p;
  p.quadratic = {2, 3, 1, 4};
  const auto quad = make_game("quadratic-counterexample", p);
  CHECK(quad->action_sets()[1].upper[0] == 3.0);
  CHECK_THROWS_AS(make_game("nosuch"), DomainError);
  CHECK_THROWS_AS(QuadraticCounterexampleGame({-1, 1, 0, 1}), DomainError);
}

TEST_CASE("box and profile helpers", "[games]") {
  const BoxActionSet box{{0, -1}, {2, 1}};
  CHECK_NOTHROW(box.validate());
  CHECK(box.diameter() == Approx(std::sqrt(8.0)));
  CHECK(box.center() == Vector{1, 0});
  CHECK(box.contains(Vector{2, -1}));
  CHECK_FALSE(box.contains(Vector{2.1, 0}));
  CHECK_THROWS_AS((BoxActionSet{{1}, {1}}.validate()), DomainError);
  CHECK(ActionProfile::scalars({1, 2}).squared_distance(ActionProfile::scalars({0, 0})) == 5.0);
  CHECK(CournotGame{}.box_center() == ActionProfile::scalars({0.5, 0.5}));
}
