#include "cvarlearn/learning.hpp"

#include <algorithm>
#include <cmath>

#include "cvarlearn/errors.hpp"

namespace cvarlearn {

namespace {

struct Batch {
  std::span<const double> costs;
  std::span<const double> grads;
  std::size_t count = 0;
  std::size_t dim = 0;
};

Batch evaluate_history(const StochasticGame& game, std::size_t agent, const ActionProfile& x,
                       const NoiseHistory& history, const EstimatorOptions& options, EstimatorWorkspace& ws) {
  if (history.empty()) throw StateError("gradient estimate: empty noise history");
  if (agent >= game.num_agents()) throw DomainError("gradient estimate: agent index out of range");
  if (!game.is_feasible(x)) throw DomainError("gradient estimate: action profile is infeasible");

  const std::size_t t = history.size();
  std::size_t first = 0;
  if (options.window) {
    if (*options.window == 0) throw DomainError("gradient estimate: window must be positive");
    first = t > *options.window ? t - *options.window : 0;
  }
  const std::size_t n = t - first;
  const std::size_t dim = x.blocks[agent].size();
  ws.costs.resize(n);
  ws.grads.resize(n * dim);
  game.evaluate_batch(agent, x, history, first, ws.costs, ws.grads);
  return {ws.costs, ws.grads, n, dim};
}

GradientEstimate tail_weighted_average(const Batch& batch, double nu, RiskLevel level) {
  GradientEstimate est;
  est.var_used = nu;
  est.g.assign(batch.dim, 0.0);
  for (std::size_t k = 0; k < batch.count; ++k) {
    if (batch.costs[k] >= nu) {
      ++est.tail_count;
      for (std::size_t j = 0; j < batch.dim; ++j) est.g[j] += batch.grads[k * batch.dim + j];
    }
  }
  const double scale = 1.0 / (static_cast<double>(batch.count) * level.value());
  for (double& v : est.g) v *= scale;
  return est;
}

}  // namespace

StepSchedule StepSchedule::constant(double eta) {
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw DomainError("step size must be finite and nonnegative");
  return StepSchedule(eta);
}

double StepSchedule::step_size(const StochasticGame& game, std::size_t episodes) const {
  if (eta_) return *eta_;
  if (episodes == 0) throw DomainError("step schedule: episode count must be positive");
  double diameter = 0.0;
  for (const auto& box : game.action_sets()) diameter = std::max(diameter, box.diameter());
  return diameter / (game.gradient_bound() * std::sqrt(static_cast<double>(episodes)));
}

GradientEstimate cvar_gradient_estimate(const StochasticGame& game, std::size_t agent, const ActionProfile& x,
                                        const NoiseHistory& history, RiskLevel level,
                                        const EstimatorOptions& options, EstimatorWorkspace* workspace) {
  EstimatorWorkspace local;
  EstimatorWorkspace& ws = workspace ? *workspace : local;
  const Batch batch = evaluate_history(game, agent, x, history, options, ws);

  double nu = 0.0;
  if (options.binned) {
    nu = binned_var(batch.costs, level, *options.binned);
  } else {
    ws.scratch.assign(batch.costs.begin(), batch.costs.end());
    nu = var_select(ws.scratch, level);
  }
  return tail_weighted_average(batch, nu, level);
}

GradientEstimate unbiased_cvar_gradient(const StochasticGame& game, std::size_t agent, const ActionProfile& x,
                                        const NoiseHistory& history, RiskLevel level, double exact_var,
                                        const EstimatorOptions& options, EstimatorWorkspace* workspace) {
  EstimatorWorkspace local;
  EstimatorWorkspace& ws = workspace ? *workspace : local;
  const Batch batch = evaluate_history(game, agent, x, history, options, ws);
  return tail_weighted_average(batch, exact_var, level);
}

Vector project_box(std::span<const double> x, const BoxActionSet& box) {
  if (x.size() != box.dim()) throw DomainError("project_box: dimension mismatch");
  Vector out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = std::clamp(x[k], box.lower[k], box.upper[k]);
  return out;
}

const char* algorithm_name(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::risk_averse_fo: return "algorithm1";
    case Algorithm::unbiased_fo: return "unbiased-fo";
  }
  return "unknown";
}

RunTrace run_algorithm(Algorithm algorithm, const StochasticGame& game, const RunSettings& settings) {
  const std::size_t n = game.num_agents();
  if (settings.episodes == 0) throw DomainError("run: episode count must be positive");
  if (settings.levels.size() != n) throw DomainError("run: need one risk level per agent");

  const ActionProfile x0 = settings.x0 ? *settings.x0 : game.box_center();
  if (!game.is_feasible(x0)) throw DomainError("run: initial action is infeasible");
  const double eta = settings.schedule.step_size(game, settings.episodes);
  const std::optional<ActionProfile> equilibrium = game.nash_equilibrium(settings.levels);

  std::vector<LearnerState> learners(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& s = learners[i];
    s.agent = i;
    s.action = x0.blocks[i];
    s.level = settings.levels[i];
    s.history = NoiseHistory(game.noise_dim(i));
    s.history.reserve(settings.episodes);
    s.rng.seed(agent_stream_seed(settings.seed, i));
    s.step = eta;
  }

  const bool has_var = game.exact_var(0, x0, settings.levels[0]).has_value();
  if (algorithm == Algorithm::unbiased_fo && !has_var) {
    throw UnsupportedError(game.name() + ": unbiased baseline needs an exact VaR");
  }

  RunTrace trace;
  trace.game = game.name();
  trace.algorithm = algorithm_name(algorithm);
  for (const auto& level : settings.levels) trace.alphas.push_back(level.value());
  trace.eta = eta;
  trace.seed = settings.seed;
  trace.records.reserve(settings.episodes);

  std::vector<EstimatorWorkspace> workspaces(n);
  std::vector<GradientEstimate> estimates(n);
  Vector xi;
  ActionProfile x;
  x.blocks.resize(n);

  for (std::size_t t = 1; t <= settings.episodes; ++t) {
    for (std::size_t i = 0; i < n; ++i) x.blocks[i] = learners[i].action;

    EpisodeRecord record;
    record.t = t;
    record.x = x;
    for (std::size_t i = 0; i < n; ++i) {
      auto& s = learners[i];
      xi.resize(s.history.dim());
      game.sample_noise(i, s.rng, xi);
      s.history.push(xi);

      std::optional<double> nu_star;
      if (has_var) nu_star = game.exact_var(i, x, s.level);
      if (algorithm == Algorithm::unbiased_fo) {
        estimates[i] = unbiased_cvar_gradient(game, i, x, s.history, s.level, *nu_star, settings.estimator,
                                              &workspaces[i]);
      } else {
        estimates[i] = cvar_gradient_estimate(game, i, x, s.history, s.level, settings.estimator, &workspaces[i]);
      }
      record.var_estimate.push_back(estimates[i].var_used);
      if (nu_star) record.true_var.push_back(*nu_star);
    }
    if (equilibrium) record.sq_error = x.squared_distance(*equilibrium);
    trace.records.push_back(std::move(record));

    // Simultaneous play: every estimate above used the same x_t.
    const auto& boxes = game.action_sets();
    for (std::size_t i = 0; i < n; ++i) {
      auto& s = learners[i];
      Vector stepped = s.action;
      for (std::size_t k = 0; k < stepped.size(); ++k) stepped[k] -= s.step * estimates[i].g[k];
      s.action = project_box(stepped, boxes[i]);
    }
  }

  for (std::size_t i = 0; i < n; ++i) x.blocks[i] = learners[i].action;
  trace.final_action = x;
  return trace;
}

RunTrace run_algorithm1(const StochasticGame& game, const RunSettings& settings) {
  return run_algorithm(Algorithm::risk_averse_fo, game, settings);
}

RunTrace run_unbiased_baseline(const StochasticGame& game, const RunSettings& settings) {
  return run_algorithm(Algorithm::unbiased_fo, game, settings);
}

}  // namespace cvarlearn
