// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "cvarlearn/analysis.hpp"
#include "cvarlearn/config.hpp"
#include "cvarlearn/distributions.hpp"
#include "cvarlearn/experiment.hpp"
#include "cvarlearn/games.hpp"
#include "cvarlearn/learning.hpp"

using namespace cvarlearn;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(const std::string& id, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!out.pass) ++failures;
  std::printf("%s %s: %s (%.1fs)\n", out.pass ? "PASS" : "FAIL", id.c_str(), out.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

json a1_config() {
  return json{{"game", "cournot"}, {"alphas", {0.4, 0.8}}, {"T", 5000},  {"trials", 20}, {"seed", 1},
              {"eta", "auto"},     {"x0", {0.5, 0.5}},     {"algorithms", {"algorithm1", "unbiased-fo"}}};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Cournot risk-averse gradient, written out independently of the library.
double cournot_gradient(double own, double rival, double alpha) { return 2.0 * own + rival - 0.8 - alpha / 2.0; }

}  // namespace

int main() {
  const auto cfg = validate_config(a1_config());
  const ActionProfile ne = ActionProfile::scalars({4.0 / 15.0, 7.0 / 15.0});
  std::vector<TrialResults> a1_results;

  criterion("A1 equilibrium convergence", [&] {
    a1_results = run_trials(cfg, 1);
    double mean_norm = 0.0;
    const auto& traces = a1_results.at(0).traces;
    for (const auto& trace : traces) mean_norm += std::sqrt(trace.records.back().x.squared_distance(ne));
    mean_norm /= static_cast<double>(traces.size());
    return Outcome{mean_norm < 0.05, "mean ||x_T - x*|| = " + fmt(mean_norm) + " < 0.05"};
  });

  criterion("A2 algorithm ordering", [&] {
    std::vector<std::vector<double>> curves[2];
    for (std::size_t a = 0; a < 2; ++a) {
      for (const auto& trace : a1_results.at(a).traces) curves[a].push_back(squared_errors(trace));
    }
    const auto alg1 = aggregate("algorithm1", curves[0]);
    const auto unbiased = aggregate("unbiased-fo", curves[1]);
    const double final1 = alg1.mean.back(), final_u = unbiased.mean.back();
    const double gap_early = std::abs(alg1.mean[99] - unbiased.mean[99]);
    const double gap_late = std::abs(alg1.mean[4999] - unbiased.mean[4999]);
    const bool ok = final_u <= final1 + 0.02 && gap_late < gap_early;
    return Outcome{ok, "final error unbiased " + fmt(final_u) + " vs algorithm1 " + fmt(final1) + "; gap at 100 " +
                           fmt(gap_early) + ", at 5000 " + fmt(gap_late)};
  });

  criterion("A3 CVaR estimator oracle", [] {
    const RiskLevel level(0.4);
    std::size_t hits = 0;
    std::vector<double> samples(100000);
    for (std::uint64_t r = 0; r < 100; ++r) {
      Rng rng(trial_seed(3, r));
      for (double& s : samples) s = uniform01(rng);
      const auto edf = EmpiricalDistribution::from_samples(samples);
      if (std::abs(edf.cvar(level) - 0.8) < 0.01 && std::abs(edf.var(level) - 0.6) < 0.01) ++hits;
    }
    return Outcome{hits >= 95, std::to_string(hits) + "/100 repeats within 0.01"};
  });

  criterion("A4 VaR concentration", [] {
    const double eps = dkw_confidence_width(1000, 0.05, 1.0);
    Rng rng(4);
    const auto report =
        validate_lemma3(ClosedFormDistribution::uniform(0.0, 1.0), RiskLevel(0.4), 1000, 1000, eps, 1.0, rng);
    return Outcome{report.empirical <= 0.064,
                   "violation frequency " + fmt(report.empirical) + " <= 0.064 at eps " + fmt(eps)};
  });

  criterion("A5 convergence rate", [] {
    auto rate_cfg = validate_config(json{{"game", "cournot"}, {"T", 10000}, {"trials", 20}, {"seed", 5},
                                         {"algorithms", {"algorithm1"}}});
    const auto results = run_trials(rate_cfg, 1);
    std::vector<std::vector<double>> curves;
    for (const auto& trace : results[0].traces) curves.push_back(time_averaged_error(trace));
    const auto mean = aggregate("algorithm1", curves).mean;
    const double slope = fit_rate(mean, 100, 10000);
    return Outcome{slope <= -0.4, "log-log slope " + fmt(slope) + " <= -0.4"};
  });

  criterion("A6 gradient identity", [] {
    CournotGame game;
    const std::vector<RiskLevel> levels{RiskLevel(0.4), RiskLevel(0.8)};
    Rng pick(6);
    constexpr double h = 1e-3;
    std::vector<double> common(10000000);
    std::vector<double> scratch(common.size());
    double worst_mc = 0.0, worst_fd = 0.0;
    int profiles = 0;
    while (profiles < 5) {
      const double x1 = uniform(pick, 0.1, 1.0), x2 = uniform(pick, 0.1, 1.0);
      if (std::abs(cournot_gradient(x1, x2, 0.4)) < 0.1 || std::abs(cournot_gradient(x2, x1, 0.8)) < 0.1) continue;
      ++profiles;
      const auto x = ActionProfile::scalars({x1, x2});
      for (std::size_t i = 0; i < 2; ++i) {
        const double own = x.blocks[i][0], rival = x.blocks[1 - i][0];
        const double alpha = levels[i].value();
        const double exact = cournot_gradient(own, rival, alpha);

        NoiseHistory fresh(1);
        fresh.reserve(1000000);
        Rng rng(trial_seed(600 + profiles, i));
        double xi = 0.0;
        for (int k = 0; k < 1000000; ++k) {
          game.sample_noise(i, rng, std::span<double>(&xi, 1));
          fresh.push(std::span<const double>(&xi, 1));
        }
        const auto est = unbiased_cvar_gradient(game, i, x, fresh, levels[i], *game.exact_var(i, x, levels[i]));
        worst_mc = std::max(worst_mc, std::abs(est.g[0] - exact) / std::abs(exact));

        // Central difference of Monte-Carlo CVaR on common random numbers.
        for (double& c : common) game.sample_noise(i, rng, std::span<double>(&c, 1));
        auto mc_cvar = [&](double own_action) {
          auto shifted = x;
          shifted.blocks[i][0] = own_action;
          for (std::size_t k = 0; k < common.size(); ++k) {
            scratch[k] = game.cost(i, shifted, std::span<const double>(&common[k], 1));
          }
          return var_cvar_select(scratch, levels[i]).second;
        };
        const double fd = (mc_cvar(own + h) - mc_cvar(own - h)) / (2.0 * h);
        worst_fd = std::max(worst_fd, std::abs(fd - exact) / std::abs(exact));
      }
    }
    const bool ok = worst_mc < 0.01 && worst_fd < 0.03;
    return Outcome{ok, "worst relative error: Monte Carlo " + fmt(worst_mc) + " < 0.01, finite difference " +
                           fmt(worst_fd) + " < 0.03"};
  });

  criterion("A7 monotonicity contrast", [] {
    auto cournot = std::make_shared<CournotGame>();
    Rng rng(7);
    const double m_cournot = monotonicity_probe(exact_gradient_oracle(cournot, {RiskLevel(0.4), RiskLevel(0.8)}),
                                                cournot->action_sets(), 10000, rng);
    auto counter = std::make_shared<QuadraticCounterexampleGame>(QuadraticCounterexampleGame::Params{});
    const double m_counter = monotonicity_probe(exact_gradient_oracle(counter, {RiskLevel(0.5), RiskLevel(0.5)}),
                                                counter->action_sets(), 10000, rng, Vector{1.0, -1.0});
    const bool dec_cournot = decomposition_check(*cournot, 100, rng);
    const bool dec_counter = decomposition_check(*counter, 100, rng);
    const bool ok = m_cournot >= 0.95 && m_cournot <= 1.05 && m_counter < 1e-6 && dec_cournot && !dec_counter;
    return Outcome{ok, "Cournot m = " + fmt(m_cournot) + ", counterexample ratio along (1,-1) = " + fmt(m_counter) +
                           ", decomposition " + (dec_cournot ? "true" : "false") + "/" +
                           (dec_counter ? "true" : "false")};
  });

  criterion("A8 determinism", [&] {
    const auto dir = fs::temp_directory_path() / "cvarlearn_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "config.json") << a1_config().dump(2);
    for (const char* name : {"run1", "run2"}) {
      const std::string cmd = std::string("\"") + CVARLEARN_CLI_PATH + "\" run --config \"" +
                              (dir / "config.json").string() + "\" --out \"" + (dir / name).string() +
                              "\" >/dev/null 2>&1";
      const int status = std::system(cmd.c_str());
      if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return Outcome{false, std::string(name) + " exited abnormally"};
    }
    const auto a = slurp(dir / "run1" / "aggregate.csv");
    const auto b = slurp(dir / "run2" / "aggregate.csv");
    return Outcome{!a.empty() && a == b, "aggregate.csv " + std::to_string(a.size()) + " bytes, " +
                                             (a == b ? "identical" : "different")};
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
