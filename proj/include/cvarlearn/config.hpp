#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cvarlearn/distributions.hpp"
#include "cvarlearn/games.hpp"
#include "cvarlearn/learning.hpp"

namespace cvarlearn {

/// Everything a multi-trial experiment needs. Built by validate_config from a
/// flat JSON object; every key is optional except `game`.
///
///   key         default                      meaning
///   game        (required)                   "cournot" | "quadratic-counterexample"
///   a, b, c, d  1, 1, 0, 1                   quadratic-counterexample parameters
///   alphas      cournot (0.4, 0.8), else (0.5, 0.5)
///   T           5000                         episodes per run
///   trials      20                           seeds per algorithm
///   seed        1                            master seed
///   eta         "auto"                       "auto" = (D/B) T^-1/2, or a number
///   algorithms  ["algorithm1", "unbiased-fo"]
///   window      "off"                        or a positive history window
///   edf         "exact"                      or "binned:<bins>[:<upper>]"
///   x0          box center
///   gamma       0.05                         confidence for the bound report
///   lemma3_repeats 1000
///   output      "out"
///   workers     1
struct ExperimentConfig {
  std::string game;
  QuadraticCounterexampleGame::Params quadratic;
  std::vector<double> alphas;
  std::size_t episodes = 5000;
  std::size_t trials = 20;
  std::uint64_t seed = 1;
  std::optional<double> eta;
  std::vector<Algorithm> algorithms;
  std::optional<std::size_t> window;
  std::optional<BinnedEdf> binned;
  std::vector<double> x0;
  double gamma = 0.05;
  std::size_t lemma3_repeats = 1000;
  std::string output = "out";
  std::size_t workers = 1;

  std::vector<RiskLevel> levels() const;
  GameParams game_params() const { return {quadratic}; }
  RunSettings run_settings(std::uint64_t trial_seed) const;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Applies defaults and checks every field. Throws ConfigError naming the field.
ExperimentConfig validate_config(const nlohmann::json& raw);
ExperimentConfig validate_config_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully resolved document; validate_config(config_to_json(c)) == c.
nlohmann::json config_to_json(const ExperimentConfig& config);

}  // namespace cvarlearn
