#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cvarlearn/games.hpp"

namespace cvarlearn {

/// One episode of a learning run. `x` is the joint action played at episode t.
struct EpisodeRecord {
  std::size_t t = 0;
  ActionProfile x;
  std::vector<double> var_estimate;  // nu_{i,t}
  std::vector<double> true_var;      // nu*_{i,t}; empty when the game has no exact VaR
  std::optional<double> sq_error;    // ||x_t - x*||^2 when x* is known

  bool operator==(const EpisodeRecord&) const = default;
};

/// Per-episode history of one run plus the settings that produced it.
struct RunTrace {
  std::string game;
  std::string algorithm;
  std::vector<double> alphas;
  double eta = 0.0;
  std::uint64_t seed = 0;
  std::vector<EpisodeRecord> records;
  /// Action after the last update, x_{T+1}.
  ActionProfile final_action;

  std::size_t episodes() const noexcept { return records.size(); }
  bool has_true_var() const noexcept { return !records.empty() && !records.front().true_var.empty(); }
  bool has_error() const noexcept { return !records.empty() && records.front().sq_error.has_value(); }

  bool operator==(const RunTrace&) const = default;
};

}  // namespace cvarlearn
