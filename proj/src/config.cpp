#include "cvarlearn/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "cvarlearn/errors.hpp"

namespace cvarlearn {

namespace {

using nlohmann::json;

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{"game",  "a",      "b",     "c",      "d",         "alphas",
                                          "T",     "trials", "seed",  "eta",    "algorithms", "window",
                                          "edf",   "x0",     "gamma", "lemma3_repeats", "output", "workers"};
  return keys;
}

double get_real(const json& v, const std::string& field) {
  if (!v.is_number()) throw ConfigError(field, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(field, "expected a finite number");
  return d;
}

std::uint64_t get_unsigned(const json& v, const std::string& field) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    if (v.get<std::int64_t>() < 0) throw ConfigError(field, "expected a nonnegative integer");
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  throw ConfigError(field, "expected an integer");
}

std::size_t get_positive(const json& v, const std::string& field) {
  const auto n = get_unsigned(v, field);
  if (n == 0) throw ConfigError(field, "must be at least 1");
  return static_cast<std::size_t>(n);
}

std::vector<double> get_real_list(const json& v, const std::string& field) {
  if (!v.is_array()) throw ConfigError(field, "expected a list of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < v.size(); ++k) out.push_back(get_real(v[k], field + "[" + std::to_string(k) + "]"));
  return out;
}

Algorithm parse_algorithm(const json& v, const std::string& field) {
  if (!v.is_string()) throw ConfigError(field, "expected an algorithm name");
  const auto name = v.get<std::string>();
  if (name == "algorithm1") return Algorithm::risk_averse_fo;
  if (name == "unbiased-fo") return Algorithm::unbiased_fo;
  throw ConfigError(field, "unknown algorithm '" + name + "' (expected algorithm1 or unbiased-fo)");
}

std::optional<BinnedEdf> parse_edf(const json& v) {
  if (!v.is_string()) throw ConfigError("edf", "expected \"exact\" or \"binned:<bins>[:<upper>]\"");
  const auto text = v.get<std::string>();
  if (text == "exact") return std::nullopt;
  const std::string prefix = "binned:";
  if (text.rfind(prefix, 0) != 0) throw ConfigError("edf", "expected \"exact\" or \"binned:<bins>[:<upper>]\"");

  const std::string rest = text.substr(prefix.size());
  const auto colon = rest.find(':');
  const std::string bins_text = rest.substr(0, colon);
  BinnedEdf edf;
  auto [p, ec] = std::from_chars(bins_text.data(), bins_text.data() + bins_text.size(), edf.bins);
  if (ec != std::errc{} || p != bins_text.data() + bins_text.size() || edf.bins == 0) {
    throw ConfigError("edf", "bin count must be a positive integer");
  }
  if (colon != std::string::npos) {
    const std::string upper_text = rest.substr(colon + 1);
    double upper = 0.0;
    auto [q, ec2] = std::from_chars(upper_text.data(), upper_text.data() + upper_text.size(), upper);
    if (ec2 != std::errc{} || q != upper_text.data() + upper_text.size() || !(upper > 0.0)) {
      throw ConfigError("edf", "histogram upper edge must be a positive number");
    }
    edf.upper = upper;
  }
  return edf;
}

std::string edf_to_string(const std::optional<BinnedEdf>& edf) {
  if (!edf) return "exact";
  std::string out = "binned:" + std::to_string(edf->bins);
  if (edf->upper) out += ":" + json(*edf->upper).dump();
  return out;
}

}  // namespace

std::vector<RiskLevel> ExperimentConfig::levels() const {
  std::vector<RiskLevel> out;
  for (double a : alphas) out.emplace_back(a);
  return out;
}

RunSettings ExperimentConfig::run_settings(std::uint64_t trial_seed) const {
  RunSettings s;
  s.levels = levels();
  s.episodes = episodes;
  s.schedule = eta ? StepSchedule::constant(*eta) : StepSchedule::theory();
  s.x0 = ActionProfile::scalars(x0);
  s.seed = trial_seed;
  s.estimator.binned = binned;
  s.estimator.window = window;
  return s;
}

ExperimentConfig validate_config(const json& raw) {
  if (!raw.is_object()) throw ConfigError("", "config must be a key-value object");
  for (const auto& [key, value] : raw.items()) {
    if (!known_keys().contains(key)) throw ConfigError(key, "unknown key");
  }

  ExperimentConfig cfg;
  if (!raw.contains("game")) throw ConfigError("game", "missing required key");
  if (!raw["game"].is_string()) throw ConfigError("game", "expected a game name");
  cfg.game = raw["game"].get<std::string>();
  const auto names = game_names();
  if (std::find(names.begin(), names.end(), cfg.game) == names.end()) {
    throw ConfigError("game", "unknown game '" + cfg.game + "'");
  }
  const bool quadratic = cfg.game == "quadratic-counterexample";

  for (const char* key : {"a", "b", "c", "d"}) {
    if (!raw.contains(key)) continue;
    if (!quadratic) throw ConfigError(key, "only applies to quadratic-counterexample");
    const double v = get_real(raw[key], key);
    if (std::string(key) != "c" && !(v > 0.0)) throw ConfigError(key, "must be positive");
    if (std::string(key) == "a") cfg.quadratic.a = v;
    if (std::string(key) == "b") cfg.quadratic.b = v;
    if (std::string(key) == "c") cfg.quadratic.c = v;
    if (std::string(key) == "d") cfg.quadratic.d = v;
  }
  const auto game = make_game(cfg.game, cfg.game_params());

  cfg.alphas = raw.contains("alphas") ? get_real_list(raw["alphas"], "alphas")
                                      : (quadratic ? std::vector<double>{0.5, 0.5} : std::vector<double>{0.4, 0.8});
  if (cfg.alphas.size() != game->num_agents()) {
    throw ConfigError("alphas", "expected " + std::to_string(game->num_agents()) + " risk levels");
  }
  for (std::size_t k = 0; k < cfg.alphas.size(); ++k) {
    if (!(cfg.alphas[k] > 0.0 && cfg.alphas[k] <= 1.0)) {
      throw ConfigError("alphas[" + std::to_string(k) + "]", "risk level must lie in (0, 1]");
    }
  }

  if (raw.contains("T")) cfg.episodes = get_positive(raw["T"], "T");
  if (raw.contains("trials")) cfg.trials = get_positive(raw["trials"], "trials");
  if (raw.contains("seed")) cfg.seed = get_unsigned(raw["seed"], "seed");
  if (raw.contains("workers")) cfg.workers = get_positive(raw["workers"], "workers");
  if (raw.contains("lemma3_repeats")) cfg.lemma3_repeats = get_positive(raw["lemma3_repeats"], "lemma3_repeats");

  if (raw.contains("eta")) {
    const auto& v = raw["eta"];
    if (v.is_string() && v.get<std::string>() == "auto") {
      cfg.eta.reset();
    } else {
      const double eta = get_real(v, "eta");
      if (eta < 0.0) throw ConfigError("eta", "must be nonnegative or \"auto\"");
      cfg.eta = eta;
    }
  }

  if (raw.contains("algorithms")) {
    const auto& v = raw["algorithms"];
    if (!v.is_array() || v.empty()) throw ConfigError("algorithms", "expected a nonempty list");
    for (std::size_t k = 0; k < v.size(); ++k) {
      const auto alg = parse_algorithm(v[k], "algorithms[" + std::to_string(k) + "]");
      if (std::find(cfg.algorithms.begin(), cfg.algorithms.end(), alg) != cfg.algorithms.end()) {
        throw ConfigError("algorithms[" + std::to_string(k) + "]", "listed twice");
      }
      cfg.algorithms.push_back(alg);
    }
  } else {
    cfg.algorithms = {Algorithm::risk_averse_fo, Algorithm::unbiased_fo};
  }

  if (raw.contains("window")) {
    const auto& v = raw["window"];
    if (v.is_string() && v.get<std::string>() == "off") {
      cfg.window.reset();
    } else {
      cfg.window = get_positive(v, "window");
    }
  }
  if (raw.contains("edf")) cfg.binned = parse_edf(raw["edf"]);

  if (raw.contains("x0")) {
    cfg.x0 = get_real_list(raw["x0"], "x0");
    if (cfg.x0.size() != game->num_agents()) {
      throw ConfigError("x0", "expected " + std::to_string(game->num_agents()) + " actions");
    }
    if (!game->is_feasible(ActionProfile::scalars(cfg.x0))) throw ConfigError("x0", "initial action is outside the action boxes");
  } else {
    cfg.x0 = game->box_center().flatten();
  }

  if (raw.contains("gamma")) {
    cfg.gamma = get_real(raw["gamma"], "gamma");
    if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0)) throw ConfigError("gamma", "must lie in (0, 1)");
  }
  if (raw.contains("output")) {
    if (!raw["output"].is_string() || raw["output"].get<std::string>().empty()) {
      throw ConfigError("output", "expected a directory path");
    }
    cfg.output = raw["output"].get<std::string>();
  }
  return cfg;
}

ExperimentConfig validate_config_text(const std::string& text) {
  json raw;
  try {
    raw = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed config: ") + e.what());
  }
  return validate_config(raw);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return validate_config_text(text.str());
}

json config_to_json(const ExperimentConfig& cfg) {
  json out;
  out["game"] = cfg.game;
  if (cfg.game == "quadratic-counterexample") {
    out["a"] = cfg.quadratic.a;
    out["b"] = cfg.quadratic.b;
    out["c"] = cfg.quadratic.c;
    out["d"] = cfg.quadratic.d;
  }
  out["alphas"] = cfg.alphas;
  out["T"] = cfg.episodes;
  out["trials"] = cfg.trials;
  out["seed"] = cfg.seed;
  out["eta"] = cfg.eta ? json(*cfg.eta) : json("auto");
  json algs = json::array();
  for (auto a : cfg.algorithms) algs.push_back(algorithm_name(a));
  out["algorithms"] = algs;
  out["window"] = cfg.window ? json(*cfg.window) : json("off");
  out["edf"] = edf_to_string(cfg.binned);
  out["x0"] = cfg.x0;
  out["gamma"] = cfg.gamma;
  out["lemma3_repeats"] = cfg.lemma3_repeats;
  out["output"] = cfg.output;
  out["workers"] = cfg.workers;
  return out;
}

}  // namespace cvarlearn
