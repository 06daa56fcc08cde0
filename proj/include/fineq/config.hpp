#ifndef FINEQ_CONFIG_HPP
#define FINEQ_CONFIG_HPP

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fineq/policy.hpp"
#include "fineq/types.hpp"

// Flat key=value run configuration with dotted sections. Precedence, lowest
// to highest: built-in defaults, config file, FINEQ_* environment variables,
// explicit command-line flags.
namespace fineq::config {

inline constexpr std::string_view kKnownKeys[] = {
    "game.fine",       "game.legal_cost", "game.period",     "game.punished",
    "game.ignorance",  "game.entrants",   "game.initial",    "game.horizon",
    "game.seed",       "game.burn_in",    "game.brs_literal",
    "run.profile",     "run.episodes",    "run.workers",     "run.rho",
    "train.iterations", "train.seeds",    "train.clip",      "train.discount",
    "train.gae_lambda", "train.updates_per_cycle",           "train.epochs",
    "train.buffer",    "train.actor_lr",  "train.critic_lr", "train.entropy_weight",
    "train.grad_clip", "train.normalize_advantages",         "train.adaptive",
    "train.nashconv_episodes",
    "sweep.axis",      "sweep.grid",      "sweep.mode",      "sweep.profiles",
    "coalition.size",  "coalition.others",
};

// game.burn_in -> FINEQ_GAME_BURN_IN
inline std::string environment_name(std::string_view key) {
  std::string name = "FINEQ_";
  for (char c : key) name.push_back(c == '.' ? '_' : static_cast<char>(std::toupper(c)));
  return name;
}

class KeyValueConfig {
 public:
  static KeyValueConfig from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file: " + path);
    KeyValueConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      const auto strip = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
      };
      const std::string text = strip(line);
      if (text.empty()) continue;
      const auto eq = text.find('=');
      if (eq == std::string::npos)
        throw ValidationError(path + ":" + std::to_string(line_no) +
                              ": expected key = value");
      const std::string key = strip(text.substr(0, eq));
      const std::string value = strip(text.substr(eq + 1));
      if (key.empty()) throw ValidationError(path + ": empty key");
      cfg.check_known(key);
      cfg.values_[key] = value;
    }
    return cfg;
  }

  void apply_environment() {
    for (std::string_view key : kKnownKeys) {
      const char* value = std::getenv(environment_name(key).c_str());
      if (value != nullptr) values_[std::string(key)] = value;
    }
  }

  void set(const std::string& key, const std::string& value) {
    check_known(key);
    values_[key] = value;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t used = 0;
      const std::int64_t v = std::stoll(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw ValidationError("config key " + key + " wants an integer, got '" +
                            it->second + "'");
    }
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t used = 0;
      const std::uint64_t v = std::stoull(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw ValidationError("config key " + key + " wants an unsigned integer, got '" +
                            it->second + "'");
    }
  }

  double get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t used = 0;
      const double v = std::stod(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw ValidationError("config key " + key + " wants a number, got '" + it->second +
                            "'");
    }
  }

  bool get_bool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1" || it->second == "on") return true;
    if (it->second == "false" || it->second == "0" || it->second == "off") return false;
    throw ValidationError("config key " + key + " wants true/false, got '" + it->second +
                          "'");
  }

 private:
  void check_known(const std::string& key) const {
    for (std::string_view known : kKnownKeys)
      if (known == key) return;
    throw ValidationError("unknown config key: " + key);
  }

  std::map<std::string, std::string> values_;
};

inline QueueConfig queue_config_from(const KeyValueConfig& kv) {
  QueueConfig cfg;
  cfg.fine = static_cast<int>(kv.get_int("game.fine", cfg.fine));
  cfg.legal_cost = static_cast<int>(kv.get_int("game.legal_cost", cfg.legal_cost));
  cfg.period = static_cast<int>(kv.get_int("game.period", cfg.period));
  cfg.punished = static_cast<int>(kv.get_int("game.punished", cfg.punished));
  cfg.ignorance = kv.get_double("game.ignorance", cfg.ignorance);
  cfg.entrants = static_cast<int>(kv.get_int("game.entrants", cfg.entrants));
  cfg.initial_agents = static_cast<int>(kv.get_int("game.initial", cfg.initial_agents));
  cfg.horizon = static_cast<int>(kv.get_int("game.horizon", cfg.horizon));
  cfg.seed = kv.get_u64("game.seed", cfg.seed);
  cfg.burn_in = static_cast<int>(kv.get_int("game.burn_in", cfg.burn_in));
  cfg.brs_literal = kv.get_bool("game.brs_literal", cfg.brs_literal);
  cfg.validate();
  return cfg;
}

inline Hyperparams hyperparams_from(const KeyValueConfig& kv) {
  Hyperparams h;
  h.clip = kv.get_double("train.clip", h.clip);
  h.discount = kv.get_double("train.discount", h.discount);
  h.gae_lambda = kv.get_double("train.gae_lambda", h.gae_lambda);
  h.updates_per_cycle =
      static_cast<int>(kv.get_int("train.updates_per_cycle", h.updates_per_cycle));
  h.epochs = static_cast<int>(kv.get_int("train.epochs", h.epochs));
  h.buffer_capacity = static_cast<int>(kv.get_int("train.buffer", h.buffer_capacity));
  h.actor_lr = kv.get_double("train.actor_lr", h.actor_lr);
  h.critic_lr = kv.get_double("train.critic_lr", h.critic_lr);
  h.entropy_weight = kv.get_double("train.entropy_weight", h.entropy_weight);
  h.grad_clip = kv.get_double("train.grad_clip", h.grad_clip);
  h.normalize_advantages =
      kv.get_bool("train.normalize_advantages", h.normalize_advantages);
  h.adaptive_optimizer = kv.get_bool("train.adaptive", h.adaptive_optimizer);
  h.validate();
  return h;
}

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace fineq::config

#endif  // FINEQ_CONFIG_HPP
