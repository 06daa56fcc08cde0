#ifndef FINEQ_TYPES_HPP
#define FINEQ_TYPES_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fineq/rng.hpp"

namespace fineq {

// Malformed caller input (bad distribution, bad config, bad CLI value).
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Mathematically undefined request (e.g. a bound outside its hypothesis).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// A formula was asked to produce a number outside the regime where it is one
// (unbounded critical position, queue too short for a total-payment formula).
struct OutOfRegimeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Request exceeds what exhaustive enumeration can afford.
struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A should-be-unreachable internal invariant was violated.
struct InternalError : std::logic_error {
  using std::logic_error::logic_error;
};

// Parameters of the fine-collection queue game. Every round, agents declare a
// payment distribution, forget with probability `ignorance`, are re-sorted by
// average payment, and the lowest-paying `punished` agents are charged the
// legal cost and removed.
struct QueueConfig {
  int fine = 4;             // payment that settles the offence
  int legal_cost = 6;       // charged to punished agents; must exceed fine
  int period = 4;           // rounds before an offence expires
  int punished = 2;         // agents charged the legal cost per round
  double ignorance = 0.5;   // probability a declared payment is dropped
  int entrants = 32;        // fresh agents appended after each round
  int initial_agents = 32;  // queue size at round one
  int horizon = 64;         // number of rounds played
  std::uint64_t seed = 1;
  int burn_in = -1;          // rounds excluded from steady-state metrics; -1 = 2*period
  bool brs_literal = false;  // use the literal movement test in the rational heuristic

  int effective_burn_in() const { return burn_in < 0 ? 2 * period : burn_in; }

  // Queue length can never exceed this (entrants expire after `period` rounds).
  int position_cap() const { return initial_agents + entrants * period; }

  void validate() const {
    if (fine <= 0) throw ValidationError("fine must be positive");
    if (legal_cost <= fine) throw ValidationError("legal_cost must exceed fine");
    if (period <= 0) throw ValidationError("period must be positive");
    if (punished <= 0) throw ValidationError("punished must be positive");
    if (!(ignorance >= 0.0 && ignorance <= 1.0))
      throw ValidationError("ignorance must lie in [0,1]");
    if (entrants < 0) throw ValidationError("entrants must be non-negative");
    if (initial_agents < 0) throw ValidationError("initial_agents must be non-negative");
    if (horizon < 1) throw ValidationError("horizon must be at least 1");
  }
};

using AgentId = std::int64_t;

// What a single agent can see when declaring: its queue position (1-based),
// rounds participated so far, and total paid so far.
struct Observation {
  int position = 1;
  int rounds = 0;
  int paid = 0;
};

struct AgentState {
  AgentId id = 0;
  int position = 1;
  int rounds = 0;
  int paid = 0;
  int strategy_tag = 0;

  Observation observation() const { return {position, rounds, paid}; }
};

// Probability vector over the payments {0, ..., fine}.
class ActionDistribution {
 public:
  ActionDistribution() = default;

  explicit ActionDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
    validate();
  }

  // The point mass sigma^payment.
  static ActionDistribution pure(int payment, int fine) {
    if (payment < 0 || payment > fine)
      throw ValidationError("pure payment must lie in [0, fine]");
    std::vector<double> p(static_cast<std::size_t>(fine) + 1, 0.0);
    p[static_cast<std::size_t>(payment)] = 1.0;
    ActionDistribution dist;
    dist.probs_ = std::move(p);
    return dist;
  }

  int max_payment() const { return static_cast<int>(probs_.size()) - 1; }
  double prob(int payment) const { return probs_[static_cast<std::size_t>(payment)]; }
  const std::vector<double>& probs() const { return probs_; }

  void validate() const {
    if (probs_.empty()) throw ValidationError("empty action distribution");
    double sum = 0.0;
    for (double p : probs_) {
      if (!(p >= 0.0)) throw ValidationError("negative action probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw ValidationError("action probabilities sum to " + std::to_string(sum));
  }

  int sample(Rng& rng) const { return rng.categorical(probs_); }

 private:
  std::vector<double> probs_;
};

enum class TerminationReason { PaidFine, Punished, Expired, Horizon };

inline const char* to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::PaidFine: return "paid_fine";
    case TerminationReason::Punished: return "punished";
    case TerminationReason::Expired: return "expired";
    case TerminationReason::Horizon: return "horizon";
  }
  return "?";
}

inline TerminationReason termination_reason_from(const std::string& s) {
  if (s == "paid_fine") return TerminationReason::PaidFine;
  if (s == "punished") return TerminationReason::Punished;
  if (s == "expired") return TerminationReason::Expired;
  if (s == "horizon") return TerminationReason::Horizon;
  throw ValidationError("unknown termination reason: " + s);
}

struct TerminalRecord {
  AgentState agent;  // state at removal; utility is -agent.paid
  std::int64_t utility = 0;
  TerminationReason reason = TerminationReason::Expired;

  // Round the agent joined the queue, recovered from its participation count.
  int entry_round(int terminal_round) const {
    return terminal_round - agent.rounds + 1;
  }
};

}  // namespace fineq

#endif  // FINEQ_TYPES_HPP
