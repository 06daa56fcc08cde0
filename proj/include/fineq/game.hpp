#ifndef FINEQ_GAME_HPP
#define FINEQ_GAME_HPP

#include <algorithm>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include "fineq/rng.hpp"
#include "fineq/strategy.hpp"
#include "fineq/types.hpp"

namespace fineq {

// One payment draw: with probability p the declaration is dropped and nothing
// is paid, otherwise the declared distribution is sampled.
inline int sample_payment(const ActionDistribution& dist, double p, Rng& rng) {
  dist.validate();
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("ignorance outside [0,1]");
  const int declared = dist.sample(rng);
  return rng.bernoulli(p) ? 0 : declared;
}

namespace detail {

// Ascending average payment; exact integer cross-multiplication so ties are
// ties and stability does the rest.
inline bool ratio_less(int paid_a, int rounds_a, int paid_b, int rounds_b) {
  return static_cast<std::int64_t>(paid_a) * rounds_b <
         static_cast<std::int64_t>(paid_b) * rounds_a;
}

}  // namespace detail

// Stable sort by average payment paid/rounds; positions reassigned 1..n.
inline std::vector<AgentState> stable_sort_by_ratio(std::vector<AgentState> agents) {
  for (const AgentState& a : agents)
    if (a.rounds < 1)
      throw InternalError("sort invoked before the participation update");
  std::stable_sort(agents.begin(), agents.end(), [](const AgentState& a, const AgentState& b) {
    return detail::ratio_less(a.paid, a.rounds, b.paid, b.rounds);
  });
  for (std::size_t i = 0; i < agents.size(); ++i)
    agents[i].position = static_cast<int>(i) + 1;
  return agents;
}

struct RoundOutcome {
  std::vector<AgentState> survivors;
  std::vector<TerminalRecord> terminals;
  std::map<AgentId, int> payments;  // realized payment per agent this round
};

struct EpisodeLog {
  QueueConfig config;
  std::uint64_t seed = 0;
  std::vector<RoundOutcome> rounds;
  std::vector<std::int64_t> revenue;  // per round, over that round's terminals
};

namespace detail {

struct LiveAgent {
  AgentState st;
  Strategy* strategy = nullptr;
  Rng rng{0};
};

// Three phases of one round over the live roster. Emits every step and
// terminal to the sink and returns the revenue collected from terminals.
template <class Sink>
std::int64_t play_round_impl(std::vector<LiveAgent>& live, const QueueConfig& cfg,
                             int round, Sink& sink) {
  // phase 1: declarations, ignorance, realized payments
  for (LiveAgent& a : live) {
    const ActionDistribution& dist = a.strategy->declare(a.st.observation());
    if (dist.max_payment() != cfg.fine)
      throw ValidationError("strategy declared a distribution over the wrong payments");
    const int declared = dist.sample(a.rng);
    const bool forgot = a.rng.bernoulli(cfg.ignorance);
    const int realized = forgot ? 0 : declared;
    sink.agent_step(a.st, dist, declared, realized, round);
    // phase 2 bookkeeping
    a.st.paid += realized;
    a.st.rounds += 1;
  }
  // phase 2: stable sort by average payment
  std::stable_sort(live.begin(), live.end(), [](const LiveAgent& a, const LiveAgent& b) {
    return ratio_less(a.st.paid, a.st.rounds, b.st.paid, b.st.rounds);
  });
  for (std::size_t i = 0; i < live.size(); ++i)
    live[i].st.position = static_cast<int>(i) + 1;

  // phase 3: removals in sub-phase order
  enum class Fate : unsigned char { Stays, Settled, Charged, Aged };
  std::vector<Fate> fate(live.size(), Fate::Stays);
  for (std::size_t i = 0; i < live.size(); ++i)
    if (live[i].st.paid >= cfg.fine) fate[i] = Fate::Settled;
  int charges = cfg.punished;
  for (std::size_t i = 0; i < live.size() && charges > 0; ++i) {
    if (fate[i] != Fate::Stays) continue;
    live[i].st.paid += cfg.legal_cost;
    fate[i] = Fate::Charged;
    --charges;
  }
  for (std::size_t i = 0; i < live.size(); ++i)
    if (fate[i] == Fate::Stays && live[i].st.rounds >= cfg.period) fate[i] = Fate::Aged;

  std::int64_t revenue = 0;
  const auto emit = [&](Fate which, TerminationReason reason) {
    for (std::size_t i = 0; i < live.size(); ++i) {
      if (fate[i] != which) continue;
      revenue += live[i].st.paid;
      sink.agent_terminal(live[i].st, reason, round);
    }
  };
  emit(Fate::Settled, TerminationReason::PaidFine);
  emit(Fate::Charged, TerminationReason::Punished);
  emit(Fate::Aged, TerminationReason::Expired);

  std::size_t keep = 0;
  for (std::size_t i = 0; i < live.size(); ++i) {
    if (fate[i] != Fate::Stays) continue;
    if (keep != i) live[keep] = std::move(live[i]);
    live[keep].st.position = static_cast<int>(keep) + 1;
    ++keep;
  }
  live.resize(keep);
  return revenue;
}

}  // namespace detail

// Sink interface (duck-typed):
//   void agent_step(const AgentState& before, const ActionDistribution& declared,
//                   int declared_payment, int realized_payment, int round);
//   void agent_terminal(const AgentState& final_state, TerminationReason, int round);
//   void round_done(int round, std::int64_t revenue,
//                   const std::vector<detail::LiveAgent>& survivors);
struct NullSink {
  void agent_step(const AgentState&, const ActionDistribution&, int, int, int) {}
  void agent_terminal(const AgentState&, TerminationReason, int) {}
  void round_done(int, std::int64_t, const std::vector<detail::LiveAgent>&) {}
};

// The full game: `initial_agents` fresh offenders, `horizon` rounds, fresh
// entrants appended to the back after every round but the last, and whatever
// survives the last round terminates there with what it paid.
template <class Sink>
void run_queue_core(const QueueConfig& cfg, StrategyProfile& profile, Sink& sink) {
  cfg.validate();
  std::vector<std::unique_ptr<Strategy>> owned;
  std::vector<detail::LiveAgent> live;
  AgentId next_id = 0;
  const auto enter = [&](int count) {
    for (int i = 0; i < count; ++i) {
      detail::LiveAgent a;
      a.st.id = next_id;
      a.st.position = static_cast<int>(live.size()) + 1;
      a.rng = Rng::stream(cfg.seed, stream::kAgent, static_cast<std::uint64_t>(next_id));
      owned.push_back(profile.assign(next_id, a.st.strategy_tag));
      a.strategy = owned.back().get();
      live.push_back(std::move(a));
      ++next_id;
    }
  };
  enter(cfg.initial_agents);
  for (int round = 1; round <= cfg.horizon; ++round) {
    std::int64_t revenue = detail::play_round_impl(live, cfg, round, sink);
    if (round == cfg.horizon) {
      for (detail::LiveAgent& a : live) {
        revenue += a.st.paid;
        sink.agent_terminal(a.st, TerminationReason::Horizon, round);
      }
      live.clear();
    }
    sink.round_done(round, revenue, live);
    if (round < cfg.horizon) enter(cfg.entrants);
  }
}

namespace detail {

struct LogSink {
  EpisodeLog log;
  RoundOutcome current;

  explicit LogSink(const QueueConfig& cfg) {
    log.config = cfg;
    log.seed = cfg.seed;
  }
  void agent_step(const AgentState& st, const ActionDistribution&, int, int realized,
                  int) {
    current.payments[st.id] = realized;
  }
  void agent_terminal(const AgentState& st, TerminationReason reason, int) {
    current.terminals.push_back({st, -static_cast<std::int64_t>(st.paid), reason});
  }
  void round_done(int, std::int64_t revenue, const std::vector<LiveAgent>& live) {
    current.survivors.reserve(live.size());
    for (const LiveAgent& a : live) current.survivors.push_back(a.st);
    log.rounds.push_back(std::move(current));
    log.revenue.push_back(revenue);
    current = {};
  }
};

}  // namespace detail

inline EpisodeLog run_queue(const QueueConfig& cfg, StrategyProfile& profile) {
  detail::LogSink sink(cfg);
  run_queue_core(cfg, profile, sink);
  return std::move(sink.log);
}

// One round over explicit agents and per-agent strategies; per-agent streams
// are derived from the passed generator.
inline RoundOutcome play_round(std::vector<AgentState> agents,
                               std::span<Strategy* const> strategies,
                               const QueueConfig& cfg, Rng& rng) {
  if (agents.size() != strategies.size())
    throw ValidationError("one strategy per agent required");
  std::vector<detail::LiveAgent> live;
  live.reserve(agents.size());
  for (std::size_t i = 0; i < agents.size(); ++i) {
    detail::LiveAgent a;
    a.st = agents[i];
    a.strategy = strategies[i];
    a.rng = Rng(rng.next_u64());
    live.push_back(std::move(a));
  }
  detail::LogSink sink(cfg);
  const std::int64_t revenue = detail::play_round_impl(live, cfg, 1, sink);
  sink.round_done(1, revenue, live);
  return std::move(sink.log.rounds.front());
}

struct RevenueSummary {
  double total = 0.0;
  double per_round = 0.0;
  std::int64_t agents_counted = 0;
  int rounds_counted = 0;
};

// Terminal payments summed over the episode; the steady-state view drops
// agents that entered during the burn-in rounds and normalizes by the rounds
// that remain.
inline RevenueSummary revenue(const EpisodeLog& log, bool steady_state = false) {
  RevenueSummary sum;
  const int burn_in = log.config.effective_burn_in();
  for (std::size_t r = 0; r < log.rounds.size(); ++r) {
    const int round = static_cast<int>(r) + 1;
    for (const TerminalRecord& t : log.rounds[r].terminals) {
      if (steady_state && t.entry_round(round) <= burn_in) continue;
      sum.total += t.agent.paid;
      ++sum.agents_counted;
    }
  }
  sum.rounds_counted = steady_state
                           ? std::max(0, static_cast<int>(log.rounds.size()) - burn_in)
                           : static_cast<int>(log.rounds.size());
  sum.per_round = sum.rounds_counted > 0 ? sum.total / sum.rounds_counted : 0.0;
  return sum;
}

}  // namespace fineq

#endif  // FINEQ_GAME_HPP
