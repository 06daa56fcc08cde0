#ifndef FINEQ_EVALUATION_HPP
#define FINEQ_EVALUATION_HPP

#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "fineq/analytic.hpp"
#include "fineq/game.hpp"
#include "fineq/parallel.hpp"
#include "fineq/strategy.hpp"

// Monte-Carlo estimators over episodes: expected utility, revenue, the
// incumbent-vs-challenger utility gap, and the parameter sweeps behind the
// avalanche and division experiments.
namespace fineq::evaluation {

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t count = 0;
  std::uint64_t seed = 0;
};

namespace detail {

inline McEstimate summarize(std::span<const double> values, std::uint64_t seed) {
  McEstimate est;
  est.seed = seed;
  est.count = static_cast<std::int64_t>(values.size());
  if (values.empty()) return est;
  est.mean = pairwise_sum(values) / static_cast<double>(values.size());
  if (values.size() > 1) {
    std::vector<double> sq(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double d = values[i] - est.mean;
      sq[i] = d * d;
    }
    const double var = pairwise_sum(sq) / static_cast<double>(values.size() - 1);
    est.std_error = std::sqrt(var / static_cast<double>(values.size()));
  }
  return est;
}

// Per-episode tallies; cheap enough to run for every Monte-Carlo episode.
struct EvalSink {
  int burn_in = 0;
  std::int64_t revenue_total = 0;
  std::int64_t revenue_steady = 0;
  double utility_sum = 0.0;
  std::int64_t terminals = 0;
  double tagged_utility_sum = 0.0;
  std::int64_t tagged_terminals = 0;

  void agent_step(const AgentState&, const ActionDistribution&, int, int, int) {}
  void agent_terminal(const AgentState& st, TerminationReason, int round) {
    revenue_total += st.paid;
    if (round - st.rounds + 1 > burn_in) revenue_steady += st.paid;
    utility_sum -= st.paid;
    ++terminals;
    if (st.strategy_tag == 1) {
      tagged_utility_sum -= st.paid;
      ++tagged_terminals;
    }
  }
  void round_done(int, std::int64_t, const std::vector<fineq::detail::LiveAgent>&) {}
};

inline std::uint64_t episode_seed(std::uint64_t seed, std::size_t episode) {
  return hash_combine(hash_combine(seed, stream::kEpisode),
                      static_cast<std::uint64_t>(episode));
}

}  // namespace detail

using ProfileFactory =
    std::function<std::unique_ptr<StrategyProfile>(const QueueConfig& episode_cfg)>;

inline ProfileFactory uniform_profile(StrategySpec spec) {
  return [spec = std::move(spec)](const QueueConfig& cfg) {
    return std::make_unique<UniformProfile>(StrategyBuilder(spec, cfg));
  };
}

// Mean terminal utility under a profile; tagged_only restricts to agents the
// profile tagged 1.
inline McEstimate expected_utility(const QueueConfig& cfg, const ProfileFactory& profile,
                                   int episodes, std::uint64_t seed, int workers = 1,
                                   bool tagged_only = false) {
  if (episodes < 1) throw ValidationError("episodes must be at least 1");
  cfg.validate();
  std::vector<double> value(static_cast<std::size_t>(episodes));
  std::vector<char> valid(static_cast<std::size_t>(episodes), 0);
  parallel_for(static_cast<std::size_t>(episodes), workers, [&](std::size_t e) {
    QueueConfig ecfg = cfg;
    ecfg.seed = detail::episode_seed(seed, e);
    detail::EvalSink sink;
    sink.burn_in = ecfg.effective_burn_in();
    auto prof = profile(ecfg);
    run_queue_core(ecfg, *prof, sink);
    const std::int64_t n = tagged_only ? sink.tagged_terminals : sink.terminals;
    if (n > 0) {
      value[e] = (tagged_only ? sink.tagged_utility_sum : sink.utility_sum) /
                 static_cast<double>(n);
      valid[e] = 1;
    }
  });
  std::vector<double> kept;
  kept.reserve(value.size());
  for (std::size_t e = 0; e < value.size(); ++e)
    if (valid[e]) kept.push_back(value[e]);
  return detail::summarize(kept, seed);
}

struct RevenueEstimate {
  McEstimate total;             // all rounds
  McEstimate per_round;         // total / horizon
  McEstimate steady_per_round;  // burn-in excluded, per remaining round
  double per_period_mean = 0.0; // steady per-round rate times the period
};

inline RevenueEstimate mc_revenue(const QueueConfig& cfg, const ProfileFactory& profile,
                                  int episodes, std::uint64_t seed, int workers = 1) {
  if (episodes < 1) throw ValidationError("episodes must be at least 1");
  cfg.validate();
  const int steady_rounds = std::max(0, cfg.horizon - cfg.effective_burn_in());
  std::vector<double> total(static_cast<std::size_t>(episodes));
  std::vector<double> steady(static_cast<std::size_t>(episodes));
  parallel_for(static_cast<std::size_t>(episodes), workers, [&](std::size_t e) {
    QueueConfig ecfg = cfg;
    ecfg.seed = detail::episode_seed(seed, e);
    detail::EvalSink sink;
    sink.burn_in = ecfg.effective_burn_in();
    auto prof = profile(ecfg);
    run_queue_core(ecfg, *prof, sink);
    total[e] = static_cast<double>(sink.revenue_total);
    steady[e] = steady_rounds > 0
                    ? static_cast<double>(sink.revenue_steady) / steady_rounds
                    : 0.0;
  });
  RevenueEstimate est;
  est.total = detail::summarize(total, seed);
  std::vector<double> per_round(total);
  for (double& v : per_round) v /= cfg.horizon;
  est.per_round = detail::summarize(per_round, seed);
  est.steady_per_round = detail::summarize(steady, seed);
  est.per_period_mean = est.steady_per_round.mean * cfg.period;
  return est;
}

// Exact per-entry-position expected payments for single-sorting setups, where
// ids map one-to-one onto starting positions.
inline std::vector<McEstimate> per_position_payment(const QueueConfig& cfg,
                                                    const ProfileFactory& profile,
                                                    int episodes, std::uint64_t seed,
                                                    int workers = 1) {
  if (cfg.horizon != 1 || cfg.entrants != 0)
    throw ValidationError("per-position payments need a single-round, no-entrant game");
  struct PositionSink : detail::EvalSink {
    std::vector<double>* paid = nullptr;
    void agent_terminal(const AgentState& st, TerminationReason r, int round) {
      detail::EvalSink::agent_terminal(st, r, round);
      (*paid)[static_cast<std::size_t>(st.id)] = st.paid;
    }
  };
  const std::size_t n = static_cast<std::size_t>(cfg.initial_agents);
  std::vector<std::vector<double>> paid(static_cast<std::size_t>(episodes),
                                        std::vector<double>(n, 0.0));
  parallel_for(static_cast<std::size_t>(episodes), workers, [&](std::size_t e) {
    QueueConfig ecfg = cfg;
    ecfg.seed = detail::episode_seed(seed, e);
    PositionSink sink;
    sink.burn_in = ecfg.effective_burn_in();
    sink.paid = &paid[e];
    auto prof = profile(ecfg);
    run_queue_core(ecfg, *prof, sink);
  });
  std::vector<McEstimate> out(n);
  std::vector<double> column(static_cast<std::size_t>(episodes));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t e = 0; e < column.size(); ++e) column[e] = paid[e][i];
    out[i] = detail::summarize(column, seed);
  }
  return out;
}

// Utility gap between a small challenger fraction and the incumbent
// population, paired over common episode seeds: for each episode the tagged
// challengers' mean utility in the mixed run minus the mean utility of the
// incumbent-only run on the same per-agent streams.
inline McEstimate nashconv(const QueueConfig& cfg, const StrategySpec& incumbent,
                           const StrategySpec& challenger, double rho, int episodes,
                           std::uint64_t seed, int workers = 1) {
  if (!(rho > 0.0 && rho < 1.0)) throw ValidationError("rho must lie in (0,1)");
  if (episodes < 1) throw ValidationError("episodes must be at least 1");
  cfg.validate();
  std::vector<double> diff(static_cast<std::size_t>(episodes));
  std::vector<char> valid(static_cast<std::size_t>(episodes), 0);
  parallel_for(static_cast<std::size_t>(episodes), workers, [&](std::size_t e) {
    QueueConfig ecfg = cfg;
    ecfg.seed = detail::episode_seed(seed, e);

    detail::EvalSink mixed;
    mixed.burn_in = ecfg.effective_burn_in();
    {
      MixtureProfile profile(ecfg.seed, rho, StrategyBuilder(challenger, ecfg),
                             StrategyBuilder(incumbent, ecfg));
      run_queue_core(ecfg, profile, mixed);
    }
    if (mixed.tagged_terminals == 0) return;

    detail::EvalSink pure;
    pure.burn_in = ecfg.effective_burn_in();
    {
      UniformProfile profile{StrategyBuilder(incumbent, ecfg)};
      run_queue_core(ecfg, profile, pure);
    }
    if (pure.terminals == 0) return;

    diff[e] = mixed.tagged_utility_sum / static_cast<double>(mixed.tagged_terminals) -
              pure.utility_sum / static_cast<double>(pure.terminals);
    valid[e] = 1;
  });
  std::vector<double> kept;
  kept.reserve(diff.size());
  for (std::size_t e = 0; e < diff.size(); ++e)
    if (valid[e]) kept.push_back(diff[e]);
  if (kept.empty())
    throw ValidationError("no episode produced a tagged challenger; raise rho or episodes");
  return detail::summarize(kept, seed);
}

// Spearman rank correlation with average ranks on ties.
inline double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw ValidationError("rank correlation needs two equal-length series");
  const auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> rank(v.size());
    std::size_t i = 0;
    while (i < idx.size()) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double shared = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t t = i; t <= j; ++t) rank[idx[t]] = shared;
      i = j + 1;
    }
    return rank;
  };
  const std::vector<double> rx = ranks(x);
  const std::vector<double> ry = ranks(y);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= static_cast<double>(rx.size());
  my /= static_cast<double>(ry.size());
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

struct SweepRow {
  std::string axis;
  double value = 0.0;
  std::string strategy;
  int episodes = 0;
  RevenueEstimate revenue;
};

struct NamedSpec {
  std::string name;
  StrategySpec spec;
};

enum class SweepAxis { Ignorance, Entrants };

// Revenue as a function of the ignorance probability or the inflow, per
// strategy. Trend statistics over the grid substitute for the figures.
inline std::vector<SweepRow> avalanche_sweep(const QueueConfig& cfg, SweepAxis axis,
                                             std::span<const double> grid,
                                             std::span<const NamedSpec> profiles,
                                             int episodes, std::uint64_t seed,
                                             int workers = 1) {
  if (grid.empty()) throw ValidationError("sweep grid must not be empty");
  std::vector<SweepRow> rows;
  for (const NamedSpec& prof : profiles) {
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
      QueueConfig point = cfg;
      if (axis == SweepAxis::Ignorance) {
        point.ignorance = grid[gi];
      } else {
        point.entrants = static_cast<int>(grid[gi]);
        if (point.entrants != grid[gi])
          throw ValidationError("entrants grid values must be integers");
      }
      SweepRow row;
      row.axis = axis == SweepAxis::Ignorance ? "ignorance" : "entrants";
      row.value = grid[gi];
      row.strategy = prof.name;
      row.episodes = episodes;
      row.revenue = mc_revenue(point, uniform_profile(prof.spec), episodes,
                               hash_combine(seed, gi), workers);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

enum class DivisionMode { TimeFixedCharges, TimeFixedCapacity, Group };

// Division sweeps: vary how often the queue is sorted (optionally holding the
// per-period processing capacity fixed) or split the flow into independent
// groups. Group revenue is the exact sum over the per-group streams.
inline std::vector<SweepRow> division_sweep(const QueueConfig& cfg, DivisionMode mode,
                                            std::span<const int> grid,
                                            std::span<const NamedSpec> profiles,
                                            int episodes, std::uint64_t seed,
                                            int workers = 1) {
  if (grid.empty()) throw ValidationError("sweep grid must not be empty");
  cfg.validate();
  std::vector<SweepRow> rows;
  for (const NamedSpec& prof : profiles) {
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
      const int g = grid[gi];
      SweepRow row;
      row.strategy = prof.name;
      row.episodes = episodes;
      row.value = g;
      if (mode == DivisionMode::Group) {
        row.axis = "groups";
        if (g < 1) throw ValidationError("group count must be positive");
        if (cfg.entrants % g != 0)
          throw ValidationError("groups must divide entrants (x)");
        if (cfg.punished % g != 0)
          throw ValidationError("groups must divide the punished count (k)");
        if (cfg.initial_agents % g != 0)
          throw ValidationError("groups must divide the initial agents (x0)");
        QueueConfig part = cfg;
        part.entrants /= g;
        part.punished /= g;
        part.initial_agents /= g;
        // sum of g independent queues with split seed streams
        std::vector<double> total(static_cast<std::size_t>(episodes), 0.0);
        std::vector<double> steady(static_cast<std::size_t>(episodes), 0.0);
        const int steady_rounds = std::max(0, part.horizon - part.effective_burn_in());
        parallel_for(static_cast<std::size_t>(episodes), workers, [&](std::size_t e) {
          for (int piece = 0; piece < g; ++piece) {
            QueueConfig ecfg = part;
            ecfg.seed = hash_combine(detail::episode_seed(seed, e),
                                     hash_combine(stream::kGroup, piece));
            detail::EvalSink sink;
            sink.burn_in = ecfg.effective_burn_in();
            StrategyBuilder builder(prof.spec, ecfg);
            UniformProfile profile{std::move(builder)};
            run_queue_core(ecfg, profile, sink);
            total[e] += static_cast<double>(sink.revenue_total);
            steady[e] += steady_rounds > 0
                             ? static_cast<double>(sink.revenue_steady) / steady_rounds
                             : 0.0;
          }
        });
        row.revenue.total = detail::summarize(total, seed);
        std::vector<double> per_round(total);
        for (double& v : per_round) v /= part.horizon;
        row.revenue.per_round = detail::summarize(per_round, seed);
        row.revenue.steady_per_round = detail::summarize(steady, seed);
        row.revenue.per_period_mean = row.revenue.steady_per_round.mean * part.period;
      } else {
        row.axis = "period";
        QueueConfig point = cfg;
        point.period = g;
        if (point.burn_in < 0) point.burn_in = -1;  // keep tracking 2*period
        if (mode == DivisionMode::TimeFixedCapacity) {
          const int capacity = cfg.punished * cfg.period;
          if (capacity % g != 0)
            throw ValidationError("period grid value must divide the capacity (k*T)");
          point.punished = capacity / g;
        }
        point.validate();
        row.revenue = mc_revenue(point, uniform_profile(prof.spec), episodes,
                                 hash_combine(seed, gi), workers);
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

struct CoalitionCheck {
  McEstimate shared_cost;  // expected per-member share
  McEstimate leave_gain;   // share minus the designated member's own payments
  double pay_fine_gain = 0.0;
  analytic::CoalitionDeviation prescribed = analytic::CoalitionDeviation::None;
  double best_gain = 0.0;
  bool exact = false;
};

// Cost-sharing coalition of the first `size` entering agents among agents
// following `others`. Uses the exact enumerator where it applies, Monte Carlo
// otherwise. The designated leaver is the last member to enter.
inline CoalitionCheck coalition_check(const QueueConfig& cfg, int size,
                                      const StrategySpec& others, int episodes,
                                      std::uint64_t seed, int workers = 1) {
  cfg.validate();
  const std::int64_t population =
      cfg.initial_agents + static_cast<std::int64_t>(cfg.entrants) * (cfg.horizon - 1);
  if (size < 1) throw ValidationError("coalition size must be positive");
  if (size > population) throw ValidationError("coalition larger than the population");

  CoalitionCheck check;
  const bool exact_capable =
      (size == population) || (cfg.horizon == 1 && cfg.initial_agents <= 16 &&
                               others.kind == StrategySpec::Kind::Crit1);
  if (exact_capable) {
    const analytic::CoalitionReport rep = analytic::coalition_analysis(cfg, size);
    check.exact = true;
    check.shared_cost = {rep.shared_cost, 0.0, 1, seed};
    check.prescribed = rep.deviation;
    check.best_gain = rep.best_deviation_gain;
    check.pay_fine_gain = rep.shared_cost - cfg.fine;
    check.leave_gain = {rep.deviation == analytic::CoalitionDeviation::LeaveGroup
                            ? rep.best_deviation_gain
                            : rep.shared_cost - rep.deviator_expected_paid,
                        0.0, 1, seed};
    return check;
  }

  struct CoalitionSink : detail::EvalSink {
    AgentId watched = 0;
    double member_paid_sum = 0.0;
    double watched_paid = 0.0;
    void agent_terminal(const AgentState& st, TerminationReason r, int round) {
      detail::EvalSink::agent_terminal(st, r, round);
      if (st.strategy_tag == 1) member_paid_sum += st.paid;
      if (st.id == watched) watched_paid = st.paid;
    }
  };

  std::vector<double> share(static_cast<std::size_t>(episodes));
  std::vector<double> gain(static_cast<std::size_t>(episodes));
  parallel_for(static_cast<std::size_t>(episodes), workers, [&](std::size_t e) {
    QueueConfig ecfg = cfg;
    ecfg.seed = detail::episode_seed(seed, e);
    CoalitionSink sink;
    sink.burn_in = ecfg.effective_burn_in();
    sink.watched = size - 1;
    CoalitionProfile profile(size, StrategyBuilder(others, ecfg),
                             std::make_shared<SigmaTable>(ecfg.fine));
    run_queue_core(ecfg, profile, sink);
    share[e] = sink.member_paid_sum / size;
    gain[e] = share[e] - sink.watched_paid;
  });
  check.shared_cost = detail::summarize(share, seed);
  check.leave_gain = detail::summarize(gain, seed);
  check.pay_fine_gain = check.shared_cost.mean - cfg.fine;
  check.best_gain = std::max(check.leave_gain.mean, check.pay_fine_gain);
  check.prescribed = check.shared_cost.mean > cfg.legal_cost - 1e-9
                         ? analytic::CoalitionDeviation::PayFine
                         : analytic::CoalitionDeviation::LeaveGroup;
  return check;
}

}  // namespace fineq::evaluation

#endif  // FINEQ_EVALUATION_HPP
