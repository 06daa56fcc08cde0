#include <doctest.h>

#include <set>
#include <sstream>

#include "fineq/game.hpp"
#include "fineq/io.hpp"

using namespace fineq;

TEST_SUITE_BEGIN("game");

TEST_CASE("payment sampling") {
  Rng rng(1);
  const ActionDistribution full = ActionDistribution::pure(4, 4);
  SUBCASE("full ignorance always drops the payment") {
    for (int i = 0; i < 200; ++i) CHECK(sample_payment(full, 1.0, rng) == 0);
  }
  SUBCASE("no ignorance realizes the point mass") {
    for (int i = 0; i < 200; ++i) CHECK(sample_payment(full, 0.0, rng) == 4);
  }
  SUBCASE("frequency of dropped payments") {
    int zeros = 0;
    const int draws = 1000000;
    for (int i = 0; i < draws; ++i)
      if (sample_payment(full, 0.5, rng) == 0) ++zeros;
    CHECK(std::abs(zeros / static_cast<double>(draws) - 0.5) < 0.002);
  }
  SUBCASE("malformed distributions are rejected") {
    CHECK_THROWS_AS(ActionDistribution({0.5, 0.6}), ValidationError);
    CHECK_THROWS_AS(ActionDistribution({-0.1, 1.1}), ValidationError);
    CHECK_THROWS_AS(ActionDistribution(std::vector<double>{}), ValidationError);
  }
}

TEST_CASE("stable sort by average payment") {
  const auto agent = [](AgentId id, int paid, int rounds) {
    AgentState a;
    a.id = id;
    a.paid = paid;
    a.rounds = rounds;
    return a;
  };
  SUBCASE("strict ordering reverses") {
    auto out = stable_sort_by_ratio({agent(0, 2, 1), agent(1, 1, 1), agent(2, 0, 1)});
    CHECK(out[0].id == 2);
    CHECK(out[1].id == 1);
    CHECK(out[2].id == 0);
    CHECK(out[0].position == 1);
    CHECK(out[2].position == 3);
  }
  SUBCASE("ties keep the input order") {
    auto out = stable_sort_by_ratio({agent(7, 1, 1), agent(8, 1, 1), agent(9, 1, 1)});
    CHECK(out[0].id == 7);
    CHECK(out[1].id == 8);
    CHECK(out[2].id == 9);
  }
  SUBCASE("fractional ratios compare exactly") {
    // 1/2, 1/2, 1/4 -> the quarter goes first, the halves keep order
    auto out = stable_sort_by_ratio({agent(0, 1, 2), agent(1, 1, 2), agent(2, 1, 4)});
    CHECK(out[0].id == 2);
    CHECK(out[1].id == 0);
    CHECK(out[2].id == 1);
  }
  SUBCASE("unparticipated agents are an internal error") {
    CHECK_THROWS_AS(stable_sort_by_ratio({agent(0, 0, 0)}), InternalError);
  }
}

TEST_CASE("one deterministic round") {
  QueueConfig cfg;
  cfg.fine = 2;
  cfg.legal_cost = 3;
  cfg.period = 2;
  cfg.punished = 1;
  cfg.ignorance = 0.0;
  std::vector<AgentState> agents(3);
  for (int i = 0; i < 3; ++i) {
    agents[static_cast<std::size_t>(i)].id = i;
    agents[static_cast<std::size_t>(i)].position = i + 1;
  }
  auto pay2 = pure_strategy(2, 2);
  auto pay1 = pure_strategy(1, 2);
  auto pay0 = pure_strategy(0, 2);
  std::vector<Strategy*> strategies{pay2.get(), pay1.get(), pay0.get()};
  Rng rng(99);
  const RoundOutcome out = play_round(agents, strategies, cfg, rng);

  REQUIRE(out.terminals.size() == 2);
  CHECK(out.terminals[0].agent.id == 0);  // paid the fine in full
  CHECK(out.terminals[0].reason == TerminationReason::PaidFine);
  CHECK(out.terminals[0].utility == -2);
  CHECK(out.terminals[1].agent.id == 2);  // paid nothing, charged the cost
  CHECK(out.terminals[1].reason == TerminationReason::Punished);
  CHECK(out.terminals[1].utility == -3);
  REQUIRE(out.survivors.size() == 1);
  CHECK(out.survivors[0].id == 1);
  CHECK(out.survivors[0].paid == 1);
  CHECK(out.survivors[0].position == 1);
}

TEST_CASE("full ignorance with a one-round window") {
  QueueConfig cfg;
  cfg.ignorance = 1.0;
  cfg.period = 1;
  cfg.horizon = 1;
  cfg.entrants = 0;
  cfg.initial_agents = 6;
  cfg.punished = 2;
  StrategyBuilder builder(parse_strategy_spec("pure:4"), cfg);
  UniformProfile profile{std::move(builder)};
  const EpisodeLog log = run_queue(cfg, profile);
  int punished = 0, expired = 0;
  for (const TerminalRecord& t : log.rounds[0].terminals) {
    if (t.reason == TerminationReason::Punished) {
      CHECK(t.utility == -cfg.legal_cost);
      ++punished;
    } else {
      CHECK(t.reason == TerminationReason::Expired);
      CHECK(t.utility == 0);
      ++expired;
    }
  }
  CHECK(punished == 2);
  CHECK(expired == 4);
}

TEST_CASE("no ignorance, everyone settles") {
  QueueConfig cfg;
  cfg.ignorance = 0.0;
  cfg.seed = 17;
  StrategyBuilder builder(parse_strategy_spec("pure:4"), cfg);
  UniformProfile profile{std::move(builder)};
  const EpisodeLog log = run_queue(cfg, profile);
  CHECK(log.revenue[0] == cfg.initial_agents * cfg.fine);
  for (const RoundOutcome& r : log.rounds) {
    CHECK(r.survivors.empty());
    for (const TerminalRecord& t : r.terminals) {
      CHECK(t.reason == TerminationReason::PaidFine);
      CHECK(t.agent.paid == cfg.fine);
    }
  }
}

TEST_CASE("empty game") {
  QueueConfig cfg;
  cfg.initial_agents = 0;
  cfg.entrants = 0;
  cfg.horizon = 3;
  StrategyBuilder builder(parse_strategy_spec("brs"), cfg);
  UniformProfile profile{std::move(builder)};
  const EpisodeLog log = run_queue(cfg, profile);
  CHECK(log.rounds.size() == 3);
  CHECK(revenue(log).total == 0.0);
}

TEST_CASE("episode log structure and determinism") {
  QueueConfig cfg;
  cfg.horizon = 20;
  cfg.seed = 1234;
  const auto once = [&cfg] {
    StrategyBuilder builder(parse_strategy_spec("brs"), cfg);
    UniformProfile profile{std::move(builder)};
    return run_queue(cfg, profile);
  };
  const EpisodeLog a = once();
  const EpisodeLog b = once();
  CHECK(a.rounds.size() == static_cast<std::size_t>(cfg.horizon));
  std::ostringstream sa, sb;
  io::write_episode_log(a, sa);
  io::write_episode_log(b, sb);
  CHECK(sa.str() == sb.str());

  QueueConfig other = cfg;
  other.seed = 1235;
  StrategyBuilder builder(parse_strategy_spec("brs"), other);
  UniformProfile profile{std::move(builder)};
  std::ostringstream sc;
  io::write_episode_log(run_queue(other, profile), sc);
  CHECK(sa.str() != sc.str());
}

TEST_CASE("conservation, partition and bounds over random configurations") {
  Rng gen(2718);
  for (int trial = 0; trial < 30; ++trial) {
    QueueConfig cfg;
    cfg.fine = 1 + static_cast<int>(gen.below(5));
    cfg.legal_cost = cfg.fine + 1 + static_cast<int>(gen.below(6));
    cfg.period = 1 + static_cast<int>(gen.below(5));
    cfg.punished = 1 + static_cast<int>(gen.below(3));
    cfg.ignorance = gen.uniform(0.0, 1.0);
    cfg.entrants = static_cast<int>(gen.below(9));
    cfg.initial_agents = static_cast<int>(gen.below(13));
    cfg.horizon = 1 + static_cast<int>(gen.below(12));
    cfg.seed = gen.next_u64();
    const char* names[] = {"brs", "pure:0", "pure:1", "crit1"};
    StrategyBuilder builder(parse_strategy_spec(names[gen.below(4)]), cfg);
    UniformProfile profile{std::move(builder)};
    const EpisodeLog log = run_queue(cfg, profile);

    std::int64_t terminal_paid = 0, declared_paid = 0, punished = 0;
    std::set<AgentId> seen;
    for (std::size_t r = 0; r < log.rounds.size(); ++r) {
      CHECK(log.revenue[r] >= 0);
      std::int64_t round_paid = 0;
      for (const TerminalRecord& t : log.rounds[r].terminals) {
        terminal_paid += t.agent.paid;
        round_paid += t.agent.paid;
        CHECK(t.utility == -t.agent.paid);
        CHECK(seen.insert(t.agent.id).second);  // exactly one termination
        if (t.reason == TerminationReason::Punished) ++punished;
      }
      CHECK(round_paid == log.revenue[r]);
      for (const auto& [id, mu] : log.rounds[r].payments) declared_paid += mu;
      CHECK(log.rounds[r].survivors.size() + log.rounds[r].payments.size() * 0 <=
            static_cast<std::size_t>(cfg.position_cap()));
    }
    CHECK(terminal_paid == declared_paid + punished * cfg.legal_cost);
    const std::int64_t entered =
        cfg.initial_agents + static_cast<std::int64_t>(cfg.entrants) * (cfg.horizon - 1);
    CHECK(static_cast<std::int64_t>(seen.size()) == entered);
  }
}

TEST_CASE("revenue summaries") {
  SUBCASE("single charged agent") {
    QueueConfig cfg;
    cfg.period = 1;
    cfg.horizon = 1;
    cfg.entrants = 0;
    cfg.initial_agents = 1;
    cfg.punished = 2;
    cfg.ignorance = 1.0;
    StrategyBuilder builder(parse_strategy_spec("pure:0"), cfg);
    UniformProfile profile{std::move(builder)};
    const EpisodeLog log = run_queue(cfg, profile);
    CHECK(revenue(log).total == doctest::Approx(cfg.legal_cost));
  }
  SUBCASE("steady state drops the opening rounds") {
    QueueConfig cfg;
    cfg.ignorance = 0.0;
    cfg.horizon = 10;
    cfg.burn_in = 4;
    StrategyBuilder builder(parse_strategy_spec("pure:4"), cfg);
    UniformProfile profile{std::move(builder)};
    const EpisodeLog log = run_queue(cfg, profile);
    const RevenueSummary steady = revenue(log, true);
    // rounds 5..10 carry entrants of rounds 5.. only: 6 rounds of x * fine
    CHECK(steady.rounds_counted == 6);
    CHECK(steady.total == doctest::Approx(6.0 * cfg.entrants * cfg.fine));
    CHECK(steady.per_round == doctest::Approx(cfg.entrants * cfg.fine));
  }
}

TEST_CASE("single-round reduction reproduces the enumerated game") {
  // Monte-Carlo per-position means vs the exact enumeration, small instance
  QueueConfig cfg;
  cfg.fine = 4;
  cfg.legal_cost = 6;
  cfg.period = 1;
  cfg.horizon = 1;
  cfg.entrants = 0;
  cfg.initial_agents = 6;
  cfg.punished = 2;
  cfg.ignorance = 0.5;
  const std::vector<int> declared =
      analytic::critical_declarations_w1(6, 4, 6, 0.5, 2);
  const std::vector<double> exact = analytic::brute_force_w1(6, 4, 6, 0.5, 2, declared);
  std::vector<double> paid(6, 0.0);
  const int episodes = 40000;
  for (int e = 0; e < episodes; ++e) {
    QueueConfig ecfg = cfg;
    ecfg.seed = hash_combine(555, static_cast<std::uint64_t>(e));
    StrategyBuilder builder(parse_strategy_spec("crit1"), ecfg);
    UniformProfile profile{std::move(builder)};
    const EpisodeLog log = run_queue(ecfg, profile);
    for (const TerminalRecord& t : log.rounds[0].terminals)
      paid[static_cast<std::size_t>(t.agent.id)] += t.agent.paid;
  }
  for (int i = 0; i < 6; ++i) {
    const double mean = paid[static_cast<std::size_t>(i)] / episodes;
    // generous three-ish sigma band at this sample size
    CHECK(std::abs(mean - exact[static_cast<std::size_t>(i)]) < 0.06);
  }
}

TEST_SUITE_END();
