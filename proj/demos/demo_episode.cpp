// Runs one episode of the fine-collection queue under the rational heuristic
// and prints the per-round revenue stream.

#include <cstdio>

#include "fineq/fineq.hpp"

int main() {
  fineq::QueueConfig cfg;
  cfg.horizon = 16;
  cfg.seed = 2024;

  fineq::StrategyBuilder builder(fineq::parse_strategy_spec("brs"), cfg);
  fineq::UniformProfile profile{std::move(builder)};
  const fineq::EpisodeLog log = fineq::run_queue(cfg, profile);

  for (std::size_t r = 0; r < log.rounds.size(); ++r) {
    std::printf("round %2zu: revenue %3lld, removed %2zu, remaining %2zu\n", r + 1,
                static_cast<long long>(log.revenue[r]), log.rounds[r].terminals.size(),
                log.rounds[r].survivors.size());
  }
  const fineq::RevenueSummary total = fineq::revenue(log);
  std::printf("total %.0f over %d rounds (%.2f per round)\n", total.total,
              total.rounds_counted, total.per_round);
  return 0;
}
