// Prints the threshold structure of the reduced games: critical positions,
// per-position expected payments, and the split-versus-double-charges totals.

#include <cstdio>

#include "fineq/analytic.hpp"

using namespace fineq::analytic;

int main() {
  const int fine = 4, cost = 6, k = 2;
  const double p = 0.5;

  const int r = critical_position_w1(fine, cost, p, k).value();
  const int r21 = critical_position_w2_first(fine, cost, p, k).value();
  std::printf("single-sorting critical position: %d\n", r);
  std::printf("two-sorting first-round critical position: %d\n\n", r21);

  std::printf("pos  charge-prob  expected payment\n");
  for (int n = 1; n <= r + k + 2; ++n) {
    std::printf("%3d  %11.4f  %16.4f\n", n, alpha_crit(p, r, n, k),
                expected_payment_w1(p, n, k, fine, cost));
  }

  const DivisionReport rep = division_compare(fine, cost, p, k);
  std::printf("\ntwo sortings with %d charges each: >= %.1f\n", k, rep.two_round_lower);
  std::printf("one sorting with %d charges:        %.1f\n", 2 * k,
              rep.one_round_double_k);
  std::printf("winner: %s\n", rep.winner == DivisionReport::Winner::TwoRound
                                  ? "two sortings"
                                  : "one sorting with doubled charges");
  return 0;
}
