#ifndef FINEQ_ANALYTIC_HPP
#define FINEQ_ANALYTIC_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "fineq/types.hpp"

// Closed forms for the single- and two-sorting reduced games, plus exhaustive
// enumeration oracles used as ground truth against them.
namespace fineq::analytic {

namespace detail {

// Compensated accumulation; enumeration sums must stay well below 1e-12 error.
struct KahanSum {
  double value = 0.0;
  double carry = 0.0;
  void add(double x) {
    const double y = x - carry;
    const double t = value + y;
    carry = (t - value) - y;
    value = t;
  }
};

inline double log_choose(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace detail

// P[Bin(n, p) <= k] by exact term summation; log-space once the smallest term
// would underflow. No normal or Poisson approximation at any size used here.
inline double binomial_cdf(int n, double p, int k) {
  if (n < 0) throw DomainError("binomial_cdf: negative trial count");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("binomial_cdf: p outside [0,1]");
  if (k < 0) return 0.0;
  if (k >= n) return 1.0;
  if (p == 0.0) return 1.0;
  if (p == 1.0) return 0.0;
  const double q = 1.0 - p;
  if (n * std::log(q) > -690.0) {
    double term = std::pow(q, n);
    detail::KahanSum sum;
    sum.add(term);
    for (int i = 1; i <= k; ++i) {
      term *= (static_cast<double>(n - i + 1) / i) * (p / q);
      sum.add(term);
    }
    return std::min(1.0, sum.value);
  }
  // shift by the largest log-term to avoid underflow
  std::vector<double> logs(static_cast<std::size_t>(k) + 1);
  const double lp = std::log(p);
  const double lq = std::log(q);
  double top = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= k; ++i) {
    logs[i] = detail::log_choose(n, i) + i * lp + (n - i) * lq;
    top = std::max(top, logs[i]);
  }
  double acc = 0.0;
  for (double l : logs) acc += std::exp(l - top);
  return std::min(1.0, std::exp(top) * acc);
}

inline double binomial_pmf(int n, double p, int k) {
  if (n < 0 || k < 0 || k > n) return 0.0;
  if (p == 0.0) return k == 0 ? 1.0 : 0.0;
  if (p == 1.0) return k == n ? 1.0 : 0.0;
  const double q = 1.0 - p;
  if (n * std::log(q) > -690.0) {
    double term = std::pow(q, n);
    for (int i = 1; i <= k; ++i)
      term *= (static_cast<double>(n - i + 1) / i) * (p / q);
    return term;
  }
  return std::exp(detail::log_choose(n, k) + k * std::log(p) + (n - k) * std::log(q));
}

// Probability that fewer than k of the n-1 agents ahead fail to act, each
// independently failing with probability p.
inline double alpha(double p, int n, int k) {
  if (n < 1) throw DomainError("alpha: position must be at least 1");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("alpha: p outside [0,1]");
  if (k <= 0) return 0.0;
  if (k > n - 1) return 1.0;
  return binomial_cdf(n - 1, p, k - 1);
}

// Upper bound exp(-(np-k)^2 / (2np)) on alpha(p, n+1, k); valid for k < n*p.
inline double chernoff_bound(double p, int n, int k) {
  if (n < 1) throw DomainError("chernoff_bound: n must be at least 1");
  if (!(p > 0.0 && p <= 1.0)) throw DomainError("chernoff_bound: p outside (0,1]");
  const double np = n * p;
  if (!(k < np)) throw DomainError("chernoff_bound: requires k < n*p");
  const double d = np - k;
  return std::exp(-(d * d) / (2.0 * np));
}

// Smallest queue position where declining to pay is the cheaper side of the
// threshold. When no finite position qualifies (p = 0), the value is
// unbounded and any formula consuming it raises OutOfRegimeError.
class CriticalPosition {
 public:
  static CriticalPosition at(int r) { return CriticalPosition(r); }
  static CriticalPosition unbounded() { return CriticalPosition(0); }

  bool finite() const { return value_ > 0; }
  int value() const {
    if (!finite())
      throw OutOfRegimeError("critical position is unbounded (every position pays)");
    return value_;
  }

  friend bool operator==(CriticalPosition a, CriticalPosition b) {
    return a.value_ == b.value_;
  }

 private:
  explicit CriticalPosition(int v) : value_(v) {}
  int value_;
};

namespace detail {

inline void check_fine_cost(int fine, int legal_cost) {
  if (fine <= 0) throw ValidationError("fine must be positive");
  if (legal_cost <= fine) throw ValidationError("legal cost must exceed fine");
}

inline constexpr int kScanCap = 1 << 24;

}  // namespace detail

inline CriticalPosition critical_position_w1(int fine, int legal_cost, double p, int k) {
  detail::check_fine_cost(fine, legal_cost);
  if (k < 1) throw ValidationError("k must be at least 1");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("p outside [0,1]");
  if (p == 0.0) return CriticalPosition::unbounded();
  for (int r = 1; r <= detail::kScanCap; ++r) {
    if (alpha(p, r, k) * legal_cost <= fine) return CriticalPosition::at(r);
  }
  throw InternalError("critical position scan exhausted");
}

// Probability of being charged the legal cost at position n when everyone
// follows the threshold rule with critical position r.
inline double alpha_crit(double p, int r, int n, int k) {
  if (r < 1) throw DomainError("alpha_crit: r must be at least 1");
  if (n < 1) throw DomainError("alpha_crit: n must be at least 1");
  if (n < r) return alpha(p, n, k);
  return alpha(p, r, k - (n - r));
}

// Expected payment at position n of the single-sorting game under the
// threshold profile.
inline double expected_payment_w1(double p, int n, int k, int fine, int legal_cost) {
  detail::check_fine_cost(fine, legal_cost);
  CriticalPosition r = critical_position_w1(fine, legal_cost, p, k);
  if (!r.finite()) return fine;  // p = 0: every position pays and settles
  const double ac = alpha_crit(p, r.value(), n, k);
  if (n < r.value()) return (1.0 - p) * fine + p * ac * legal_cost;
  return ac * legal_cost;
}

// Expected payment of a (q, 1-q) zero-or-fine mixer. The printed form treats
// the pay-fine probability as 1-p-q; the sampling-semantics variant composes
// the declaration draw with the ignorance draw instead.
inline double expected_payment_mixed(double p, double q, double alpha_crit_value,
                                     int fine, int legal_cost,
                                     bool sampling_semantics = false) {
  detail::check_fine_cost(fine, legal_cost);
  if (!(p >= 0.0 && q >= 0.0)) throw DomainError("probabilities must be non-negative");
  if (p + q > 1.0 + 1e-12) throw DomainError("expected_payment_mixed: p + q > 1");
  if (!(alpha_crit_value >= 0.0 && alpha_crit_value <= 1.0))
    throw DomainError("alpha_crit_value outside [0,1]");
  if (sampling_semantics) {
    return (1.0 - p) * (1.0 - q) * fine +
           (p + (1.0 - p) * q) * alpha_crit_value * legal_cost;
  }
  return (1.0 - p - q) * fine + (p + q) * alpha_crit_value * legal_cost;
}

// Expected second-round payment from first-round position n: the position
// advances by (payers ahead) + k, and non-positive positions evaluate at the
// front of the queue.
inline double expected_payment_round2(double p, int n, int k, int fine, int legal_cost) {
  detail::check_fine_cost(fine, legal_cost);
  if (n < 1) throw DomainError("position must be at least 1");
  detail::KahanSum sum;
  for (int payers = 0; payers <= n - 1; ++payers) {
    const double w = binomial_pmf(n - 1, 1.0 - p, payers);
    if (w == 0.0) continue;
    const int pos = std::max(1, n - payers - k);
    sum.add(w * expected_payment_w1(p, pos, k, fine, legal_cost));
  }
  return sum.value;
}

inline CriticalPosition critical_position_w2_first(int fine, int legal_cost, double p,
                                                   int k) {
  detail::check_fine_cost(fine, legal_cost);
  if (k < 1) throw ValidationError("k must be at least 1");
  if (p == 0.0) return CriticalPosition::unbounded();
  for (int r = 1; r <= detail::kScanCap; ++r) {
    const double a = alpha(p, r, k);
    const double cost =
        a * legal_cost + (1.0 - a) * expected_payment_round2(p, r, k, fine, legal_cost);
    if (cost <= fine) return CriticalPosition::at(r);
  }
  throw InternalError("two-round critical position scan exhausted");
}

// Total expected payment of the single-sorting game with k_mult*k charges,
// valid once the queue covers the whole paying region.
inline double total_payment_w1(double p, int x0, int k, int fine, int legal_cost,
                               int k_mult = 1) {
  detail::check_fine_cost(fine, legal_cost);
  if (k_mult < 1) throw ValidationError("k_mult must be at least 1");
  const int charges = k_mult * k;
  CriticalPosition r = critical_position_w1(fine, legal_cost, p, charges);
  const int rv = r.value();  // p = 0 raises OutOfRegimeError here
  if (x0 < rv + charges)
    throw OutOfRegimeError("total_payment_w1: queue shorter than the paying region (" +
                           std::to_string(rv + charges) + " agents needed)");
  return fine * (1.0 - p) * (rv - 1) + static_cast<double>(charges) * legal_cost;
}

// Lower bound on the two-sorting total under the two-round threshold profile.
inline double total_payment_w2_lower(double p, int k, int fine, int legal_cost) {
  detail::check_fine_cost(fine, legal_cost);
  CriticalPosition r = critical_position_w1(fine, legal_cost, p, k);
  const int rv = r.value();
  return 2.0 * fine * (1.0 - p) * (rv - 1) + 2.0 * static_cast<double>(k) * legal_cost;
}

struct DivisionReport {
  double two_round_lower = 0.0;     // two sortings, k charges per round
  double one_round_double_k = 0.0;  // one sorting, 2k charges
  enum class Winner { TwoRound, OneRoundDoubleK, Tie } winner = Winner::Tie;
  bool position_condition = false;  // r(2k) < 2 r(k), the sufficient condition
  bool ratio_condition = false;     // fine/legal_cost <= 1/4 regime
  int r_single = 0;                 // r(k)
  int r_double = 0;                 // r(2k)
};

inline DivisionReport division_compare(int fine, int legal_cost, double p, int k) {
  DivisionReport rep;
  const int r_k = critical_position_w1(fine, legal_cost, p, k).value();
  const int r_2k = critical_position_w1(fine, legal_cost, p, 2 * k).value();
  rep.r_single = r_k;
  rep.r_double = r_2k;
  rep.two_round_lower = total_payment_w2_lower(p, k, fine, legal_cost);
  rep.one_round_double_k =
      fine * (1.0 - p) * (r_2k - 1) + 2.0 * static_cast<double>(k) * legal_cost;
  rep.position_condition = r_2k < 2 * r_k;
  rep.ratio_condition = static_cast<double>(fine) / legal_cost <= 0.25;
  if (rep.two_round_lower > rep.one_round_double_k)
    rep.winner = DivisionReport::Winner::TwoRound;
  else if (rep.two_round_lower < rep.one_round_double_k)
    rep.winner = DivisionReport::Winner::OneRoundDoubleK;
  return rep;
}

// Numeric probe of the doubled-charge tail comparison. Never asserted; the
// report is all there is.
struct ConjectureProbe {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
  int scaled_n = 0;
};

inline ConjectureProbe conjecture_caa_probe(double p, int n, int k) {
  if (!(p > 0.0 && p <= 1.0)) throw DomainError("conjecture probe: p outside (0,1]");
  if (n < 1 || k < 1) throw DomainError("conjecture probe: n, k must be positive");
  if (!(p * n > k)) throw DomainError("conjecture probe: requires p*n > k");
  ConjectureProbe probe;
  probe.scaled_n = static_cast<int>(std::floor(n + n / p + 0.5));  // ties round up
  probe.lhs = alpha(p, n, k);
  probe.rhs = alpha(p, probe.scaled_n, 2 * k);
  probe.holds = probe.lhs >= probe.rhs;
  return probe;
}

inline void write_conjecture_scan(std::ostream& os, std::span<const double> p_grid,
                                  int n_max, std::span<const int> k_grid) {
  os << "p,n,k,scaled_n,lhs,rhs,holds\n";
  os << std::setprecision(17);
  for (double p : p_grid)
    for (int k : k_grid)
      for (int n = 1; n <= n_max; ++n) {
        if (!(p * n > k)) continue;
        const ConjectureProbe probe = conjecture_caa_probe(p, n, k);
        os << p << ',' << n << ',' << k << ',' << probe.scaled_n << ',' << probe.lhs
           << ',' << probe.rhs << ',' << (probe.holds ? 1 : 0) << '\n';
      }
}

inline void write_chernoff_scan(std::ostream& os, std::span<const double> p_grid,
                                int n_max, std::span<const int> k_grid) {
  os << "p,n,k,alpha,bound,holds\n";
  os << std::setprecision(17);
  for (double p : p_grid)
    for (int k : k_grid)
      for (int n = 1; n <= n_max; ++n) {
        if (!(k < n * p)) continue;
        const double a = alpha(p, n + 1, k);
        const double bound = chernoff_bound(p, n, k);
        os << p << ',' << n << ',' << k << ',' << a << ',' << bound << ','
           << (bound >= a ? 1 : 0) << '\n';
      }
}

// ---------------------------------------------------------------------------
// Exhaustive oracles. These replay the round mechanics directly over every
// forget pattern and are kept independent of both the simulator and the
// closed forms above.
// ---------------------------------------------------------------------------

namespace detail {

inline void check_enumeration_params(int x0, int fine, int legal_cost, double p, int k,
                                     int cap, const char* what) {
  if (x0 < 0) throw ValidationError("agent count must be non-negative");
  if (x0 > cap)
    throw ResourceError(std::string(what) + ": enumeration capped at " +
                        std::to_string(cap) + " agents");
  check_fine_cost(fine, legal_cost);
  if (k < 1) throw ValidationError("k must be at least 1");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("p outside [0,1]");
}

// Stable ascending order (indices) of agents with payment < fine.
inline void sub_fine_order(std::span<const int> pay, int fine, std::vector<int>& out) {
  out.clear();
  for (int v = 0; v < fine; ++v)
    for (int i = 0; i < static_cast<int>(pay.size()); ++i)
      if (pay[i] == v) out.push_back(i);
}

}  // namespace detail

// Exact per-position expected total payment of the single-sorting game when
// agent i declares declared[i] (realized unless it forgets).
inline std::vector<double> brute_force_w1(int x0, int fine, int legal_cost, double p,
                                          int k, std::span<const int> declared) {
  detail::check_enumeration_params(x0, fine, legal_cost, p, k, 16, "brute_force_w1");
  if (static_cast<int>(declared.size()) != x0)
    throw ValidationError("declared payments must cover every position");
  for (int d : declared)
    if (d < 0 || d > fine) throw ValidationError("declared payment outside [0, fine]");

  std::vector<detail::KahanSum> total(x0);
  std::vector<int> pay(x0);
  std::vector<int> order;
  order.reserve(x0);
  const std::uint32_t patterns = x0 == 0 ? 1u : (1u << x0);
  for (std::uint32_t mask = 0; mask < patterns; ++mask) {
    double weight = 1.0;
    for (int i = 0; i < x0; ++i) {
      const bool forgot = (mask >> i) & 1u;
      weight *= forgot ? p : (1.0 - p);
      pay[i] = forgot ? 0 : declared[i];
    }
    if (weight == 0.0) continue;
    detail::sub_fine_order(pay, fine, order);
    const int charged = std::min<int>(k, static_cast<int>(order.size()));
    for (int j = 0; j < charged; ++j) pay[order[j]] += legal_cost;
    for (int i = 0; i < x0; ++i) total[i].add(weight * pay[i]);
  }
  std::vector<double> out(x0);
  for (int i = 0; i < x0; ++i) out[i] = total[i].value;
  return out;
}

// Declarations of the single-sorting threshold profile over x0 positions.
inline std::vector<int> critical_declarations_w1(int x0, int fine, int legal_cost,
                                                 double p, int k) {
  CriticalPosition r = critical_position_w1(fine, legal_cost, p, k);
  std::vector<int> declared(x0, fine);
  if (r.finite())
    for (int i = r.value() - 1; i < x0; ++i) declared[i] = 0;
  return declared;
}

enum class Round2Rule { Critical, AlwaysZero, AlwaysFine };

// Exact per-position expected total payment over both rounds of the
// two-sorting game: first-round declarations are given per position, the
// second round follows the threshold rule at the realized position (except an
// optional deviator with its own second-round rule).
inline std::vector<double> brute_force_w2(int x0, int fine, int legal_cost, double p,
                                          int k, std::span<const int> first_round,
                                          int deviator = -1,
                                          Round2Rule deviator_rule = Round2Rule::Critical) {
  detail::check_enumeration_params(x0, fine, legal_cost, p, k, 10, "brute_force_w2");
  if (static_cast<int>(first_round.size()) != x0)
    throw ValidationError("declared payments must cover every position");
  const CriticalPosition r22 = critical_position_w1(fine, legal_cost, p, k);
  const auto round2_declared = [&](int original_index, int position) {
    const Round2Rule rule =
        original_index == deviator ? deviator_rule : Round2Rule::Critical;
    switch (rule) {
      case Round2Rule::AlwaysZero: return 0;
      case Round2Rule::AlwaysFine: return fine;
      case Round2Rule::Critical:
        return (!r22.finite() || position < r22.value()) ? fine : 0;
    }
    return 0;
  };

  std::vector<detail::KahanSum> total(x0);
  std::vector<int> pay1(x0);
  std::vector<int> order1, order2;
  std::vector<int> surv_index;   // original index per survivor, round-2 order
  std::vector<int> surv_paid;    // carried payment per survivor
  std::vector<int> pay2;
  const std::uint32_t patterns1 = x0 == 0 ? 1u : (1u << x0);
  for (std::uint32_t mask1 = 0; mask1 < patterns1; ++mask1) {
    double w1 = 1.0;
    for (int i = 0; i < x0; ++i) {
      const bool forgot = (mask1 >> i) & 1u;
      w1 *= forgot ? p : (1.0 - p);
      pay1[i] = forgot ? 0 : first_round[i];
    }
    if (w1 == 0.0) continue;

    detail::sub_fine_order(pay1, fine, order1);
    const int charged1 = std::min<int>(k, static_cast<int>(order1.size()));
    // settled agents and first-round charges are final
    for (int i = 0; i < x0; ++i)
      if (pay1[i] >= fine) total[i].add(w1 * pay1[i]);
    for (int j = 0; j < charged1; ++j)
      total[order1[j]].add(w1 * (pay1[order1[j]] + legal_cost));

    surv_index.clear();
    surv_paid.clear();
    for (int j = charged1; j < static_cast<int>(order1.size()); ++j) {
      surv_index.push_back(order1[j]);
      surv_paid.push_back(pay1[order1[j]]);
    }
    const int s = static_cast<int>(surv_index.size());
    if (s == 0) continue;

    pay2.assign(s, 0);
    const std::uint32_t patterns2 = 1u << s;
    for (std::uint32_t mask2 = 0; mask2 < patterns2; ++mask2) {
      double w2 = 1.0;
      for (int j = 0; j < s; ++j) {
        const bool forgot = (mask2 >> j) & 1u;
        w2 *= forgot ? p : (1.0 - p);
        const int d = forgot ? 0 : round2_declared(surv_index[j], j + 1);
        pay2[j] = surv_paid[j] + d;
      }
      if (w2 == 0.0) continue;
      detail::sub_fine_order(pay2, fine, order2);
      const int charged2 = std::min<int>(k, static_cast<int>(order2.size()));
      const double w = w1 * w2;
      for (int j = 0; j < s; ++j)
        if (pay2[j] >= fine) total[surv_index[j]].add(w * pay2[j]);
      for (int j = 0; j < charged2; ++j)
        total[surv_index[order2[j]]].add(w * (pay2[order2[j]] + legal_cost));
      // everything else expires at the horizon with what it paid
      for (int j = charged2; j < static_cast<int>(order2.size()); ++j)
        total[surv_index[order2[j]]].add(w * pay2[order2[j]]);
    }
  }
  std::vector<double> out(x0);
  for (int i = 0; i < x0; ++i) out[i] = total[i].value;
  return out;
}

// Exact expected single-round payment at `position` when every predecessor
// follows the threshold rule and the agent itself does too, enumerated over
// predecessor forget patterns.
inline double oracle_w1_position_payment(int position, int fine, int legal_cost,
                                         double p, int k) {
  const int front = position - 1;
  detail::check_enumeration_params(front, fine, legal_cost, p, k, 16,
                                   "oracle_w1_position_payment");
  const CriticalPosition r = critical_position_w1(fine, legal_cost, p, k);
  const auto pays = [&](int pos) { return !r.finite() || pos < r.value(); };
  const int own_declared = pays(position) ? fine : 0;

  detail::KahanSum sum;
  const std::uint32_t patterns = front == 0 ? 1u : (1u << front);
  for (std::uint32_t mask = 0; mask < patterns; ++mask) {
    double w = 1.0;
    int zeros_ahead = 0;
    for (int i = 0; i < front; ++i) {
      const bool forgot = (mask >> i) & 1u;
      w *= forgot ? p : (1.0 - p);
      if (forgot || !pays(i + 1)) ++zeros_ahead;
    }
    if (w == 0.0) continue;
    const double charge_if_zero = zeros_ahead < k ? legal_cost : 0.0;
    const double own_acts = own_declared == fine ? fine : charge_if_zero;
    sum.add(w * ((1.0 - p) * own_acts + p * charge_if_zero));
  }
  return sum.value;
}

// Enumerated counterpart of the shifted second-round expectation: replays the
// first round (predecessors all declare the fine), reads off the realized
// second-round position, and evaluates the second round by enumeration.
// Positions that would be non-positive evaluate at the queue front.
inline double oracle_g2(int position, int fine, int legal_cost, double p, int k) {
  const int front = position - 1;
  detail::check_enumeration_params(front, fine, legal_cost, p, k, 16, "oracle_g2");
  std::vector<double> round2_value(front + 2, -1.0);  // by realized position
  const auto round2_at = [&](int pos) {
    if (round2_value[pos] < 0.0)
      round2_value[pos] = oracle_w1_position_payment(pos, fine, legal_cost, p, k);
    return round2_value[pos];
  };

  detail::KahanSum sum;
  const std::uint32_t patterns = front == 0 ? 1u : (1u << front);
  for (std::uint32_t mask = 0; mask < patterns; ++mask) {
    double w = 1.0;
    for (int i = 0; i < front; ++i) w *= ((mask >> i) & 1u) ? p : (1.0 - p);
    if (w == 0.0) continue;
    const int forgetters = std::popcount(mask);
    // the first k zero-payers ahead are charged and leave; the agent lands
    // just behind the remaining ones
    const int realized = std::max(1, forgetters + 1 - k);
    sum.add(w * round2_at(realized));
  }
  return sum.value;
}

// First-round cost of declaring zero at `position` under the printed decision
// decomposition, with every ingredient enumerated.
inline double oracle_w2_zero_cost(int position, int fine, int legal_cost, double p,
                                  int k) {
  const int front = position - 1;
  detail::check_enumeration_params(front, fine, legal_cost, p, k, 16,
                                   "oracle_w2_zero_cost");
  double charged_mass = 0.0;
  const std::uint32_t patterns = front == 0 ? 1u : (1u << front);
  for (std::uint32_t mask = 0; mask < patterns; ++mask) {
    double w = 1.0;
    for (int i = 0; i < front; ++i) w *= ((mask >> i) & 1u) ? p : (1.0 - p);
    if (std::popcount(mask) < k) charged_mass += w;
  }
  return charged_mass * legal_cost +
         (1.0 - charged_mass) * oracle_g2(position, fine, legal_cost, p, k);
}

// Smallest position (up to max_position) where declining becomes the cheaper
// first-round action; 0 when none qualifies within range.
inline int oracle_boundary_w2(int fine, int legal_cost, double p, int k,
                              int max_position) {
  for (int n = 1; n <= max_position; ++n)
    if (oracle_w2_zero_cost(n, fine, legal_cost, p, k) <= fine) return n;
  return 0;
}

// ---------------------------------------------------------------------------
// Cost-sharing coalitions
// ---------------------------------------------------------------------------

enum class CoalitionDeviation { None, LeaveGroup, PayFine };

struct CoalitionReport {
  double shared_cost = 0.0;          // expected per-member share of group payments
  double best_deviation_gain = 0.0;  // utility gain of the prescribed deviator
  CoalitionDeviation deviation = CoalitionDeviation::None;
  double deviator_expected_paid = 0.0;
};

// Exact coalition arithmetic: members are the first `coalition_size` agents
// to enter, all declaring zero and splitting the group's payments equally.
// Handles whole-population coalitions (all-zero play is deterministic) and
// single-sorting instances (remaining agents follow the threshold rule).
inline CoalitionReport coalition_analysis(const QueueConfig& cfg, int coalition_size) {
  cfg.validate();
  const std::int64_t population =
      cfg.initial_agents +
      static_cast<std::int64_t>(cfg.entrants) * (cfg.horizon - 1);
  if (coalition_size < 1) throw ValidationError("coalition size must be positive");
  if (coalition_size > population)
    throw ValidationError("coalition larger than the population");

  CoalitionReport rep;
  std::vector<double> member_cost;

  if (coalition_size == population) {
    // Nobody ever pays voluntarily, so the queue is deterministic: seniority
    // order, first k charged each round, expiry after `period` rounds.
    std::vector<std::pair<std::int64_t, int>> alive;  // (id, entry round)
    std::int64_t next_id = 0;
    member_cost.assign(static_cast<std::size_t>(population), 0.0);
    for (int i = 0; i < cfg.initial_agents; ++i) alive.emplace_back(next_id++, 1);
    for (int round = 1; round <= cfg.horizon; ++round) {
      const int charged = std::min<int>(cfg.punished, static_cast<int>(alive.size()));
      for (int j = 0; j < charged; ++j)
        member_cost[static_cast<std::size_t>(alive[j].first)] = cfg.legal_cost;
      alive.erase(alive.begin(), alive.begin() + charged);
      std::erase_if(alive, [&](const auto& a) { return round - a.second + 1 >= cfg.period; });
      if (round < cfg.horizon)
        for (int i = 0; i < cfg.entrants; ++i) alive.emplace_back(next_id++, round + 1);
    }
  } else if (cfg.horizon == 1) {
    std::vector<int> declared = critical_declarations_w1(
        cfg.initial_agents, cfg.fine, cfg.legal_cost, cfg.ignorance, cfg.punished);
    for (int i = 0; i < coalition_size; ++i) declared[i] = 0;
    const std::vector<double> expected =
        brute_force_w1(cfg.initial_agents, cfg.fine, cfg.legal_cost, cfg.ignorance,
                       cfg.punished, declared);
    member_cost.assign(expected.begin(), expected.begin() + coalition_size);
  } else {
    throw ValidationError(
        "exact coalition analysis covers whole-population or single-sorting "
        "instances; use the Monte Carlo evaluator otherwise");
  }

  detail::KahanSum shared;
  for (int i = 0; i < coalition_size; ++i) shared.add(member_cost[i]);
  rep.shared_cost = shared.value / coalition_size;
  if (rep.shared_cost <= 0.0) return rep;

  const auto cheapest =
      std::min_element(member_cost.begin(), member_cost.begin() + coalition_size);
  if (*cheapest > cfg.legal_cost - 1e-9) {
    // every member is charged for certain: settle the fine instead
    rep.deviation = CoalitionDeviation::PayFine;
    rep.deviator_expected_paid = cfg.fine;
    rep.best_deviation_gain = rep.shared_cost - cfg.fine;
  } else {
    // the member that expects to pay least stops sharing
    rep.deviation = CoalitionDeviation::LeaveGroup;
    rep.deviator_expected_paid = *cheapest;
    rep.best_deviation_gain = rep.shared_cost - *cheapest;
  }
  return rep;
}

}  // namespace fineq::analytic

#endif  // FINEQ_ANALYTIC_HPP
