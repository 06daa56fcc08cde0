#ifndef FINEQ_STRATEGY_HPP
#define FINEQ_STRATEGY_HPP

#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "fineq/analytic.hpp"
#include "fineq/policy.hpp"
#include "fineq/types.hpp"

namespace fineq {

// An agent's decision rule: observation in, payment distribution out. The
// returned reference stays valid until the next declare() on the same object.
// Instances are per-agent (the rational heuristic carries memory).
struct Strategy {
  virtual ~Strategy() = default;
  virtual const ActionDistribution& declare(const Observation& obs) = 0;
};

// Shared table of the point-mass distributions sigma^0..sigma^fine.
class SigmaTable {
 public:
  explicit SigmaTable(int fine) {
    dists_.reserve(static_cast<std::size_t>(fine) + 1);
    for (int nu = 0; nu <= fine; ++nu) dists_.push_back(ActionDistribution::pure(nu, fine));
  }
  int fine() const { return static_cast<int>(dists_.size()) - 1; }
  const ActionDistribution& at(int nu) const { return dists_[static_cast<std::size_t>(nu)]; }

 private:
  std::vector<ActionDistribution> dists_;
};

using SigmaTablePtr = std::shared_ptr<const SigmaTable>;

class PureStrategy final : public Strategy {
 public:
  PureStrategy(int payment, SigmaTablePtr table)
      : payment_(payment), table_(std::move(table)) {
    if (payment_ < 0 || payment_ > table_->fine())
      throw ValidationError("pure strategy payment outside [0, fine]");
  }
  const ActionDistribution& declare(const Observation&) override {
    return table_->at(payment_);
  }

 private:
  int payment_;
  SigmaTablePtr table_;
};

inline std::unique_ptr<Strategy> pure_strategy(int payment, int fine) {
  return std::make_unique<PureStrategy>(payment, std::make_shared<SigmaTable>(fine));
}

// Willingness-to-pay state of the basic rational heuristic.
struct BrsMemory {
  int willingness = 0;
  std::optional<int> prev_position;
};

// One update of the willingness to pay: it rises when the recent shift says
// the agent reaches the front before the offence expires, falls otherwise,
// and never exceeds what can still be paid without overshooting the fine.
// The literal flag keeps the movement term with its printed sign, under which
// forward movement can only lower the willingness.
inline int brs_step(BrsMemory& mem, const Observation& obs, const QueueConfig& cfg) {
  if (obs.rounds == 0 || !mem.prev_position.has_value()) {
    mem.willingness = 0;
  } else {
    const int shift = cfg.brs_literal ? obs.position - *mem.prev_position
                                      : *mem.prev_position - obs.position;
    const bool reaches_front = obs.position < shift * (cfg.period - obs.rounds);
    mem.willingness = reaches_front ? std::min(cfg.fine - obs.paid, mem.willingness + 1)
                                    : std::max(0, mem.willingness - 1);
  }
  mem.willingness = std::clamp(mem.willingness, 0, cfg.fine - obs.paid);
  mem.prev_position = obs.position;
  return mem.willingness;
}

class BrsStrategy final : public Strategy {
 public:
  BrsStrategy(const QueueConfig& cfg, SigmaTablePtr table)
      : cfg_(cfg), table_(std::move(table)) {}
  const ActionDistribution& declare(const Observation& obs) override {
    return table_->at(brs_step(mem_, obs, cfg_));
  }
  const BrsMemory& memory() const { return mem_; }

 private:
  QueueConfig cfg_;
  SigmaTablePtr table_;
  BrsMemory mem_;
};

// Threshold rule of the single-sorting game: settle in full ahead of the
// critical position, decline behind it. Ignores time and past payments.
class CriticalSingleStrategy final : public Strategy {
 public:
  CriticalSingleStrategy(analytic::CriticalPosition threshold, SigmaTablePtr table)
      : threshold_(threshold), table_(std::move(table)) {}
  const ActionDistribution& declare(const Observation& obs) override {
    const bool pay = !threshold_.finite() || obs.position < threshold_.value();
    return table_->at(pay ? table_->fine() : 0);
  }

 private:
  analytic::CriticalPosition threshold_;
  SigmaTablePtr table_;
};

inline std::unique_ptr<Strategy> critical_strategy_w1(const QueueConfig& cfg) {
  return std::make_unique<CriticalSingleStrategy>(
      analytic::critical_position_w1(cfg.fine, cfg.legal_cost, cfg.ignorance, cfg.punished),
      std::make_shared<SigmaTable>(cfg.fine));
}

// Two-sorting threshold rule: the first round uses its own (wider) critical
// position, the second reduces to the single-sorting rule. Only rounds 0 and
// 1 are meaningful.
class CriticalTwoStrategy final : public Strategy {
 public:
  CriticalTwoStrategy(analytic::CriticalPosition first, analytic::CriticalPosition second,
                      SigmaTablePtr table)
      : first_(first), second_(second), table_(std::move(table)) {}
  const ActionDistribution& declare(const Observation& obs) override {
    if (obs.rounds >= 2)
      throw DomainError("two-sorting strategy queried beyond its second round");
    const analytic::CriticalPosition threshold = obs.rounds == 0 ? first_ : second_;
    const bool pay = !threshold.finite() || obs.position < threshold.value();
    return table_->at(pay ? table_->fine() : 0);
  }

 private:
  analytic::CriticalPosition first_;
  analytic::CriticalPosition second_;
  SigmaTablePtr table_;
};

inline std::unique_ptr<Strategy> critical_strategy_w2(const QueueConfig& cfg) {
  return std::make_unique<CriticalTwoStrategy>(
      analytic::critical_position_w2_first(cfg.fine, cfg.legal_cost, cfg.ignorance,
                                           cfg.punished),
      analytic::critical_position_w1(cfg.fine, cfg.legal_cost, cfg.ignorance, cfg.punished),
      std::make_shared<SigmaTable>(cfg.fine));
}

// Learned policy behind the strategy interface: masked actor distribution at
// the scaled observation.
class PolicyStrategy final : public Strategy {
 public:
  explicit PolicyStrategy(std::shared_ptr<const PolicyParams> params)
      : keep_alive_(std::move(params)), params_(keep_alive_.get()) {}
  explicit PolicyStrategy(const PolicyParams* params) : params_(params) {}

  const ActionDistribution& declare(const Observation& obs) override {
    const std::array<double, 3> scaled = scale_observation(obs, params_->scaling);
    dist_ = masked_policy(*params_, scaled, obs.paid, ws_);
    return dist_;
  }

 private:
  std::shared_ptr<const PolicyParams> keep_alive_;
  const PolicyParams* params_;
  nn::Workspace ws_;
  ActionDistribution dist_;
};

inline std::unique_ptr<Strategy> policy_strategy(std::shared_ptr<const PolicyParams> params) {
  if (!params) throw ValidationError("policy strategy needs parameters");
  return std::make_unique<PolicyStrategy>(std::move(params));
}

// --------------------------------------------------------------------------
// Named strategy specs: "pure:NU" | "brs" | "crit1" | "crit2" | "policy:PATH"
// --------------------------------------------------------------------------

struct StrategySpec {
  enum class Kind { Pure, Brs, Crit1, Crit2, Policy } kind = Kind::Brs;
  int pure_payment = 0;
  std::shared_ptr<const PolicyParams> policy;
  std::string name = "brs";
};

inline StrategySpec parse_strategy_spec(const std::string& text) {
  StrategySpec spec;
  spec.name = text;
  if (text.rfind("pure:", 0) == 0) {
    spec.kind = StrategySpec::Kind::Pure;
    try {
      spec.pure_payment = std::stoi(text.substr(5));
    } catch (const std::exception&) {
      throw ValidationError("bad pure strategy payment in '" + text + "'");
    }
    return spec;
  }
  if (text == "brs") {
    spec.kind = StrategySpec::Kind::Brs;
    return spec;
  }
  if (text == "crit1") {
    spec.kind = StrategySpec::Kind::Crit1;
    return spec;
  }
  if (text == "crit2") {
    spec.kind = StrategySpec::Kind::Crit2;
    return spec;
  }
  if (text.rfind("policy:", 0) == 0) {
    spec.kind = StrategySpec::Kind::Policy;
    spec.policy = std::make_shared<PolicyParams>(
        load_policy_checkpoint(text.substr(7)).params);
    return spec;
  }
  throw ValidationError("unknown strategy '" + text +
                        "' (expected pure:N, brs, crit1, crit2 or policy:PATH)");
}

// Builds per-agent strategy instances for one configuration, computing the
// shared pieces (sigma table, critical thresholds) once.
class StrategyBuilder {
 public:
  StrategyBuilder(StrategySpec spec, const QueueConfig& cfg)
      : spec_(std::move(spec)),
        cfg_(cfg),
        table_(std::make_shared<SigmaTable>(cfg.fine)) {
    switch (spec_.kind) {
      case StrategySpec::Kind::Pure:
        if (spec_.pure_payment < 0 || spec_.pure_payment > cfg.fine)
          throw ValidationError("pure strategy payment outside [0, fine]");
        break;
      case StrategySpec::Kind::Crit1:
        second_ = analytic::critical_position_w1(cfg.fine, cfg.legal_cost, cfg.ignorance,
                                                 cfg.punished);
        break;
      case StrategySpec::Kind::Crit2:
        first_ = analytic::critical_position_w2_first(cfg.fine, cfg.legal_cost,
                                                      cfg.ignorance, cfg.punished);
        second_ = analytic::critical_position_w1(cfg.fine, cfg.legal_cost, cfg.ignorance,
                                                 cfg.punished);
        break;
      case StrategySpec::Kind::Policy:
        if (!spec_.policy) throw ValidationError("policy spec without parameters");
        if (spec_.policy->fine != cfg.fine)
          throw ValidationError("policy checkpoint trained for a different fine");
        break;
      case StrategySpec::Kind::Brs:
        break;
    }
  }

  const std::string& name() const { return spec_.name; }

  std::unique_ptr<Strategy> build() const {
    switch (spec_.kind) {
      case StrategySpec::Kind::Pure:
        return std::make_unique<PureStrategy>(spec_.pure_payment, table_);
      case StrategySpec::Kind::Brs:
        return std::make_unique<BrsStrategy>(cfg_, table_);
      case StrategySpec::Kind::Crit1:
        return std::make_unique<CriticalSingleStrategy>(*second_, table_);
      case StrategySpec::Kind::Crit2:
        return std::make_unique<CriticalTwoStrategy>(*first_, *second_, table_);
      case StrategySpec::Kind::Policy:
        return std::make_unique<PolicyStrategy>(spec_.policy);
    }
    throw InternalError("unhandled strategy kind");
  }

 private:
  StrategySpec spec_;
  QueueConfig cfg_;
  SigmaTablePtr table_;
  std::optional<analytic::CriticalPosition> first_;
  std::optional<analytic::CriticalPosition> second_;
};

// --------------------------------------------------------------------------
// Profiles: who plays what. assign() is called once per entering agent.
// --------------------------------------------------------------------------

struct StrategyProfile {
  virtual ~StrategyProfile() = default;
  virtual std::unique_ptr<Strategy> assign(AgentId id, int& tag) = 0;
};

class UniformProfile final : public StrategyProfile {
 public:
  explicit UniformProfile(StrategyBuilder builder) : builder_(std::move(builder)) {}
  std::unique_ptr<Strategy> assign(AgentId, int& tag) override {
    tag = 0;
    return builder_.build();
  }

 private:
  StrategyBuilder builder_;
};

// Challenger with probability rho, incumbent otherwise. Tag draws use their
// own stream so the incumbent-only run of a paired comparison consumes
// exactly the same per-agent action randomness.
class MixtureProfile final : public StrategyProfile {
 public:
  MixtureProfile(std::uint64_t seed, double rho, StrategyBuilder challenger,
                 StrategyBuilder incumbent)
      : seed_(seed),
        rho_(rho),
        challenger_(std::move(challenger)),
        incumbent_(std::move(incumbent)) {
    if (!(rho > 0.0 && rho < 1.0)) throw ValidationError("rho must lie in (0,1)");
  }
  std::unique_ptr<Strategy> assign(AgentId id, int& tag) override {
    Rng tag_rng = Rng::stream(seed_, stream::kTag, static_cast<std::uint64_t>(id));
    tag = tag_rng.bernoulli(rho_) ? 1 : 0;
    return tag == 1 ? challenger_.build() : incumbent_.build();
  }

 private:
  std::uint64_t seed_;
  double rho_;
  StrategyBuilder challenger_;
  StrategyBuilder incumbent_;
};

// The first `size` agents to enter decline and share costs (tag 1); everyone
// else follows the base builder.
class CoalitionProfile final : public StrategyProfile {
 public:
  CoalitionProfile(int size, StrategyBuilder others, SigmaTablePtr table)
      : size_(size), others_(std::move(others)), table_(std::move(table)) {}
  std::unique_ptr<Strategy> assign(AgentId id, int& tag) override {
    if (id < size_) {
      tag = 1;
      return std::make_unique<PureStrategy>(0, table_);
    }
    tag = 0;
    return others_.build();
  }

 private:
  int size_;
  StrategyBuilder others_;
  SigmaTablePtr table_;
};

}  // namespace fineq

#endif  // FINEQ_STRATEGY_HPP
