#ifndef FINEQ_LEARNER_HPP
#define FINEQ_LEARNER_HPP

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <unordered_map>
#include <vector>

#include "fineq/game.hpp"
#include "fineq/policy.hpp"

// Iterated best-response training: collect trajectories of terminal agents
// under the current shared policy, update it with the clipped surrogate,
// repeat. Everything is seeded and single-threaded per iteration so two runs
// with the same seed produce identical checkpoints.
namespace fineq {

struct TrainingDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Per-step advantages: delta_t = r_t + g*V(t+1) - V(t), accumulated backwards
// with factor g*lambda. The value beyond the terminal step is zero.
inline std::vector<double> gae(std::span<const double> rewards,
                               std::span<const double> values, double discount,
                               double lambda) {
  if (rewards.size() != values.size())
    throw ValidationError("gae: rewards and values must have equal length");
  std::vector<double> adv(rewards.size());
  double acc = 0.0;
  for (int t = static_cast<int>(rewards.size()) - 1; t >= 0; --t) {
    const double next_value =
        t + 1 < static_cast<int>(values.size()) ? values[static_cast<std::size_t>(t) + 1] : 0.0;
    const double delta =
        rewards[static_cast<std::size_t>(t)] + discount * next_value - values[static_cast<std::size_t>(t)];
    acc = delta + discount * lambda * acc;
    adv[static_cast<std::size_t>(t)] = acc;
  }
  return adv;
}

struct Transition {
  std::array<double, 3> obs;
  int action = 0;
  int feasible = 1;  // actions 0..feasible-1 were available
  double logprob = 0.0;
  double advantage = 0.0;
  double ret = 0.0;  // empirical discounted return from this step
};

struct TrajectoryBuffer {
  std::vector<Transition> data;
  std::size_t capacity = 0;
};

namespace detail {

// Completed-trajectory recorder: rewards are zero until termination, where
// the agent collects minus what it paid.
class TrajectorySink {
 public:
  TrajectorySink(const PolicyParams& policy, const Hyperparams& hyper,
                 TrajectoryBuffer& out)
      : policy_(policy), hyper_(hyper), out_(out) {}

  void agent_step(const AgentState& st, const ActionDistribution& dist, int declared,
                  int, int) {
    Partial& traj = partial_[st.id];
    const std::array<double, 3> scaled =
        scale_observation(st.observation(), policy_.scaling);
    traj.obs.push_back(scaled);
    traj.action.push_back(declared);
    traj.feasible.push_back(policy_.fine - st.paid + 1);
    traj.logprob.push_back(std::log(dist.prob(declared)));
    traj.value.push_back(value_estimate(policy_, scaled, ws_));
  }

  void agent_terminal(const AgentState& st, TerminationReason, int) {
    auto it = partial_.find(st.id);
    if (it == partial_.end()) return;
    Partial& traj = it->second;
    const std::size_t len = traj.obs.size();
    std::vector<double> rewards(len, 0.0);
    rewards[len - 1] = -static_cast<double>(st.paid);
    const std::vector<double> adv =
        gae(rewards, traj.value, hyper_.discount, hyper_.gae_lambda);
    double ret = 0.0;
    std::vector<double> returns(len);
    for (int t = static_cast<int>(len) - 1; t >= 0; --t) {
      ret = rewards[static_cast<std::size_t>(t)] + hyper_.discount * ret;
      returns[static_cast<std::size_t>(t)] = ret;
    }
    for (std::size_t t = 0; t < len; ++t) {
      out_.data.push_back({traj.obs[t], traj.action[t], traj.feasible[t],
                           traj.logprob[t], adv[t], returns[t]});
    }
    partial_.erase(it);
  }

  void round_done(int, std::int64_t, const std::vector<LiveAgent>&) {}

 private:
  struct Partial {
    std::vector<std::array<double, 3>> obs;
    std::vector<int> action;
    std::vector<int> feasible;
    std::vector<double> logprob;
    std::vector<double> value;
  };
  const PolicyParams& policy_;
  const Hyperparams& hyper_;
  TrajectoryBuffer& out_;
  nn::Workspace ws_;
  std::unordered_map<AgentId, Partial> partial_;
};

// Everyone plays the shared policy.
class SharedPolicyProfile final : public StrategyProfile {
 public:
  explicit SharedPolicyProfile(const PolicyParams& params) : params_(&params) {}
  std::unique_ptr<Strategy> assign(AgentId, int& tag) override {
    tag = 0;
    return std::make_unique<PolicyStrategy>(params_);
  }

 private:
  const PolicyParams* params_;
};

}  // namespace detail

struct CollectStats {
  int episodes = 0;
  std::size_t transitions = 0;
};

// Fills the buffer to its capacity with whole trajectories of terminal
// agents, all following `policy`, then trims the flat store to capacity.
inline CollectStats collect(const PolicyParams& policy, const QueueConfig& cfg,
                            const Hyperparams& hyper, std::uint64_t seed,
                            std::uint64_t cycle, TrajectoryBuffer& buffer) {
  cfg.validate();
  hyper.validate();
  buffer.capacity = static_cast<std::size_t>(hyper.buffer_capacity);
  buffer.data.clear();
  CollectStats stats;
  while (buffer.data.size() < buffer.capacity) {
    QueueConfig episode_cfg = cfg;
    episode_cfg.seed = hash_combine(hash_combine(seed, stream::kCollect),
                                    hash_combine(cycle, static_cast<std::uint64_t>(stats.episodes)));
    detail::SharedPolicyProfile profile(policy);
    detail::TrajectorySink sink(policy, hyper, buffer);
    const std::size_t before = buffer.data.size();
    run_queue_core(episode_cfg, profile, sink);
    ++stats.episodes;
    if (buffer.data.size() == before)
      throw ValidationError("configuration produces no trajectories");
  }
  buffer.data.resize(buffer.capacity);
  stats.transitions = buffer.data.size();
  return stats;
}

struct OptimizerState {
  std::optional<nn::AdamState> actor;
  std::optional<nn::AdamState> critic;

  static OptimizerState for_policy(const PolicyParams& p, const Hyperparams& h) {
    OptimizerState s;
    if (h.adaptive_optimizer) {
      s.actor = nn::AdamState::zeros_like(p.actor);
      s.critic = nn::AdamState::zeros_like(p.critic);
    }
    return s;
  }
};

struct UpdateStats {
  double surrogate = 0.0;   // mean clipped objective before the update
  double critic_loss = 0.0;
  double entropy = 0.0;
  int minibatches = 0;
};

// One training cycle: the buffer is shuffled and split into
// `updates_per_cycle` minibatches; the actor ascends the clipped surrogate
// plus the entropy bonus, the critic descends the squared return error, and
// both gradients are norm-clipped before the step.
inline UpdateStats ppo_update(const TrajectoryBuffer& buffer, PolicyParams& params,
                              const Hyperparams& hyper, Rng shuffle_rng,
                              OptimizerState* opt = nullptr) {
  hyper.validate();
  const std::size_t n = buffer.data.size();
  if (n == 0) throw ValidationError("ppo_update: empty buffer");

  std::vector<double> adv(n);
  for (std::size_t i = 0; i < n; ++i) adv[i] = buffer.data[i].advantage;
  if (hyper.normalize_advantages) {
    double mean = 0.0;
    for (double a : adv) mean += a;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double a : adv) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    for (double& a : adv) a = (a - mean) / (sd + 1e-8);
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = shuffle_rng.below(i);
    std::swap(order[i - 1], order[j]);
  }

  const int n_batches = std::min<std::size_t>(hyper.updates_per_cycle, n);
  nn::Gradients actor_grads = nn::Gradients::zeros_like(params.actor);
  nn::Gradients critic_grads = nn::Gradients::zeros_like(params.critic);
  nn::Workspace ws;
  std::vector<double> dlogits;
  UpdateStats stats;

  std::size_t cursor = 0;
  for (int batch = 0; batch < n_batches; ++batch) {
    const std::size_t batch_size = n / n_batches + (batch < static_cast<int>(n % n_batches) ? 1 : 0);
    if (batch_size == 0) continue;
    actor_grads.reset();
    critic_grads.reset();
    double surrogate = 0.0;
    double entropy_sum = 0.0;
    double value_loss = 0.0;
    const double inv = 1.0 / static_cast<double>(batch_size);

    for (std::size_t s = 0; s < batch_size; ++s) {
      const Transition& t = buffer.data[order[cursor]];
      const double a_hat = adv[order[cursor]];
      ++cursor;

      // actor: masked softmax over the feasible prefix
      const std::span<const double> logits = nn::forward(params.actor, t.obs, ws);
      const int feasible = t.feasible;
      double top = logits[0];
      for (int i = 1; i < feasible; ++i) top = std::max(top, logits[static_cast<std::size_t>(i)]);
      double z = 0.0;
      std::vector<double> probs(static_cast<std::size_t>(feasible));
      for (int i = 0; i < feasible; ++i) {
        probs[static_cast<std::size_t>(i)] = std::exp(logits[static_cast<std::size_t>(i)] - top);
        z += probs[static_cast<std::size_t>(i)];
      }
      for (int i = 0; i < feasible; ++i) probs[static_cast<std::size_t>(i)] /= z;

      const double logp_new = std::log(probs[static_cast<std::size_t>(t.action)]);
      const double ratio = std::exp(logp_new - t.logprob);
      const double unclipped = ratio * a_hat;
      const double clipped =
          std::clamp(ratio, 1.0 - hyper.clip, 1.0 + hyper.clip) * a_hat;
      surrogate += std::min(unclipped, clipped);
      const bool pass_gradient = unclipped <= clipped;

      double entropy = 0.0;
      for (int i = 0; i < feasible; ++i) {
        const double p = probs[static_cast<std::size_t>(i)];
        if (p > 0.0) entropy -= p * std::log(p);
      }
      entropy_sum += entropy;

      // d(loss)/d(logits), loss = -(surrogate + c_H * entropy)
      dlogits.assign(logits.size(), 0.0);
      for (int i = 0; i < feasible; ++i) {
        const double p = probs[static_cast<std::size_t>(i)];
        double g = 0.0;
        if (pass_gradient) {
          const double dlogp = (i == t.action ? 1.0 : 0.0) - p;
          g += ratio * a_hat * dlogp;
        }
        if (p > 0.0) g += hyper.entropy_weight * (-p * (std::log(p) + entropy));
        dlogits[static_cast<std::size_t>(i)] = -g * inv;
      }
      nn::backward(params.actor, ws, t.obs, dlogits, actor_grads);

      // critic: squared error against the empirical return
      const double v = nn::forward(params.critic, t.obs, ws)[0];
      const double diff = v - t.ret;
      value_loss += diff * diff;
      const double dv[1] = {2.0 * diff * inv};
      nn::backward(params.critic, ws, t.obs, dv, critic_grads);
    }

    if (!std::isfinite(surrogate) || !std::isfinite(value_loss))
      throw TrainingDiverged("non-finite loss in update");

    nn::clip_global_norm(actor_grads, hyper.grad_clip);
    nn::clip_global_norm(critic_grads, hyper.grad_clip);
    if (opt && opt->actor) {
      nn::adam_step(params.actor, *opt->actor, actor_grads, hyper.actor_lr);
      nn::adam_step(params.critic, *opt->critic, critic_grads, hyper.critic_lr);
    } else {
      nn::sgd_step(params.actor, actor_grads, hyper.actor_lr);
      nn::sgd_step(params.critic, critic_grads, hyper.critic_lr);
    }
    if (!params.actor.finite() || !params.critic.finite())
      throw TrainingDiverged("non-finite parameters after update");

    stats.surrogate += surrogate / static_cast<double>(batch_size);
    stats.critic_loss += value_loss / static_cast<double>(batch_size);
    stats.entropy += entropy_sum / static_cast<double>(batch_size);
    ++stats.minibatches;
  }
  if (stats.minibatches > 0) {
    stats.surrogate /= stats.minibatches;
    stats.critic_loss /= stats.minibatches;
    stats.entropy /= stats.minibatches;
  }
  return stats;
}

struct IterationResult {
  PolicyParams policy;
  bool aborted = false;
  int cycles = 0;
};

// One outer best-response iteration: `epochs` cycles of collect + update,
// warm-started from the incumbent policy. On divergence the last finite
// policy is returned and the result is marked aborted. When a checkpoint
// directory is given, the result is persisted as policy_iter_<idx>.json.
inline IterationResult best_response_iterate(
    const PolicyParams& incumbent, const QueueConfig& cfg, const Hyperparams& hyper,
    std::uint64_t seed, std::uint64_t iteration_index,
    const std::filesystem::path& checkpoint_dir = {}) {
  hyper.validate();
  IterationResult result{incumbent};
  OptimizerState opt = OptimizerState::for_policy(result.policy, hyper);
  TrajectoryBuffer buffer;
  PolicyParams last_good = result.policy;
  for (int cycle = 0; cycle < hyper.epochs; ++cycle) {
    const std::uint64_t cycle_key =
        hash_combine(hash_combine(seed, stream::kIteration),
                     hash_combine(iteration_index, static_cast<std::uint64_t>(cycle)));
    collect(result.policy, cfg, hyper, cycle_key, static_cast<std::uint64_t>(cycle),
            buffer);
    try {
      ppo_update(buffer, result.policy, hyper,
                 Rng::stream(seed, stream::kShuffle, iteration_index,
                             static_cast<std::uint64_t>(cycle)),
                 &opt);
    } catch (const TrainingDiverged&) {
      result.policy = last_good;
      result.aborted = true;
      break;
    }
    last_good = result.policy;
    ++result.cycles;
  }
  if (!checkpoint_dir.empty()) {
    char name[64];
    std::snprintf(name, sizeof name, "policy_iter_%03llu.json",
                  static_cast<unsigned long long>(iteration_index));
    save_policy_checkpoint({result.policy, hyper, static_cast<int>(iteration_index), seed},
                           checkpoint_dir / name);
  }
  return result;
}

}  // namespace fineq

#endif  // FINEQ_LEARNER_HPP
