#ifndef FINEQ_POLICY_HPP
#define FINEQ_POLICY_HPP

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "fineq/nn.hpp"
#include "fineq/types.hpp"

namespace fineq {

// Divisors bringing each observation component into roughly [0, 1].
struct ObservationScaling {
  double position = 1.0;  // queue-length cap
  double rounds = 1.0;    // judiciary period
  double paid = 1.0;      // fine
};

inline ObservationScaling scaling_for(const QueueConfig& cfg) {
  return {static_cast<double>(cfg.position_cap()), static_cast<double>(cfg.period),
          static_cast<double>(cfg.fine)};
}

inline std::array<double, 3> scale_observation(const Observation& obs,
                                               const ObservationScaling& s) {
  return {obs.position / s.position, obs.rounds / s.rounds, obs.paid / s.paid};
}

struct Hyperparams {
  double clip = 0.05;
  double discount = 1.0;
  double gae_lambda = 0.95;
  int updates_per_cycle = 16;
  int epochs = 512;  // collect+update cycles per best-response iteration
  int buffer_capacity = 10000;
  double actor_lr = 3e-4;
  double critic_lr = 1e-3;
  double entropy_weight = 1e-3;
  double grad_clip = 0.1;
  bool normalize_advantages = true;
  bool adaptive_optimizer = false;

  void validate() const {
    if (!(clip > 0.0 && clip < 1.0)) throw ValidationError("clip must lie in (0,1)");
    if (!(discount > 0.0 && discount <= 1.0))
      throw ValidationError("discount must lie in (0,1]");
    if (!(gae_lambda > 0.0 && gae_lambda <= 1.0))
      throw ValidationError("gae_lambda must lie in (0,1]");
    if (updates_per_cycle < 1) throw ValidationError("updates_per_cycle must be positive");
    if (epochs < 0) throw ValidationError("epochs must be non-negative");
    if (buffer_capacity < 1) throw ValidationError("buffer_capacity must be positive");
    if (!(actor_lr > 0.0 && critic_lr > 0.0))
      throw ValidationError("learning rates must be positive");
    if (entropy_weight < 0.0) throw ValidationError("entropy weight must be non-negative");
    if (!(grad_clip > 0.0)) throw ValidationError("grad_clip must be positive");
  }
};

// Actor + critic weights together with the constants needed to reproduce the
// exact observation scaling they were trained under.
struct PolicyParams {
  nn::Mlp actor;   // 3 -> 4 -> 4 -> fine+1
  nn::Mlp critic;  // 3 -> 32 -> 32 -> 32 -> 1
  ObservationScaling scaling;
  int fine = 0;

  static PolicyParams init(const QueueConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    PolicyParams p;
    const int actor_sizes[] = {3, 4, 4, cfg.fine + 1};
    const int critic_sizes[] = {3, 32, 32, 32, 1};
    p.actor = nn::Mlp::make(actor_sizes);
    p.critic = nn::Mlp::make(critic_sizes);
    Rng actor_rng = Rng::stream(seed, stream::kWeightInit, 0);
    Rng critic_rng = Rng::stream(seed, stream::kWeightInit, 1);
    p.actor.init_uniform(actor_rng);
    p.critic.init_uniform(critic_rng);
    p.scaling = scaling_for(cfg);
    p.fine = cfg.fine;
    return p;
  }
};

// Softmax over the actions that cannot overpay: with `paid` already on the
// books, only payments 0..fine-paid are feasible and the rest get exactly
// zero probability.
inline ActionDistribution masked_policy(const PolicyParams& params,
                                        std::span<const double> scaled_obs, int paid,
                                        nn::Workspace& ws) {
  if (paid < 0 || paid > params.fine)
    throw ValidationError("masked_policy: paid outside [0, fine]");
  const std::span<const double> logits = nn::forward(params.actor, scaled_obs, ws);
  if (static_cast<int>(logits.size()) != params.fine + 1)
    throw ValidationError("actor output size does not match fine");
  const int feasible = params.fine - paid + 1;
  double top = logits[0];
  for (int i = 1; i < feasible; ++i) top = std::max(top, logits[static_cast<std::size_t>(i)]);
  std::vector<double> probs(static_cast<std::size_t>(params.fine) + 1, 0.0);
  double z = 0.0;
  for (int i = 0; i < feasible; ++i) {
    probs[static_cast<std::size_t>(i)] = std::exp(logits[static_cast<std::size_t>(i)] - top);
    z += probs[static_cast<std::size_t>(i)];
  }
  for (int i = 0; i < feasible; ++i) probs[static_cast<std::size_t>(i)] /= z;
  return ActionDistribution(std::move(probs));
}

inline double value_estimate(const PolicyParams& params, std::span<const double> scaled_obs,
                             nn::Workspace& ws) {
  return nn::forward(params.critic, scaled_obs, ws)[0];
}

// --------------------------------------------------------------------------
// Checkpoints: a portable JSON file declaring shapes, row-major weights,
// scaling constants, training hyperparameters, iteration index and seed.
// Doubles survive the round trip bit-exactly.
// --------------------------------------------------------------------------

struct PolicyCheckpoint {
  PolicyParams params;
  Hyperparams hyper;
  int iteration = 0;
  std::uint64_t seed = 0;
};

namespace detail {

inline nlohmann::json net_to_json(const nn::Mlp& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const nn::Layer& l : net.layers)
    layers.push_back({{"in", l.in}, {"out", l.out}, {"w", l.w}, {"b", l.b}});
  return layers;
}

inline nn::Mlp net_from_json(const nlohmann::json& j) {
  nn::Mlp net;
  for (const auto& lj : j) {
    nn::Layer l;
    l.in = lj.at("in").get<int>();
    l.out = lj.at("out").get<int>();
    l.w = lj.at("w").get<std::vector<double>>();
    l.b = lj.at("b").get<std::vector<double>>();
    if (static_cast<int>(l.w.size()) != l.in * l.out ||
        static_cast<int>(l.b.size()) != l.out)
      throw ValidationError("checkpoint layer shape mismatch");
    net.layers.push_back(std::move(l));
  }
  if (net.layers.empty()) throw ValidationError("checkpoint holds an empty network");
  return net;
}

inline nlohmann::json hyper_to_json(const Hyperparams& h) {
  return {{"clip", h.clip},
          {"discount", h.discount},
          {"gae_lambda", h.gae_lambda},
          {"updates_per_cycle", h.updates_per_cycle},
          {"epochs", h.epochs},
          {"buffer_capacity", h.buffer_capacity},
          {"actor_lr", h.actor_lr},
          {"critic_lr", h.critic_lr},
          {"entropy_weight", h.entropy_weight},
          {"grad_clip", h.grad_clip},
          {"normalize_advantages", h.normalize_advantages},
          {"adaptive_optimizer", h.adaptive_optimizer}};
}

inline Hyperparams hyper_from_json(const nlohmann::json& j) {
  Hyperparams h;
  h.clip = j.at("clip").get<double>();
  h.discount = j.at("discount").get<double>();
  h.gae_lambda = j.at("gae_lambda").get<double>();
  h.updates_per_cycle = j.at("updates_per_cycle").get<int>();
  h.epochs = j.at("epochs").get<int>();
  h.buffer_capacity = j.at("buffer_capacity").get<int>();
  h.actor_lr = j.at("actor_lr").get<double>();
  h.critic_lr = j.at("critic_lr").get<double>();
  h.entropy_weight = j.at("entropy_weight").get<double>();
  h.grad_clip = j.at("grad_clip").get<double>();
  h.normalize_advantages = j.at("normalize_advantages").get<bool>();
  h.adaptive_optimizer = j.at("adaptive_optimizer").get<bool>();
  return h;
}

}  // namespace detail

inline void save_policy_checkpoint(const PolicyCheckpoint& ckpt,
                                   const std::filesystem::path& path) {
  nlohmann::json j{{"format", "fineq-policy-v1"},
                   {"iteration", ckpt.iteration},
                   {"seed", ckpt.seed},
                   {"fine", ckpt.params.fine},
                   {"scaling",
                    {{"position", ckpt.params.scaling.position},
                     {"rounds", ckpt.params.scaling.rounds},
                     {"paid", ckpt.params.scaling.paid}}},
                   {"hyper", detail::hyper_to_json(ckpt.hyper)},
                   {"actor", detail::net_to_json(ckpt.params.actor)},
                   {"critic", detail::net_to_json(ckpt.params.critic)}};
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write checkpoint: " + path.string());
  out << j.dump(2) << '\n';
}

inline PolicyCheckpoint load_policy_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read checkpoint: " + path.string());
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "fineq-policy-v1")
    throw ValidationError("unrecognized checkpoint format in " + path.string());
  PolicyCheckpoint ckpt;
  ckpt.iteration = j.at("iteration").get<int>();
  ckpt.seed = j.at("seed").get<std::uint64_t>();
  ckpt.params.fine = j.at("fine").get<int>();
  const auto& s = j.at("scaling");
  ckpt.params.scaling = {s.at("position").get<double>(), s.at("rounds").get<double>(),
                         s.at("paid").get<double>()};
  ckpt.hyper = detail::hyper_from_json(j.at("hyper"));
  ckpt.params.actor = detail::net_from_json(j.at("actor"));
  ckpt.params.critic = detail::net_from_json(j.at("critic"));
  if (ckpt.params.actor.output_size() != ckpt.params.fine + 1)
    throw ValidationError("checkpoint actor head does not match its fine");
  return ckpt;
}

}  // namespace fineq

#endif  // FINEQ_POLICY_HPP
