// Command-line front end: simulate episodes, query closed forms, train
// policies, estimate the incumbent-vs-challenger utility gap, run sweeps and
// coalition checks. Every output embeds the resolved configuration and seed,
// and any run is byte-reproducible from those two.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fineq/fineq.hpp"

namespace fs = std::filesystem;
using namespace fineq;

namespace {

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;
  std::optional<int> workers;
  std::optional<double> rho;
  bool brs_literal = false;
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--config", opt.config_path, "key=value config file");
  cmd->add_option("--set", opt.overrides, "override a config key (key=value)")
      ->type_name("KEY=VALUE");
  cmd->add_option("--out", opt.out, "output path");
  cmd->add_option("--seed", opt.seed, "master seed");
  cmd->add_option("--episodes", opt.episodes, "Monte-Carlo episodes");
  cmd->add_option("--workers", opt.workers, "worker threads (0 = all cores)");
  cmd->add_option("--rho", opt.rho, "challenger fraction for utility-gap runs");
  cmd->add_flag("--brs-literal-formula", opt.brs_literal,
                "use the printed-sign movement test in the rational heuristic");
}

config::KeyValueConfig resolve(const CommonOptions& opt) {
  config::KeyValueConfig kv;
  if (!opt.config_path.empty()) kv = config::KeyValueConfig::from_file(opt.config_path);
  kv.apply_environment();
  for (const std::string& kvp : opt.overrides) {
    const auto eq = kvp.find('=');
    if (eq == std::string::npos)
      throw ValidationError("--set wants key=value, got '" + kvp + "'");
    kv.set(kvp.substr(0, eq), kvp.substr(eq + 1));
  }
  if (opt.seed) kv.set("game.seed", std::to_string(*opt.seed));
  if (opt.episodes) kv.set("run.episodes", std::to_string(*opt.episodes));
  if (opt.workers) kv.set("run.workers", std::to_string(*opt.workers));
  if (opt.rho) kv.set("run.rho", io::format_double(*opt.rho));
  if (opt.brs_literal) kv.set("game.brs_literal", "true");
  return kv;
}

nlohmann::json config_json(const QueueConfig& cfg) {
  nlohmann::json j;
  io::to_json(j, cfg);
  return j;
}

int run_simulate(const CommonOptions& opt) {
  const config::KeyValueConfig kv = resolve(opt);
  const QueueConfig cfg = config::queue_config_from(kv);
  const std::string profile_name = kv.get_string("run.profile", "brs");
  StrategyBuilder builder(parse_strategy_spec(profile_name), cfg);
  UniformProfile profile{std::move(builder)};
  const EpisodeLog log = run_queue(cfg, profile);
  if (!opt.out.empty()) io::write_episode_log(log, opt.out);
  const RevenueSummary all = revenue(log, false);
  const RevenueSummary steady = revenue(log, true);
  std::cout << "profile: " << profile_name << "\n"
            << "seed: " << cfg.seed << "\n"
            << "rounds: " << log.rounds.size() << "\n"
            << "revenue_total: " << all.total << "\n"
            << "revenue_per_round: " << all.per_round << "\n"
            << "steady_per_round: " << steady.per_round << "\n";
  if (!opt.out.empty()) std::cout << "log: " << opt.out << "\n";
  return 0;
}

int run_analytic(const CommonOptions& opt, const std::string& query,
                 const std::map<std::string, double>& args) {
  const config::KeyValueConfig kv = resolve(opt);
  const QueueConfig base = config::queue_config_from(kv);
  const auto arg = [&](const std::string& name, double fallback) {
    const auto it = args.find(name);
    return it == args.end() ? fallback : it->second;
  };
  const int fine = static_cast<int>(arg("f", base.fine));
  const int cost = static_cast<int>(arg("q", base.legal_cost));
  const double p = arg("p", base.ignorance);
  const int k = static_cast<int>(arg("k", base.punished));
  const int n = static_cast<int>(arg("n", 1));
  std::ostream& os = std::cout;
  os.precision(17);
  if (query == "alpha") {
    os << analytic::alpha(p, n, k) << "\n";
  } else if (query == "chernoff") {
    os << analytic::chernoff_bound(p, n, k) << "\n";
  } else if (query == "r") {
    const auto r = analytic::critical_position_w1(fine, cost, p, k);
    os << (r.finite() ? std::to_string(r.value()) : "unbounded") << "\n";
  } else if (query == "r21") {
    const auto r = analytic::critical_position_w2_first(fine, cost, p, k);
    os << (r.finite() ? std::to_string(r.value()) : "unbounded") << "\n";
  } else if (query == "alpha-crit") {
    const auto r = analytic::critical_position_w1(fine, cost, p, k);
    os << analytic::alpha_crit(p, r.value(), n, k) << "\n";
  } else if (query == "g") {
    os << analytic::expected_payment_w1(p, n, k, fine, cost) << "\n";
  } else if (query == "g2") {
    os << analytic::expected_payment_round2(p, n, k, fine, cost) << "\n";
  } else if (query == "total-w1") {
    os << analytic::total_payment_w1(p, static_cast<int>(arg("x0", base.initial_agents)),
                                     k, fine, cost, static_cast<int>(arg("k-mult", 1)))
       << "\n";
  } else if (query == "total-w2-lower") {
    os << analytic::total_payment_w2_lower(p, k, fine, cost) << "\n";
  } else if (query == "division-compare") {
    const analytic::DivisionReport rep = analytic::division_compare(fine, cost, p, k);
    os << "two_round_lower: " << rep.two_round_lower << "\n"
       << "one_round_double_k: " << rep.one_round_double_k << "\n"
       << "winner: "
       << (rep.winner == analytic::DivisionReport::Winner::TwoRound
               ? "two_round"
               : rep.winner == analytic::DivisionReport::Winner::OneRoundDoubleK
                     ? "one_round_double_k"
                     : "tie")
       << "\n"
       << "position_condition: " << (rep.position_condition ? "true" : "false") << "\n"
       << "ratio_condition: " << (rep.ratio_condition ? "true" : "false") << "\n";
  } else if (query == "conjecture") {
    const analytic::ConjectureProbe probe = analytic::conjecture_caa_probe(p, n, k);
    os << "lhs: " << probe.lhs << "\nrhs: " << probe.rhs << "\nscaled_n: " << probe.scaled_n
       << "\nholds: " << (probe.holds ? "true" : "false") << "\n";
  } else if (query == "conjecture-scan" || query == "chernoff-scan") {
    if (opt.out.empty()) throw ValidationError(query + " needs --out CSV path");
    const double grid_p[] = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    const int grid_k[] = {1, 2, 3, 4};
    std::ofstream out(opt.out, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + opt.out);
    const int n_max = static_cast<int>(arg("n", 200));
    if (query == "conjecture-scan")
      analytic::write_conjecture_scan(out, grid_p, n_max, grid_k);
    else
      analytic::write_chernoff_scan(out, grid_p, n_max, grid_k);
    std::cout << "wrote " << opt.out << "\n";
  } else {
    throw ValidationError(
        "unknown analytic query '" + query +
        "' (alpha|chernoff|r|r21|alpha-crit|g|g2|total-w1|total-w2-lower|"
        "division-compare|conjecture|conjecture-scan|chernoff-scan)");
  }
  return 0;
}

int run_train(const CommonOptions& opt) {
  const config::KeyValueConfig kv = resolve(opt);
  const QueueConfig cfg = config::queue_config_from(kv);
  const Hyperparams hyper = config::hyperparams_from(kv);
  const int iterations = static_cast<int>(kv.get_int("train.iterations", 4));
  const double rho = kv.get_double("run.rho", 0.05);
  const int nc_episodes = static_cast<int>(kv.get_int("train.nashconv_episodes", 400));
  const int workers = static_cast<int>(kv.get_int("run.workers", 0));
  std::vector<std::uint64_t> seeds;
  for (const std::string& s : config::split_list(kv.get_string("train.seeds", ""))) {
    seeds.push_back(std::stoull(s));
  }
  if (seeds.empty()) seeds.push_back(cfg.seed);

  const fs::path out_dir = opt.out.empty() ? fs::path("train_out") : fs::path(opt.out);
  fs::create_directories(out_dir);

  // per-seed, per-iteration gap estimates
  std::vector<std::vector<evaluation::McEstimate>> gap(seeds.size());
  for (std::size_t si = 0; si < seeds.size(); ++si) {
    const std::uint64_t seed = seeds[si];
    QueueConfig env = cfg;
    env.seed = seed;
    const fs::path seed_dir = out_dir / ("seed_" + std::to_string(seed));
    fs::create_directories(seed_dir);
    PolicyParams incumbent = PolicyParams::init(env, seed);
    save_policy_checkpoint({incumbent, hyper, 0, seed}, seed_dir / "policy_iter_000.json");
    for (int it = 0; it < iterations; ++it) {
      const IterationResult result =
          best_response_iterate(incumbent, env, hyper, seed, static_cast<std::uint64_t>(it));
      char name[64];
      std::snprintf(name, sizeof name, "policy_iter_%03d.json", it + 1);
      save_policy_checkpoint({result.policy, hyper, it + 1, seed}, seed_dir / name);
      StrategySpec inc;
      inc.kind = StrategySpec::Kind::Policy;
      inc.policy = std::make_shared<PolicyParams>(incumbent);
      inc.name = "incumbent";
      StrategySpec ch;
      ch.kind = StrategySpec::Kind::Policy;
      ch.policy = std::make_shared<PolicyParams>(result.policy);
      ch.name = "challenger";
      gap[si].push_back(evaluation::nashconv(env, inc, ch, rho, nc_episodes,
                                             hash_combine(seed, static_cast<std::uint64_t>(it)),
                                             workers));
      std::cout << "seed " << seed << " iteration " << it
                << " nashconv " << gap[si].back().mean << " +- "
                << gap[si].back().std_error
                << (result.aborted ? " (aborted)" : "") << "\n";
      incumbent = result.policy;
      if (result.aborted) break;
    }
  }

  nlohmann::json manifest;
  manifest["config"] = config_json(cfg);
  manifest["seeds"] = seeds;
  manifest["iterations"] = iterations;
  manifest["rho"] = rho;
  std::ofstream mf(out_dir / "manifest.json", std::ios::binary);
  mf << manifest.dump(2) << "\n";

  std::ofstream csv(out_dir / "nashconv.csv", std::ios::binary);
  csv << "# " << manifest.dump() << "\n";
  io::CsvWriter w(csv);
  w.header({"iteration", "mean", "stderr", "seeds"});
  for (int it = 0; it < iterations; ++it) {
    std::vector<double> vals;
    for (const auto& per_seed : gap)
      if (it < static_cast<int>(per_seed.size())) vals.push_back(per_seed[it].mean);
    if (vals.empty()) break;
    double mean = 0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    double se = 0;
    if (vals.size() > 1) {
      double var = 0;
      for (double v : vals) var += (v - mean) * (v - mean);
      se = std::sqrt(var / static_cast<double>(vals.size() - 1) /
                     static_cast<double>(vals.size()));
    }
    w.field(static_cast<std::int64_t>(it)).field(mean).field(se).field(
        static_cast<std::int64_t>(vals.size()));
    w.end_row();
  }
  std::cout << "wrote " << (out_dir / "nashconv.csv").string() << "\n";
  return 0;
}

int run_nashconv(const CommonOptions& opt, const std::string& incumbent,
                 const std::string& challenger) {
  const config::KeyValueConfig kv = resolve(opt);
  const QueueConfig cfg = config::queue_config_from(kv);
  const double rho = kv.get_double("run.rho", 0.05);
  const int episodes = static_cast<int>(kv.get_int("run.episodes", 2000));
  const int workers = static_cast<int>(kv.get_int("run.workers", 0));
  const evaluation::McEstimate est =
      evaluation::nashconv(cfg, parse_strategy_spec(incumbent),
                           parse_strategy_spec(challenger), rho, episodes, cfg.seed,
                           workers);
  std::cout.precision(17);
  std::cout << "nashconv: " << est.mean << "\n"
            << "stderr: " << est.std_error << "\n"
            << "episodes: " << est.count << "\n"
            << "seed: " << cfg.seed << "\n";
  return 0;
}

int run_sweep(const CommonOptions& opt, const std::string& mode) {
  const config::KeyValueConfig kv = resolve(opt);
  const QueueConfig cfg = config::queue_config_from(kv);
  const int episodes = static_cast<int>(kv.get_int("run.episodes", 2000));
  const int workers = static_cast<int>(kv.get_int("run.workers", 0));
  const std::string sweep_mode = mode.empty() ? kv.get_string("sweep.mode", "avalanche-p")
                                              : mode;
  std::vector<evaluation::NamedSpec> profiles;
  for (const std::string& name :
       config::split_list(kv.get_string("sweep.profiles", "brs"))) {
    profiles.push_back({name, parse_strategy_spec(name)});
  }
  const std::string grid_text = kv.get_string("sweep.grid", "");
  std::vector<evaluation::SweepRow> rows;
  if (sweep_mode == "avalanche-p" || sweep_mode == "avalanche-x") {
    std::vector<double> grid;
    for (const std::string& v : config::split_list(
             grid_text.empty() ? (sweep_mode == "avalanche-p" ? "0.9,0.7,0.5,0.3,0.1"
                                                              : "8,16,32,64")
                               : grid_text))
      grid.push_back(std::stod(v));
    if (grid.empty()) throw ValidationError("sweep grid must not be empty");
    rows = evaluation::avalanche_sweep(
        cfg,
        sweep_mode == "avalanche-p" ? evaluation::SweepAxis::Ignorance
                                    : evaluation::SweepAxis::Entrants,
        grid, profiles, episodes, cfg.seed, workers);
  } else if (sweep_mode == "time" || sweep_mode == "time-capacity" ||
             sweep_mode == "group") {
    std::vector<int> grid;
    for (const std::string& v : config::split_list(
             grid_text.empty() ? (sweep_mode == "group" ? "1,2,4" : "1,2,4,8") : grid_text))
      grid.push_back(std::stoi(v));
    if (grid.empty()) throw ValidationError("sweep grid must not be empty");
    const evaluation::DivisionMode dm =
        sweep_mode == "group" ? evaluation::DivisionMode::Group
        : sweep_mode == "time" ? evaluation::DivisionMode::TimeFixedCharges
                               : evaluation::DivisionMode::TimeFixedCapacity;
    rows = evaluation::division_sweep(cfg, dm, grid, profiles, episodes, cfg.seed, workers);
  } else {
    throw ValidationError("unknown sweep mode '" + sweep_mode +
                          "' (avalanche-p|avalanche-x|time|time-capacity|group)");
  }
  // a .json output path selects the JSON variant with full estimate fields
  const bool as_json = opt.out.size() >= 5 &&
                       opt.out.compare(opt.out.size() - 5, 5, ".json") == 0;
  std::ostringstream buffer;
  nlohmann::json meta;
  meta["config"] = config_json(cfg);
  meta["mode"] = sweep_mode;
  meta["episodes"] = episodes;
  if (as_json) {
    io::write_sweep_json(rows, buffer);
  } else {
    buffer << "# " << meta.dump() << "\n";
    io::write_sweep_csv(rows, buffer);
  }
  if (opt.out.empty()) {
    std::cout << buffer.str();
  } else {
    std::ofstream out(opt.out, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + opt.out);
    out << buffer.str();
    std::cout << "wrote " << opt.out << " (" << rows.size() << " rows)\n";
  }
  return 0;
}

int run_coalition(const CommonOptions& opt) {
  const config::KeyValueConfig kv = resolve(opt);
  const QueueConfig cfg = config::queue_config_from(kv);
  const int size = static_cast<int>(kv.get_int("coalition.size", cfg.punished));
  const std::string others = kv.get_string("coalition.others", "crit1");
  const int episodes = static_cast<int>(kv.get_int("run.episodes", 2000));
  const int workers = static_cast<int>(kv.get_int("run.workers", 0));
  const evaluation::CoalitionCheck check = evaluation::coalition_check(
      cfg, size, parse_strategy_spec(others), episodes, cfg.seed, workers);
  std::cout.precision(17);
  std::cout << "shared_cost: " << check.shared_cost.mean
            << (check.exact ? " (exact)" : " +- " +
                                               io::format_double(check.shared_cost.std_error))
            << "\n"
            << "leave_gain: " << check.leave_gain.mean << "\n"
            << "pay_fine_gain: " << check.pay_fine_gain << "\n"
            << "best_gain: " << std::max(check.best_gain, check.leave_gain.mean) << "\n"
            << "prescribed: "
            << (check.prescribed == analytic::CoalitionDeviation::PayFine
                    ? "pay_fine"
                    : check.prescribed == analytic::CoalitionDeviation::LeaveGroup
                          ? "leave_group"
                          : "none")
            << "\n"
            << "seed: " << cfg.seed << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fine-collection queue simulator and analysis toolkit"};
  app.require_subcommand(1);

  CommonOptions sim_opt, ana_opt, train_opt, nc_opt, sweep_opt, coal_opt;

  CLI::App* sim = app.add_subcommand("simulate", "run one seeded episode and log it");
  add_common(sim, sim_opt);
  std::string sim_profile;
  sim->add_option("--profile", sim_profile,
                  "strategy: pure:N | brs | crit1 | crit2 | policy:PATH");

  CLI::App* ana = app.add_subcommand("analytic", "closed-form queries");
  add_common(ana, ana_opt);
  std::string query;
  ana->add_option("query", query, "what to compute")->required();
  std::map<std::string, double> ana_args;
  ana->add_option("--f", ana_args["f"], "fine");
  ana->add_option("--q", ana_args["q"], "legal cost");
  ana->add_option("--p", ana_args["p"], "ignorance probability");
  ana->add_option("--k", ana_args["k"], "charged per round");
  ana->add_option("--n", ana_args["n"], "position (or scan length)");
  ana->add_option("--x0", ana_args["x0"], "queue length");
  ana->add_option("--k-mult", ana_args["k-mult"], "charge multiplier");

  CLI::App* train = app.add_subcommand("train", "iterated best-response training");
  add_common(train, train_opt);

  CLI::App* nc = app.add_subcommand("nashconv", "utility gap of a challenger fraction");
  add_common(nc, nc_opt);
  std::string incumbent = "brs", challenger = "crit1";
  nc->add_option("--incumbent", incumbent, "population strategy");
  nc->add_option("--challenger", challenger, "candidate best response");

  CLI::App* sweep = app.add_subcommand("sweep", "revenue sweeps over p, x, T or groups");
  add_common(sweep, sweep_opt);
  std::string sweep_mode;
  sweep->add_option("--mode", sweep_mode,
                    "avalanche-p | avalanche-x | time | time-capacity | group");
  std::string sweep_grid, sweep_profiles;
  sweep->add_option("--grid", sweep_grid, "comma-separated grid values");
  sweep->add_option("--profiles", sweep_profiles, "comma-separated strategy names");

  CLI::App* coal = app.add_subcommand("coalition", "cost-sharing deviation check");
  add_common(coal, coal_opt);
  std::string coal_size, coal_others;
  coal->add_option("--size", coal_size, "coalition size");
  coal->add_option("--others", coal_others, "strategy of non-members");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      if (!sim_profile.empty()) sim_opt.overrides.push_back("run.profile=" + sim_profile);
      return run_simulate(sim_opt);
    }
    if (ana->parsed()) {
      // drop CLI11 defaults that were never set
      std::map<std::string, double> set_args;
      for (const auto& [name, value] : ana_args) {
        if (ana->count("--" + name) > 0) set_args[name] = value;
      }
      return run_analytic(ana_opt, query, set_args);
    }
    if (train->parsed()) return run_train(train_opt);
    if (nc->parsed()) return run_nashconv(nc_opt, incumbent, challenger);
    if (sweep->parsed()) {
      if (!sweep_grid.empty()) sweep_opt.overrides.push_back("sweep.grid=" + sweep_grid);
      if (!sweep_profiles.empty())
        sweep_opt.overrides.push_back("sweep.profiles=" + sweep_profiles);
      return run_sweep(sweep_opt, sweep_mode);
    }
    if (coal->parsed()) {
      if (!coal_size.empty()) coal_opt.overrides.push_back("coalition.size=" + coal_size);
      if (!coal_others.empty())
        coal_opt.overrides.push_back("coalition.others=" + coal_others);
      return run_coalition(coal_opt);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const OutOfRegimeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
