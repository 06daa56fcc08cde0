#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fineq/config.hpp"
#include "fineq/io.hpp"

using namespace fineq;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("io");

TEST_CASE("episode log round trip") {
  QueueConfig cfg;
  cfg.horizon = 6;
  cfg.seed = 909;
  StrategyBuilder builder(parse_strategy_spec("brs"), cfg);
  UniformProfile profile{std::move(builder)};
  const EpisodeLog log = run_queue(cfg, profile);

  std::ostringstream os;
  io::write_episode_log(log, os);
  std::istringstream is(os.str());
  const io::ParsedLog parsed = io::read_episode_log(is);

  CHECK(parsed.seed == 909);
  CHECK(parsed.config.horizon == 6);
  CHECK(parsed.config.seed == 909);
  REQUIRE(parsed.revenue.size() == log.revenue.size());
  for (std::size_t r = 0; r < log.revenue.size(); ++r) {
    CHECK(parsed.revenue[r] == log.revenue[r]);
    CHECK(parsed.payments[r] == log.rounds[r].payments);
    REQUIRE(parsed.removed[r].size() == log.rounds[r].terminals.size());
    for (std::size_t t = 0; t < parsed.removed[r].size(); ++t) {
      CHECK(parsed.removed[r][t].agent.id == log.rounds[r].terminals[t].agent.id);
      CHECK(parsed.removed[r][t].utility == log.rounds[r].terminals[t].utility);
      CHECK(parsed.removed[r][t].reason == log.rounds[r].terminals[t].reason);
    }
  }
  // replay from the embedded (config, seed) reproduces the bytes
  StrategyBuilder again(parse_strategy_spec("brs"), parsed.config);
  UniformProfile profile2{std::move(again)};
  std::ostringstream os2;
  io::write_episode_log(run_queue(parsed.config, profile2), os2);
  CHECK(os.str() == os2.str());
}

TEST_CASE("sweep csv shape") {
  evaluation::SweepRow row;
  row.axis = "ignorance";
  row.value = 0.5;
  row.strategy = "brs";
  row.episodes = 10;
  row.revenue.total = {123.5, 1.25, 10, 7};
  row.revenue.per_round = {1.93, 0.02, 10, 7};
  row.revenue.steady_per_round = {2.0, 0.03, 10, 7};
  row.revenue.per_period_mean = 8.0;
  std::ostringstream os;
  const evaluation::SweepRow rows[] = {row};
  io::write_sweep_csv(rows, os);
  std::istringstream is(os.str());
  std::string header, line;
  std::getline(is, header);
  CHECK(header ==
        "axis,value,strategy,episodes,revenue_total_mean,revenue_total_se,"
        "revenue_per_round_mean,revenue_per_round_se,steady_per_round_mean,"
        "steady_per_round_se,per_period_mean");
  std::getline(is, line);
  CHECK(line.rfind("ignorance,0.5,brs,10,123.5,1.25,", 0) == 0);
}

TEST_CASE("key=value files, environment and precedence") {
  const fs::path dir = fs::temp_directory_path() / "fineq_cfg_test";
  fs::create_directories(dir);
  const fs::path path = dir / "run.cfg";
  {
    std::ofstream out(path);
    out << "# comment line\n"
        << "game.fine = 3\n"
        << "game.legal_cost = 9\n"
        << "run.episodes = 25   # trailing comment\n";
  }
  SUBCASE("file values with defaults underneath") {
    const auto kv = config::KeyValueConfig::from_file(path.string());
    const QueueConfig cfg = config::queue_config_from(kv);
    CHECK(cfg.fine == 3);
    CHECK(cfg.legal_cost == 9);
    CHECK(cfg.period == 4);  // untouched default
    CHECK(kv.get_int("run.episodes", 0) == 25);
  }
  SUBCASE("environment overrides the file") {
    ::setenv("FINEQ_GAME_FINE", "2", 1);
    auto kv = config::KeyValueConfig::from_file(path.string());
    kv.apply_environment();
    ::unsetenv("FINEQ_GAME_FINE");
    CHECK(config::queue_config_from(kv).fine == 2);
  }
  SUBCASE("explicit set overrides everything") {
    ::setenv("FINEQ_GAME_FINE", "2", 1);
    auto kv = config::KeyValueConfig::from_file(path.string());
    kv.apply_environment();
    kv.set("game.fine", "5");
    ::unsetenv("FINEQ_GAME_FINE");
    CHECK(config::queue_config_from(kv).fine == 5);
  }
  SUBCASE("unknown keys are rejected") {
    std::ofstream out(dir / "bad.cfg");
    out << "game.fien = 3\n";
    out.close();
    CHECK_THROWS_AS(config::KeyValueConfig::from_file((dir / "bad.cfg").string()),
                    ValidationError);
    auto kv = config::KeyValueConfig::from_file(path.string());
    CHECK_THROWS_AS(kv.set("game.unknown", "1"), ValidationError);
  }
  SUBCASE("typed getters validate") {
    auto kv = config::KeyValueConfig::from_file(path.string());
    kv.set("game.ignorance", "0.25");
    CHECK(kv.get_double("game.ignorance", 0.5) == 0.25);
    kv.set("game.ignorance", "zebra");
    CHECK_THROWS_AS(kv.get_double("game.ignorance", 0.5), ValidationError);
    kv.set("game.brs_literal", "yes-ish");
    CHECK_THROWS_AS(kv.get_bool("game.brs_literal", false), ValidationError);
  }
  fs::remove_all(dir);
}

TEST_CASE("sweep json variant carries full estimates") {
  evaluation::SweepRow row;
  row.axis = "entrants";
  row.value = 16;
  row.strategy = "crit1";
  row.episodes = 5;
  row.revenue.total = {42.0, 0.5, 5, 99};
  std::ostringstream os;
  const evaluation::SweepRow rows[] = {row};
  io::write_sweep_json(rows, os);
  const nlohmann::json parsed = nlohmann::json::parse(os.str());
  REQUIRE(parsed.size() == 1);
  CHECK(parsed[0]["revenue_total"]["mean"] == 42.0);
  CHECK(parsed[0]["revenue_total"]["std_error"] == 0.5);
  CHECK(parsed[0]["revenue_total"]["count"] == 5);
  CHECK(parsed[0]["revenue_total"]["seed"] == 99);
  CHECK(parsed[0]["strategy"] == "crit1");
}

TEST_CASE("checkpoints load back through the strategy spec") {
  QueueConfig cfg;
  const fs::path dir = fs::temp_directory_path() / "fineq_policy_spec_test";
  fs::create_directories(dir);
  const fs::path path = dir / "ckpt.json";
  save_policy_checkpoint({PolicyParams::init(cfg, 64), Hyperparams{}, 2, 64}, path);
  const StrategySpec spec = parse_strategy_spec("policy:" + path.string());
  CHECK(spec.kind == StrategySpec::Kind::Policy);
  StrategyBuilder builder(spec, cfg);
  auto strat = builder.build();
  CHECK_NOTHROW(strat->declare({3, 1, 2}).validate());
  // a checkpoint trained for another fine is refused at build time
  QueueConfig other = cfg;
  other.fine = 6;
  other.legal_cost = 9;
  CHECK_THROWS_AS(StrategyBuilder(spec, other), ValidationError);
  fs::remove_all(dir);
}

TEST_CASE("config snapshot json round trip") {
  QueueConfig cfg;
  cfg.fine = 7;
  cfg.legal_cost = 11;
  cfg.ignorance = 0.325;
  cfg.seed = 0xdeadbeefull;
  cfg.burn_in = 5;
  cfg.brs_literal = true;
  nlohmann::json j;
  io::to_json(j, cfg);
  const QueueConfig back = io::config_from_json(j);
  CHECK(back.fine == cfg.fine);
  CHECK(back.legal_cost == cfg.legal_cost);
  CHECK(back.ignorance == cfg.ignorance);
  CHECK(back.seed == cfg.seed);
  CHECK(back.burn_in == cfg.burn_in);
  CHECK(back.brs_literal == cfg.brs_literal);
}

TEST_CASE("list splitting") {
  CHECK(config::split_list("0.9,0.7, 0.5") ==
        std::vector<std::string>{"0.9", "0.7", "0.5"});
  CHECK(config::split_list("") == std::vector<std::string>{});
  CHECK(config::split_list("brs") == std::vector<std::string>{"brs"});
}

TEST_SUITE_END();
