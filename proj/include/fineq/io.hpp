#ifndef FINEQ_IO_HPP
#define FINEQ_IO_HPP

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "fineq/evaluation.hpp"
#include "fineq/game.hpp"

namespace fineq::io {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void to_json(nlohmann::json& j, const QueueConfig& cfg) {
  j = {{"fine", cfg.fine},
       {"legal_cost", cfg.legal_cost},
       {"period", cfg.period},
       {"punished", cfg.punished},
       {"ignorance", cfg.ignorance},
       {"entrants", cfg.entrants},
       {"initial_agents", cfg.initial_agents},
       {"horizon", cfg.horizon},
       {"seed", cfg.seed},
       {"burn_in", cfg.burn_in},
       {"brs_literal", cfg.brs_literal}};
}

inline QueueConfig config_from_json(const nlohmann::json& j) {
  QueueConfig cfg;
  cfg.fine = j.at("fine").get<int>();
  cfg.legal_cost = j.at("legal_cost").get<int>();
  cfg.period = j.at("period").get<int>();
  cfg.punished = j.at("punished").get<int>();
  cfg.ignorance = j.at("ignorance").get<double>();
  cfg.entrants = j.at("entrants").get<int>();
  cfg.initial_agents = j.at("initial_agents").get<int>();
  cfg.horizon = j.at("horizon").get<int>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.burn_in = j.at("burn_in").get<int>();
  cfg.brs_literal = j.at("brs_literal").get<bool>();
  return cfg;
}

// Line-delimited episode log: a header line with the resolved config and
// seed, then one line per round with the realized payments, the removals with
// reasons, and the round's revenue. Replaying (config, seed) reproduces the
// file byte for byte.
inline void write_episode_log(const EpisodeLog& log, std::ostream& os) {
  nlohmann::json header;
  to_json(header["config"], log.config);
  header["seed"] = log.seed;
  os << header.dump() << '\n';
  for (std::size_t r = 0; r < log.rounds.size(); ++r) {
    const RoundOutcome& round = log.rounds[r];
    nlohmann::json jr;
    jr["round"] = r + 1;
    nlohmann::json payments = nlohmann::json::object();
    for (const auto& [id, paid] : round.payments) payments[std::to_string(id)] = paid;
    jr["payments"] = std::move(payments);
    nlohmann::json removed = nlohmann::json::array();
    for (const TerminalRecord& t : round.terminals) {
      removed.push_back({{"id", t.agent.id},
                         {"reason", to_string(t.reason)},
                         {"paid", t.agent.paid},
                         {"rounds", t.agent.rounds},
                         {"utility", t.utility}});
    }
    jr["removed"] = std::move(removed);
    jr["revenue"] = log.revenue[r];
    os << jr.dump() << '\n';
  }
}

inline void write_episode_log(const EpisodeLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write log file: " + path);
  write_episode_log(log, out);
}

// Parsed form of a written log; enough to validate and replay.
struct ParsedLog {
  QueueConfig config;
  std::uint64_t seed = 0;
  std::vector<std::int64_t> revenue;
  std::vector<std::vector<TerminalRecord>> removed;
  std::vector<std::map<AgentId, int>> payments;
};

inline ParsedLog read_episode_log(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ValidationError("empty episode log");
  nlohmann::json header = nlohmann::json::parse(line);
  ParsedLog parsed;
  parsed.config = config_from_json(header.at("config"));
  parsed.seed = header.at("seed").get<std::uint64_t>();
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    nlohmann::json jr = nlohmann::json::parse(line);
    parsed.revenue.push_back(jr.at("revenue").get<std::int64_t>());
    std::map<AgentId, int> pay;
    for (const auto& [key, value] : jr.at("payments").items())
      pay[std::stoll(key)] = value.get<int>();
    parsed.payments.push_back(std::move(pay));
    std::vector<TerminalRecord> terminals;
    for (const auto& t : jr.at("removed")) {
      TerminalRecord rec;
      rec.agent.id = t.at("id").get<AgentId>();
      rec.agent.paid = t.at("paid").get<int>();
      rec.agent.rounds = t.at("rounds").get<int>();
      rec.utility = t.at("utility").get<std::int64_t>();
      rec.reason = termination_reason_from(t.at("reason").get<std::string>());
      terminals.push_back(std::move(rec));
    }
    parsed.removed.push_back(std::move(terminals));
  }
  return parsed;
}

// Minimal CSV emitter with a mandatory header row and full-precision doubles.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  void header(std::initializer_list<std::string_view> names) {
    bool first = true;
    for (std::string_view n : names) {
      if (!first) os_ << ',';
      os_ << n;
      first = false;
    }
    os_ << '\n';
  }

  CsvWriter& field(const std::string& v) {
    sep();
    os_ << v;
    return *this;
  }
  CsvWriter& field(const char* v) { return field(std::string(v)); }
  CsvWriter& field(double v) {
    sep();
    os_ << format_double(v);
    return *this;
  }
  CsvWriter& field(std::int64_t v) {
    sep();
    os_ << v;
    return *this;
  }
  CsvWriter& field(int v) { return field(static_cast<std::int64_t>(v)); }
  CsvWriter& field(std::uint64_t v) {
    sep();
    os_ << v;
    return *this;
  }
  void end_row() {
    os_ << '\n';
    row_open_ = false;
  }

 private:
  void sep() {
    if (row_open_) os_ << ',';
    row_open_ = true;
  }
  std::ostream& os_;
  bool row_open_ = false;
};

namespace detail {

inline nlohmann::json estimate_to_json(const evaluation::McEstimate& est) {
  return {{"mean", est.mean},
          {"std_error", est.std_error},
          {"count", est.count},
          {"seed", est.seed}};
}

}  // namespace detail

// JSON variant of the sweep output with the full estimate fields per row.
inline void write_sweep_json(std::span<const evaluation::SweepRow> rows,
                             std::ostream& os) {
  nlohmann::json arr = nlohmann::json::array();
  for (const evaluation::SweepRow& row : rows) {
    arr.push_back({{"axis", row.axis},
                   {"value", row.value},
                   {"strategy", row.strategy},
                   {"episodes", row.episodes},
                   {"revenue_total", detail::estimate_to_json(row.revenue.total)},
                   {"revenue_per_round", detail::estimate_to_json(row.revenue.per_round)},
                   {"steady_per_round",
                    detail::estimate_to_json(row.revenue.steady_per_round)},
                   {"per_period_mean", row.revenue.per_period_mean}});
  }
  os << arr.dump(2) << '\n';
}

inline void write_sweep_csv(std::span<const evaluation::SweepRow> rows, std::ostream& os) {
  CsvWriter csv(os);
  csv.header({"axis", "value", "strategy", "episodes", "revenue_total_mean",
              "revenue_total_se", "revenue_per_round_mean", "revenue_per_round_se",
              "steady_per_round_mean", "steady_per_round_se", "per_period_mean"});
  for (const evaluation::SweepRow& row : rows) {
    csv.field(row.axis)
        .field(row.value)
        .field(row.strategy)
        .field(row.episodes)
        .field(row.revenue.total.mean)
        .field(row.revenue.total.std_error)
        .field(row.revenue.per_round.mean)
        .field(row.revenue.per_round.std_error)
        .field(row.revenue.steady_per_round.mean)
        .field(row.revenue.steady_per_round.std_error)
        .field(row.revenue.per_period_mean);
    csv.end_row();
  }
}

}  // namespace fineq::io

#endif  // FINEQ_IO_HPP
