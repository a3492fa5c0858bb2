#pragma once

#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "awditkit/checkers.hpp"
#include "awditkit/generators.hpp"
#include "awditkit/history_io.hpp"
#include "awditkit/oracle.hpp"

namespace awditkit {

enum class ExitCode : int {
  Consistent = 0,
  ViolationFound = 1,
  InputError = 2,
  UsageError = 3,
  BudgetExceeded = 4,
};

namespace cli_detail {

inline bool color_enabled() {
  const char* v = std::getenv("AWDITKIT_COLOR");
  return v != nullptr && std::string_view(v) == "1";
}

inline std::string paint(const std::string& s, const char* code, bool color) {
  if (!color) return s;
  return std::string("\x1b[") + code + "m" + s + "\x1b[0m";
}

inline std::optional<History> load_history(const std::string& path, std::istream& in,
                                           std::ostream& err) {
  std::variant<History, ParseError> parsed = [&] {
    if (path == "-") return parse_history(in);
    std::ifstream file(path, std::ios::binary);
    if (!file) {
      return std::variant<History, ParseError>(
          ParseError{0, ParseError::Reason::Syntax, "cannot open file"});
    }
    return parse_history(file);
  }();
  if (std::holds_alternative<ParseError>(parsed)) {
    const ParseError& e = std::get<ParseError>(parsed);
    err << path << ":" << e.line << ": " << parse_error_name(e.reason);
    if (!e.detail.empty()) err << ": " << e.detail;
    err << '\n';
    return std::nullopt;
  }
  return std::get<History>(std::move(parsed));
}

inline void print_verdict(const History& h, IsolationLevel level, const Verdict& v,
                          std::ostream& out, bool color) {
  if (v.consistent()) {
    out << paint("CONSISTENT", "32", color) << ' ' << level_name(level) << '\n';
    return;
  }
  out << paint("VIOLATION", "31", color) << ' ' << level_name(level) << ' '
      << verdict_kind_name(v.kind) << '\n';
  for (const ReadViolation& rv : v.read_violations) out << format_read_violation(h, rv) << '\n';
  if (v.non_repeatable) {
    const NonRepeatableRead& n = *v.non_repeatable;
    out << "NON-REPEATABLE-READ txn=" << n.txn << " key=" << h.key_name(n.key)
        << " writer1=" << n.writer_first << " writer2=" << n.writer_second << '\n';
  }
  for (const CycleWitness& c : v.cycles) out << render_cycle(h, c);
}

inline nlohmann::json json_verdict(const History& h, IsolationLevel level, const Verdict& v) {
  nlohmann::json j;
  j["level"] = std::string(level_name(level));
  j["outcome"] = v.consistent() ? "consistent" : "violation";
  if (!v.consistent()) j["kind"] = std::string(verdict_kind_name(v.kind));
  auto witness = nlohmann::json::array();
  for (const CycleWitness& c : v.cycles)
    for (const CycleEdge& e : c.edges)
      witness.push_back({{"from", h.txn(e.from).id},
                         {"to", h.txn(e.to).id},
                         {"label", std::string(edge_label_name(e.label))}});
  j["witness"] = std::move(witness);
  auto reads = nlohmann::json::array();
  for (const ReadViolation& rv : v.read_violations)
    reads.push_back({{"kind", std::string(read_violation_name(rv.kind))},
                     {"read", rv.read},
                     {"txn", rv.txn},
                     {"key", h.key_name(rv.key)},
                     {"value", rv.value}});
  j["read_violations"] = std::move(reads);
  if (v.non_repeatable)
    j["non_repeatable_read"] = {{"txn", v.non_repeatable->txn},
                                {"key", h.key_name(v.non_repeatable->key)},
                                {"writer1", v.non_repeatable->writer_first},
                                {"writer2", v.non_repeatable->writer_second}};
  return j;
}

inline std::optional<Anomaly> parse_anomaly(std::string_view s) {
  if (s == "thin-air") return Anomaly::ThinAir;
  if (s == "aborted-read") return Anomaly::AbortedRead;
  if (s == "future-read") return Anomaly::FutureRead;
  if (s == "fractured-read") return Anomaly::FracturedRead;
  if (s == "causality-violation") return Anomaly::CausalityViolation;
  return std::nullopt;
}

}  // namespace cli_detail

/// Command-line front end. Streams are injectable so tests can drive it
/// directly; `in` backs the `-` filename.
inline int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
               std::ostream& err) {
  CLI::App app{"checker for transactional key-value histories against weak isolation levels"};
  app.set_help_flag("-h,--help", "print this help and exit");
  app.require_subcommand(1);

  // check
  auto* check_cmd = app.add_subcommand("check", "check a history against isolation levels");
  std::string check_level;
  std::string check_file;
  bool continue_after = false;
  bool json_out = false;
  check_cmd->add_option("--level", check_level, "isolation level (rc|ra|cc); default: all three")
      ->check(CLI::IsMember({"rc", "ra", "cc"}));
  check_cmd->add_flag("--continue-after-read-errors", continue_after,
                      "saturate the commit relation even when read consistency fails");
  check_cmd->add_flag("--json", json_out, "machine-readable JSON-lines output");
  check_cmd->add_option("file", check_file, "history file, or - for stdin")->required();

  // oracle
  auto* oracle_cmd = app.add_subcommand("oracle", "brute-force reference check (small histories)");
  std::string oracle_level;
  std::string oracle_file;
  std::uint32_t oracle_budget = OracleBudget{}.max_committed_txns;
  oracle_cmd->add_option("--level", oracle_level, "isolation level (rc|ra|cc)")
      ->required()
      ->check(CLI::IsMember({"rc", "ra", "cc"}));
  oracle_cmd->add_option("--budget", oracle_budget, "maximum committed transactions");
  oracle_cmd->add_option("file", oracle_file, "history file, or - for stdin")->required();

  // generate
  auto* gen_cmd = app.add_subcommand("generate", "produce histories for testing");
  std::string mode = "random";
  std::string out_file;
  RandomSpec rspec;
  std::uint32_t graph_nodes = 5;
  double graph_edge_prob = 0.4;
  std::vector<std::string> inject_names;
  gen_cmd->add_option("--mode", mode, "random|tri-range|tri-ra|tri-rc")
      ->check(CLI::IsMember({"random", "tri-range", "tri-ra", "tri-rc"}));
  gen_cmd->add_option("--seed", rspec.seed, "random seed");
  gen_cmd->add_option("--sessions", rspec.sessions, "session count");
  gen_cmd->add_option("--txns", rspec.txns, "transaction count");
  gen_cmd->add_option("--ops-min", rspec.ops_min, "minimum operations per transaction");
  gen_cmd->add_option("--ops-max", rspec.ops_max, "maximum operations per transaction");
  gen_cmd->add_option("--keys", rspec.keys, "key count");
  gen_cmd->add_option("--read-fraction", rspec.read_fraction, "fraction of reads");
  gen_cmd->add_option("--graph-nodes", graph_nodes, "graph size for tri-* modes");
  gen_cmd->add_option("--graph-edge-prob", graph_edge_prob, "edge probability for tri-* modes");
  gen_cmd->add_option("--inject", inject_names,
                      "anomalies to plant: thin-air, aborted-read, future-read, "
                      "fractured-read, causality-violation")
      ->delimiter(',');
  gen_cmd->add_option("-o,--output", out_file, "output file, or - for stdout")->required();

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "print history statistics");
  std::string stats_file;
  stats_cmd->add_option("file", stats_file, "history file, or - for stdin")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return static_cast<int>(ExitCode::Consistent);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return static_cast<int>(ExitCode::UsageError);
  }

  const bool color = cli_detail::color_enabled();

  if (check_cmd->parsed()) {
    auto h = cli_detail::load_history(check_file, in, err);
    if (!h) return static_cast<int>(ExitCode::InputError);
    CheckOptions opts;
    opts.continue_after_read_errors = continue_after;

    std::vector<IsolationLevel> levels;
    if (check_level.empty())
      levels = {IsolationLevel::RC, IsolationLevel::RA, IsolationLevel::CC};
    else
      levels = {*parse_level(check_level)};

    std::vector<Verdict> verdicts(levels.size());
    if (levels.size() > 1) {
      // The history is immutable; independent levels may run concurrently.
      std::vector<std::future<Verdict>> futures;
      for (IsolationLevel l : levels)
        futures.push_back(std::async(std::launch::async,
                                     [&h, l, opts] { return check(*h, l, opts); }));
      for (std::size_t i = 0; i < futures.size(); ++i) verdicts[i] = futures[i].get();
    } else {
      verdicts[0] = check(*h, levels[0], opts);
    }

    bool violation = false;
    for (std::size_t i = 0; i < levels.size(); ++i) {
      violation = violation || !verdicts[i].consistent();
      if (json_out)
        out << cli_detail::json_verdict(*h, levels[i], verdicts[i]).dump() << '\n';
      else
        cli_detail::print_verdict(*h, levels[i], verdicts[i], out, color);
    }
    return static_cast<int>(violation ? ExitCode::ViolationFound : ExitCode::Consistent);
  }

  if (oracle_cmd->parsed()) {
    auto h = cli_detail::load_history(oracle_file, in, err);
    if (!h) return static_cast<int>(ExitCode::InputError);
    IsolationLevel level = *parse_level(oracle_level);
    OracleBudget budget{oracle_budget};
    switch (oracle_check(*h, level, budget)) {
      case OracleOutcome::Consistent:
        out << cli_detail::paint("CONSISTENT", "32", color) << ' ' << level_name(level) << '\n';
        return static_cast<int>(ExitCode::Consistent);
      case OracleOutcome::Violation: {
        // Same verdict format as the checkers; the oracle itself only knows
        // whether read consistency or the commit-order search failed.
        auto reads = check_read_consistency(*h);
        if (!reads.empty()) {
          out << cli_detail::paint("VIOLATION", "31", color) << ' ' << level_name(level)
              << " read-consistency\n";
          for (const ReadViolation& rv : reads) out << format_read_violation(*h, rv) << '\n';
        } else {
          out << cli_detail::paint("VIOLATION", "31", color) << ' ' << level_name(level)
              << " no-commit-order\n";
        }
        return static_cast<int>(ExitCode::ViolationFound);
      }
      case OracleOutcome::BudgetExceeded:
        err << "oracle budget exceeded: " << h->committed_count() << " committed transactions > "
            << oracle_budget << '\n';
        return static_cast<int>(ExitCode::BudgetExceeded);
    }
    return static_cast<int>(ExitCode::UsageError);
  }

  if (gen_cmd->parsed()) {
    for (const std::string& name : inject_names) {
      auto a = cli_detail::parse_anomaly(name);
      if (!a) {
        err << "unknown anomaly: " << name << '\n';
        return static_cast<int>(ExitCode::UsageError);
      }
      rspec.inject.insert(*a);
    }
    History h;
    std::vector<std::string> notes;
    try {
      if (mode == "random") {
        h = gen_random(rspec, &notes);
      } else {
        UndirectedGraph g = UndirectedGraph::sample(graph_nodes, graph_edge_prob, rspec.seed);
        if (mode == "tri-range")
          h = gen_range_reduction(g);
        else if (mode == "tri-ra")
          h = gen_ra_reduction(g);
        else
          h = gen_rc_reduction(g);
      }
    } catch (const GeneratorError& e) {
      err << "generation error: " << e.what() << '\n';
      return static_cast<int>(ExitCode::UsageError);
    }
    for (const std::string& n : notes) err << n << '\n';
    if (out_file == "-") {
      serialize_history(h, out);
    } else {
      std::ofstream f(out_file, std::ios::binary);
      if (!f) {
        err << "cannot open output file: " << out_file << '\n';
        return static_cast<int>(ExitCode::InputError);
      }
      serialize_history(h, f);
    }
    return static_cast<int>(ExitCode::Consistent);
  }

  if (stats_cmd->parsed()) {
    auto h = cli_detail::load_history(stats_file, in, err);
    if (!h) return static_cast<int>(ExitCode::InputError);
    std::vector<std::size_t> sizes;
    for (const auto& s : h->sessions())
      for (const Transaction& t : s) sizes.push_back(t.ops.size());
    std::sort(sizes.begin(), sizes.end());
    out << "ops " << h->op_count() << '\n';
    out << "sessions " << h->session_count() << '\n';
    out << "committed " << h->committed_count() << '\n';
    out << "aborted " << h->aborted_count() << '\n';
    out << "keys " << h->key_universe() << '\n';
    if (sizes.empty()) {
      out << "ops-per-txn min=0 median=0 mean=0 max=0\n";
    } else {
      double mean = static_cast<double>(h->op_count()) / static_cast<double>(sizes.size());
      std::ostringstream m;
      m.precision(3);
      m << mean;
      out << "ops-per-txn min=" << sizes.front() << " median=" << sizes[sizes.size() / 2]
          << " mean=" << m.str() << " max=" << sizes.back() << '\n';
    }
    return static_cast<int>(ExitCode::Consistent);
  }

  return static_cast<int>(ExitCode::UsageError);
}

}  // namespace awditkit
