#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "awditkit/history.hpp"

namespace awditkit {

inline constexpr std::string_view kHistoryHeader = "awdit-history v1";

struct ParseError {
  enum class Reason {
    Syntax,
    DuplicateWrite,
    DuplicateTxnId,
    DuplicateOpId,
    EmptyTransaction,
  };

  std::size_t line = 0;  // 1-based, points at the offending line
  Reason reason = Reason::Syntax;
  std::string detail;
};

inline std::string_view parse_error_name(ParseError::Reason r) {
  switch (r) {
    case ParseError::Reason::Syntax: return "syntax";
    case ParseError::Reason::DuplicateWrite: return "duplicate-write";
    case ParseError::Reason::DuplicateTxnId: return "duplicate-txn-id";
    case ParseError::Reason::DuplicateOpId: return "duplicate-op-id";
    case ParseError::Reason::EmptyTransaction: return "empty-transaction";
  }
  return "unknown";
}

namespace detail {

inline bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

inline bool parse_u64(std::string_view s, std::uint64_t& out) {
  if (!all_digits(s)) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

inline std::vector<std::string_view> split_tokens(std::string_view line) {
  std::vector<std::string_view> toks;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ') ++j;
    if (j > i) toks.push_back(line.substr(i, j - i));
    i = j;
  }
  return toks;
}

}  // namespace detail

/// Parses the canonical text history format. The wr relation is inferred from
/// unique write values; a read with no matching write simply gets no wr entry
/// (downstream checks flag it as a thin-air read). Duplicate (key, value)
/// writes are rejected here: they would make wr ambiguous.
inline std::variant<History, ParseError> parse_history(std::istream& in) {
  struct RawOp {
    OpKind kind;
    std::string key_token;
    Value value;
    std::size_t line;
  };
  struct RawTxn {
    TxnId id;
    TxnStatus status;
    std::vector<RawOp> ops;
    std::size_t line;
  };

  std::vector<std::vector<RawTxn>> raw_sessions;
  bool header_seen = false;
  std::string line;
  std::size_t line_no = 0;

  auto err = [&](std::size_t ln, ParseError::Reason r, std::string detail) {
    return ParseError{ln, r, std::move(detail)};
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string_view sv(line);
    std::size_t first = sv.find_first_not_of(' ');
    if (first == std::string_view::npos) continue;  // blank
    if (sv[first] == '#') continue;                 // comment

    auto toks = detail::split_tokens(sv);
    if (!header_seen) {
      if (sv != kHistoryHeader)
        return err(line_no, ParseError::Reason::Syntax, "expected header line");
      header_seen = true;
      continue;
    }

    if (toks[0] == "session") {
      if (toks.size() != 2)
        return err(line_no, ParseError::Reason::Syntax, "session line needs one index");
      std::uint64_t sid = 0;
      if (!detail::parse_u64(toks[1], sid) || sid != raw_sessions.size())
        return err(line_no, ParseError::Reason::Syntax, "session indices must be dense and ascending");
      raw_sessions.emplace_back();
    } else if (toks[0] == "txn") {
      if (raw_sessions.empty())
        return err(line_no, ParseError::Reason::Syntax, "txn outside a session");
      if (toks.size() != 3 || (toks[2] != "c" && toks[2] != "a"))
        return err(line_no, ParseError::Reason::Syntax, "expected: txn <id> <c|a>");
      std::uint64_t tid = 0;
      if (!detail::parse_u64(toks[1], tid))
        return err(line_no, ParseError::Reason::Syntax, "transaction id must be an unsigned integer");
      raw_sessions.back().push_back(RawTxn{
          tid, toks[2] == "c" ? TxnStatus::Committed : TxnStatus::Aborted, {}, line_no});
    } else if (toks[0] == "w" || toks[0] == "r") {
      if (raw_sessions.empty() || raw_sessions.back().empty())
        return err(line_no, ParseError::Reason::Syntax, "operation outside a transaction");
      if (toks.size() != 3)
        return err(line_no, ParseError::Reason::Syntax, "expected: w|r <key> <value>");
      std::uint64_t value = 0;
      if (!detail::parse_u64(toks[2], value))
        return err(line_no, ParseError::Reason::Syntax, "value must be an unsigned integer");
      raw_sessions.back().back().ops.push_back(RawOp{
          toks[0] == "w" ? OpKind::Write : OpKind::Read, std::string(toks[1]), value, line_no});
    } else {
      return err(line_no, ParseError::Reason::Syntax, "unknown directive");
    }
  }

  // Key interning: numeric tokens stand for themselves; named tokens get ids
  // above every numeric key so the mapping is injective and round-trips.
  Key max_numeric = 0;
  for (const auto& s : raw_sessions)
    for (const auto& t : s)
      for (const auto& o : t.ops) {
        std::uint64_t k = 0;
        if (detail::parse_u64(o.key_token, k) && k > max_numeric) max_numeric = k;
      }
  std::unordered_map<std::string, Key> interned;
  std::unordered_map<Key, std::string> named_keys;
  Key next_named = max_numeric + 1;
  auto key_of = [&](const std::string& token) {
    std::uint64_t k = 0;
    if (detail::parse_u64(token, k)) return static_cast<Key>(k);
    auto it = interned.find(token);
    if (it != interned.end()) return it->second;
    Key id = next_named++;
    interned.emplace(token, id);
    named_keys.emplace(id, token);
    return id;
  };

  std::vector<std::vector<Transaction>> sessions(raw_sessions.size());
  std::unordered_map<TxnId, std::size_t> txn_lines;
  struct KvLine {
    std::size_t line;
  };
  std::unordered_map<Key, std::unordered_map<Value, KvLine>> write_lines;
  OpId next_op = 0;

  for (std::size_t s = 0; s < raw_sessions.size(); ++s) {
    for (const RawTxn& rt : raw_sessions[s]) {
      if (rt.ops.empty())
        return err(rt.line, ParseError::Reason::EmptyTransaction,
                   "transaction " + std::to_string(rt.id) + " has no operations");
      if (!txn_lines.emplace(rt.id, rt.line).second)
        return err(rt.line, ParseError::Reason::DuplicateTxnId,
                   "transaction id " + std::to_string(rt.id) + " reused");
      Transaction t;
      t.id = rt.id;
      t.status = rt.status;
      for (const RawOp& ro : rt.ops) {
        Key k = key_of(ro.key_token);
        if (ro.kind == OpKind::Write) {
          auto [it, fresh] = write_lines[k].emplace(ro.value, KvLine{ro.line});
          if (!fresh)
            return err(ro.line, ParseError::Reason::DuplicateWrite,
                       "write of (" + ro.key_token + ", " + std::to_string(ro.value) +
                           ") already appeared on line " + std::to_string(it->second.line));
        }
        t.ops.push_back(Operation{next_op++, ro.kind, k, ro.value});
      }
      sessions[s].push_back(std::move(t));
    }
  }

  return History::from_sessions(std::move(sessions), std::move(named_keys));
}

inline std::variant<History, ParseError> parse_history(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_history(in);
}

/// Canonical serialization: UTF-8, LF endings, single spaces, sessions and
/// transactions in model order. parse_history(serialize_history(h)) rebuilds
/// a structurally identical history.
inline void serialize_history(const History& h, std::ostream& out) {
  out << kHistoryHeader << '\n';
  const auto& sessions = h.sessions();
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    out << "session " << s << '\n';
    for (const Transaction& t : sessions[s]) {
      out << "txn " << t.id << ' ' << (t.committed() ? 'c' : 'a') << '\n';
      for (const Operation& o : t.ops) {
        out << (o.kind == OpKind::Write ? 'w' : 'r') << ' ' << h.key_name(o.key) << ' '
            << o.value << '\n';
      }
    }
  }
}

inline std::string serialize_history(const History& h) {
  std::ostringstream out;
  serialize_history(h, out);
  return out.str();
}

}  // namespace awditkit
