#pragma once

// memtrace v1: the line-oriented on-disk trace format.
//
//   # comment
//   vars x y
//   sync s
//   bind s : x y
//   process 1: w x 1 ; r y 2 ; acq s ; rel s
//   syncorder s: 1 2
//
// Values are decimal naturals, variables match [a-zA-Z][a-zA-Z0-9_]*.
// render() emits the canonical form: sorted process ids, single spaces,
// operations separated by " ; ", LF line endings.

#include <cctype>
#include <charconv>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "memcc/core.hpp"

namespace memcc {

struct ParseError {
  std::size_t line = 0;    // 1-based
  std::size_t column = 0;  // 1-based byte offset
  std::string message;

  std::string str() const {
    return "line " + std::to_string(line) + ":" + std::to_string(column) + ": " + message;
  }
};

struct TraceDocument {
  RawTrace raw;
};

struct ParseResult {
  std::optional<TraceDocument> document;
  std::optional<ParseError> error;
  bool ok() const { return document.has_value(); }
};

namespace detail {

struct Cursor {
  std::string_view text;
  std::size_t pos = 0;
  void skip_spaces() {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
  }
  bool done() {
    skip_spaces();
    return pos >= text.size();
  }
  std::size_t column() const { return pos + 1; }
  std::string_view token() {
    skip_spaces();
    std::size_t start = pos;
    while (pos < text.size() && text[pos] != ' ' && text[pos] != '\t') ++pos;
    return text.substr(start, pos - start);
  }
};

inline bool valid_identifier(std::string_view s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  return true;
}

inline std::optional<std::uint64_t> parse_nat(std::string_view s) {
  std::uint64_t v = 0;
  if (s.empty()) return std::nullopt;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace detail

inline ParseResult parse(std::string_view text) {
  TraceDocument doc;
  std::set<ProcessId> seen_pids;
  std::size_t lineno = 0;
  std::size_t start = 0;
  auto fail = [&](std::size_t col, std::string msg) {
    ParseResult r;
    r.error = ParseError{lineno, col, std::move(msg)};
    return r;
  };

  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    std::string_view line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);

    detail::Cursor cur{line};
    if (cur.done()) continue;
    std::size_t kw_col = cur.column();
    std::string_view kw = cur.token();

    if (kw == "vars" || kw == "sync") {
      while (!cur.done()) {
        std::size_t col = cur.column();
        std::string_view name = cur.token();
        if (!detail::valid_identifier(name)) return fail(col, "bad variable name '" + std::string(name) + "'");
        (kw == "vars" ? doc.raw.declared_vars : doc.raw.declared_sync).emplace_back(name);
      }
    } else if (kw == "bind") {
      std::size_t col = cur.column();
      std::string_view s = cur.token();
      if (!detail::valid_identifier(s)) return fail(col, "bind: bad sync variable name");
      col = cur.column();
      std::string_view colon = cur.token();
      if (colon != ":") return fail(col, "bind: expected ':'");
      auto& dst = doc.raw.bindings[std::string(s)];
      while (!cur.done()) {
        col = cur.column();
        std::string_view name = cur.token();
        if (!detail::valid_identifier(name)) return fail(col, "bind: bad variable name '" + std::string(name) + "'");
        dst.emplace_back(name);
      }
    } else if (kw == "process") {
      std::size_t col = cur.column();
      std::string_view pid_tok = cur.token();
      bool with_colon = !pid_tok.empty() && pid_tok.back() == ':';
      if (with_colon) pid_tok.remove_suffix(1);
      auto pid = detail::parse_nat(pid_tok);
      if (!pid) return fail(col, "process: bad process id");
      if (!with_colon) {
        col = cur.column();
        std::string_view colon = cur.token();
        if (colon != ":") return fail(col, "process: expected ':'");
      }
      if (!seen_pids.insert(static_cast<ProcessId>(*pid)).second)
        return fail(kw_col, "duplicate process " + std::to_string(*pid));
      std::vector<RawOp> ops;
      bool expect_op = !cur.done();
      while (expect_op) {
        std::size_t opcol = cur.column();
        std::string_view op = cur.token();
        RawOp ro;
        if (op == "w" || op == "r") {
          ro.kind = op == "w" ? OpKind::Write : OpKind::Read;
          std::size_t c1 = cur.column();
          std::string_view var = cur.token();
          if (!detail::valid_identifier(var)) return fail(c1, "expected variable name after '" + std::string(op) + "'");
          std::size_t c2 = cur.column();
          std::string_view val = cur.token();
          auto v = detail::parse_nat(val);
          if (!v) return fail(c2, "expected value after '" + std::string(op) + " " + std::string(var) + "'");
          ro.variable = std::string(var);
          ro.value = *v;
        } else if (op == "acq" || op == "rel") {
          ro.kind = op == "acq" ? OpKind::Acquire : OpKind::Release;
          std::size_t c1 = cur.column();
          std::string_view var = cur.token();
          if (!detail::valid_identifier(var)) return fail(c1, "expected sync variable after '" + std::string(op) + "'");
          ro.variable = std::string(var);
        } else {
          return fail(opcol, "unknown operation '" + std::string(op) + "'");
        }
        ops.push_back(std::move(ro));
        if (cur.done()) break;
        std::size_t sepcol = cur.column();
        std::string_view sep = cur.token();
        if (sep != ";") return fail(sepcol, "expected ';' between operations");
        if (cur.done()) return fail(cur.column(), "trailing ';'");
      }
      doc.raw.processes.emplace_back(static_cast<ProcessId>(*pid), std::move(ops));
    } else if (kw == "syncorder") {
      std::size_t col = cur.column();
      std::string_view s = cur.token();
      bool with_colon = !s.empty() && s.back() == ':';
      if (with_colon) s.remove_suffix(1);
      if (!detail::valid_identifier(s)) return fail(col, "syncorder: bad sync variable name");
      if (!with_colon) {
        col = cur.column();
        std::string_view colon = cur.token();
        if (colon != ":") return fail(col, "syncorder: expected ':'");
      }
      if (doc.raw.sync_acq_order.count(std::string(s)))
        return fail(kw_col, "duplicate syncorder for '" + std::string(s) + "'");
      auto& dst = doc.raw.sync_acq_order[std::string(s)];
      while (!cur.done()) {
        col = cur.column();
        auto pid = detail::parse_nat(cur.token());
        if (!pid) return fail(col, "syncorder: bad process id");
        dst.push_back(static_cast<ProcessId>(*pid));
      }
    } else {
      return fail(kw_col, "unknown directive '" + std::string(kw) + "'");
    }
    if (end == std::string_view::npos) break;
  }

  ParseResult r;
  r.document = std::move(doc);
  return r;
}

// Canonical rendering; parse(render(e)) validates back to e.
inline std::string render(const Execution& ex) {
  std::ostringstream out;
  out << "# memtrace v1\n";
  std::vector<std::string> ordinary, sync;
  for (VarId v = 0; v < ex.var_count(); ++v)
    (ex.var(v).is_sync ? sync : ordinary).push_back(ex.var(v).name);
  std::sort(ordinary.begin(), ordinary.end());
  std::sort(sync.begin(), sync.end());
  auto emit_list = [&out](std::string_view kw, const std::vector<std::string>& names) {
    if (names.empty()) return;
    out << kw;
    for (const auto& n : names) out << ' ' << n;
    out << '\n';
  };
  emit_list("vars", ordinary);
  emit_list("sync", sync);
  for (const auto& sname : sync) {
    VarId s = *ex.find_var(sname);
    const auto& binds = ex.bindings(s);
    if (binds.empty()) continue;
    std::vector<std::string> names;
    for (VarId v : binds) names.push_back(ex.var(v).name);
    std::sort(names.begin(), names.end());
    out << "bind " << sname << " :";
    for (const auto& n : names) out << ' ' << n;
    out << '\n';
  }
  for (ProcessId p : ex.process_ids()) {
    out << "process " << p << ":";
    bool first = true;
    for (OpId id : ex.process_ops(p)) {
      const Operation& o = ex.op(id);
      out << (first ? " " : " ; ");
      first = false;
      switch (o.kind) {
        case OpKind::Write: out << "w " << ex.var(o.variable).name << ' ' << o.value; break;
        case OpKind::Read: out << "r " << ex.var(o.variable).name << ' ' << o.value; break;
        case OpKind::Acquire: out << "acq " << ex.var(o.variable).name; break;
        case OpKind::Release: out << "rel " << ex.var(o.variable).name; break;
      }
    }
    out << '\n';
  }
  for (const auto& sname : sync) {
    VarId s = *ex.find_var(sname);
    auto order = ex.sync_acq_order(s);
    if (order.empty()) continue;
    out << "syncorder " << sname << ":";
    for (ProcessId p : order) out << ' ' << p;
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Embedded fixtures: the figure executions and the lazy-order example.

struct Fixture {
  std::string name;
  Execution execution;
};

inline const std::vector<Fixture>& fixtures() {
  static const std::vector<Fixture> fx = [] {
    std::vector<Fixture> out;
    auto add = [&out](std::string name, const TraceBuilder& b) { out.push_back({std::move(name), b.build()}); };

    add("fig2-sequential", TraceBuilder{}
                               .process(1).w("x", 1).r("x", 1)
                               .process(2).w("x", 2).r("x", 1));
    add("fig3-nonsequential", TraceBuilder{}
                                  .process(1).w("x", 1).r("x", 2)
                                  .process(2).w("x", 2).r("x", 1));
    add("fig5-pram", TraceBuilder{}
                         .process(1).w("x", 1)
                         .process(2).r("x", 1).w("x", 2)
                         .process(3).r("x", 2).r("x", 1));
    add("fig-cache", TraceBuilder{}
                         .process(1).w("x", 1).w("x", 2).w("y", 3)
                         .process(2).r("y", 3).r("x", 1));
    add("fig-processor", TraceBuilder{}
                             .process(1).w("x", 1)
                             .process(2).r("x", 1).w("y", 2)
                             .process(3).r("y", 2).w("x", 3).r("x", 1));
    add("fig-pram-cache", TraceBuilder{}
                              .process(1).w("x", 1).w("y", 2)
                              .process(2).r("y", 2).w("x", 3)
                              .process(3).r("x", 3).r("x", 1));
    add("fig-causal-cache", TraceBuilder{}
                                .process(1).r("y", 2).r("x", 3)
                                .process(2).w("x", 1).w("y", 2)
                                .process(3).w("x", 3).r("x", 1));
    add("fig-slow", TraceBuilder{}
                        .process(1).w("x", 1).w("x", 2).w("y", 3).r("y", 4)
                        .process(2).w("y", 4).r("y", 3).r("x", 1));
    add("lazy-po-example", TraceBuilder{}
                               .process(1).w("x", 1).w("x", 2)
                               .process(2).w("y", 3).r("x", 1));
    return out;
  }();
  return fx;
}

// Name lookup; "fig4-causal" aliases the fig3 diagram (same figure).
inline const Execution* find_fixture(std::string_view name) {
  std::string_view canonical = name == "fig4-causal" ? "fig3-nonsequential" : name;
  for (const Fixture& f : fixtures())
    if (f.name == canonical) return &f.execution;
  return nullptr;
}

inline ValidationResult parse_and_validate(std::string_view text, ParseError* err = nullptr) {
  ParseResult p = parse(text);
  if (!p.ok()) {
    if (err) *err = *p.error;
    return {};
  }
  return validate(p.document->raw);
}

}  // namespace memcc
