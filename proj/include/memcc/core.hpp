#pragma once

// Core trace model: operations, executions, validity checking.
//
// An execution is a finite record of write/read (and acquire/release)
// operations grouped per process, together with the acquisition order of
// every synchronization variable and the Entry binding sets. Executions are
// immutable after validation; everything downstream (relations, checkers)
// treats them as read-only.

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace memcc {

using OpId = std::uint32_t;
using ProcessId = std::uint32_t;
using VarId = std::uint32_t;
using Value = std::uint64_t;

inline constexpr OpId kNoOp = static_cast<OpId>(-1);

enum class OpKind : std::uint8_t { Write, Read, Acquire, Release };

struct Operation {
  OpKind kind;
  ProcessId process;
  VarId variable;
  Value value = 0;  // meaningful for Write/Read only

  bool is_write() const { return kind == OpKind::Write; }
  bool is_read() const { return kind == OpKind::Read; }
  bool is_sync() const { return kind == OpKind::Acquire || kind == OpKind::Release; }
  bool is_ordinary() const { return !is_sync(); }
};

// Raw (unvalidated) trace data, as produced by the parser or built in code.
struct RawOp {
  OpKind kind;
  std::string variable;
  Value value = 0;
};

struct RawTrace {
  std::vector<std::pair<ProcessId, std::vector<RawOp>>> processes;
  std::vector<std::string> declared_vars;
  std::vector<std::string> declared_sync;
  std::map<std::string, std::vector<ProcessId>> sync_acq_order;
  std::map<std::string, std::vector<std::string>> bindings;  // Entry D(s)
};

enum class ValidationKind {
  DuplicateWriteValue,
  DanglingRead,
  NoValidInterleaving,
  SyncAlternationViolation,
  SyncOrderMismatch,
  MixedVariableUse,
};

struct ValidationError {
  ValidationKind kind;
  std::string message;
};

inline std::string_view validation_kind_name(ValidationKind k) {
  switch (k) {
    case ValidationKind::DuplicateWriteValue: return "DuplicateWriteValue";
    case ValidationKind::DanglingRead: return "DanglingRead";
    case ValidationKind::NoValidInterleaving: return "NoValidInterleaving";
    case ValidationKind::SyncAlternationViolation: return "SyncAlternationViolation";
    case ValidationKind::SyncOrderMismatch: return "SyncOrderMismatch";
    case ValidationKind::MixedVariableUse: return "MixedVariableUse";
  }
  return "?";
}

class Relation;  // relation.hpp
class Execution;
struct ValidationResult;
ValidationResult validate(const RawTrace& raw);

namespace detail {
// Cache of named derived relations. Copied executions share one cache;
// lookups take a shared lock, the first builder of a name publishes under
// the exclusive lock.
struct RelationCache {
  mutable std::shared_mutex mu;
  std::map<std::string, std::shared_ptr<const Relation>, std::less<>> entries;
};
}  // namespace detail

struct VarInfo {
  std::string name;
  bool is_sync = false;
};

class Execution {
 public:
  Execution() : cache_(std::make_shared<detail::RelationCache>()) {}

  std::size_t size() const { return ops_.size(); }
  bool empty() const { return ops_.empty(); }
  const Operation& op(OpId id) const { return ops_[id]; }
  std::span<const Operation> ops() const { return ops_; }

  std::span<const ProcessId> process_ids() const { return pids_; }
  std::span<const OpId> process_ops(ProcessId p) const {
    auto it = proc_index_.find(p);
    return it == proc_index_.end() ? std::span<const OpId>{} : std::span<const OpId>(proc_ops_[it->second]);
  }

  std::size_t var_count() const { return vars_.size(); }
  const VarInfo& var(VarId v) const { return vars_[v]; }
  std::optional<VarId> find_var(std::string_view name) const {
    auto it = var_index_.find(std::string(name));
    return it == var_index_.end() ? std::nullopt : std::optional<VarId>(it->second);
  }
  std::vector<VarId> ordinary_vars() const {
    std::vector<VarId> out;
    for (VarId v = 0; v < vars_.size(); ++v)
      if (!vars_[v].is_sync) out.push_back(v);
    return out;
  }
  std::vector<VarId> sync_vars() const {
    std::vector<VarId> out;
    for (VarId v = 0; v < vars_.size(); ++v)
      if (vars_[v].is_sync) out.push_back(v);
    return out;
  }
  bool has_sync_ops() const { return sync_op_count_ > 0; }

  // Source write of a read (unique by uni-valued writes); kNoOp for writes.
  OpId read_source(OpId r) const { return read_source_[r]; }
  std::span<const OpId> writes_on(VarId v) const {
    auto it = writes_by_var_.find(v);
    return it == writes_by_var_.end() ? std::span<const OpId>{} : std::span<const OpId>(it->second);
  }
  std::span<const OpId> reads_of(OpId w) const {
    auto it = readers_.find(w);
    return it == readers_.end() ? std::span<const OpId>{} : std::span<const OpId>(it->second);
  }

  // Critical sections of s, in acquisition order: (acquire, release) pairs.
  std::span<const std::pair<OpId, OpId>> critical_sections(VarId s) const {
    auto it = cs_.find(s);
    return it == cs_.end() ? std::span<const std::pair<OpId, OpId>>{} : std::span<const std::pair<OpId, OpId>>(it->second);
  }
  std::span<const ProcessId> sync_acq_order(VarId s) const {
    auto it = acq_order_.find(s);
    return it == acq_order_.end() ? std::span<const ProcessId>{} : std::span<const ProcessId>(it->second);
  }
  // Entry binding set D(s); empty when the trace declares none.
  const std::set<VarId>& bindings(VarId s) const {
    static const std::set<VarId> kEmpty;
    auto it = bindings_.find(s);
    return it == bindings_.end() ? kEmpty : it->second;
  }

  std::string format_op(OpId id) const {
    const Operation& o = ops_[id];
    std::ostringstream os;
    switch (o.kind) {
      case OpKind::Write: os << "w(" << o.process << "," << vars_[o.variable].name << "," << o.value << ")"; break;
      case OpKind::Read: os << "r(" << o.process << "," << vars_[o.variable].name << "," << o.value << ")"; break;
      case OpKind::Acquire: os << "acq(" << o.process << "," << vars_[o.variable].name << ")"; break;
      case OpKind::Release: os << "rel(" << o.process << "," << vars_[o.variable].name << ")"; break;
    }
    return os.str();
  }
  std::string format_ops(std::span<const OpId> ids) const {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (i) out += ' ';
      out += format_op(ids[i]);
    }
    return out;
  }

  bool operator==(const Execution& other) const;

  detail::RelationCache& relation_cache() const { return *cache_; }

 private:
  friend ValidationResult memcc::validate(const RawTrace& raw);

  std::vector<Operation> ops_;
  std::vector<VarInfo> vars_;
  std::map<std::string, VarId> var_index_;
  std::vector<ProcessId> pids_;                 // sorted
  std::map<ProcessId, std::size_t> proc_index_;
  std::vector<std::vector<OpId>> proc_ops_;
  std::vector<OpId> read_source_;
  std::map<VarId, std::vector<OpId>> writes_by_var_;
  std::map<OpId, std::vector<OpId>> readers_;
  std::map<VarId, std::vector<std::pair<OpId, OpId>>> cs_;
  std::map<VarId, std::vector<ProcessId>> acq_order_;
  std::map<VarId, std::set<VarId>> bindings_;
  std::size_t sync_op_count_ = 0;
  std::shared_ptr<detail::RelationCache> cache_;
};

struct ValidationResult {
  std::optional<Execution> execution;
  std::vector<ValidationError> errors;
  bool ok() const { return execution.has_value(); }
};

namespace detail {

// Cycle search over an explicit adjacency list; returns the node sequence of
// one cycle if present.
inline std::optional<std::vector<OpId>> find_cycle_in(const std::vector<std::vector<OpId>>& adj) {
  const std::size_t n = adj.size();
  std::vector<int> state(n, 0);  // 0 unseen, 1 on stack, 2 done
  std::vector<OpId> stack;
  std::vector<std::size_t> iter(n, 0);
  for (OpId root = 0; root < n; ++root) {
    if (state[root] != 0) continue;
    stack.push_back(root);
    state[root] = 1;
    while (!stack.empty()) {
      OpId u = stack.back();
      if (iter[u] < adj[u].size()) {
        OpId v = adj[u][iter[u]++];
        if (state[v] == 0) {
          state[v] = 1;
          stack.push_back(v);
        } else if (state[v] == 1) {
          auto it = std::find(stack.begin(), stack.end(), v);
          return std::vector<OpId>(it, stack.end());
        }
      } else {
        state[u] = 2;
        stack.pop_back();
      }
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Checks a raw trace against the validity rules and produces an immutable
// Execution, or the full list of violated rules.
//
// A trace is accepted when (a) writes are uni-valued per variable, (b) every
// read has a matching write and some interleaving of the process sequences,
// respecting the synchronization acquisition order, puts that write before
// the read, and (c) per process and sync variable, acquire/release alternate
// starting with an acquire, with the acquisition order listing exactly one
// entry per acquire.
inline ValidationResult validate(const RawTrace& raw) {
  ValidationResult res;
  std::vector<ValidationError>& errs = res.errors;
  Execution ex;

  // Variable interning. A name used both as an ordinary and a sync variable
  // is rejected: the two namespaces are disjoint.
  std::map<std::string, bool> uses;  // name -> is_sync as first seen
  auto note_use = [&](const std::string& name, bool sync) {
    auto [it, inserted] = uses.emplace(name, sync);
    if (!inserted && it->second != sync)
      errs.push_back({ValidationKind::MixedVariableUse,
                      "variable '" + name + "' used as both ordinary and synchronization variable"});
  };
  for (const auto& [pid, ops] : raw.processes) {
    (void)pid;
    for (const RawOp& o : ops) note_use(o.variable, o.kind == OpKind::Acquire || o.kind == OpKind::Release);
  }
  for (const auto& name : raw.declared_vars) note_use(name, false);
  for (const auto& name : raw.declared_sync) note_use(name, true);
  for (const auto& [s, _] : raw.sync_acq_order) note_use(s, true);
  for (const auto& [s, vars] : raw.bindings) {
    note_use(s, true);
    for (const auto& v : vars) note_use(v, false);
  }
  if (!errs.empty()) return res;

  auto intern = [&](const std::string& name, bool sync) -> VarId {
    auto it = ex.var_index_.find(name);
    if (it != ex.var_index_.end()) return it->second;
    VarId id = static_cast<VarId>(ex.vars_.size());
    ex.vars_.push_back({name, sync});
    ex.var_index_.emplace(name, id);
    return id;
  };
  for (const auto& [name, sync] : uses) intern(name, sync);

  // Op table, process-major in pid order.
  std::vector<std::pair<ProcessId, const std::vector<RawOp>*>> procs;
  for (const auto& [pid, ops] : raw.processes) procs.emplace_back(pid, &ops);
  std::sort(procs.begin(), procs.end(), [](auto& a, auto& b) { return a.first < b.first; });
  for (std::size_t i = 1; i < procs.size(); ++i)
    if (procs[i].first == procs[i - 1].first)
      throw std::invalid_argument("duplicate process id in raw trace");

  for (const auto& [pid, rops] : procs) {
    ex.pids_.push_back(pid);
    ex.proc_index_[pid] = ex.proc_ops_.size();
    std::vector<OpId>& mine = ex.proc_ops_.emplace_back();
    for (const RawOp& ro : *rops) {
      OpId id = static_cast<OpId>(ex.ops_.size());
      VarId v = ex.var_index_.at(ro.variable);
      ex.ops_.push_back({ro.kind, pid, v, ro.value});
      if (ro.kind == OpKind::Acquire || ro.kind == OpKind::Release) ++ex.sync_op_count_;
      mine.push_back(id);
    }
  }
  ex.read_source_.assign(ex.ops_.size(), kNoOp);

  // Uni-valued writes.
  std::map<std::pair<VarId, Value>, OpId> write_of;
  for (OpId id = 0; id < ex.ops_.size(); ++id) {
    const Operation& o = ex.ops_[id];
    if (o.kind != OpKind::Write) continue;
    auto [it, inserted] = write_of.emplace(std::make_pair(o.variable, o.value), id);
    if (!inserted)
      errs.push_back({ValidationKind::DuplicateWriteValue,
                      "value " + std::to_string(o.value) + " written twice to '" + ex.vars_[o.variable].name +
                          "' (" + ex.format_op(it->second) + " and " + ex.format_op(id) + ")"});
    else
      ex.writes_by_var_[o.variable].push_back(id);
  }

  // Read sourcing.
  for (OpId id = 0; id < ex.ops_.size(); ++id) {
    const Operation& o = ex.ops_[id];
    if (o.kind != OpKind::Read) continue;
    auto it = write_of.find({o.variable, o.value});
    if (it == write_of.end()) {
      errs.push_back({ValidationKind::DanglingRead,
                      "no write of value " + std::to_string(o.value) + " to '" + ex.vars_[o.variable].name +
                          "' for " + ex.format_op(id)});
    } else {
      ex.read_source_[id] = it->second;
      ex.readers_[it->second].push_back(id);
    }
  }

  // Acquire/release alternation per (process, sync variable).
  std::map<std::pair<ProcessId, VarId>, std::vector<OpId>> acqs;  // acquires in program order
  for (std::size_t pi = 0; pi < ex.proc_ops_.size(); ++pi) {
    std::map<VarId, OpId> open;  // open acquire per sync var
    ProcessId pid = ex.pids_[pi];
    for (OpId id : ex.proc_ops_[pi]) {
      const Operation& o = ex.ops_[id];
      if (o.kind == OpKind::Acquire) {
        if (open.count(o.variable))
          errs.push_back({ValidationKind::SyncAlternationViolation,
                          "process " + std::to_string(pid) + " acquires '" + ex.vars_[o.variable].name +
                              "' twice without releasing"});
        else {
          open[o.variable] = id;
          acqs[{pid, o.variable}].push_back(id);
        }
      } else if (o.kind == OpKind::Release) {
        if (!open.count(o.variable))
          errs.push_back({ValidationKind::SyncAlternationViolation,
                          "process " + std::to_string(pid) + " releases '" + ex.vars_[o.variable].name +
                              "' without holding it"});
        else
          open.erase(o.variable);
      }
    }
    for (const auto& [v, acq] : open)
      errs.push_back({ValidationKind::SyncAlternationViolation,
                      "process " + std::to_string(pid) + " never releases '" + ex.vars_[v].name + "' after " +
                          ex.format_op(acq)});
  }

  // Match sync_acq_order against the acquires and build critical sections.
  std::map<VarId, std::vector<OpId>> acq_count_check;
  if (errs.empty()) {
    std::map<std::string, std::vector<ProcessId>> declared = raw.sync_acq_order;
    std::set<VarId> seen_sync;
    for (const auto& [key, vec] : acqs) seen_sync.insert(key.second);
    for (const auto& [name, order] : declared) seen_sync.insert(ex.var_index_.at(name));
    for (VarId s : seen_sync) {
      std::vector<ProcessId> order;
      if (auto it = declared.find(ex.vars_[s].name); it != declared.end()) order = it->second;
      // Per-process multiplicities must match the acquire counts exactly.
      std::map<ProcessId, std::size_t> want, have;
      for (const auto& [key, vec] : acqs)
        if (key.second == s) want[key.first] = vec.size();
      for (ProcessId p : order) ++have[p];
      if (want != have) {
        errs.push_back({ValidationKind::SyncOrderMismatch,
                        "syncorder for '" + ex.vars_[s].name + "' does not list exactly one entry per acquire"});
        continue;
      }
      std::map<ProcessId, std::size_t> next;
      std::vector<std::pair<OpId, OpId>> sections;
      for (ProcessId p : order) {
        OpId acq = acqs[{p, s}][next[p]++];
        // The matching release is the process's next sync op on s.
        OpId rel = kNoOp;
        auto mine = ex.process_ops(p);
        bool past = false;
        for (OpId id : mine) {
          if (id == acq) { past = true; continue; }
          if (past && ex.ops_[id].variable == s && ex.ops_[id].kind == OpKind::Release) { rel = id; break; }
        }
        sections.emplace_back(acq, rel);
      }
      ex.cs_[s] = std::move(sections);
      ex.acq_order_[s] = order;
    }
  }

  // Entry bindings.
  for (const auto& [sname, vnames] : raw.bindings) {
    VarId s = ex.var_index_.at(sname);
    for (const auto& vn : vnames) ex.bindings_[s].insert(ex.var_index_.at(vn));
  }

  // Existence of an interleaving in which every read follows its write:
  // process order together with writes-to and mutual exclusion edges must be
  // acyclic.
  if (errs.empty()) {
    std::vector<std::vector<OpId>> adj(ex.ops_.size());
    for (const auto& mine : ex.proc_ops_)
      for (std::size_t i = 1; i < mine.size(); ++i) adj[mine[i - 1]].push_back(mine[i]);
    for (OpId id = 0; id < ex.ops_.size(); ++id)
      if (ex.read_source_[id] != kNoOp) adj[ex.read_source_[id]].push_back(id);
    for (const auto& [s, sections] : ex.cs_) {
      (void)s;
      for (std::size_t i = 0; i < sections.size(); ++i) {
        adj[sections[i].first].push_back(sections[i].second);
        if (i + 1 < sections.size()) adj[sections[i].second].push_back(sections[i + 1].first);
      }
    }
    if (auto cyc = detail::find_cycle_in(adj)) {
      std::string msg = "no interleaving lets every read follow its write: cycle ";
      msg += ex.format_ops(*cyc);
      errs.push_back({ValidationKind::NoValidInterleaving, std::move(msg)});
    }
  }

  if (errs.empty()) res.execution = std::move(ex);
  return res;
}

inline bool Execution::operator==(const Execution& other) const {
  if (pids_ != other.pids_) return false;
  auto op_key = [](const Execution& e, OpId id) {
    const Operation& o = e.ops_[id];
    return std::make_tuple(o.kind, o.process, e.vars_[o.variable].name, o.value);
  };
  for (std::size_t i = 0; i < proc_ops_.size(); ++i) {
    if (proc_ops_[i].size() != other.proc_ops_[i].size()) return false;
    for (std::size_t j = 0; j < proc_ops_[i].size(); ++j)
      if (op_key(*this, proc_ops_[i][j]) != op_key(other, other.proc_ops_[i][j])) return false;
  }
  auto order_by_name = [](const Execution& e) {
    std::map<std::string, std::vector<ProcessId>> m;
    for (const auto& [s, ord] : e.acq_order_) m[e.vars_[s].name] = ord;
    return m;
  };
  if (order_by_name(*this) != order_by_name(other)) return false;
  auto binds_by_name = [](const Execution& e) {
    std::map<std::string, std::set<std::string>> m;
    for (const auto& [s, vs] : e.bindings_) {
      auto& dst = m[e.vars_[s].name];
      for (VarId v : vs) dst.insert(e.vars_[v].name);
      if (dst.empty()) m.erase(e.vars_[s].name);
    }
    return m;
  };
  return binds_by_name(*this) == binds_by_name(other);
}

// Convenience builder for fixtures and tests.
class TraceBuilder {
 public:
  TraceBuilder& process(ProcessId p) {
    raw_.processes.emplace_back(p, std::vector<RawOp>{});
    return *this;
  }
  TraceBuilder& w(std::string var, Value val) { return push({OpKind::Write, std::move(var), val}); }
  TraceBuilder& r(std::string var, Value val) { return push({OpKind::Read, std::move(var), val}); }
  TraceBuilder& acq(std::string s) { return push({OpKind::Acquire, std::move(s), 0}); }
  TraceBuilder& rel(std::string s) { return push({OpKind::Release, std::move(s), 0}); }
  TraceBuilder& syncorder(std::string s, std::vector<ProcessId> order) {
    raw_.sync_acq_order[std::move(s)] = std::move(order);
    return *this;
  }
  TraceBuilder& bind(std::string s, std::vector<std::string> vars) {
    raw_.bindings[std::move(s)] = std::move(vars);
    return *this;
  }
  const RawTrace& raw() const { return raw_; }
  Execution build() const {
    ValidationResult r = validate(raw_);
    if (!r.ok()) {
      std::string msg = "invalid trace:";
      for (const auto& e : r.errors) msg += " [" + std::string(validation_kind_name(e.kind)) + "] " + e.message;
      throw std::invalid_argument(msg);
    }
    return *std::move(r.execution);
  }

 private:
  TraceBuilder& push(RawOp op) {
    if (raw_.processes.empty()) throw std::logic_error("TraceBuilder: no process started");
    raw_.processes.back().second.push_back(std::move(op));
    return *this;
  }
  RawTrace raw_;
};

}  // namespace memcc
