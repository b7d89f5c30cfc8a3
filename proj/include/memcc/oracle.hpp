#pragma once

// Independent verification machinery: a brute-force permutation oracle, a
// deterministic random trace generator, the model-implication harness, an
// exact bit-assignment decision procedure for traces with at most two writes
// per variable, and the bounded reconstruction search for the appendix's
// "acyclic CO but not sequential" execution.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "memcc/core.hpp"
#include "memcc/linearize.hpp"
#include "memcc/models.hpp"
#include "memcc/orders.hpp"
#include "memcc/relation.hpp"

namespace memcc::oracle {

inline constexpr std::size_t kBruteForceMaxOps = 10;

enum class BruteStatus { Linearizable, NotLinearizable, TooLarge };

struct BruteResult {
  BruteStatus status;
  std::optional<Witness> witness;
  bool linearizable() const { return status == BruteStatus::Linearizable; }
};

namespace detail {

// Shared prefix-consistency rules for the permutation enumerators. Kept
// deliberately simple: the only pruning is that a prefix must itself be
// extendable into a consistent sequence respecting `rel`.
struct BruteState {
  const Execution& ex;
  const Relation* rel;
  std::vector<bool> placed;
  std::vector<OpId> last_write;         // per variable
  std::map<VarId, std::size_t> sync_at; // next expected index in canonical α|s
  std::vector<OpId> prefix;

  explicit BruteState(const Execution& e, const Relation* r)
      : ex(e), rel(r), placed(e.size(), false), last_write(e.var_count(), kNoOp) {}

  bool can_place(OpId o) const {
    if (rel)
      for (OpId u = 0; u < ex.size(); ++u)
        if (!placed[u] && u != o && rel->has(u, o)) return false;
    const Operation& op = ex.op(o);
    if (op.is_read()) return last_write[op.variable] == ex.read_source(o);
    if (op.is_sync()) {
      auto cs = ex.critical_sections(op.variable);
      auto it = sync_at.find(op.variable);
      std::size_t pos = it == sync_at.end() ? 0 : it->second;
      if (pos >= 2 * cs.size()) return false;
      OpId expect = (pos % 2 == 0) ? cs[pos / 2].first : cs[pos / 2].second;
      return o == expect;
    }
    return true;
  }

  void place(OpId o) {
    placed[o] = true;
    prefix.push_back(o);
    const Operation& op = ex.op(o);
    if (op.is_write()) last_write[op.variable] = o;
    if (op.is_sync()) ++sync_at[op.variable];
  }
  void unplace(OpId o, OpId prev_write) {
    placed[o] = false;
    prefix.pop_back();
    const Operation& op = ex.op(o);
    if (op.is_write()) last_write[op.variable] = prev_write;
    if (op.is_sync()) --sync_at[op.variable];
  }
};

inline bool brute_dfs(BruteState& st) {
  if (st.prefix.size() == st.ex.size()) return true;
  for (OpId o = 0; o < st.ex.size(); ++o) {
    if (st.placed[o] || !st.can_place(o)) continue;
    OpId prev = st.ex.op(o).is_write() ? st.last_write[st.ex.op(o).variable] : kNoOp;
    st.place(o);
    if (brute_dfs(st)) return true;
    st.unplace(o, prev);
  }
  return false;
}

}  // namespace detail

// Enumerates permutations in ascending op-id order with prefix-consistency
// pruning only; first consistent permutation containing `rel` wins. Shares
// no search code with the linearizer.
inline BruteResult brute_force_linearize(const Execution& ex, const Relation& rel) {
  if (ex.size() > kBruteForceMaxOps) return {BruteStatus::TooLarge, std::nullopt};
  detail::BruteState st(ex, &rel);
  if (detail::brute_dfs(st)) return {BruteStatus::Linearizable, Witness{st.prefix}};
  return {BruteStatus::NotLinearizable, std::nullopt};
}

// Enumerates every consistent extension of `rel` and feeds it to `fn`;
// returns false from `fn` to stop early.
inline void for_each_consistent_extension(const Execution& ex, const Relation& rel,
                                          const std::function<bool(std::span<const OpId>)>& fn) {
  if (ex.size() > kBruteForceMaxOps) throw std::invalid_argument("too large for exhaustive enumeration");
  detail::BruteState st(ex, &rel);
  bool stop = false;
  std::function<void()> rec = [&] {
    if (stop) return;
    if (st.prefix.size() == ex.size()) {
      if (!fn(st.prefix)) stop = true;
      return;
    }
    for (OpId o = 0; o < ex.size() && !stop; ++o) {
      if (st.placed[o] || !st.can_place(o)) continue;
      OpId prev = ex.op(o).is_write() ? st.last_write[ex.op(o).variable] : kNoOp;
      st.place(o);
      rec();
      st.unplace(o, prev);
    }
  };
  rec();
}

// ---------------------------------------------------------------------------
// Random execution generator. The emission order itself is an interleaving
// in which every read follows its write, so generated traces are valid by
// construction; writes take globally fresh values per variable.

struct GeneratorParams {
  std::uint32_t procs = 2;
  std::uint32_t vars = 2;
  std::uint32_t ops = 6;  // total operation count, sync included
  double read_ratio = 0.5;
  std::uint32_t sync_vars = 0;
  double sync_block_prob = 0.2;
  std::uint64_t seed = 1;
};

inline Execution generate(const GeneratorParams& p) {
  if (p.ops > 0 && p.vars == 0) throw std::invalid_argument("generate: ops requested with no variables");
  if (p.ops > 0 && p.procs == 0) throw std::invalid_argument("generate: ops requested with no processes");
  std::mt19937_64 rng(p.seed);
  auto rand_below = [&rng](std::uint32_t n) { return static_cast<std::uint32_t>(rng() % n); };

  RawTrace raw;
  std::map<ProcessId, std::vector<RawOp>> procs;
  for (std::uint32_t i = 0; i < p.procs; ++i) procs[i + 1] = {};
  auto var_name = [](std::uint32_t i) { return "v" + std::to_string(i + 1); };
  auto sync_name = [](std::uint32_t i) { return "s" + std::to_string(i + 1); };
  std::vector<Value> next_val(p.vars, 1);
  std::vector<std::vector<Value>> emitted(p.vars);  // values already written, per var
  std::map<std::string, std::vector<ProcessId>> order;

  std::uint32_t emitted_ops = 0;
  while (emitted_ops < p.ops) {
    ProcessId pid = 1 + rand_below(p.procs);
    std::uint32_t remaining = p.ops - emitted_ops;
    bool do_sync = p.sync_vars > 0 && remaining >= 2 &&
                   std::uniform_real_distribution<>(0, 1)(rng) < p.sync_block_prob;
    if (do_sync) {
      std::string s = sync_name(rand_below(p.sync_vars));
      procs[pid].push_back({OpKind::Acquire, s, 0});
      order[s].push_back(pid);
      emitted_ops += 2;
      std::uint32_t inner = remaining >= 4 ? rand_below(2) : 0;
      for (std::uint32_t k = 0; k < inner; ++k, ++emitted_ops) {
        // ordinary op inside the critical section
        std::uint32_t v = rand_below(p.vars);
        bool read = !emitted[v].empty() && std::uniform_real_distribution<>(0, 1)(rng) < p.read_ratio;
        if (read)
          procs[pid].push_back({OpKind::Read, var_name(v), emitted[v][rand_below(static_cast<std::uint32_t>(emitted[v].size()))]});
        else {
          Value val = next_val[v]++;
          emitted[v].push_back(val);
          procs[pid].push_back({OpKind::Write, var_name(v), val});
        }
      }
      procs[pid].push_back({OpKind::Release, s, 0});
      continue;
    }
    std::uint32_t v = rand_below(p.vars);
    bool read = std::uniform_real_distribution<>(0, 1)(rng) < p.read_ratio;
    if (read) {
      // a read needs some already-written value; fall back to a write
      std::vector<std::uint32_t> candidates;
      for (std::uint32_t i = 0; i < p.vars; ++i)
        if (!emitted[i].empty()) candidates.push_back(i);
      if (!candidates.empty()) {
        std::uint32_t rv = candidates[rand_below(static_cast<std::uint32_t>(candidates.size()))];
        procs[pid].push_back({OpKind::Read, var_name(rv), emitted[rv][rand_below(static_cast<std::uint32_t>(emitted[rv].size()))]});
        ++emitted_ops;
        continue;
      }
    }
    Value val = next_val[v]++;
    emitted[v].push_back(val);
    procs[pid].push_back({OpKind::Write, var_name(v), val});
    ++emitted_ops;
  }

  for (auto& [pid, ops] : procs)
    if (!ops.empty()) raw.processes.emplace_back(pid, std::move(ops));
  raw.sync_acq_order = std::move(order);
  ValidationResult r = validate(raw);
  if (!r.ok()) throw std::logic_error("generator produced an invalid trace");
  return *std::move(r.execution);
}

// ---------------------------------------------------------------------------
// Implication matrix.

struct Violation {
  std::string trace;
  std::string message;
};

inline void append_implication_violations(const std::string& name, const Classification& c,
                                          std::vector<Violation>& out) {
  auto holds = [&](ModelId m) { return c.of(m).holds; };
  auto imply = [&](ModelId a, ModelId b) {
    if (holds(a) == Holds::Yes && holds(b) == Holds::No)
      out.push_back({name, std::string(model_name(a)) + " holds but " + std::string(model_name(b)) + " fails"});
  };
  imply(ModelId::Sequential, ModelId::Causal);
  imply(ModelId::Sequential, ModelId::Pram);
  imply(ModelId::Sequential, ModelId::Cache);
  imply(ModelId::Sequential, ModelId::Processor);
  imply(ModelId::Sequential, ModelId::Slow);
  imply(ModelId::Causal, ModelId::Pram);
  imply(ModelId::Processor, ModelId::Pram);
  imply(ModelId::Processor, ModelId::Cache);
  imply(ModelId::Pram, ModelId::Slow);
  imply(ModelId::Cache, ModelId::Slow);
}

inline std::vector<Violation> check_implication_matrix(
    const std::vector<std::pair<std::string, Classification>>& classified) {
  std::vector<Violation> out;
  for (const auto& [name, c] : classified) append_implication_violations(name, c, out);
  return out;
}

inline std::vector<Violation> check_implication_matrix(const std::vector<Execution>& execs,
                                                       const CheckOptions& opts = {}) {
  std::vector<std::pair<std::string, Classification>> cs;
  for (std::size_t i = 0; i < execs.size(); ++i)
    cs.emplace_back("exec#" + std::to_string(i), classify(execs[i], opts));
  return check_implication_matrix(cs);
}

// ---------------------------------------------------------------------------
// Exact decision procedure for executions whose ordinary variables carry at
// most two writes each. For such traces a consistent extension exists iff
// some orientation of every two-write pair admits a topological order once
// the read windows are protected, which turns every model check into at most
// 2^k cycle tests. Used to cross-check the search-based linearizer.

namespace bitwise {

inline bool supported(const Execution& ex) {
  for (VarId v : ex.ordinary_vars())
    if (ex.writes_on(v).size() > 2) return false;
  return true;
}

namespace detail {

struct PairTable {
  std::vector<std::pair<OpId, OpId>> pairs;  // two-write variables
};

inline PairTable pair_table(const Execution& ex) {
  PairTable t;
  for (VarId v : ex.ordinary_vars()) {
    auto ws = ex.writes_on(v);
    if (ws.size() == 2) t.pairs.emplace_back(ws[0], ws[1]);
  }
  if (t.pairs.size() >= 24) throw std::invalid_argument("bitwise oracle: too many two-write variables");
  return t;
}

// rel + writes-to + ME + the pair orientations + read-window edges, acyclic?
inline bool orientation_acyclic(const Execution& ex, const Relation& rel, const PairTable& t,
                                std::uint32_t bits) {
  std::vector<std::vector<OpId>> adj(ex.size());
  for (const auto& [a, b] : rel.edges()) adj[a].push_back(b);
  for (OpId o = 0; o < ex.size(); ++o)
    if (ex.op(o).is_read()) adj[ex.read_source(o)].push_back(o);
  for (VarId s : ex.sync_vars()) {
    std::vector<OpId> chain;
    for (const auto& [acq, rl] : ex.critical_sections(s)) {
      chain.push_back(acq);
      chain.push_back(rl);
    }
    for (std::size_t i = 1; i < chain.size(); ++i) adj[chain[i - 1]].push_back(chain[i]);
  }
  std::map<VarId, std::pair<OpId, OpId>> oriented;  // var -> (first, second)
  for (std::size_t k = 0; k < t.pairs.size(); ++k) {
    auto [a, b] = t.pairs[k];
    OpId first = (bits >> k) & 1 ? b : a;
    OpId second = (bits >> k) & 1 ? a : b;
    adj[first].push_back(second);
    oriented[ex.op(a).variable] = {first, second};
  }
  for (OpId r = 0; r < ex.size(); ++r) {
    if (!ex.op(r).is_read()) continue;
    auto it = oriented.find(ex.op(r).variable);
    if (it == oriented.end()) continue;
    auto [first, second] = it->second;
    // the non-source write must not land inside the (source, read) window
    if (ex.read_source(r) == first) adj[r].push_back(second);
    else if (ex.read_source(r) != second) return false;  // source not among the pair: impossible
  }
  return !memcc::detail::find_cycle_in(adj).has_value();
}

}  // namespace detail

// Exact: does rel have a consistent linear extension?
inline bool linearizable(const Execution& ex, const Relation& rel) {
  if (!supported(ex)) throw std::invalid_argument("bitwise oracle requires <=2 writes per variable");
  auto t = detail::pair_table(ex);
  for (std::uint32_t bits = 0; bits < (1u << t.pairs.size()); ++bits)
    if (detail::orientation_acyclic(ex, rel, t, bits)) return true;
  return false;
}

inline bool sequential(const Execution& ex) { return linearizable(ex, process_order(ex)); }

inline bool causal(const Execution& ex) {
  const Relation& cr = causal_relation(ex);
  for (ProcessId i : ex.process_ids())
    if (!linearizable(ex, filter(ex, cr, FilterSpec::process(i) | FilterSpec::writes()))) return false;
  return true;
}

inline bool pram(const Execution& ex) {
  const Relation& po = process_order(ex);
  for (ProcessId i : ex.process_ids())
    if (!linearizable(ex, filter(ex, po, FilterSpec::process(i) | FilterSpec::writes()))) return false;
  return true;
}

inline bool cache(const Execution& ex) {
  const Relation& po = process_order(ex);
  for (VarId v : ex.ordinary_vars())
    if (!linearizable(ex, filter(ex, po, FilterSpec::variable(v)))) return false;
  return true;
}

// Processor demands one orientation shared by every per-process view.
inline bool processor(const Execution& ex) {
  if (!supported(ex)) throw std::invalid_argument("bitwise oracle requires <=2 writes per variable");
  auto t = detail::pair_table(ex);
  const Relation& po = process_order(ex);
  std::vector<Relation> views;
  for (ProcessId i : ex.process_ids())
    views.push_back(filter(ex, po, FilterSpec::process(i) | FilterSpec::writes()));
  for (std::uint32_t bits = 0; bits < (1u << t.pairs.size()); ++bits) {
    bool all = true;
    for (const Relation& view : views)
      if (!detail::orientation_acyclic(ex, view, t, bits)) { all = false; break; }
    if (all) return true;
  }
  return views.empty();
}

}  // namespace bitwise

namespace detail {
// One signature per consistent extension of the view: the tuple of
// per-variable write projections, which is exactly what agreement compares.
inline std::vector<std::set<std::string>> processor_view_signatures(const Execution& ex) {
  const Relation& po = process_order(ex);
  std::vector<std::set<std::string>> signatures;
  for (ProcessId i : ex.process_ids()) {
    Relation view = filter(ex, po, FilterSpec::process(i) | FilterSpec::writes());
    std::set<std::string> sigs;
    for_each_consistent_extension(ex, view, [&](std::span<const OpId> seq) {
      std::string sig;
      for (VarId v : ex.ordinary_vars()) {
        sig += ex.var(v).name + ":";
        for (OpId o : seq)
          if (ex.op(o).is_write() && ex.op(o).variable == v) sig += ex.format_op(o), sig += ';';
        sig += '|';
      }
      sigs.insert(sig);
      return true;
    });
    signatures.push_back(std::move(sigs));
  }
  return signatures;
}
}  // namespace detail

// Existential form used by the implementation: one extension per process,
// all agreeing on every variable's write order; equivalently a signature
// common to every view.
inline bool global_processor(const Execution& ex) {
  if (ex.size() > kBruteForceMaxOps) throw std::invalid_argument("too large for global oracle");
  auto signatures = detail::processor_view_signatures(ex);
  if (signatures.empty()) return true;
  for (const std::string& sig : signatures[0]) {
    bool everywhere = true;
    for (std::size_t i = 1; i < signatures.size() && everywhere; ++i)
      if (!signatures[i].count(sig)) everywhere = false;
    if (everywhere) return true;
  }
  return false;
}

// Pairwise form of the Processor definition, by exhaustive enumeration: for
// every pair of processes some pair of view extensions agrees on the write
// order of every variable. Used to test equivalence with the implementation.
inline bool pairwise_processor(const Execution& ex) {
  if (ex.size() > kBruteForceMaxOps) throw std::invalid_argument("too large for pairwise oracle");
  auto signatures = detail::processor_view_signatures(ex);
  // ∀i,j includes i = j: every view needs at least one extension
  for (const auto& sigs : signatures)
    if (sigs.empty()) return false;
  for (std::size_t a = 0; a < signatures.size(); ++a)
    for (std::size_t b = a + 1; b < signatures.size(); ++b) {
      bool agree = false;
      for (const auto& s : signatures[a])
        if (signatures[b].count(s)) { agree = true; break; }
      if (!agree) return false;
    }
  return true;
}

}  // namespace memcc::oracle
