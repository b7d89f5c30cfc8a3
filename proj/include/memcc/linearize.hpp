#pragma once

// Consistent linearization: decide whether a relation over an execution has
// a consistent linear extension, produce a witness when it does, and refute
// with a CO cycle when the closure machinery finds one.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "memcc/core.hpp"
#include "memcc/orders.hpp"
#include "memcc/relation.hpp"

namespace memcc {

struct Witness {
  std::vector<OpId> order;
};

// True iff every read is preceded by its matching write with no other write
// to the same variable strictly between them, and the subsequence on each
// sync variable matches the acquire/release alternation the acquisition
// order fixes. `seq` must be a permutation of all operations.
inline bool is_consistent_sequence(const Execution& ex, const Witness& seq) {
  if (seq.order.size() != ex.size()) return false;
  std::vector<bool> seen(ex.size(), false);
  std::vector<OpId> last_write(ex.var_count(), kNoOp);
  std::map<VarId, std::size_t> sync_pos;
  for (OpId id : seq.order) {
    if (id >= ex.size() || seen[id]) return false;
    seen[id] = true;
    const Operation& o = ex.op(id);
    switch (o.kind) {
      case OpKind::Write:
        last_write[o.variable] = id;
        break;
      case OpKind::Read:
        if (last_write[o.variable] != ex.read_source(id)) return false;
        break;
      case OpKind::Acquire:
      case OpKind::Release: {
        auto cs = ex.critical_sections(o.variable);
        std::size_t& pos = sync_pos[o.variable];
        if (pos >= 2 * cs.size()) return false;
        OpId expect = (pos % 2 == 0) ? cs[pos / 2].first : cs[pos / 2].second;
        if (id != expect) return false;
        ++pos;
        break;
      }
    }
  }
  return true;
}

// Consistency of a partial sequence over a subset of the operations (the
// boxed sub-diagrams and their extensions). Ordinary operations only.
inline bool consistent_fragment(const Execution& ex, std::span<const OpId> seq) {
  std::vector<OpId> last_write(ex.var_count(), kNoOp);
  std::vector<bool> seen(ex.size(), false);
  for (OpId id : seq) {
    if (id >= ex.size() || seen[id]) return false;
    seen[id] = true;
    const Operation& o = ex.op(id);
    if (o.is_sync()) throw std::invalid_argument("consistent_fragment: ordinary operations only");
    if (o.is_write()) {
      last_write[o.variable] = id;
    } else {
      if (last_write[o.variable] != ex.read_source(id)) return false;
    }
  }
  return true;
}

// Does the total order of `seq` contain every edge of `rel`? Edges whose
// endpoints are missing from `seq` fail the check.
inline bool sequence_contains(std::span<const OpId> seq, const Relation& rel) {
  std::vector<std::uint32_t> pos(rel.size(), static_cast<std::uint32_t>(-1));
  for (std::uint32_t i = 0; i < seq.size(); ++i) pos[seq[i]] = i;
  for (const auto& [a, b] : rel.edges()) {
    if (pos[a] == static_cast<std::uint32_t>(-1) || pos[b] == static_cast<std::uint32_t>(-1)) return false;
    if (pos[a] >= pos[b]) return false;
  }
  return true;
}

inline Relation order_of(const Execution& ex, std::span<const OpId> seq) {
  Relation rel = empty_relation(ex);
  for (std::size_t i = 0; i < seq.size(); ++i)
    for (std::size_t j = i + 1; j < seq.size(); ++j) rel.add(seq[i], seq[j]);
  return rel;
}

// ---------------------------------------------------------------------------
// CO extension machinery.
//
// For a write-read pair w ↦ r on v and a distinct write w' on v:
//   WW:  w' -> w   whenever w' ⇝ r   (w' cannot sit between the pair)
//   RW:  r  -> w'  whenever w  ⇝ w'
// Dependencies are read off the relation exactly as given; co_step then
// closes the union, and co_fixpoint iterates to the limit.

struct CoDependency {
  OpId from;
  OpId to;
  bool is_ww;  // false: RW
};

inline std::vector<CoDependency> co_dependencies(const Execution& ex, const Relation& rel) {
  std::vector<CoDependency> out;
  for (OpId r = 0; r < ex.size(); ++r) {
    if (!ex.op(r).is_read()) continue;
    OpId w = ex.read_source(r);
    for (OpId w2 : ex.writes_on(ex.op(r).variable)) {
      if (w2 == w) continue;
      if (rel.has(w2, r) && !rel.has(w2, w)) out.push_back({w2, w, true});
      if (rel.has(w, w2) && !rel.has(r, w2)) out.push_back({r, w2, false});
    }
  }
  return out;
}

inline Relation co_step(const Execution& ex, const Relation& rel) {
  Relation out = rel;
  for (const CoDependency& d : co_dependencies(ex, rel)) out.add(d.from, d.to);
  return out.transitive_closure();
}

// Fixpoint plus the un-closed edge set it grew from, for readable cycles.
struct CoClosure {
  Relation fixpoint;
  Relation base;  // rel ∪ all discovered dependencies, not closed
  std::vector<CoDependency> first_round;
  std::optional<std::vector<OpId>> cycle;
};

// With stop_on_cycle the iteration ends at the first round whose dependency
// set closes a cycle, so the reported cycle is the earliest forced one; the
// fixpoint field is then only grown up to that round.
inline CoClosure co_closure(const Execution& ex, const Relation& rel, bool stop_on_cycle = false) {
  CoClosure out{rel, rel, co_dependencies(ex, rel), std::nullopt};
  Relation cur = rel;
  std::vector<CoDependency> deps = out.first_round;
  if (stop_on_cycle) out.cycle = out.base.find_cycle();
  while (!deps.empty() && !out.cycle) {
    for (const CoDependency& d : deps) {
      out.base.add(d.from, d.to);
      cur.add(d.from, d.to);
    }
    if (stop_on_cycle && (out.cycle = out.base.find_cycle())) break;
    cur = cur.transitive_closure();
    deps = co_dependencies(ex, cur);
  }
  out.fixpoint = cur.transitive_closure();
  if (!stop_on_cycle) out.cycle = out.base.find_cycle();
  return out;
}

inline Relation co_fixpoint(const Execution& ex, const Relation& rel) {
  return co_closure(ex, rel).fixpoint;
}

struct CoPrecheckResult {
  bool acyclic;
  std::vector<OpId> cycle;  // from the un-closed dependency graph
};

// Necessary-condition test: acyclicity of CO(rel ∪ writes-to ∪ ME). Acyclic
// does not imply linearizable; callers still search.
inline CoPrecheckResult co_precheck(const Execution& ex, const Relation& rel) {
  Relation seed = rel.union_with(writes_to(ex));
  if (ex.has_sync_ops()) seed = seed.union_with(mutual_exclusion_order(ex));
  CoClosure c = co_closure(ex, seed, /*stop_on_cycle=*/true);
  if (c.cycle) return {false, *c.cycle};
  return {true, {}};
}

// ---------------------------------------------------------------------------
// linearize

enum class LinearizeStatus { Linearizable, COCycle, SearchExhausted, Budget };

struct LinearizeResult {
  LinearizeStatus status;
  std::optional<Witness> witness;
  std::vector<OpId> cycle;
  std::uint64_t expansions = 0;

  bool linearizable() const { return status == LinearizeStatus::Linearizable; }
};

struct LinearizeOptions {
  std::uint64_t budget = 10'000'000;
};

namespace detail {

class LinearizeSearch {
 public:
  LinearizeSearch(const Execution& ex, const Relation& co, std::uint64_t budget)
      : ex_(ex), co_(co), budget_(budget), n_(static_cast<std::uint32_t>(ex.size())) {
    pred_mask_.assign(static_cast<std::size_t>(n_) * co.words() + 1, 0);
    for (OpId b = 0; b < n_; ++b)
      for (OpId a = 0; a < n_; ++a)
        if (co.has(a, b)) pred_mask_[static_cast<std::size_t>(b) * co.words() + (a >> 6)] |= std::uint64_t{1} << (a & 63);
    placed_bits_.assign(co.words() + 1, 0);
    last_write_.assign(ex.var_count(), kNoOp);
    pending_.assign(n_, 0);
    open_writes_.assign(ex.var_count(), 0);
    order_.reserve(n_);
  }

  LinearizeResult run() {
    if (dfs()) return {LinearizeStatus::Linearizable, Witness{order_}, {}, expansions_};
    if (blown_) return {LinearizeStatus::Budget, std::nullopt, {}, expansions_};
    return {LinearizeStatus::SearchExhausted, std::nullopt, {}, expansions_};
  }

 private:
  bool ready(OpId o) const {
    const std::uint64_t* pm = pred_mask_.data() + static_cast<std::size_t>(o) * co_.words();
    for (std::uint32_t w = 0; w < co_.words(); ++w)
      if ((pm[w] & ~placed_bits_[w]) != 0) return false;
    return true;
  }

  bool placeable(OpId o) const {
    const Operation& op = ex_.op(o);
    // Never put a write between a placed write and a read still bound to it.
    if (op.is_write()) return open_writes_[op.variable] == 0;
    if (op.is_read()) return last_write_[op.variable] == ex_.read_source(o);
    return true;  // sync order is carried by the co relation (ME seeded)
  }

  bool dfs() {
    if (order_.size() == n_) return true;
    // A placeable read or sync operation can be exchanged to the front of
    // any completion (no unplaced op precedes it in co, no same-variable
    // write may sit before it), so the smallest such op is a forced move.
    for (OpId o = 0; o < n_; ++o) {
      if (placed_bits_[o >> 6] & (std::uint64_t{1} << (o & 63))) continue;
      if (ex_.op(o).is_write()) continue;
      if (!ready(o) || !placeable(o)) continue;
      if (++expansions_ > budget_) { blown_ = true; return false; }
      Undo u = place(o);
      if (dfs()) return true;
      unplace(o, u);
      return false;
    }
    for (OpId o = 0; o < n_; ++o) {
      if (placed_bits_[o >> 6] & (std::uint64_t{1} << (o & 63))) continue;
      if (!ex_.op(o).is_write()) continue;
      if (!ready(o) || !placeable(o)) continue;
      if (++expansions_ > budget_) { blown_ = true; return false; }
      Undo u = place(o);
      if (dfs()) return true;
      unplace(o, u);
      if (blown_) return false;
    }
    return false;
  }

  struct Undo {
    OpId prev_last = kNoOp;
    bool opened = false;
    OpId source = kNoOp;
    bool reopened_source = false;
  };

  Undo place(OpId o) {
    Undo u;
    const Operation& op = ex_.op(o);
    placed_bits_[o >> 6] |= std::uint64_t{1} << (o & 63);
    order_.push_back(o);
    if (op.is_write()) {
      u.prev_last = last_write_[op.variable];
      last_write_[op.variable] = o;
      std::uint32_t unread = 0;
      for (OpId r : ex_.reads_of(o))
        if (!(placed_bits_[r >> 6] & (std::uint64_t{1} << (r & 63)))) ++unread;
      pending_[o] = unread;
      if (unread > 0) {
        ++open_writes_[op.variable];
        u.opened = true;
      }
    } else if (op.is_read()) {
      u.source = ex_.read_source(o);
      if (--pending_[u.source] == 0) {
        --open_writes_[op.variable];
        u.reopened_source = true;
      }
    }
    return u;
  }

  void unplace(OpId o, const Undo& u) {
    const Operation& op = ex_.op(o);
    placed_bits_[o >> 6] &= ~(std::uint64_t{1} << (o & 63));
    order_.pop_back();
    if (op.is_write()) {
      last_write_[op.variable] = u.prev_last;
      if (u.opened) --open_writes_[op.variable];
      pending_[o] = 0;
    } else if (op.is_read()) {
      if (u.reopened_source) ++open_writes_[op.variable];
      ++pending_[u.source];
    }
  }

  const Execution& ex_;
  const Relation& co_;
  std::uint64_t budget_;
  std::uint32_t n_;
  std::vector<std::uint64_t> pred_mask_;
  std::vector<std::uint64_t> placed_bits_;
  std::vector<OpId> last_write_;     // per variable
  std::vector<std::uint32_t> pending_;  // per write: unplaced bound reads
  std::vector<std::uint32_t> open_writes_;  // per variable: placed writes with pending reads
  std::vector<OpId> order_;
  std::uint64_t expansions_ = 0;
  bool blown_ = false;
};

}  // namespace detail

// Search for a consistent total sequence of all operations containing `rel`.
// The relation is seeded with writes-to (every consistent sequence contains
// it) and, when sync operations exist, with the mutual exclusion order; the
// CO fixpoint of the seed prunes the search and refutes outright when cyclic.
// Candidates are tried in ascending op id, so witnesses are deterministic.
inline LinearizeResult linearize(const Execution& ex, const Relation& rel, LinearizeOptions opts = {}) {
  if (rel.size() != ex.size()) throw std::invalid_argument("linearize: relation universe mismatch");
  Relation seed = rel.union_with(writes_to(ex));
  if (ex.has_sync_ops()) seed = seed.union_with(mutual_exclusion_order(ex));
  CoClosure co = co_closure(ex, seed, /*stop_on_cycle=*/true);
  if (co.cycle)
    return {LinearizeStatus::COCycle, std::nullopt, *co.cycle, 0};
  detail::LinearizeSearch search(ex, co.fixpoint, opts.budget);
  return search.run();
}

}  // namespace memcc
