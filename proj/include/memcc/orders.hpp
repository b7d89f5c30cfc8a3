#pragma once

// The named orders of an execution: writes-to, process order (strict and
// lazy), causal relation, mutual exclusion order, and the synchronization
// order induced by per-model D-sets.

#include <functional>
#include <stdexcept>

#include "memcc/core.hpp"
#include "memcc/relation.hpp"

namespace memcc {

// w(.,v,a) -> r(.,v,a) for every read, plus rel(i,s) -> acq(j,s) for each
// consecutive pair of critical sections on s.
inline const Relation& writes_to(const Execution& ex) {
  return cached_relation(ex, "wt", [&] {
    Relation rel = empty_relation(ex);
    for (OpId id = 0; id < ex.size(); ++id)
      if (ex.op(id).is_read()) rel.add(ex.read_source(id), id);
    for (VarId s : ex.sync_vars()) {
      auto cs = ex.critical_sections(s);
      for (std::size_t i = 0; i + 1 < cs.size(); ++i) rel.add(cs[i].second, cs[i + 1].first);
    }
    return rel;
  });
}

// o1 < o2 iff same process and o1 earlier; transitive by construction.
inline const Relation& process_order(const Execution& ex) {
  return cached_relation(ex, "po", [&] {
    Relation rel = empty_relation(ex);
    for (ProcessId p : ex.process_ids()) {
      auto ops = ex.process_ops(p);
      for (std::size_t i = 0; i < ops.size(); ++i)
        for (std::size_t j = i + 1; j < ops.size(); ++j) rel.add(ops[i], ops[j]);
    }
    return rel;
  });
}

// Keeps (o1,o2) from process order iff o1 is a read or both touch the same
// variable. The set is pointwise, not re-closed.
inline const Relation& lazy_process_order(const Execution& ex) {
  return cached_relation(ex, "lpo", [&] {
    Relation rel = empty_relation(ex);
    const Relation& po = process_order(ex);
    for (OpId a = 0; a < ex.size(); ++a)
      for (OpId b = 0; b < ex.size(); ++b)
        if (po.has(a, b) && (ex.op(a).is_read() || ex.op(a).variable == ex.op(b).variable)) rel.add(a, b);
    return rel;
  });
}

enum class POMode { Strict, Lazy };

inline const Relation& program_order(const Execution& ex, POMode mode) {
  return mode == POMode::Strict ? process_order(ex) : lazy_process_order(ex);
}

// (writes_to ∪ process_order)^*; acyclic for any valid execution. A cycle
// here means an invalid execution slipped through validation.
inline const Relation& causal_relation(const Execution& ex, POMode mode = POMode::Strict) {
  const char* key = mode == POMode::Strict ? "cr" : "lcr";
  return cached_relation(ex, key, [&] {
    Relation rel = writes_to(ex).union_with(program_order(ex, mode)).transitive_closure();
    if (auto cyc = rel.find_cycle())
      throw std::logic_error("cyclic causality in a validated execution: " + ex.format_ops(*cyc));
    return rel;
  });
}

// Per sync variable: the total order over its acquire/release operations that
// the acquisition order fixes, transitively closed.
inline const Relation& mutual_exclusion_order(const Execution& ex) {
  return cached_relation(ex, "me", [&] {
    Relation rel = empty_relation(ex);
    for (VarId s : ex.sync_vars()) {
      std::vector<OpId> chain;
      for (const auto& [acq, rl] : ex.critical_sections(s)) {
        chain.push_back(acq);
        chain.push_back(rl);
      }
      for (std::size_t i = 0; i < chain.size(); ++i)
        for (std::size_t j = i + 1; j < chain.size(); ++j) rel.add(chain[i], chain[j]);
    }
    return rel;
  });
}

// D-set rule: ordinary accesses a synchronization action intends to precede
// (D-) or follow (D+) it.
using DSpec = std::function<std::vector<OpId>(const Execution&, OpId sync_op)>;

namespace dsets {

inline std::vector<OpId> po_predecessors(const Execution& ex, OpId o, POMode mode) {
  std::vector<OpId> out;
  const Relation& po = program_order(ex, mode);
  for (OpId e = 0; e < ex.size(); ++e)
    if (ex.op(e).is_ordinary() && po.has(e, o)) out.push_back(e);
  return out;
}

inline std::vector<OpId> po_successors(const Execution& ex, OpId o, POMode mode) {
  std::vector<OpId> out;
  const Relation& po = program_order(ex, mode);
  for (OpId e = 0; e < ex.size(); ++e)
    if (ex.op(e).is_ordinary() && po.has(o, e)) out.push_back(e);
  return out;
}

// Release that writes-to the given acquire: the previous critical section's
// release on the same variable, if any.
inline std::optional<OpId> sourcing_release(const Execution& ex, OpId acq) {
  VarId s = ex.op(acq).variable;
  auto cs = ex.critical_sections(s);
  for (std::size_t i = 0; i < cs.size(); ++i)
    if (cs[i].first == acq) return i == 0 ? std::nullopt : std::optional<OpId>(cs[i - 1].second);
  return std::nullopt;
}

inline DSpec weak_minus(POMode mode) {
  return [mode](const Execution& ex, OpId o) { return po_predecessors(ex, o, mode); };
}
inline DSpec weak_plus(POMode mode) {
  return [mode](const Execution& ex, OpId o) { return po_successors(ex, o, mode); };
}

inline DSpec release_minus(POMode mode) {
  return [mode](const Execution& ex, OpId o) {
    if (ex.op(o).kind != OpKind::Release) return std::vector<OpId>{};
    return po_predecessors(ex, o, mode);
  };
}
inline DSpec release_plus(POMode mode) {
  return [mode](const Execution& ex, OpId o) {
    if (ex.op(o).kind != OpKind::Acquire) return std::vector<OpId>{};
    return po_successors(ex, o, mode);
  };
}

inline DSpec lazy_release_minus(POMode mode) {
  return [mode](const Execution& ex, OpId o) {
    if (ex.op(o).kind != OpKind::Acquire) return std::vector<OpId>{};
    auto rel = sourcing_release(ex, o);
    if (!rel) return std::vector<OpId>{};
    return po_predecessors(ex, *rel, mode);
  };
}

inline DSpec entry_minus(POMode mode) {
  return [mode](const Execution& ex, OpId o) {
    if (ex.op(o).kind != OpKind::Acquire) return std::vector<OpId>{};
    auto rel = sourcing_release(ex, o);
    if (!rel) return std::vector<OpId>{};
    const auto& dep = ex.bindings(ex.op(o).variable);
    std::vector<OpId> out;
    for (OpId e : po_predecessors(ex, *rel, mode))
      if (dep.count(ex.op(e).variable)) out.push_back(e);
    return out;
  };
}
inline DSpec entry_plus(POMode mode) {
  return [mode](const Execution& ex, OpId o) {
    if (ex.op(o).kind != OpKind::Acquire) return std::vector<OpId>{};
    const auto& dep = ex.bindings(ex.op(o).variable);
    std::vector<OpId> out;
    for (OpId e : po_successors(ex, o, mode))
      if (dep.count(ex.op(e).variable)) out.push_back(e);
    return out;
  };
}

}  // namespace dsets

// a < b iff a <ME b, or a ∈ D-(b), or b ∈ D+(a). The chained-ME clause of
// the definition is absorbed by the transitive closure of ME. The result is
// the plain union; callers close after combining with other relations.
inline Relation sync_order(const Execution& ex, const DSpec& dminus, const DSpec& dplus) {
  Relation rel = mutual_exclusion_order(ex);
  for (OpId o = 0; o < ex.size(); ++o) {
    if (!ex.op(o).is_sync()) continue;
    for (OpId e : dminus(ex, o)) rel.add(e, o);
    for (OpId e : dplus(ex, o)) rel.add(o, e);
  }
  return rel;
}

}  // namespace memcc
