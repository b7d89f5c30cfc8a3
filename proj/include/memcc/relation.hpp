#pragma once

// Binary relations over operation ids, kept as bit matrices. Traces are
// desk-scale, so explicit edge sets with on-demand closure beat anything
// clever here.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "memcc/core.hpp"

namespace memcc {

class Relation {
 public:
  Relation() : n_(0), words_(0) {}
  explicit Relation(std::uint32_t n)
      : n_(n), words_((n + 63) / 64), row_(static_cast<std::size_t>(n) * words_, 0), universe_(words_, 0) {
    for (std::uint32_t i = 0; i < n_; ++i) set_bit(universe_.data(), i);
  }

  std::uint32_t size() const { return n_; }

  bool has(OpId a, OpId b) const { return get_bit(row(a), b); }
  void add(OpId a, OpId b) { set_bit(row(a), b); }
  void remove(OpId a, OpId b) { clear_bit(row(a), b); }

  bool in_universe(OpId a) const { return get_bit(universe_.data(), a); }
  void set_universe(const std::vector<bool>& members) {
    std::fill(universe_.begin(), universe_.end(), 0);
    for (std::uint32_t i = 0; i < n_ && i < members.size(); ++i)
      if (members[i]) set_bit(universe_.data(), i);
  }
  std::vector<OpId> universe() const {
    std::vector<OpId> out;
    for (std::uint32_t i = 0; i < n_; ++i)
      if (in_universe(i)) out.push_back(i);
    return out;
  }

  std::size_t edge_count() const {
    std::size_t c = 0;
    for (std::uint64_t w : row_) c += static_cast<std::size_t>(__builtin_popcountll(w));
    return c;
  }
  std::vector<std::pair<OpId, OpId>> edges() const {
    std::vector<std::pair<OpId, OpId>> out;
    for (std::uint32_t a = 0; a < n_; ++a)
      for (std::uint32_t b = 0; b < n_; ++b)
        if (has(a, b)) out.emplace_back(a, b);
    return out;
  }

  bool contains(const Relation& sub) const {
    if (sub.n_ != n_) return false;
    for (std::size_t i = 0; i < row_.size(); ++i)
      if ((sub.row_[i] & ~row_[i]) != 0) return false;
    return true;
  }
  bool operator==(const Relation& o) const { return n_ == o.n_ && row_ == o.row_; }

  Relation union_with(const Relation& o) const {
    require_same(o);
    Relation out = *this;
    for (std::size_t i = 0; i < row_.size(); ++i) out.row_[i] |= o.row_[i];
    for (std::size_t i = 0; i < universe_.size(); ++i) out.universe_[i] |= o.universe_[i];
    return out;
  }

  // Reachability closure (paths of length >= 1). A cycle therefore shows up
  // as a self-edge.
  Relation transitive_closure() const {
    Relation out = *this;
    for (std::uint32_t k = 0; k < n_; ++k) {
      const std::uint64_t* rk = out.row(k);
      for (std::uint32_t i = 0; i < n_; ++i) {
        if (!out.has(i, k)) continue;
        std::uint64_t* ri = out.row(i);
        for (std::uint32_t w = 0; w < words_; ++w) ri[w] |= rk[w];
      }
    }
    return out;
  }

  bool is_acyclic() const { return !find_cycle().has_value(); }

  std::optional<std::vector<OpId>> find_cycle() const {
    std::vector<std::vector<OpId>> adj(n_);
    for (std::uint32_t a = 0; a < n_; ++a)
      for (std::uint32_t b = 0; b < n_; ++b)
        if (has(a, b)) adj[a].push_back(b);
    return detail::find_cycle_in(adj);
  }

  // Succcessor iteration support for search code.
  std::span<const std::uint64_t> row_bits(OpId a) const { return {row(a), words_}; }
  std::uint32_t words() const { return words_; }

 private:
  void require_same(const Relation& o) const {
    if (o.n_ != n_) throw std::invalid_argument("relation size mismatch");
  }
  std::uint64_t* row(OpId a) { return row_.data() + static_cast<std::size_t>(a) * words_; }
  const std::uint64_t* row(OpId a) const { return row_.data() + static_cast<std::size_t>(a) * words_; }
  static void set_bit(std::uint64_t* bits, std::uint32_t i) { bits[i >> 6] |= (std::uint64_t{1} << (i & 63)); }
  static void clear_bit(std::uint64_t* bits, std::uint32_t i) { bits[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }
  static bool get_bit(const std::uint64_t* bits, std::uint32_t i) {
    return (bits[i >> 6] >> (i & 63)) & 1;
  }

  std::uint32_t n_;
  std::uint32_t words_;
  std::vector<std::uint64_t> row_;
  std::vector<std::uint64_t> universe_;
};

// A predicate over operations, expressed as a union of atoms the way the
// filter notation composes: (□|(a,b)) ≡ (□|a) ∪ (□|b).
class FilterSpec {
 public:
  static FilterSpec process(ProcessId i) { return atom({Atom::Process, i, 0}); }
  static FilterSpec variable(VarId v) { return atom({Atom::Variable, 0, v}); }
  static FilterSpec writes() { return atom({Atom::Writes, 0, 0}); }
  static FilterSpec reads() { return atom({Atom::Reads, 0, 0}); }
  static FilterSpec write_by(ProcessId i) { return atom({Atom::WriteBy, i, 0}); }
  static FilterSpec write_on(VarId v) { return atom({Atom::WriteOn, 0, v}); }
  static FilterSpec always() { return atom({Atom::Always, 0, 0}); }

  FilterSpec operator|(const FilterSpec& o) const {
    FilterSpec out = *this;
    out.atoms_.insert(out.atoms_.end(), o.atoms_.begin(), o.atoms_.end());
    return out;
  }

  bool matches(const Operation& op) const {
    for (const Atom& a : atoms_) {
      switch (a.kind) {
        case Atom::Process: if (op.process == a.process) return true; break;
        case Atom::Variable: if (op.variable == a.variable) return true; break;
        case Atom::Writes: if (op.is_write()) return true; break;
        case Atom::Reads: if (op.is_read()) return true; break;
        case Atom::WriteBy: if (op.is_write() && op.process == a.process) return true; break;
        case Atom::WriteOn: if (op.is_write() && op.variable == a.variable) return true; break;
        case Atom::Always: return true;
      }
    }
    return false;
  }

 private:
  struct Atom {
    enum Kind { Process, Variable, Writes, Reads, WriteBy, WriteOn, Always } kind;
    ProcessId process;
    VarId variable;
  };
  static FilterSpec atom(Atom a) {
    FilterSpec s;
    s.atoms_.push_back(a);
    return s;
  }
  std::vector<Atom> atoms_;
};

// Pointwise filter: keeps a pair iff both endpoints satisfy the condition.
// Deliberately does not re-close the result; filtering a closed relation can
// break transitivity and callers wanting closure ask for it explicitly.
inline Relation filter(const Execution& ex, const Relation& rel, const FilterSpec& spec) {
  Relation out(rel.size());
  std::vector<bool> keep(rel.size(), false);
  for (OpId i = 0; i < rel.size(); ++i) keep[i] = spec.matches(ex.op(i));
  out.set_universe(keep);
  for (OpId a = 0; a < rel.size(); ++a) {
    if (!keep[a]) continue;
    for (OpId b = 0; b < rel.size(); ++b)
      if (keep[b] && rel.has(a, b)) out.add(a, b);
  }
  return out;
}

inline std::vector<OpId> filter_seq(const Execution& ex, std::span<const OpId> seq, const FilterSpec& spec) {
  std::vector<OpId> out;
  for (OpId id : seq)
    if (spec.matches(ex.op(id))) out.push_back(id);
  return out;
}

// Relation over all ops of an execution with no edges.
inline Relation empty_relation(const Execution& ex) { return Relation(static_cast<std::uint32_t>(ex.size())); }

// Cached lookup helper; builds the relation once per execution.
inline const Relation& cached_relation(const Execution& ex, std::string_view key,
                                       const std::function<Relation()>& build) {
  auto& cache = ex.relation_cache();
  {
    std::shared_lock lk(cache.mu);
    auto it = cache.entries.find(key);
    if (it != cache.entries.end()) return *it->second;
  }
  auto built = std::make_shared<Relation>(build());
  std::unique_lock lk(cache.mu);
  auto [it, inserted] = cache.entries.emplace(std::string(key), built);
  return *it->second;
}

}  // namespace memcc
