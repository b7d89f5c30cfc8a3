#pragma once

// One checker per consistency model. Each ordinary model reduces to
// linearize calls over a filtered relation; the synchronized models add the
// synchronization order induced by their D-set rules.

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "memcc/core.hpp"
#include "memcc/linearize.hpp"
#include "memcc/orders.hpp"
#include "memcc/relation.hpp"

namespace memcc {

enum class ModelId {
  Sequential,
  Causal,
  Pram,
  Cache,
  Processor,
  Slow,
  Weak,
  Release,
  LazyRelease,
  Entry,
};

inline constexpr std::array<ModelId, 10> kAllModels = {
    ModelId::Sequential, ModelId::Causal, ModelId::Pram,  ModelId::Cache,
    ModelId::Processor,  ModelId::Slow,   ModelId::Weak,  ModelId::Release,
    ModelId::LazyRelease, ModelId::Entry};

inline std::string_view model_name(ModelId m) {
  switch (m) {
    case ModelId::Sequential: return "sequential";
    case ModelId::Causal: return "causal";
    case ModelId::Pram: return "pram";
    case ModelId::Cache: return "cache";
    case ModelId::Processor: return "processor";
    case ModelId::Slow: return "slow";
    case ModelId::Weak: return "weak";
    case ModelId::Release: return "release";
    case ModelId::LazyRelease: return "lazyrelease";
    case ModelId::Entry: return "entry";
  }
  return "?";
}

inline std::optional<ModelId> model_from_name(std::string_view name) {
  for (ModelId m : kAllModels)
    if (model_name(m) == name) return m;
  return std::nullopt;
}

inline bool is_synchronized_model(ModelId m) {
  return m == ModelId::Weak || m == ModelId::Release || m == ModelId::LazyRelease || m == ModelId::Entry;
}

struct CheckOptions {
  POMode po_mode = POMode::Strict;
  std::uint64_t budget = 10'000'000;
};

enum class Holds { Yes, No, Unknown };

// The ∀-instance a witness or refutation belongs to: a process, a variable,
// a (variable, process) pair, or nothing for Sequential.
struct InstanceKey {
  std::optional<ProcessId> process;
  std::optional<VarId> variable;

  std::string label(const Execution& ex) const {
    std::string out;
    if (variable && process)
      out = "(v=" + ex.var(*variable).name + ",i=" + std::to_string(*process) + ")";
    else if (process)
      out = "i=" + std::to_string(*process);
    else if (variable)
      out = "v=" + ex.var(*variable).name;
    else
      out = "-";
    return out;
  }
};

struct Refutation {
  bool co_cycle = false;
  std::vector<OpId> cycle;
};

struct InstanceWitness {
  InstanceKey key;
  Witness witness;
};

struct Verdict {
  ModelId model;
  Holds holds = Holds::Unknown;
  std::vector<InstanceWitness> witnesses;
  std::optional<InstanceKey> failing;
  std::optional<Refutation> refutation;
  // Processor evidence: one agreed total order of writes per variable.
  std::vector<std::vector<OpId>> write_orders;
  std::vector<std::string> notes;

  bool yes() const { return holds == Holds::Yes; }
  bool no() const { return holds == Holds::No; }
};

namespace detail {

struct Instance {
  InstanceKey key;
  Relation rel;
};

// Runs linearize for every instance; stops at the first refutation.
inline Verdict check_instances(const Execution& ex, ModelId model, std::vector<Instance> instances,
                               const CheckOptions& opts) {
  Verdict v{model};
  for (Instance& inst : instances) {
    LinearizeResult r = linearize(ex, inst.rel, {opts.budget});
    switch (r.status) {
      case LinearizeStatus::Linearizable:
        v.witnesses.push_back({inst.key, *std::move(r.witness)});
        break;
      case LinearizeStatus::Budget:
        v.holds = Holds::Unknown;
        v.failing = inst.key;
        v.notes.push_back("budget exhausted at instance " + inst.key.label(ex));
        return v;
      case LinearizeStatus::COCycle:
        v.holds = Holds::No;
        v.failing = inst.key;
        v.refutation = Refutation{true, r.cycle};
        return v;
      case LinearizeStatus::SearchExhausted:
        v.holds = Holds::No;
        v.failing = inst.key;
        v.refutation = Refutation{false, {}};
        return v;
    }
  }
  v.holds = Holds::Yes;
  return v;
}

}  // namespace detail

inline Verdict check_sequential(const Execution& ex, const CheckOptions& opts = {}) {
  std::vector<detail::Instance> inst;
  inst.push_back({{}, program_order(ex, opts.po_mode)});
  return detail::check_instances(ex, ModelId::Sequential, std::move(inst), opts);
}

inline Verdict check_causal(const Execution& ex, const CheckOptions& opts = {}) {
  std::vector<detail::Instance> inst;
  const Relation& cr = causal_relation(ex, opts.po_mode);
  for (ProcessId i : ex.process_ids())
    inst.push_back({{i, {}}, filter(ex, cr, FilterSpec::process(i) | FilterSpec::writes())});
  return detail::check_instances(ex, ModelId::Causal, std::move(inst), opts);
}

inline Verdict check_pram(const Execution& ex, const CheckOptions& opts = {}) {
  std::vector<detail::Instance> inst;
  const Relation& po = program_order(ex, opts.po_mode);
  for (ProcessId i : ex.process_ids())
    inst.push_back({{i, {}}, filter(ex, po, FilterSpec::process(i) | FilterSpec::writes())});
  return detail::check_instances(ex, ModelId::Pram, std::move(inst), opts);
}

inline Verdict check_cache(const Execution& ex, const CheckOptions& opts = {}) {
  std::vector<detail::Instance> inst;
  const Relation& po = program_order(ex, opts.po_mode);
  for (VarId v : ex.ordinary_vars())
    inst.push_back({{{}, v}, filter(ex, po, FilterSpec::variable(v))});
  return detail::check_instances(ex, ModelId::Cache, std::move(inst), opts);
}

inline Verdict check_slow(const Execution& ex, const CheckOptions& opts = {}) {
  std::vector<detail::Instance> inst;
  const Relation& po = program_order(ex, opts.po_mode);
  for (VarId v : ex.ordinary_vars())
    for (ProcessId i : ex.process_ids())
      inst.push_back({{i, v}, filter(ex, po, FilterSpec::process(i) | FilterSpec::write_on(v))});
  return detail::check_instances(ex, ModelId::Slow, std::move(inst), opts);
}

// Processor: there must be per-process extensions of PO|(i,w) that agree, for
// every variable, on the order of its writes. Implemented as a search over
// per-variable total write orders: each candidate order set is added to every
// view and all views must linearize. Forced orientations are harvested from
// each view's CO fixpoint first.
inline Verdict check_processor(const Execution& ex, const CheckOptions& opts = {}) {
  Verdict v{ModelId::Processor};
  const Relation& po = program_order(ex, opts.po_mode);
  std::vector<ProcessId> procs(ex.process_ids().begin(), ex.process_ids().end());
  std::vector<detail::Instance> views;
  for (ProcessId i : procs)
    views.push_back({{i, {}}, filter(ex, po, FilterSpec::process(i) | FilterSpec::writes())});

  // Forced same-variable write orientations across all views.
  Relation forced = empty_relation(ex);
  for (auto& view : views) {
    Relation seed = view.rel.union_with(writes_to(ex));
    if (ex.has_sync_ops()) seed = seed.union_with(mutual_exclusion_order(ex));
    CoClosure c = co_closure(ex, seed, /*stop_on_cycle=*/true);
    if (c.cycle) {
      v.holds = Holds::No;
      v.failing = view.key;
      v.refutation = Refutation{true, *c.cycle};
      return v;
    }
    for (VarId var : ex.ordinary_vars()) {
      auto ws = ex.writes_on(var);
      for (OpId a : ws)
        for (OpId b : ws)
          if (a != b && c.fixpoint.has(a, b)) forced.add(a, b);
    }
  }

  std::vector<VarId> multi;  // variables with a choice to make
  for (VarId var : ex.ordinary_vars())
    if (ex.writes_on(var).size() >= 2) multi.push_back(var);
  for (VarId var : multi) {
    auto ws = ex.writes_on(var);
    for (OpId a : ws)
      for (OpId b : ws)
        if (a != b && forced.has(a, b) && forced.has(b, a)) {
          v.holds = Holds::No;
          v.failing = InstanceKey{{}, var};
          v.refutation = Refutation{false, {}};
          v.notes.push_back("views force contradictory orders for writes on " + ex.var(var).name);
          return v;
        }
  }

  // Enumerate per-variable orders extending the forced pairs.
  std::vector<std::vector<std::vector<OpId>>> choices(multi.size());
  for (std::size_t k = 0; k < multi.size(); ++k) {
    auto ws = ex.writes_on(multi[k]);
    std::vector<OpId> perm(ws.begin(), ws.end());
    std::sort(perm.begin(), perm.end());
    do {
      bool ok = true;
      for (std::size_t i = 0; i < perm.size() && ok; ++i)
        for (std::size_t j = i + 1; j < perm.size() && ok; ++j)
          if (forced.has(perm[j], perm[i])) ok = false;
      if (ok) choices[k].push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));
  }

  std::vector<std::size_t> pick(multi.size(), 0);
  std::size_t best_depth = 0;
  std::optional<InstanceKey> best_fail;
  std::optional<Refutation> best_ref;
  bool budget_hit = false;
  std::function<bool(std::size_t)> try_var = [&](std::size_t k) -> bool {
    if (k == multi.size()) {
      Relation agreed = empty_relation(ex);
      for (std::size_t m = 0; m < multi.size(); ++m) {
        const auto& order = choices[m][pick[m]];
        for (std::size_t i = 0; i + 1 < order.size(); ++i) agreed.add(order[i], order[i + 1]);
      }
      std::vector<InstanceWitness> ws;
      for (std::size_t vi = 0; vi < views.size(); ++vi) {
        LinearizeResult r = linearize(ex, views[vi].rel.union_with(agreed), {opts.budget});
        if (r.status == LinearizeStatus::Budget) {
          budget_hit = true;
          return false;
        }
        if (!r.linearizable()) {
          if (vi >= best_depth) {
            best_depth = vi;
            best_fail = views[vi].key;
            best_ref = Refutation{r.status == LinearizeStatus::COCycle, r.cycle};
          }
          return false;
        }
        ws.push_back({views[vi].key, *std::move(r.witness)});
      }
      v.witnesses = std::move(ws);
      for (std::size_t m = 0; m < multi.size(); ++m) v.write_orders.push_back(choices[m][pick[m]]);
      return true;
    }
    for (std::size_t c = 0; c < choices[k].size(); ++c) {
      pick[k] = c;
      if (try_var(k + 1)) return true;
      if (budget_hit) return false;
    }
    return false;
  };

  if (try_var(0)) {
    v.holds = Holds::Yes;
    return v;
  }
  if (budget_hit) {
    v.holds = Holds::Unknown;
    v.notes.push_back("budget exhausted while searching write orders");
    return v;
  }
  v.holds = Holds::No;
  v.failing = best_fail ? best_fail : std::optional<InstanceKey>(InstanceKey{});
  v.refutation = best_ref ? best_ref : std::optional<Refutation>(Refutation{false, {}});
  return v;
}

// Synchronized models: ∀(v,i), SO ∪ PO|(i, w(·,v,·)) must linearize, where SO
// comes from the model's D-set rules.
inline Verdict check_synchronized(const Execution& ex, ModelId model, const CheckOptions& opts = {}) {
  DSpec dminus, dplus;
  switch (model) {
    case ModelId::Weak:
      dminus = dsets::weak_minus(opts.po_mode);
      dplus = dsets::weak_plus(opts.po_mode);
      break;
    case ModelId::Release:
      dminus = dsets::release_minus(opts.po_mode);
      dplus = dsets::release_plus(opts.po_mode);
      break;
    case ModelId::LazyRelease:
      dminus = dsets::lazy_release_minus(opts.po_mode);
      dplus = dsets::release_plus(opts.po_mode);
      break;
    case ModelId::Entry:
      dminus = dsets::entry_minus(opts.po_mode);
      dplus = dsets::entry_plus(opts.po_mode);
      break;
    default:
      throw std::invalid_argument("check_synchronized: not a synchronized model");
  }
  Relation so = sync_order(ex, dminus, dplus);
  const Relation& po = program_order(ex, opts.po_mode);
  std::vector<detail::Instance> inst;
  for (VarId v : ex.ordinary_vars())
    for (ProcessId i : ex.process_ids())
      inst.push_back({{i, v}, so.union_with(filter(ex, po, FilterSpec::process(i) | FilterSpec::write_on(v)))});
  Verdict verdict = detail::check_instances(ex, model, std::move(inst), opts);
  if (model == ModelId::Entry && ex.has_sync_ops()) {
    bool any_binding = false;
    for (VarId s : ex.sync_vars())
      if (!ex.bindings(s).empty()) any_binding = true;
    if (!any_binding)
      verdict.notes.push_back("MissingBindings: no sync variable declares a binding set; Entry imposes mutual exclusion only");
  }
  return verdict;
}

inline Verdict check_model(const Execution& ex, ModelId model, const CheckOptions& opts = {}) {
  switch (model) {
    case ModelId::Sequential: return check_sequential(ex, opts);
    case ModelId::Causal: return check_causal(ex, opts);
    case ModelId::Pram: return check_pram(ex, opts);
    case ModelId::Cache: return check_cache(ex, opts);
    case ModelId::Processor: return check_processor(ex, opts);
    case ModelId::Slow: return check_slow(ex, opts);
    default: return check_synchronized(ex, model, opts);
  }
}

// Conjunction rows of the model-relationship table, derived from the
// individual verdicts.
struct Classification {
  std::map<ModelId, Verdict> verdicts;
  Holds pram_and_cache = Holds::Unknown;
  Holds causal_and_cache = Holds::Unknown;
  Holds causal_pram_cache_processor = Holds::Unknown;

  const Verdict& of(ModelId m) const { return verdicts.at(m); }
};

namespace detail {
inline Holds conj(std::initializer_list<Holds> hs) {
  Holds out = Holds::Yes;
  for (Holds h : hs) {
    if (h == Holds::No) return Holds::No;
    if (h == Holds::Unknown) out = Holds::Unknown;
  }
  return out;
}
}  // namespace detail

inline Classification classify(const Execution& ex, const CheckOptions& opts = {}) {
  Classification c;
  for (ModelId m : kAllModels) c.verdicts.emplace(m, check_model(ex, m, opts));
  Holds pram = c.of(ModelId::Pram).holds, cache = c.of(ModelId::Cache).holds;
  Holds causal = c.of(ModelId::Causal).holds, proc = c.of(ModelId::Processor).holds;
  c.pram_and_cache = detail::conj({pram, cache});
  c.causal_and_cache = detail::conj({causal, cache});
  c.causal_pram_cache_processor = detail::conj({causal, pram, cache, proc});
  return c;
}

}  // namespace memcc
