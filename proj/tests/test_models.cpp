#include <catch2/catch_amalgamated.hpp>

#include "memcc/core.hpp"
#include "memcc/models.hpp"
#include "memcc/oracle.hpp"
#include "memcc/tracefmt.hpp"

using namespace memcc;

namespace {

Holds holds_of(const Execution& ex, ModelId m, CheckOptions opts = {}) {
  return check_model(ex, m, opts).holds;
}

void check_witnesses(const Execution& ex, const Verdict& v) {
  for (const auto& iw : v.witnesses) {
    INFO("instance " << iw.key.label(ex));
    CHECK(is_consistent_sequence(ex, iw.witness));
  }
}

// Hand-off traces for the synchronized models (see the sync test cases).
Execution sync_handoff() {
  return TraceBuilder{}
      .process(1).acq("s").w("x", 1).rel("s")
      .process(2).acq("s").r("x", 1).rel("s")
      .syncorder("s", {1, 2})
      .build();
}

Execution sync_late_write() {
  return TraceBuilder{}
      .process(1).acq("s").rel("s").w("x", 1)
      .process(2).acq("s").r("x", 1).rel("s")
      .syncorder("s", {1, 2})
      .build();
}

Execution sync_stale_read(bool bound) {
  // P2 enters its critical section after P1's and still reads the value the
  // second write of P1 overwrote before releasing.
  TraceBuilder b;
  b.process(1).w("x", 1).w("x", 2).acq("s").rel("s")
      .process(2).acq("s").r("x", 1).rel("s")
      .syncorder("s", {1, 2});
  if (bound) b.bind("s", {"x"});
  return b.build();
}

}  // namespace

TEST_CASE("fig2 is sequential, with the paper's witness") {
  const Execution& ex = *find_fixture("fig2-sequential");
  Verdict v = check_sequential(ex);
  REQUIRE(v.yes());
  REQUIRE(v.witnesses.size() == 1);
  CHECK(ex.format_ops(v.witnesses[0].witness.order) == "w(2,x,2) w(1,x,1) r(1,x,1) r(2,x,1)");
  check_witnesses(ex, v);
}

TEST_CASE("a single write is sequential") {
  Execution ex = TraceBuilder{}.process(1).w("x", 7).build();
  CHECK(check_sequential(ex).yes());
}

TEST_CASE("fig3/fig4: causal and pram but not sequential") {
  const Execution& ex = *find_fixture("fig3-nonsequential");
  CHECK(holds_of(ex, ModelId::Sequential) == Holds::No);
  CHECK(holds_of(ex, ModelId::Causal) == Holds::Yes);
  CHECK(holds_of(ex, ModelId::Pram) == Holds::Yes);
  CHECK(holds_of(ex, ModelId::Cache) == Holds::No);
  CHECK(holds_of(ex, ModelId::Processor) == Holds::No);
  CHECK(holds_of(ex, ModelId::Slow) == Holds::Yes);
}

TEST_CASE("fig5: pram holds but causality fails at process 3") {
  const Execution& ex = *find_fixture("fig5-pram");
  CHECK(holds_of(ex, ModelId::Pram) == Holds::Yes);
  Verdict causal = check_causal(ex);
  REQUIRE(causal.no());
  REQUIRE(causal.failing.has_value());
  CHECK(causal.failing->process == 3);
}

TEST_CASE("pram holds on write-only traces") {
  Execution ex = TraceBuilder{}
                     .process(1).w("x", 1).w("y", 1)
                     .process(2).w("y", 2).w("x", 2)
                     .process(3).w("z", 1)
                     .build();
  // brute force: any interleaving is consistent when nothing reads
  for (ProcessId i : ex.process_ids()) {
    Relation view = filter(ex, process_order(ex), FilterSpec::process(i) | FilterSpec::writes());
    CHECK(oracle::brute_force_linearize(ex, view).linearizable());
  }
  CHECK(check_pram(ex).yes());
}

TEST_CASE("fig-cache: cache holds, pram fails at process 2") {
  const Execution& ex = *find_fixture("fig-cache");
  CHECK(holds_of(ex, ModelId::Cache) == Holds::Yes);
  Verdict pram = check_pram(ex);
  REQUIRE(pram.no());
  CHECK(pram.failing->process == 2);
  CHECK(holds_of(ex, ModelId::Causal) == Holds::No);
}

TEST_CASE("fig3 fails cache on its only variable") {
  const Execution& ex = *find_fixture("fig3-nonsequential");
  Verdict v = check_cache(ex);
  REQUIRE(v.no());
  CHECK(ex.var(*v.failing->variable).name == "x");
  CHECK((holds_of(ex, ModelId::Cache) == holds_of(ex, ModelId::Sequential)));
}

TEST_CASE("single-variable traces: cache equals sequential") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    Execution ex = oracle::generate({.procs = 3, .vars = 1, .ops = 7, .read_ratio = 0.5, .seed = seed});
    CHECK(holds_of(ex, ModelId::Cache) == holds_of(ex, ModelId::Sequential));
  }
}

TEST_CASE("single-process traces: sequential, causal and pram coincide") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    Execution ex = oracle::generate({.procs = 1, .vars = 3, .ops = 7, .read_ratio = 0.5, .seed = seed});
    Holds s = holds_of(ex, ModelId::Sequential);
    CHECK(s == holds_of(ex, ModelId::Causal));
    CHECK(s == holds_of(ex, ModelId::Pram));
  }
}

TEST_CASE("the processor figure holds with agreed write orders") {
  const Execution& ex = *find_fixture("fig-processor");
  Verdict v = check_processor(ex);
  REQUIRE(v.yes());
  check_witnesses(ex, v);
  // the only agreement places w(3,x,3) before w(1,x,1)
  REQUIRE(v.write_orders.size() == 1);  // only x has two writes
  REQUIRE(v.write_orders[0].size() == 2);
  CHECK(ex.format_op(v.write_orders[0][0]) == "w(3,x,3)");
  CHECK(ex.format_op(v.write_orders[0][1]) == "w(1,x,1)");
  // witness agreement equation: equal per-variable write projections
  for (VarId var : ex.ordinary_vars()) {
    std::vector<std::string> first;
    for (std::size_t i = 0; i < v.witnesses.size(); ++i) {
      std::vector<std::string> proj;
      for (OpId o : filter_seq(ex, v.witnesses[i].witness.order, FilterSpec::write_on(var)))
        proj.push_back(ex.format_op(o));
      if (i == 0) first = proj;
      else CHECK(first == proj);
    }
  }
  CHECK(holds_of(ex, ModelId::Causal) == Holds::No);
  CHECK(holds_of(ex, ModelId::Pram) == Holds::Yes);
  CHECK(holds_of(ex, ModelId::Cache) == Holds::Yes);
}

TEST_CASE("fig-pram-cache: pram and cache hold but processor fails") {
  const Execution& ex = *find_fixture("fig-pram-cache");
  CHECK(holds_of(ex, ModelId::Pram) == Holds::Yes);
  CHECK(holds_of(ex, ModelId::Cache) == Holds::Yes);
  CHECK(holds_of(ex, ModelId::Processor) == Holds::No);
}

TEST_CASE("fig-causal-cache: causal and cache hold but processor fails") {
  const Execution& ex = *find_fixture("fig-causal-cache");
  CHECK(holds_of(ex, ModelId::Causal) == Holds::Yes);
  CHECK(holds_of(ex, ModelId::Cache) == Holds::Yes);
  CHECK(holds_of(ex, ModelId::Pram) == Holds::Yes);
  CHECK(holds_of(ex, ModelId::Processor) == Holds::No);
}

TEST_CASE("fig-slow: only slow among the ordinary models") {
  const Execution& ex = *find_fixture("fig-slow");
  Verdict slow = check_slow(ex);
  REQUIRE(slow.yes());
  check_witnesses(ex, slow);
  CHECK(holds_of(ex, ModelId::Pram) == Holds::No);
  CHECK(holds_of(ex, ModelId::Cache) == Holds::No);
  CHECK(holds_of(ex, ModelId::Sequential) == Holds::No);
}

TEST_CASE("processor matches the exhaustive agreement oracles on small traces") {
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    Execution ex = oracle::generate({.procs = 3, .vars = 2, .ops = 7, .read_ratio = 0.5, .seed = seed});
    Verdict v = check_processor(ex);
    REQUIRE(v.holds != Holds::Unknown);
    INFO("seed " << seed);
    CHECK(v.yes() == oracle::global_processor(ex));
    CHECK(v.yes() == oracle::pairwise_processor(ex));
  }
}

TEST_CASE("lazy mode: the cache figure becomes sequential") {
  // Under lazy process order the write-to-other-variable pairs drop out, so
  // the read of x may still return the first value.
  const Execution& ex = *find_fixture("fig-cache");
  CHECK(holds_of(ex, ModelId::Sequential, {.po_mode = POMode::Strict}) == Holds::No);
  CHECK(holds_of(ex, ModelId::Sequential, {.po_mode = POMode::Lazy}) == Holds::Yes);
}

TEST_CASE("classify matches the enumerated execution labels") {
  Classification c1 = classify(*find_fixture("fig3-nonsequential"));
  CHECK(c1.of(ModelId::Causal).yes());
  CHECK(c1.of(ModelId::Pram).yes());
  CHECK(c1.of(ModelId::Sequential).no());
  CHECK(c1.of(ModelId::Cache).no());
  CHECK(c1.of(ModelId::Processor).no());
  CHECK(c1.of(ModelId::Slow).yes());
  CHECK(c1.pram_and_cache == Holds::No);
  CHECK(c1.causal_and_cache == Holds::No);

  Classification c7 = classify(*find_fixture("fig-slow"));
  CHECK(c7.of(ModelId::Slow).yes());
  for (ModelId m : {ModelId::Sequential, ModelId::Causal, ModelId::Pram, ModelId::Cache, ModelId::Processor})
    CHECK(c7.of(m).no());

  Classification c4 = classify(*find_fixture("fig-processor"));
  CHECK(c4.of(ModelId::Processor).yes());
  CHECK(c4.of(ModelId::Causal).no());
  CHECK(c4.pram_and_cache == Holds::Yes);
  CHECK(c4.causal_pram_cache_processor == Holds::No);
}

TEST_CASE("classify on the empty trace: everything holds") {
  Execution ex = *validate(RawTrace{}).execution;
  Classification c = classify(ex);
  for (ModelId m : kAllModels) CHECK(c.of(m).yes());
  CHECK(c.causal_pram_cache_processor == Holds::Yes);
}

// --------------------------------------------------------------------------
// Synchronized models.

TEST_CASE("without sync ops every synchronized model equals slow") {
  for (const Fixture& f : fixtures()) {
    Holds slow = holds_of(f.execution, ModelId::Slow);
    for (ModelId m : {ModelId::Weak, ModelId::Release, ModelId::LazyRelease, ModelId::Entry}) {
      INFO(f.name << " " << model_name(m));
      CHECK(holds_of(f.execution, m) == slow);
    }
  }
}

TEST_CASE("protected hand-off satisfies all synchronized models") {
  Execution ex = sync_handoff();
  for (ModelId m : {ModelId::Weak, ModelId::Release, ModelId::LazyRelease, ModelId::Entry}) {
    Verdict v = check_synchronized(ex, m);
    INFO(model_name(m));
    CHECK(v.yes());
    check_witnesses(ex, v);
  }
}

TEST_CASE("release consistency places the unprotected write before the next acquire") {
  Execution ex = sync_late_write();
  Verdict v = check_synchronized(ex, ModelId::Release);
  REQUIRE(v.yes());
  check_witnesses(ex, v);
}

TEST_CASE("a stale read across the hand-off fails weak, release and lazy release") {
  Execution ex = sync_stale_read(false);
  CHECK(holds_of(ex, ModelId::Weak) == Holds::No);
  CHECK(holds_of(ex, ModelId::Release) == Holds::No);
  CHECK(holds_of(ex, ModelId::LazyRelease) == Holds::No);
  // Entry with no binding declarations only imposes mutual exclusion
  Verdict entry = check_synchronized(ex, ModelId::Entry);
  CHECK(entry.yes());
  REQUIRE_FALSE(entry.notes.empty());
  CHECK(entry.notes[0].find("MissingBindings") != std::string::npos);
  // the trace stays slow-consistent
  CHECK(holds_of(ex, ModelId::Slow) == Holds::Yes);
}

TEST_CASE("entry bindings restore the stale-read failure") {
  CHECK(holds_of(sync_stale_read(true), ModelId::Entry) == Holds::No);
}

TEST_CASE("sync model verdicts agree with brute force on the hand-built traces") {
  for (const Execution& ex : {sync_handoff(), sync_late_write(), sync_stale_read(false), sync_stale_read(true)}) {
    REQUIRE(ex.size() <= oracle::kBruteForceMaxOps);
    for (ModelId m : {ModelId::Weak, ModelId::Release, ModelId::LazyRelease, ModelId::Entry}) {
      // per-instance agreement between the search and the permutation oracle
      DSpec dm, dp;
      switch (m) {
        case ModelId::Weak: dm = dsets::weak_minus(POMode::Strict); dp = dsets::weak_plus(POMode::Strict); break;
        case ModelId::Release: dm = dsets::release_minus(POMode::Strict); dp = dsets::release_plus(POMode::Strict); break;
        case ModelId::LazyRelease: dm = dsets::lazy_release_minus(POMode::Strict); dp = dsets::release_plus(POMode::Strict); break;
        default: dm = dsets::entry_minus(POMode::Strict); dp = dsets::entry_plus(POMode::Strict); break;
      }
      Relation so = sync_order(ex, dm, dp);
      bool all = true;
      for (VarId v : ex.ordinary_vars())
        for (ProcessId i : ex.process_ids()) {
          Relation rel = so.union_with(filter(ex, process_order(ex), FilterSpec::process(i) | FilterSpec::write_on(v)));
          bool mine = linearize(ex, rel).linearizable();
          bool brute = oracle::brute_force_linearize(ex, rel).linearizable();
          CHECK(mine == brute);
          all = all && mine;
        }
      CHECK((holds_of(ex, m) == Holds::Yes) == all);
    }
  }
}

TEST_CASE("sync verdict monotonicity: weak implies release implies lazy release implies entry") {
  auto rank = [](const Execution& ex) {
    return std::array<Holds, 4>{holds_of(ex, ModelId::Weak), holds_of(ex, ModelId::Release),
                                holds_of(ex, ModelId::LazyRelease), holds_of(ex, ModelId::Entry)};
  };
  std::vector<Execution> traces = {sync_handoff(), sync_late_write(), sync_stale_read(false), sync_stale_read(true)};
  for (std::uint64_t seed = 1; seed <= 30; ++seed)
    traces.push_back(oracle::generate(
        {.procs = 2, .vars = 2, .ops = 8, .read_ratio = 0.4, .sync_vars = 1, .sync_block_prob = 0.5, .seed = seed}));
  for (const Execution& ex : traces) {
    auto h = rank(ex);
    for (std::size_t i = 0; i + 1 < h.size(); ++i) {
      if (h[i] == Holds::Yes) CHECK(h[i + 1] == Holds::Yes);
    }
  }
}

TEST_CASE("budget exhaustion surfaces as Unknown") {
  const Execution& ex = *find_fixture("fig2-sequential");
  Verdict v = check_sequential(ex, {.budget = 2});
  CHECK(v.holds == Holds::Unknown);
  REQUIRE_FALSE(v.notes.empty());
}

TEST_CASE("weak and release genuinely differ: a pre-section write may drift inside") {
  // P3 writes x=1 before acquiring and reads x=2 (P1's write) inside the
  // critical section, while P1 then reads x=1. Weak pins w(3,x,1) before the
  // acquire, which traps it inside the (w(1,x,2), r(3,x,2)) window; release
  // only pins it before the release, so it can drift past the read.
  Execution ex = TraceBuilder{}
                     .process(1).w("x", 2).r("x", 1)
                     .process(2).r("x", 1)
                     .process(3).w("x", 1).acq("s").r("x", 2).rel("s").w("x", 3)
                     .syncorder("s", {3})
                     .build();
  REQUIRE(ex.size() <= oracle::kBruteForceMaxOps);
  CHECK(holds_of(ex, ModelId::Weak) == Holds::No);
  CHECK(holds_of(ex, ModelId::Release) == Holds::Yes);
  // brute-force confirmation of both verdicts, instance by instance
  for (bool weak : {true, false}) {
    DSpec dm = weak ? dsets::weak_minus(POMode::Strict) : dsets::release_minus(POMode::Strict);
    DSpec dp = weak ? dsets::weak_plus(POMode::Strict) : dsets::release_plus(POMode::Strict);
    Relation so = sync_order(ex, dm, dp);
    bool all = true;
    for (VarId v : ex.ordinary_vars())
      for (ProcessId i : ex.process_ids()) {
        Relation rel = so.union_with(filter(ex, process_order(ex), FilterSpec::process(i) | FilterSpec::write_on(v)));
        all = all && oracle::brute_force_linearize(ex, rel).linearizable();
      }
    CHECK(all == !weak);
  }
}
