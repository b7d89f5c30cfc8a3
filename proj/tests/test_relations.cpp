#include <catch2/catch_amalgamated.hpp>

#include "memcc/core.hpp"
#include "memcc/oracle.hpp"
#include "memcc/orders.hpp"
#include "memcc/relation.hpp"
#include "memcc/tracefmt.hpp"

using namespace memcc;

namespace {

OpId by_name(const Execution& ex, std::string_view name) {
  for (OpId id = 0; id < ex.size(); ++id)
    if (ex.format_op(id) == name) return id;
  FAIL("no op named " << name);
  return kNoOp;
}

std::set<std::pair<std::string, std::string>> named_edges(const Execution& ex, const Relation& rel) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& [a, b] : rel.edges()) out.emplace(ex.format_op(a), ex.format_op(b));
  return out;
}

}  // namespace

TEST_CASE("process order of the fig3 diagram") {
  const Execution& ex = *find_fixture("fig3-nonsequential");
  auto edges = named_edges(ex, process_order(ex));
  std::set<std::pair<std::string, std::string>> want = {
      {"w(1,x,1)", "r(1,x,2)"},
      {"w(2,x,2)", "r(2,x,1)"},
  };
  CHECK(edges == want);
}

TEST_CASE("process order is empty for a single op and transitive for chains") {
  Execution single = TraceBuilder{}.process(1).w("x", 1).build();
  CHECK(process_order(single).edge_count() == 0);

  Execution chain = TraceBuilder{}.process(1).w("x", 1).w("y", 2).w("z", 3).build();
  const Relation& po = process_order(chain);
  CHECK(po.edge_count() == 3);
  CHECK(po.has(0, 2));
}

TEST_CASE("lazy process order drops write-to-other-variable pairs") {
  // {P1: w(x,1) w(x,2); P2: w(y,3) r(x,1)}: the write/read pair of P2 is
  // not related under lazy process order.
  const Execution& ex = *find_fixture("lazy-po-example");
  const Relation& lpo = lazy_process_order(ex);
  OpId wy = by_name(ex, "w(2,y,3)"), rx = by_name(ex, "r(2,x,1)");
  CHECK_FALSE(lpo.has(wy, rx));
  CHECK(process_order(ex).has(wy, rx));
  // same variable on P1: kept
  CHECK(lpo.has(by_name(ex, "w(1,x,1)"), by_name(ex, "w(1,x,2)")));
}

TEST_CASE("lazy process order keeps read-first pairs") {
  Execution ex = TraceBuilder{}.process(1).w("x", 1).r("x", 1).w("y", 2).build();
  const Relation& lpo = lazy_process_order(ex);
  CHECK(lpo.has(by_name(ex, "r(1,x,1)"), by_name(ex, "w(1,y,2)")));
}

TEST_CASE("lazy process order is a subset of process order") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Execution ex = oracle::generate({.procs = 3, .vars = 3, .ops = 8, .read_ratio = 0.5, .seed = seed});
    CHECK(process_order(ex).contains(lazy_process_order(ex)));
  }
}

TEST_CASE("causal relation adds the cross-process write-read chains of fig4") {
  const Execution& ex = *find_fixture("fig4-causal");
  const Relation& cr = causal_relation(ex);
  CHECK(cr.has(by_name(ex, "w(1,x,1)"), by_name(ex, "r(2,x,1)")));
  CHECK(cr.has(by_name(ex, "w(2,x,2)"), by_name(ex, "r(1,x,2)")));
  CHECK(cr.contains(process_order(ex)));
  CHECK(cr.contains(writes_to(ex)));
}

TEST_CASE("causal relation equals process order without reads") {
  Execution ex = TraceBuilder{}.process(1).w("x", 1).w("y", 2).w("z", 3).build();
  CHECK(causal_relation(ex) == process_order(ex));
}

TEST_CASE("fig5: the writes become causally related through the middle read") {
  const Execution& ex = *find_fixture("fig5-pram");
  const Relation& cr = causal_relation(ex);
  // w(1,x,1) ↦ r(2,x,1) <PO w(2,x,2)
  CHECK(cr.has(by_name(ex, "w(1,x,1)"), by_name(ex, "w(2,x,2)")));
}

TEST_CASE("causal relation is acyclic on valid executions") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Execution ex = oracle::generate({.procs = 3, .vars = 2, .ops = 8, .read_ratio = 0.6, .seed = seed});
    CHECK_FALSE(causal_relation(ex).find_cycle().has_value());
  }
}

TEST_CASE("mutual exclusion order totally orders each variable's sync ops") {
  Execution ex = TraceBuilder{}
                     .process(1).acq("s").rel("s")
                     .process(2).acq("s").rel("s")
                     .syncorder("s", {1, 2})
                     .build();
  const Relation& me = mutual_exclusion_order(ex);
  CHECK(me.edge_count() == 6);  // all ordered pairs of the 4 ops
  CHECK(me.has(by_name(ex, "rel(1,s)"), by_name(ex, "acq(2,s)")));
  CHECK(me.has(by_name(ex, "acq(1,s)"), by_name(ex, "rel(2,s)")));
}

TEST_CASE("mutual exclusion order is empty without sync ops") {
  CHECK(mutual_exclusion_order(*find_fixture("fig2-sequential")).edge_count() == 0);
}

TEST_CASE("one process acquiring twice yields four totally ordered ops") {
  // Enumerating the recursion for α|s with owners [1,1] gives
  // acq(1,s) rel(1,s) acq(1,s) rel(1,s); all six ordered pairs follow.
  Execution ex = TraceBuilder{}.process(1).acq("s").rel("s").acq("s").rel("s").syncorder("s", {1, 1}).build();
  const Relation& me = mutual_exclusion_order(ex);
  CHECK(me.edge_count() == 6);
  auto cs = ex.critical_sections(*ex.find_var("s"));
  REQUIRE(cs.size() == 2);
  CHECK(me.has(cs[0].first, cs[1].second));
}

TEST_CASE("weak sync order relates prior ordinary ops to the sync op") {
  Execution ex = TraceBuilder{}.process(1).w("x", 1).acq("s").rel("s").syncorder("s", {1}).build();
  Relation so = sync_order(ex, dsets::weak_minus(POMode::Strict), dsets::weak_plus(POMode::Strict));
  CHECK(so.has(by_name(ex, "w(1,x,1)"), by_name(ex, "acq(1,s)")));
  CHECK(so.has(by_name(ex, "w(1,x,1)"), by_name(ex, "rel(1,s)")));
}

TEST_CASE("sync order is empty without sync ops") {
  const Execution& ex = *find_fixture("fig2-sequential");
  Relation so = sync_order(ex, dsets::weak_minus(POMode::Strict), dsets::weak_plus(POMode::Strict));
  CHECK(so.edge_count() == 0);
}

TEST_CASE("entry D-sets only admit accesses to bound variables") {
  Execution ex = TraceBuilder{}
                     .process(1).acq("s").w("x", 1).w("y", 2).rel("s")
                     .process(2).acq("s").r("x", 1).rel("s")
                     .syncorder("s", {1, 2})
                     .bind("s", {"x"})
                     .build();
  Relation so = sync_order(ex, dsets::entry_minus(POMode::Strict), dsets::entry_plus(POMode::Strict));
  OpId acq2 = by_name(ex, "acq(2,s)");
  CHECK(so.has(by_name(ex, "w(1,x,1)"), acq2));        // x is bound
  CHECK_FALSE(so.has(by_name(ex, "w(1,y,2)"), acq2));  // y is not
  CHECK(so.has(acq2, by_name(ex, "r(2,x,1)")));
}

TEST_CASE("filtering fig4's causal relation to process 1 and writes") {
  const Execution& ex = *find_fixture("fig4-causal");
  Relation boxed = filter(ex, causal_relation(ex), FilterSpec::process(1) | FilterSpec::writes());
  std::set<std::pair<std::string, std::string>> want = {
      {"w(1,x,1)", "r(1,x,2)"},
      {"w(2,x,2)", "r(1,x,2)"},
  };
  CHECK(named_edges(ex, boxed) == want);
}

TEST_CASE("filtering fig5's process order to (3,w) keeps only P3's read pair") {
  const Execution& ex = *find_fixture("fig5-pram");
  Relation boxed = filter(ex, process_order(ex), FilterSpec::process(3) | FilterSpec::writes());
  std::set<std::pair<std::string, std::string>> want = {{"r(3,x,2)", "r(3,x,1)"}};
  CHECK(named_edges(ex, boxed) == want);
}

TEST_CASE("filter by an always-true condition is the identity") {
  const Execution& ex = *find_fixture("fig-slow");
  CHECK(filter(ex, process_order(ex), FilterSpec::always()) == process_order(ex));
}

TEST_CASE("filtering twice narrows to the conjunction") {
  const Execution& ex = *find_fixture("fig-cache");
  Relation twice = filter(ex, filter(ex, process_order(ex), FilterSpec::process(1) | FilterSpec::writes()),
                          FilterSpec::writes());
  // both endpoints must be (P1-or-write) ∧ write, which here is: write
  CHECK(twice == filter(ex, process_order(ex), FilterSpec::writes()));
}

TEST_CASE("filter is monotone") {
  const Execution& ex = *find_fixture("fig-slow");
  const Relation& po = process_order(ex);
  const Relation& cr = causal_relation(ex);
  FilterSpec spec = FilterSpec::process(2) | FilterSpec::writes();
  CHECK(filter(ex, cr, spec).contains(filter(ex, po, spec)));
}

TEST_CASE("filter_seq keeps matching elements in order") {
  const Execution& ex = *find_fixture("fig-cache");
  std::vector<OpId> all;
  for (OpId i = 0; i < ex.size(); ++i) all.push_back(i);
  auto writes = filter_seq(ex, all, FilterSpec::writes());
  REQUIRE(writes.size() == 3);
  CHECK(ex.format_op(writes[0]) == "w(1,x,1)");
  CHECK(ex.format_op(writes[2]) == "w(1,y,3)");
}

TEST_CASE("transitive closure and union behave as graph operations") {
  Relation r(3);
  r.add(0, 1);
  r.add(1, 2);
  Relation closed = r.transitive_closure();
  CHECK(closed.has(0, 2));
  CHECK(closed.is_acyclic());

  Relation other(3);
  other.add(2, 0);
  Relation u = r.union_with(other);
  CHECK(u.edge_count() == 3);
  CHECK_FALSE(u.transitive_closure().is_acyclic());
}
