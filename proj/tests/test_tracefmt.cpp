#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "memcc/core.hpp"
#include "memcc/oracle.hpp"
#include "memcc/tracefmt.hpp"

using namespace memcc;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("parsing the fig2 fixture file") {
  std::string text =
      "# memtrace v1\n"
      "vars x\n"
      "process 1: w x 1 ; r x 1\n"
      "process 2: w x 2 ; r x 1\n";
  ParseResult p = parse(text);
  REQUIRE(p.ok());
  CHECK(p.document->raw.processes.size() == 2);
  std::size_t ops = 0;
  for (const auto& [pid, v] : p.document->raw.processes) ops += v.size();
  CHECK(ops == 4);
}

TEST_CASE("the empty file parses to the empty document") {
  ParseResult p = parse("");
  REQUIRE(p.ok());
  CHECK(p.document->raw.processes.empty());
}

TEST_CASE("a write missing its value is rejected with a location") {
  ParseResult p = parse("process 1: w x\n");
  REQUIRE_FALSE(p.ok());
  CHECK(p.error->line == 1);
  CHECK(p.error->message.find("value") != std::string::npos);
}

TEST_CASE("duplicate process lines are rejected") {
  ParseResult p = parse("process 1: w x 1\nprocess 1: w x 2\n");
  REQUIRE_FALSE(p.ok());
  CHECK(p.error->line == 2);
  CHECK(p.error->message.find("duplicate process") != std::string::npos);
}

TEST_CASE("duplicate syncorder lines are rejected") {
  ParseResult p = parse("syncorder s: 1\nsyncorder s: 2\n");
  REQUIRE_FALSE(p.ok());
  CHECK(p.error->line == 2);
}

TEST_CASE("unknown directives are rejected") {
  ParseResult p = parse("frobnicate x\n");
  REQUIRE_FALSE(p.ok());
  CHECK(p.error->message.find("unknown directive") != std::string::npos);
}

TEST_CASE("comments, blank lines and CRLF are tolerated") {
  ParseResult p = parse("# header\r\n\r\nprocess 1: w x 1  # trailing\r\n");
  REQUIRE(p.ok());
  REQUIRE(p.document->raw.processes.size() == 1);
  CHECK(p.document->raw.processes[0].second.size() == 1);
}

TEST_CASE("render emits the canonical form") {
  const Execution& ex = *find_fixture("fig2-sequential");
  CHECK(render(ex) ==
        "# memtrace v1\n"
        "vars x\n"
        "process 1: w x 1 ; r x 1\n"
        "process 2: w x 2 ; r x 1\n");
}

TEST_CASE("the empty execution renders to the header only") {
  Execution ex = *validate(RawTrace{}).execution;
  CHECK(render(ex) == "# memtrace v1\n");
}

TEST_CASE("sync executions render syncorder and bind lines") {
  Execution ex = TraceBuilder{}
                     .process(1).acq("s").w("x", 1).rel("s")
                     .process(2).acq("s").r("x", 1).rel("s")
                     .syncorder("s", {1, 2})
                     .bind("s", {"x"})
                     .build();
  std::string text = render(ex);
  CHECK(text.find("sync s\n") != std::string::npos);
  CHECK(text.find("bind s : x\n") != std::string::npos);
  CHECK(text.find("syncorder s: 1 2\n") != std::string::npos);
  auto back = parse_and_validate(text);
  REQUIRE(back.ok());
  CHECK(*back.execution == ex);
}

TEST_CASE("parse after render is the identity on all fixtures") {
  for (const Fixture& f : fixtures()) {
    INFO(f.name);
    std::string text = render(f.execution);
    auto back = parse_and_validate(text);
    REQUIRE(back.ok());
    CHECK(*back.execution == f.execution);
    CHECK(render(*back.execution) == text);
  }
}

TEST_CASE("parse after render is the identity on generated traces") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Execution ex = oracle::generate({.procs = 3,
                                     .vars = 3,
                                     .ops = 10,
                                     .read_ratio = 0.5,
                                     .sync_vars = seed % 3 == 0 ? 1u : 0u,
                                     .seed = seed});
    std::string text = render(ex);
    auto back = parse_and_validate(text);
    REQUIRE(back.ok());
    CHECK(*back.execution == ex);
  }
}

TEST_CASE("all fixtures validate and are present under traces/") {
  REQUIRE(fixtures().size() == 9);
  std::filesystem::path dir = std::filesystem::path(MEMCC_SOURCE_DIR) / "traces";
  for (const Fixture& f : fixtures()) {
    INFO(f.name);
    CHECK(slurp(dir / (f.name + ".mem")) == render(f.execution));
  }
}

TEST_CASE("fig-slow has the seven transcribed ops") {
  const Execution& ex = *find_fixture("fig-slow");
  REQUIRE(ex.size() == 7);
  CHECK(ex.format_ops(ex.process_ops(1)) == "w(1,x,1) w(1,x,2) w(1,y,3) r(1,y,4)");
  CHECK(ex.format_ops(ex.process_ops(2)) == "w(2,y,4) r(2,y,3) r(2,x,1)");
}

TEST_CASE("fig-causal-cache matches the diagram transcription") {
  const Execution& ex = *find_fixture("fig-causal-cache");
  CHECK(ex.format_ops(ex.process_ops(1)) == "r(1,y,2) r(1,x,3)");
  CHECK(ex.format_ops(ex.process_ops(2)) == "w(2,x,1) w(2,y,2)");
  CHECK(ex.format_ops(ex.process_ops(3)) == "w(3,x,3) r(3,x,1)");
}

TEST_CASE("fig4-causal aliases the fig3 diagram") {
  CHECK(find_fixture("fig4-causal") == find_fixture("fig3-nonsequential"));
  CHECK(find_fixture("no-such-fixture") == nullptr);
}
