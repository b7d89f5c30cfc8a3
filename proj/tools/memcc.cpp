// memcc: consistency-model checker for recorded shared-memory traces.
//
//   memcc check <trace> --model sequential [--witness] [--json]
//   memcc classify <trace> [--json]
//   memcc co <trace> [--relation po|cr]
//   memcc fuzz --seeds 100 --ops 7 --out corpus/
//
// A trace argument of the form @name resolves an embedded fixture.
// Exit codes for check: 0 holds, 1 fails, 2 invalid trace, 3 parse or usage
// error, 4 budget exhausted.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "memcc/appendix_search.hpp"
#include "memcc/core.hpp"
#include "memcc/linearize.hpp"
#include "memcc/models.hpp"
#include "memcc/oracle.hpp"
#include "memcc/orders.hpp"
#include "memcc/tracefmt.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace memcc;

namespace {

constexpr int kExitHolds = 0;
constexpr int kExitFails = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitUsage = 3;
constexpr int kExitBudget = 4;

struct LoadedTrace {
  Execution execution;
  std::string name;
};

// @fixture-name or a file path; diagnostics go to stderr only.
std::optional<LoadedTrace> load_trace(const std::string& arg, int& exit_code) {
  if (!arg.empty() && arg[0] == '@') {
    const Execution* fx = find_fixture(arg.substr(1));
    if (!fx) {
      std::cerr << "memcc: unknown fixture '" << arg << "'\n";
      exit_code = kExitUsage;
      return std::nullopt;
    }
    return LoadedTrace{*fx, arg};
  }
  std::ifstream in(arg);
  if (!in.good()) {
    std::cerr << "memcc: cannot read '" << arg << "'\n";
    exit_code = kExitUsage;
    return std::nullopt;
  }
  std::ostringstream os;
  os << in.rdbuf();
  ParseResult p = parse(os.str());
  if (!p.ok()) {
    std::cerr << "memcc: " << arg << ": " << p.error->str() << "\n";
    exit_code = kExitUsage;
    return std::nullopt;
  }
  ValidationResult v = validate(p.document->raw);
  if (!v.ok()) {
    for (const auto& e : v.errors)
      std::cerr << "memcc: " << arg << ": [" << validation_kind_name(e.kind) << "] " << e.message << "\n";
    exit_code = kExitInvalid;
    return std::nullopt;
  }
  return LoadedTrace{*std::move(v.execution), arg};
}

std::string holds_str(Holds h) {
  switch (h) {
    case Holds::Yes: return "holds";
    case Holds::No: return "fails";
    default: return "unknown";
  }
}

json verdict_json(const Execution& ex, const Verdict& v, bool witnesses) {
  json out;
  if (v.holds == Holds::Unknown) out["holds"] = "unknown";
  else out["holds"] = v.holds == Holds::Yes;
  out["witnesses"] = json::array();
  if (witnesses && v.holds == Holds::Yes)
    for (const auto& iw : v.witnesses) out["witnesses"].push_back(ex.format_ops(iw.witness.order));
  if (v.failing) out["failing_instance"] = v.failing->label(ex);
  else out["failing_instance"] = nullptr;
  if (!v.write_orders.empty()) {
    json orders = json::array();
    for (const auto& ord : v.write_orders) orders.push_back(ex.format_ops(ord));
    out["write_orders"] = orders;
  }
  return out;
}

json co_json(const Execution& ex, const Relation& seed) {
  CoPrecheckResult pre = co_precheck(ex, seed);
  Relation with_wt = seed.union_with(writes_to(ex));
  if (ex.has_sync_ops()) with_wt = with_wt.union_with(mutual_exclusion_order(ex));
  auto deps = co_dependencies(ex, with_wt);
  json edges = json::array();
  for (const auto& d : deps) edges.push_back({ex.format_op(d.from), ex.format_op(d.to)});
  json out;
  out["edges"] = edges;
  out["acyclic"] = pre.acyclic;
  return out;
}

void print_verdict_text(const Execution& ex, const Verdict& v, bool witnesses) {
  std::cout << model_name(v.model) << ": " << holds_str(v.holds);
  if (v.failing && (v.failing->process || v.failing->variable)) std::cout << " at " << v.failing->label(ex);
  std::cout << "\n";
  for (const auto& note : v.notes) std::cerr << "note: " << note << "\n";
  if (witnesses && v.holds == Holds::Yes) {
    for (const auto& iw : v.witnesses)
      std::cout << "  witness " << iw.key.label(ex) << ": " << ex.format_ops(iw.witness.order) << "\n";
    if (!v.write_orders.empty())
      for (const auto& ord : v.write_orders) std::cout << "  write order: " << ex.format_ops(ord) << "\n";
  }
  if (v.holds == Holds::No && v.refutation && v.refutation->co_cycle)
    std::cout << "  co cycle: " << ex.format_ops(v.refutation->cycle) << "\n";
}

int run_check(const std::string& trace, const std::string& model_arg, const CheckOptions& opts, bool witness,
              bool as_json) {
  auto model = model_from_name(model_arg);
  if (!model) {
    std::cerr << "memcc: unknown model '" << model_arg << "'\n";
    return kExitUsage;
  }
  int code = 0;
  auto loaded = load_trace(trace, code);
  if (!loaded) return code;
  Verdict v = check_model(loaded->execution, *model, opts);
  if (as_json) {
    json out;
    out["trace"] = loaded->name;
    out["valid"] = true;
    out["po_mode"] = opts.po_mode == POMode::Strict ? "strict" : "lazy";
    out["models"][std::string(model_name(*model))] = verdict_json(loaded->execution, v, witness);
    out["co"] = co_json(loaded->execution, program_order(loaded->execution, opts.po_mode));
    std::cout << out.dump(2) << "\n";
  } else {
    if (opts.po_mode == POMode::Lazy) std::cerr << "note: lazy process order mode (extension)\n";
    print_verdict_text(loaded->execution, v, witness);
  }
  if (v.holds == Holds::Unknown) return kExitBudget;
  return v.holds == Holds::Yes ? kExitHolds : kExitFails;
}

int run_classify(const std::string& trace, const CheckOptions& opts, bool witness, bool as_json) {
  int code = 0;
  auto loaded = load_trace(trace, code);
  if (!loaded) return code;
  Classification c = classify(loaded->execution, opts);
  auto tri = [](Holds h) -> json {
    if (h == Holds::Unknown) return "unknown";
    return h == Holds::Yes;
  };
  if (as_json) {
    json out;
    out["trace"] = loaded->name;
    out["valid"] = true;
    out["po_mode"] = opts.po_mode == POMode::Strict ? "strict" : "lazy";
    for (const auto& [m, v] : c.verdicts)
      out["models"][std::string(model_name(m))] = verdict_json(loaded->execution, v, witness);
    out["conjunctions"]["pram_and_cache"] = tri(c.pram_and_cache);
    out["conjunctions"]["causal_and_cache"] = tri(c.causal_and_cache);
    out["conjunctions"]["causal_pram_cache_processor"] = tri(c.causal_pram_cache_processor);
    out["co"] = co_json(loaded->execution, program_order(loaded->execution, opts.po_mode));
    std::cout << out.dump(2) << "\n";
  } else {
    if (opts.po_mode == POMode::Lazy) std::cerr << "note: lazy process order mode (extension)\n";
    for (const auto& [m, v] : c.verdicts) print_verdict_text(loaded->execution, v, witness);
    std::cout << "pram+cache: " << holds_str(c.pram_and_cache) << "\n";
    std::cout << "causal+cache: " << holds_str(c.causal_and_cache) << "\n";
    std::cout << "causal+pram+cache+processor: " << holds_str(c.causal_pram_cache_processor) << "\n";
  }
  return kExitHolds;
}

int run_co(const std::string& trace, const std::string& relation, bool as_json) {
  int code = 0;
  auto loaded = load_trace(trace, code);
  if (!loaded) return code;
  const Execution& ex = loaded->execution;
  Relation seed = relation == "cr" ? causal_relation(ex) : process_order(ex);
  Relation with_wt = seed.union_with(writes_to(ex));
  if (ex.has_sync_ops()) with_wt = with_wt.union_with(mutual_exclusion_order(ex));
  auto deps = co_dependencies(ex, with_wt);
  CoPrecheckResult pre = co_precheck(ex, seed);
  if (as_json) {
    json out;
    out["trace"] = loaded->name;
    out["valid"] = true;
    out["relation"] = relation;
    out["co"] = co_json(ex, seed);
    if (!pre.acyclic) {
      json cyc = json::array();
      for (OpId id : pre.cycle) cyc.push_back(ex.format_op(id));
      out["co"]["cycle"] = cyc;
    }
    std::cout << out.dump(2) << "\n";
  } else {
    for (const auto& d : deps)
      std::cout << (d.is_ww ? "WW " : "RW ") << ex.format_op(d.from) << " -> " << ex.format_op(d.to) << "\n";
    if (pre.acyclic) std::cout << "acyclic\n";
    else std::cout << "cycle: " << ex.format_ops(pre.cycle) << "\n";
  }
  return kExitHolds;
}

int run_fuzz(std::uint64_t seeds, std::uint64_t base_seed, std::uint32_t ops, std::uint32_t procs,
             std::uint32_t vars, double read_ratio, std::uint32_t sync_vars, const std::string& out_dir,
             std::uint64_t budget) {
  fs::create_directories(out_dir);
  std::ofstream manifest(fs::path(out_dir) / "manifest.tsv");
  manifest << "seed\tfile\tclassification\n";
  std::vector<oracle::Violation> violations;
  CheckOptions opts;
  opts.budget = budget;
  for (std::uint64_t i = 0; i < seeds; ++i) {
    std::uint64_t seed = base_seed + i;
    Execution ex = oracle::generate({.procs = procs, .vars = vars, .ops = ops, .read_ratio = read_ratio,
                                     .sync_vars = sync_vars, .seed = seed});
    std::ostringstream name;
    name << std::setw(5) << std::setfill('0') << seed << ".mem";
    std::ofstream(fs::path(out_dir) / name.str()) << render(ex);

    Classification c = classify(ex, opts);
    std::string label;
    for (const auto& [m, v] : c.verdicts)
      if (v.holds == Holds::Yes) label += std::string(model_name(m)) + " ";
    manifest << seed << "\t" << name.str() << "\t" << label << "\n";
    oracle::append_implication_violations(name.str(), c, violations);

    // oracle equivalence on traces the permutation oracle can afford
    if (ex.size() <= oracle::kBruteForceMaxOps) {
      LinearizeResult mine = linearize(ex, process_order(ex), {budget});
      auto brute = oracle::brute_force_linearize(ex, process_order(ex));
      if (mine.status != LinearizeStatus::Budget && mine.linearizable() != brute.linearizable())
        violations.push_back({name.str(), "linearizer disagrees with brute force on process order"});
    }
  }
  for (const auto& v : violations) std::cerr << "Violation: " << v.trace << ": " << v.message << "\n";
  std::cout << "fuzzed " << seeds << " traces into " << out_dir << "; violations: " << violations.size() << "\n";
  return violations.empty() ? kExitHolds : kExitFails;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"memcc: consistency model checker for shared-memory traces"};
  app.require_subcommand(0, 1);

  bool list_fixtures = false;
  app.add_flag("--fixtures", list_fixtures, "list embedded paper fixtures and exit");

  std::string trace, model = "sequential", relation = "po", out_dir = "corpus";
  bool witness = false, as_json = false, lazy = false;
  std::uint64_t budget = 10'000'000;
  std::uint64_t seeds = 100, base_seed = 1;
  std::uint32_t ops = 7, procs = 3, vars = 3, sync_vars = 0;
  double read_ratio = 0.5;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_flag("--witness", witness, "print witness sequences");
    cmd->add_flag("--json", as_json, "machine-readable output");
    cmd->add_option("--budget", budget, "search node budget");
    cmd->add_option("--po",
                    [&lazy](const std::vector<std::string>& vals) {
                      if (vals[0] == "lazy") lazy = true;
                      else if (vals[0] == "strict") lazy = false;
                      else return false;
                      return true;
                    },
                    "process order mode: strict|lazy");
  };

  CLI::App* check = app.add_subcommand("check", "check one model");
  check->add_option("trace", trace, "trace file or @fixture")->required();
  check->add_option("--model", model, "model to check")->required();
  add_common(check);

  CLI::App* cls = app.add_subcommand("classify", "run all model checkers");
  cls->add_option("trace", trace, "trace file or @fixture")->required();
  add_common(cls);

  CLI::App* co = app.add_subcommand("co", "report forced CO dependencies and cycles");
  co->add_option("trace", trace, "trace file or @fixture")->required();
  co->add_option("--relation", relation, "base relation: po|cr")->check(CLI::IsMember({"po", "cr"}));
  co->add_flag("--json", as_json, "machine-readable output");

  CLI::App* fuzz = app.add_subcommand("fuzz", "generate a corpus and check invariants");
  fuzz->add_option("--seeds", seeds, "number of traces");
  fuzz->add_option("--base-seed", base_seed, "first seed");
  fuzz->add_option("--ops", ops, "operations per trace");
  fuzz->add_option("--procs", procs, "process count");
  fuzz->add_option("--vars", vars, "variable count");
  fuzz->add_option("--read-ratio", read_ratio, "fraction of reads");
  fuzz->add_option("--sync-vars", sync_vars, "synchronization variable count");
  fuzz->add_option("--out", out_dir, "corpus directory");
  fuzz->add_option("--budget", budget, "search node budget");

  CLI::App* witness_cmd = app.add_subcommand("appendix-witness", "search for an acyclic-CO non-sequential execution");
  std::uint32_t max_ops = 15, max_vars = 5;
  std::uint64_t samples = 200'000;
  witness_cmd->add_option("--max-ops", max_ops, "operation bound");
  witness_cmd->add_option("--max-vars", max_vars, "variable bound");
  witness_cmd->add_option("--samples", samples, "randomized samples per triplet count");

  CLI11_PARSE(app, argc, argv);

  if (list_fixtures) {
    for (const Fixture& f : fixtures()) std::cout << f.name << " (" << f.execution.size() << " ops)\n";
    return kExitHolds;
  }

  CheckOptions opts;
  opts.po_mode = lazy ? POMode::Lazy : POMode::Strict;
  opts.budget = budget;

  try {
    if (check->parsed()) return run_check(trace, model, opts, witness, as_json);
    if (cls->parsed()) return run_classify(trace, opts, witness, as_json);
    if (co->parsed()) return run_co(trace, relation, as_json);
    if (fuzz->parsed()) return run_fuzz(seeds, base_seed, ops, procs, vars, read_ratio, sync_vars, out_dir, budget);
    if (witness_cmd->parsed()) {
      auto out = oracle::find_acyclic_co_nonsequential({.max_ops = max_ops, .max_vars = max_vars, .samples = samples});
      std::cout << out.report << "\n";
      if (out.found()) std::cout << render(*out.execution);
      return out.found() ? kExitHolds : kExitFails;
    }
  } catch (const std::exception& e) {
    std::cerr << "memcc: " << e.what() << "\n";
    return kExitUsage;
  }
  std::cout << app.help();
  return kExitUsage;
}
