// simpli2: plan, rewrite, compare and benchmark join orders.
//
// Exit status: 0 success, 2 input error, 3 environment error.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "bench/bench.hpp"
#include "db/connection.hpp"
#include "simpli2/catalog.hpp"
#include "simpli2/costlab/compare.hpp"
#include "simpli2/costlab/generator.hpp"
#include "simpli2/join_graph.hpp"
#include "simpli2/planner.hpp"
#include "simpli2/query.hpp"
#include "simpli2/rewriter.hpp"

namespace fs = std::filesystem;
using namespace simpli2;

namespace {

constexpr int exit_input = 2;
constexpr int exit_environment = 3;

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path + "'");
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
}

struct PlanArgs {
  std::string schema, query;
  std::string algo = "simpli2";
  bool avoid_cartesian = false;
  bool transitive = false;
  bool json = false;
};

void add_plan_options(CLI::App* cmd, PlanArgs& a) {
  cmd->add_option("--schema,-s", a.schema, "catalog file (JSON)")->required();
  cmd->add_option("--query,-q", a.query, "query file (SQL)")->required();
  cmd->add_option("--algo", a.algo, "simpli2 | size-asc | size-desc")
      ->check(CLI::IsMember({"simpli2", "size-asc", "size-desc"}));
  cmd->add_flag("--avoid-cartesian", a.avoid_cartesian, "size sorts only take tables joining the prefix");
  cmd->add_flag("--transitive", a.transitive, "add implied equi-joins before planning");
  cmd->add_flag("--json", a.json, "machine-readable output");
}

struct Planned {
  Catalog cat;
  QueryModel query;
  JoinGraph graph;
  JoinOrder order;
};

JoinOrder order_for(const JoinGraph& g, const std::string& algo, bool avoid_cartesian) {
  if (algo == "size-asc") return size_order(g, SizeDirection::ascending, avoid_cartesian);
  if (algo == "size-desc") return size_order(g, SizeDirection::descending, avoid_cartesian);
  return simpli2_order(g);
}

Planned plan(const PlanArgs& a) {
  Planned p;
  p.cat = load_catalog(a.schema);
  p.query = parse_query(read_text(a.query), p.cat);
  p.graph = build_join_graph(p.query, p.cat, a.transitive);
  p.order = order_for(p.graph, a.algo, a.avoid_cartesian);
  return p;
}

int cmd_plan(const PlanArgs& a) {
  auto p = plan(a);
  if (a.json) std::cout << to_json(p.order).dump(2) << "\n";
  else std::cout << render_report(p.order);
  return 0;
}

int cmd_rewrite(const PlanArgs& a, const std::string& mode, const std::string& target) {
  auto p = plan(a);
  auto r = rewrite(p.query, p.order, parse_rewrite_mode(mode), parse_profile(target));
  if (a.json) {
    std::cout << to_json(r).dump(2) << "\n";
    return 0;
  }
  for (const auto& s : r.prologue) std::cout << s << ";\n";
  if (!r.prologue.empty()) std::cout << "\n";
  std::cout << r.sql << "\n";
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  return 0;
}

std::string yes_no(const std::optional<bool>& b) { return b ? (*b ? "yes" : "NO") : "-"; }

void print_comparison(std::ostream& out, const std::string& label, const costlab::Comparison& c) {
  for (const auto& r : c.rows) {
    out << label << '\t' << r.algorithm << '\t' << to_string(r.status) << '\t';
    if (r.cost) {
      out << r.cost->analytical_cost << '\t';
      for (std::size_t i = 0; i < r.cost->order.sequence.size(); ++i) out << (i ? "," : "") << r.cost->order.sequence[i];
    } else {
      out << "-\t-";
    }
    out << '\t' << yes_no(r.subquery_equivalent) << '\t' << yes_no(r.leftdeep_equivalent) << '\t' << r.note << '\n';
  }
}

struct CompareArgs {
  std::string schema, query, data;
  std::size_t generate = 0;
  std::uint64_t seed = 1;
  std::size_t datasets = 1;
  std::size_t min_tables = 2, max_tables = 6;
  std::size_t max_rows = 500;
  std::string topology = "mixed";
  std::size_t dp_bound = 10;
  bool cartesian = false;
  bool json = false;
  std::uint64_t row_ceiling = 1'000'000;
};

int cmd_compare(const CompareArgs& a) {
  costlab::CompareOptions options;
  options.dp_bound = a.dp_bound;
  options.cartesian_baselines = a.cartesian;
  options.exec.row_ceiling = a.row_ceiling;

  std::size_t checks = 0, equivalent = 0, dominated = 0, instances = 0;
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  auto tally = [&](const costlab::Comparison& c) {
    ++instances;
    const auto* best = c.find("optimal");
    bool ok = true;
    for (const auto& r : c.rows) {
      for (const auto& e : {r.subquery_equivalent, r.leftdeep_equivalent}) {
        if (!e) continue;
        ++checks;
        equivalent += *e ? 1 : 0;
      }
      if (best && best->cost && r.cost && r.cost->analytical_cost < best->cost->analytical_cost) ok = false;
    }
    dominated += ok ? 1 : 0;
  };
  if (!a.json) std::cout << "instance\talgorithm\tstatus\tcost\tsequence\tsubquery_eq\tleftdeep_eq\tnote\n";

  if (a.generate > 0) {
    for (std::size_t i = 0; i < a.generate; ++i) {
      costlab::GeneratorConfig config;
      config.seed = a.seed + i;
      config.topology = costlab::parse_topology(a.topology);
      config.tables = a.min_tables + static_cast<std::size_t>(config.seed % (a.max_tables - a.min_tables + 1));
      config.max_rows = a.max_rows;
      config.min_rows = std::min<std::size_t>(config.min_rows, a.max_rows);
      auto inst = costlab::generate_instance(config);
      auto g = build_join_graph(inst.query, inst.catalog);
      for (std::size_t d = 0; d < a.datasets; ++d) {
        auto data = d == 0 ? inst.data : costlab::generate_dataset(inst.catalog, config.seed * 1000 + d);
        auto c = costlab::compare_orders(data, inst.query, g, options);
        tally(c);
        std::string label = "seed" + std::to_string(config.seed) + "/d" + std::to_string(d);
        if (a.json) doc.push_back({{"instance", label}, {"rows", to_json(c)}});
        else print_comparison(std::cout, label, c);
      }
    }
  } else {
    if (a.schema.empty() || a.query.empty() || a.data.empty())
      throw Error("compare needs --schema, --query and --data, or --generate N");
    auto cat = load_catalog(a.schema);
    auto q = parse_query(read_text(a.query), cat);
    auto tables = costlab::load_dataset(a.data);
    auto c = costlab::compare_orders(tables, q, build_join_graph(q, cat), options);
    tally(c);
    if (a.json) doc.push_back({{"instance", a.query}, {"rows", to_json(c)}});
    else print_comparison(std::cout, fs::path(a.query).stem().string(), c);
  }
  if (a.json) {
    std::cout << doc.dump(2) << "\n";
  } else {
    std::cout << "# equivalence " << equivalent << "/" << checks << ", optimal dominates " << dominated << "/"
              << instances << "\n";
  }
  return equivalent == checks && dominated == instances ? 0 : 1;
}

struct GenerateArgs {
  std::uint64_t seed = 1;
  std::string topology = "mixed";
  std::size_t tables = 4;
  std::size_t min_rows = 5, max_rows = 500;
  double skew = 1.5;
  std::string out;
};

int cmd_generate(const GenerateArgs& a) {
  costlab::GeneratorConfig config;
  config.seed = a.seed;
  config.topology = costlab::parse_topology(a.topology);
  config.tables = a.tables;
  config.min_rows = a.min_rows;
  config.max_rows = a.max_rows;
  config.skew = a.skew;
  auto inst = costlab::generate_instance(config);
  fs::create_directories(a.out);
  write_text((fs::path(a.out) / "catalog.json").string(), to_json(inst.catalog).dump(2) + "\n");
  write_text((fs::path(a.out) / "query.sql").string(), inst.sql);
  costlab::save_dataset(inst.data, fs::path(a.out) / "data");
  std::cout << "wrote " << a.out << " (seed " << a.seed << ", " << costlab::to_string(config.topology) << ", "
            << inst.query.instances.size() << " tables)\n";
  return 0;
}

struct BenchArgs {
  std::string schema, queries, url, out, modes = "original,subquery,leftdeep,size-desc";
  std::vector<std::string> query_files;
  std::size_t runs = 5;
  double timeout_s = 60;
};

std::vector<bench::NamedQuery> collect_queries(const BenchArgs& a) {
  std::vector<bench::NamedQuery> out;
  std::vector<fs::path> paths;
  for (const auto& f : a.query_files) paths.emplace_back(f);
  if (!a.queries.empty()) {
    if (!fs::is_directory(a.queries)) throw Error("query directory '" + a.queries + "' does not exist");
    std::vector<fs::path> found;
    for (const auto& e : fs::directory_iterator(a.queries))
      if (e.path().extension() == ".sql") found.push_back(e.path());
    std::sort(found.begin(), found.end());
    paths.insert(paths.end(), found.begin(), found.end());
  }
  if (paths.empty()) throw Error("no queries given (use --queries DIR or --query FILE)");
  for (const auto& p : paths) out.push_back({p.stem().string(), read_text(p.string())});
  return out;
}

int cmd_bench(const BenchArgs& a) {
  bench::BenchConfig config;
  auto url = db::resolve_url(a.url);
  if (!url) throw EnvironmentError("no database configured: set DB_URL or pass --db-url");
  config.url = *url;
  config.runs = a.runs;
  config.timeout = std::chrono::milliseconds(static_cast<long long>(a.timeout_s * 1000));
  config.modes.clear();
  std::stringstream list(a.modes);
  for (std::string m; std::getline(list, m, ',');)
    if (!m.empty()) config.modes.push_back(bench::parse_mode(m));
  config.validate();

  auto cat = load_catalog(a.schema);
  auto queries = collect_queries(a);
  auto conn = db::connect(config.url);
  auto report = bench::run_bench(*conn, cat, queries, config);
  std::ostringstream tsv;
  bench::write_tsv(report, tsv);
  write_text(a.out, tsv.str());
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  return 0;
}

int cmd_extract(const std::string& flag_url, const std::string& out) {
  auto url = db::resolve_url(flag_url);
  if (!url) throw EnvironmentError("no database configured: set DB_URL or pass --db-url");
  auto conn = db::connect(*url);
  auto extracted = bench::extract_catalog(*conn);
  for (const auto& w : extracted.warnings) std::cerr << "warning: " << w << "\n";
  write_text(out, to_json(extracted.catalog).dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Statistics-free join ordering: plan, rewrite, compare, bench"};
  app.require_subcommand(1);

  PlanArgs plan_args;
  auto* plan_cmd = app.add_subcommand("plan", "print the join order for a query");
  add_plan_options(plan_cmd, plan_args);

  PlanArgs rewrite_args;
  std::string mode = "subquery", target = "postgres-compatible";
  auto* rewrite_cmd = app.add_subcommand("rewrite", "emit SQL that pins the join order");
  add_plan_options(rewrite_cmd, rewrite_args);
  rewrite_cmd->add_option("--mode", mode, "subquery | leftdeep")->check(CLI::IsMember({"subquery", "leftdeep"}));
  rewrite_cmd->add_option("--target", target, "generic | postgres-compatible")
      ->check(CLI::IsMember({"generic", "postgres-compatible", "postgres"}));

  CompareArgs compare_args;
  auto* compare_cmd = app.add_subcommand("compare", "analytical cost of each order on small data");
  compare_cmd->add_option("--schema,-s", compare_args.schema, "catalog file");
  compare_cmd->add_option("--query,-q", compare_args.query, "query file");
  compare_cmd->add_option("--data,-d", compare_args.data, "directory of <table>.csv files");
  compare_cmd->add_option("--generate", compare_args.generate, "instead, run N generated instances");
  compare_cmd->add_option("--seed", compare_args.seed, "first generator seed");
  compare_cmd->add_option("--datasets", compare_args.datasets, "datasets per generated query")
      ->check(CLI::PositiveNumber);
  compare_cmd->add_option("--min-tables", compare_args.min_tables)->check(CLI::Range(1, 14));
  compare_cmd->add_option("--max-tables", compare_args.max_tables)->check(CLI::Range(1, 14));
  compare_cmd->add_option("--max-rows", compare_args.max_rows)->check(CLI::PositiveNumber);
  compare_cmd->add_option("--topology", compare_args.topology, "star | chain | snowflake | cyclic | mixed");
  compare_cmd->add_option("--dp-bound", compare_args.dp_bound, "largest query searched exhaustively");
  compare_cmd->add_option("--row-ceiling", compare_args.row_ceiling, "abort any intermediate larger than this");
  compare_cmd->add_flag("--cartesian", compare_args.cartesian, "let size baselines take Cartesian steps");
  compare_cmd->add_flag("--json", compare_args.json, "machine-readable output");

  GenerateArgs gen_args;
  auto* gen_cmd = app.add_subcommand("generate", "write a random schema, query and dataset");
  gen_cmd->add_option("--seed", gen_args.seed);
  gen_cmd->add_option("--topology", gen_args.topology, "star | chain | snowflake | cyclic | mixed");
  gen_cmd->add_option("--tables", gen_args.tables)->check(CLI::Range(1, 14));
  gen_cmd->add_option("--min-rows", gen_args.min_rows)->check(CLI::PositiveNumber);
  gen_cmd->add_option("--max-rows", gen_args.max_rows)->check(CLI::PositiveNumber);
  gen_cmd->add_option("--skew", gen_args.skew, "exponent on foreign-key draws");
  gen_cmd->add_option("--out,-o", gen_args.out, "output directory")->required();

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "time each mode on a live database");
  bench_cmd->add_option("--schema,-s", bench_args.schema, "catalog file")->required();
  bench_cmd->add_option("--queries", bench_args.queries, "directory of .sql files");
  bench_cmd->add_option("--query,-q", bench_args.query_files, "query file (repeatable)");
  bench_cmd->add_option("--db-url", bench_args.url, "overrides DB_URL");
  bench_cmd->add_option("--runs", bench_args.runs)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--modes", bench_args.modes, "comma list of original,subquery,leftdeep,size-desc");
  bench_cmd->add_option("--timeout", bench_args.timeout_s, "seconds per statement")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--out,-o", bench_args.out, "report file (TSV); stdout if omitted");

  std::string extract_url, extract_out;
  auto* extract_cmd = app.add_subcommand("extract-catalog", "build a catalog file from a live database");
  extract_cmd->add_option("--db-url", extract_url, "overrides DB_URL");
  extract_cmd->add_option("--out,-o", extract_out, "catalog file; stdout if omitted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : exit_input;
  }

  try {
    if (*plan_cmd) return cmd_plan(plan_args);
    if (*rewrite_cmd) return cmd_rewrite(rewrite_args, mode, target);
    if (*compare_cmd) return cmd_compare(compare_args);
    if (*gen_cmd) return cmd_generate(gen_args);
    if (*bench_cmd) return cmd_bench(bench_args);
    if (*extract_cmd) return cmd_extract(extract_url, extract_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.category() == Error::Category::environment ? exit_environment : exit_input;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
