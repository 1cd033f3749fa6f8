// bhin2vec command-line driver.
//
// Exit codes: 0 success, 1 runtime error, 2 usage or validation error.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bhin/error.hpp"
#include "bhin/eval.hpp"
#include "bhin/hetgraph.hpp"
#include "bhin/io.hpp"
#include "bhin/synthetic.hpp"
#include "bhin/trainer.hpp"

namespace fs = std::filesystem;
using namespace bhin;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Thrown for problems with the command line itself; mapped to exit 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Every TrainConfig key, exposed as --key (and --key-with-dashes where the key
// has underscores). Values are kept as text and applied through
// TrainConfig::set so file and flag parsing share one code path.
constexpr const char* kConfigKeys[] = {"l",     "e",           "k",    "m",
                                       "d",     "r",           "r2",   "alpha",
                                       "batch_walks", "seed",  "walk_mode", "negative_power",
                                       "history_every", "lr_decay", "ratio_ema"};

struct TrainFlags {
  std::string config_path;
  std::map<std::string, std::string> overrides;
  std::size_t min_degree = 2;
  std::size_t threads = 1;
};

void add_train_flags(CLI::App& cmd, TrainFlags& flags) {
  cmd.add_option("--config", flags.config_path, "key = value config file; flags override it")
      ->check(CLI::ExistingFile);
  for (const char* key : kConfigKeys) {
    std::string names = std::string("--") + key;
    std::string dashed = key;
    std::replace(dashed.begin(), dashed.end(), '_', '-');
    if (dashed != key) names += ",--" + dashed;
    cmd.add_option_function<std::string>(
        names, [&flags, key](const std::string& value) { flags.overrides[key] = value; },
        "TrainConfig." + std::string(key));
  }
  cmd.add_option("--min-degree", flags.min_degree, "drop nodes below this degree when loading")
      ->capture_default_str();
  cmd.add_option("--threads", flags.threads, "worker threads for evaluation")->check(CLI::PositiveNumber);
}

TrainConfig resolve_config(const TrainFlags& flags) {
  try {
    TrainConfig cfg = flags.config_path.empty() ? TrainConfig{} : load_config(flags.config_path);
    for (const auto& [key, value] : flags.overrides) cfg.set(key, value);
    cfg.validate();
    return cfg;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kInvalidArgument || e.kind() == ErrorKind::kMalformedRecord) {
      throw UsageError(e.what());
    }
    throw;
  }
}

LoadResult load_inputs(const std::string& edges, const std::string& types, std::size_t min_degree) {
  LoadResult loaded = load_graph(edges, types, min_degree);
  if (!loaded.dropped.empty()) {
    std::cerr << "dropped " << loaded.dropped.size() << " node(s) with degree < " << min_degree << '\n';
  }
  return loaded;
}

nlohmann::ordered_json config_json(const TrainConfig& cfg) {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  std::istringstream lines(cfg.to_text());
  std::string line;
  while (std::getline(lines, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) out[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return out;
}

// ---- train ---------------------------------------------------------------

struct TrainArgs {
  std::string edges, types, out, checkpoint;
  bool binary = false;
  TrainFlags flags;
};

int cmd_train(const TrainArgs& args) {
  const TrainConfig cfg = resolve_config(args.flags);
  const auto started = std::chrono::steady_clock::now();
  const LoadResult loaded = load_inputs(args.edges, args.types, args.flags.min_degree);
  const HetGraph& g = loaded.graph;

  const TrainResult result = train(g, cfg);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  const fs::path out(args.out);
  fs::create_directories(out);
  atomic_write(out / "embeddings.txt", [&](std::ostream& o) { write_embeddings_text(result.store, g, o); });
  if (args.binary) write_embeddings_binary(result.store, g, out / "embeddings.f32", out / "embeddings.index");
  atomic_write(out / "dropped_nodes.txt", [&](std::ostream& o) { write_dropped_report(loaded.dropped, o); });
  if (result.p) {
    atomic_write(out / "transition_matrix.csv",
                 [&](std::ostream& o) { write_matrix_csv(result.p->values(), g.type_names(), o); });
    atomic_write(out / "p_history.csv",
                 [&](std::ostream& o) { write_history_csv(result.history, g.type_names(), o); });
  }
  if (!args.checkpoint.empty()) {
    const StochasticMatrix p = result.p ? *result.p : uniform_stochastic_matrix(build_meta_network(g));
    save_checkpoint(args.checkpoint, cfg, result.store, p, result.tracker);
  }

  nlohmann::ordered_json manifest;
  manifest["command"] = "train";
  manifest["mode"] = std::string(to_string(cfg.walk_mode));
  manifest["seed"] = cfg.seed;
  manifest["config"] = config_json(cfg);
  manifest["inputs"] = {{"edges", args.edges}, {"types", args.types}, {"min_degree", args.flags.min_degree}};
  manifest["graph"] = {{"nodes", g.node_count()},
                       {"edges", g.edge_count()},
                       {"types", g.type_names()},
                       {"dropped_nodes", loaded.dropped.size()}};
  manifest["stats"] = {{"walks", result.stats.walks},
                       {"p_updates", result.stats.p_updates},
                       {"mean_loss_per_epoch", result.stats.mean_loss_per_epoch}};
  manifest["wall_clock_seconds"] = seconds;
  atomic_write(out / "manifest.json", [&](std::ostream& o) { o << manifest.dump(2) << '\n'; });

  std::cout << "trained " << g.node_count() << " nodes, " << cfg.e << " epoch(s), mode "
            << to_string(cfg.walk_mode) << " -> " << out.string() << '\n';
  return 0;
}

// ---- eval-linkpred -------------------------------------------------------

struct LinkPredArgs {
  std::string edges, types, out;
  double fraction = 0.2;
  std::size_t candidates = 99;
  TrainFlags flags;
};

int cmd_eval_linkpred(const LinkPredArgs& args) {
  const TrainConfig cfg = resolve_config(args.flags);
  const LoadResult loaded = load_inputs(args.edges, args.types, args.flags.min_degree);
  const HetGraph& g = loaded.graph;

  const Rng root(cfg.seed);
  Rng split_rng = root.split("split");
  const EdgeSplit split = split_edges(g, args.fraction, split_rng);
  const TrainResult result = train(split.train_graph, cfg);

  Rng eval_rng = root.split("eval");
  RankingOptions ranking;
  ranking.candidates = args.candidates;
  ClassifierOptions clf;
  clf.threads = args.flags.threads;
  const HitRateReport report = link_prediction_hit10(result.store, split, g, eval_rng, ranking, clf);

  const fs::path out(args.out);
  fs::create_directories(out);
  atomic_write(out / "linkpred.csv", [&](std::ostream& o) { write_hit_rate_csv(report, g.type_names(), o); });
  nlohmann::ordered_json manifest;
  manifest["command"] = "eval-linkpred";
  manifest["mode"] = std::string(to_string(cfg.walk_mode));
  manifest["seed"] = cfg.seed;
  manifest["config"] = config_json(cfg);
  manifest["fraction"] = args.fraction;
  manifest["test_edges"] = split.test_edges.size();
  atomic_write(out / "manifest.json", [&](std::ostream& o) { o << manifest.dump(2) << '\n'; });

  for (const auto& t : report.tasks) {
    std::cout << g.type_name(t.source) << "->" << g.type_name(t.target) << " hit@10 " << t.hit_rate() << " ("
              << t.evaluated << " evaluated, " << t.skipped << " skipped)\n";
  }
  std::cout << "average hit@10 " << report.average << '\n';
  return 0;
}

// ---- eval-nodeclass ------------------------------------------------------

struct NodeClassArgs {
  std::string embeddings, types, labels, out;
  double train_fraction = 0.8;
  std::size_t repeats = 10;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

int cmd_eval_nodeclass(const NodeClassArgs& args) {
  const EmbeddingTable table = read_embeddings_text(args.embeddings);
  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < table.names.size(); ++i) row_of.emplace(table.names[i], i);
  std::unordered_map<std::string, std::string> type_of;
  for (auto& [node, type] : read_two_columns(args.types)) type_of.emplace(std::move(node), std::move(type));

  std::vector<LabeledNode> nodes;
  std::size_t missing = 0;
  for (auto& [node, label] : read_two_columns(args.labels)) {
    const auto row = row_of.find(node);
    const auto type = type_of.find(node);
    if (row == row_of.end() || type == type_of.end()) {
      ++missing;
      continue;
    }
    nodes.push_back({table.row(row->second), type->second, std::move(label)});
  }
  if (missing > 0) std::cerr << missing << " labeled node(s) have no embedding or type and were skipped\n";

  Rng rng = Rng(args.seed).split("nodeclass");
  ClassifierOptions clf;
  clf.threads = args.threads;
  const NodeClassReport report = node_classification_f1(nodes, args.train_fraction, args.repeats, rng, clf);
  if (args.out.empty()) {
    write_node_class_csv(report, std::cout);
  } else {
    atomic_write(args.out, [&](std::ostream& o) { write_node_class_csv(report, o); });
    std::cout << "micro F1 " << report.micro << ", macro F1 " << report.macro << '\n';
  }
  return 0;
}

// ---- inspect-transitions -------------------------------------------------

struct InspectArgs {
  std::string history, source_type, out;
};

int cmd_inspect_transitions(const InspectArgs& args) {
  const auto history = read_history_csv(args.history);
  const std::string* filter = args.source_type.empty() ? nullptr : &args.source_type;
  if (args.out.empty()) {
    write_transition_series(history, filter, std::cout);
  } else {
    atomic_write(args.out, [&](std::ostream& o) { write_transition_series(history, filter, o); });
  }
  return 0;
}

// ---- make-synthetic ------------------------------------------------------

struct SyntheticArgs {
  std::vector<std::string> types, relations;
  std::string out;
  std::uint64_t seed = 1;
};

int cmd_make_synthetic(const SyntheticArgs& args) {
  SyntheticSpec spec;
  spec.seed = args.seed;
  try {
    for (const auto& t : args.types) spec.types.push_back(parse_synthetic_type(t));
    for (const auto& r : args.relations) spec.relations.push_back(parse_synthetic_relation(r));
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const SyntheticNetwork net = make_synthetic(spec);
  const fs::path out(args.out);
  fs::create_directories(out);
  atomic_write(out / "edges.txt", [&](std::ostream& o) { write_synthetic_edges(net, o); });
  atomic_write(out / "types.txt", [&](std::ostream& o) { write_synthetic_types(net, o); });
  if (net.under_degree > 0) {
    std::cerr << net.under_degree << " node(s) stay below degree 2 within the edge budget\n";
  }
  std::cout << net.node_names.size() << " nodes, " << net.edges.size() << " edges -> " << out.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bhin2vec: balanced heterogeneous network embedding"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "learn node embeddings");
  train_cmd->add_option("--edges", train_args.edges, "edge list")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--types", train_args.types, "node type list")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", train_args.out, "output directory")->required();
  train_cmd->add_option("--checkpoint", train_args.checkpoint, "also write a checkpoint file");
  train_cmd->add_flag("--binary", train_args.binary, "also write float32 embeddings");
  add_train_flags(*train_cmd, train_args.flags);

  LinkPredArgs lp_args;
  auto* lp_cmd = app.add_subcommand("eval-linkpred", "hold out edges, train, and report hit rate at 10");
  lp_cmd->add_option("--edges", lp_args.edges, "edge list")->required()->check(CLI::ExistingFile);
  lp_cmd->add_option("--types", lp_args.types, "node type list")->required()->check(CLI::ExistingFile);
  lp_cmd->add_option("--out", lp_args.out, "output directory")->required();
  lp_cmd->add_option("--fraction", lp_args.fraction, "held-out edge fraction per relation")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  lp_cmd->add_option("--candidates", lp_args.candidates, "negative candidates per test edge")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  add_train_flags(*lp_cmd, lp_args.flags);

  NodeClassArgs nc_args;
  auto* nc_cmd = app.add_subcommand("eval-nodeclass", "micro/macro F1 of per-type softmax classifiers");
  nc_cmd->add_option("--embeddings", nc_args.embeddings, "embeddings.txt")->required()->check(CLI::ExistingFile);
  nc_cmd->add_option("--types", nc_args.types, "node type list")->required()->check(CLI::ExistingFile);
  nc_cmd->add_option("--labels", nc_args.labels, "node label list")->required()->check(CLI::ExistingFile);
  nc_cmd->add_option("--out", nc_args.out, "metrics CSV (stdout when omitted)");
  nc_cmd->add_option("--train-fraction", nc_args.train_fraction)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  nc_cmd->add_option("--repeats", nc_args.repeats)->capture_default_str()->check(CLI::PositiveNumber);
  nc_cmd->add_option("--seed", nc_args.seed)->capture_default_str();
  nc_cmd->add_option("--threads", nc_args.threads)->check(CLI::PositiveNumber);

  InspectArgs in_args;
  auto* in_cmd = app.add_subcommand("inspect-transitions", "tidy CSV of stochastic-matrix history");
  in_cmd->add_option("--history", in_args.history, "p_history.csv")->required();
  in_cmd->add_option("--source-type", in_args.source_type, "keep only this source type");
  in_cmd->add_option("--out", in_args.out, "output CSV (stdout when omitted)");

  SyntheticArgs syn_args;
  auto* syn_cmd = app.add_subcommand("make-synthetic", "generate a random heterogeneous network");
  syn_cmd->add_option("--type", syn_args.types, "NAME:COUNT, repeatable")->required();
  syn_cmd->add_option("--relation", syn_args.relations, "A-B:EDGES, repeatable")->required();
  syn_cmd->add_option("--out", syn_args.out, "output directory")->required();
  syn_cmd->add_option("--seed", syn_args.seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(train_args);
    if (*lp_cmd) return cmd_eval_linkpred(lp_args);
    if (*nc_cmd) return cmd_eval_nodeclass(nc_args);
    if (*in_cmd) return cmd_inspect_transitions(in_args);
    if (*syn_cmd) return cmd_make_synthetic(syn_args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
