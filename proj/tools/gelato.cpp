// Command-line driver: dataset ingestion, partitioning, splitting, scoring,
// training, evaluation and the SBM checks.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "gelato/config.hpp"
#include "gelato/enhancer.hpp"
#include "gelato/graph.hpp"
#include "gelato/heuristics.hpp"
#include "gelato/metrics.hpp"
#include "gelato/parallel.hpp"
#include "gelato/partition.hpp"
#include "gelato/random.hpp"
#include "gelato/sbm.hpp"
#include "gelato/splits.hpp"
#include "gelato/trainer.hpp"

namespace fs = std::filesystem;
using namespace gelato;

namespace {

constexpr const char* kVersion = "1.0.0";

struct Context {
  std::string command;
  RunConfig cfg;
  fs::path out;
  std::vector<std::string> outputs;
  std::map<std::string, std::uint64_t> seeds;

  fs::path output(const std::string& name) {
    outputs.push_back(name);
    return out / name;
  }
  std::uint64_t seed(const std::string& label) {
    const std::uint64_t s = derive_seed(cfg.get_seed(), label);
    seeds[label] = s;
    return s;
  }
};

void write_manifest(const Context& ctx) {
  std::ofstream m(ctx.out / ("manifest_" + ctx.command + ".txt"));
  if (!m) throw Error(ErrorCode::kIo, "cannot write manifest in " + ctx.out.string());
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  m << "# gelato " << kVersion << '\n';
  m << "# created " << stamp << '\n';
  m << "command = " << ctx.command << '\n';
  m << "[config]\n" << ctx.cfg.echo();
  m << "[seeds]\n";
  for (const auto& [label, s] : ctx.seeds) m << label << " = " << s << '\n';
  m << "[outputs]\n";
  for (const auto& o : ctx.outputs) m << o << '\n';
}

void require_paths(const RunConfig& cfg, std::initializer_list<const char*> required,
                   std::initializer_list<const char*> optional_keys = {}) {
  std::vector<std::string> problems;
  for (const char* key : required) {
    if (!cfg.has(key)) {
      problems.push_back(std::string(key) + " is required");
    } else if (!fs::exists(cfg.get(key))) {
      problems.push_back(std::string(key) + ": no such file " + cfg.get(key));
    }
  }
  for (const char* key : optional_keys) {
    if (cfg.has(key) && !fs::exists(cfg.get(key))) {
      problems.push_back(std::string(key) + ": no such file " + cfg.get(key));
    }
  }
  if (!problems.empty()) {
    std::string msg;
    for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
    throw Error(ErrorCode::kParameter, msg);
  }
}

AttributedGraph load_input_graph(const RunConfig& cfg) {
  std::optional<fs::path> attrs;
  if (cfg.has("attrs")) attrs = fs::path(cfg.get("attrs"));
  return load_graph(cfg.get("edges"), attrs);
}

SplitRatios ratios_from(const RunConfig& cfg) {
  auto r = cfg.get_real_list("ratios");
  if (r.size() != 3) throw Error(ErrorCode::kParameter, "ratios needs three values");
  SplitRatios ratios{r[0], r[1], r[2]};
  ratios.validate();
  return ratios;
}

TrainConfig train_config_from(const RunConfig& cfg, std::uint64_t seed) {
  TrainConfig tc;
  tc.lr = cfg.get_real("lr");
  tc.dropout = cfg.get_real("dropout");
  tc.t = static_cast<int>(cfg.get_int("t"));
  tc.epochs = static_cast<int>(cfg.get_int("epochs"));
  tc.batch_size = static_cast<std::size_t>(std::max<std::int64_t>(0, cfg.get_int("batch_size")));
  tc.negatives_per_positive = static_cast<int>(cfg.get_int("negatives_per_positive"));
  tc.seed = seed;
  tc.alpha = cfg.get_real("alpha");
  tc.beta = cfg.get_real("beta");
  tc.eta = cfg.get_real("eta");
  tc.hidden = static_cast<int>(cfg.get_int("hidden"));
  const std::string& mode = cfg.get("mode");
  if (mode == "undirected") {
    tc.mode = EdgeMode::kUndirected;
  } else if (mode == "directed") {
    tc.mode = EdgeMode::kDirected;
  } else {
    throw Error(ErrorCode::kParameter, "mode must be undirected or directed");
  }
  const std::string& loss = cfg.get("loss");
  if (loss == "npair") {
    tc.loss = LossKind::kNPair;
  } else if (loss == "cross_entropy") {
    tc.loss = LossKind::kCrossEntropy;
  } else {
    throw Error(ErrorCode::kParameter, "loss must be npair or cross_entropy");
  }
  tc.score_batch_rows = static_cast<std::size_t>(std::max<std::int64_t>(0, cfg.get_int("batch_rows")));
  tc.validate();
  return tc;
}

// An explicit k selects a single cutoff; otherwise k_list applies.
std::vector<std::int64_t> cutoffs(const RunConfig& cfg) {
  if (cfg.is_explicit("k") && !cfg.is_explicit("k_list")) return {cfg.get_int("k")};
  return cfg.get_int_list("k_list");
}

// ---------------------------------------------------------------------------

void cmd_partition(Context& ctx) {
  require_paths(ctx.cfg, {"edges"}, {"attrs"});
  AttributedGraph g = load_input_graph(ctx.cfg);
  PartitionOptions opts;
  opts.imbalance = ctx.cfg.get_real("imbalance");
  const int k = static_cast<int>(ctx.cfg.get_int("k"));
  Partitioning part = partition(g, k, ctx.seed("partition"), opts);
  save_partition(part, ctx.output("partition.tsv"));
  std::ofstream stats(ctx.output("partition_stats.tsv"));
  std::int64_t largest = 0;
  for (int b = 0; b < part.k; ++b) largest = std::max(largest, part.block_size(b));
  stats << "k\t" << part.k << '\n';
  stats << "edge_cut\t" << format_real(edge_cut(g, part.assign)) << '\n';
  stats << "largest_block\t" << largest << '\n';
  stats << "max_allowed\t" << max_block_size(g.num_nodes(), k, opts.imbalance) << '\n';
  if (g.degrees().vol > 0.0) stats << "modularity\t" << format_real(modularity(g, part)) << '\n';
}

void cmd_split(Context& ctx) {
  require_paths(ctx.cfg, {"edges"}, {"attrs"});
  AttributedGraph g = load_input_graph(ctx.cfg);
  const SplitRatios ratios = ratios_from(ctx.cfg);
  const SplitRegime regime = parse_regime(ctx.cfg.get("regime"));
  const std::uint64_t seed = ctx.seed("split");
  SplitSet split;
  std::optional<Partitioning> part;
  if (regime == SplitRegime::kUnbiased) {
    split = unbiased_split(g, ratios, seed);
  } else if (regime == SplitRegime::kBiased) {
    split = biased_split(g, ratios, ctx.cfg.get_real("neg_per_pos"), seed);
  } else {
    PartitionOptions opts;
    opts.imbalance = ctx.cfg.get_real("imbalance");
    part = partition(g, static_cast<int>(ctx.cfg.get_int("k")), ctx.seed("partition"), opts);
    split = partitioned_split(g, *part, ratios, seed);
  }
  const fs::path path = ctx.output("split.tsv");
  save_split(split, path);
  if (split.train_neg.is_implicit()) {
    ctx.outputs.push_back("split.exclude.tsv");
    if (split.partition) ctx.outputs.push_back("split.scope.tsv");
  }
  std::ofstream counts(ctx.output("split_counts.tsv"));
  counts << "set\tcount\n";
  counts << "train_pos\t" << split.train_pos.size() << '\n';
  counts << "valid_pos\t" << split.valid_pos.size() << '\n';
  counts << "test_pos\t" << split.test_pos.size() << '\n';
  counts << "train_neg\t" << split.train_neg.size() << '\n';
  counts << "valid_neg\t" << split.valid_neg.size() << '\n';
  counts << "test_neg\t" << split.test_neg.size() << '\n';
  if (part) {
    NegativePairCount c = negative_pair_count(*part, g);
    counts << "negative_pairs_exact\t" << c.exact << '\n';
    counts << "negative_pairs_squared_form\t" << c.squared_form << '\n';
  }
  std::cout << "split: " << split.train_pos.size() << '/' << split.valid_pos.size() << '/'
            << split.test_pos.size() << " positives, " << split.test_neg.size()
            << " test negatives\n";
}

void cmd_heuristic(Context& ctx) {
  require_paths(ctx.cfg, {"edges", "split"}, {"attrs"});
  AttributedGraph g = load_input_graph(ctx.cfg);
  SplitSet split = load_split(g, ctx.cfg.get("split"));
  const AttributedGraph structure = g.with_edges(split.test_structure());
  std::vector<NodePair> neg = split.test_neg.materialize();
  const std::string& metric = ctx.cfg.get("metric");
  std::vector<double> pos_scores, neg_scores;
  if (metric == "cn") {
    pos_scores = common_neighbors(structure, split.test_pos);
    neg_scores = common_neighbors(structure, neg);
  } else if (metric == "aa") {
    pos_scores = adamic_adar(structure, split.test_pos);
    neg_scores = adamic_adar(structure, neg);
  } else if (metric == "autocov") {
    const CsrMatrix a = with_isolated_self_loops(structure.adjacency());
    const int t = static_cast<int>(ctx.cfg.get_int("t"));
    const auto rows = static_cast<std::size_t>(ctx.cfg.get_int("batch_rows"));
    pos_scores = autocovariance_scores(a, t, split.test_pos, rows);
    neg_scores = autocovariance_scores(a, t, neg, rows);
  } else {
    throw Error(ErrorCode::kParameter, "metric must be cn, aa or autocov");
  }
  auto ks = cutoffs(ctx.cfg);
  MetricsReport report = rank_metrics(pos_scores, neg_scores, ks);
  report.regime = regime_name(split.regime);
  save_report(report, ctx.output("heuristic_report.tsv"));
}

void cmd_train(Context& ctx) {
  require_paths(ctx.cfg, {"edges", "split"}, {"attrs"});
  AttributedGraph g = load_input_graph(ctx.cfg);
  SplitSet split = load_split(g, ctx.cfg.get("split"));
  TrainConfig tc = train_config_from(ctx.cfg, ctx.seed("train"));
  TrainResult result;
  if (ctx.cfg.get_bool("grid_search")) {
    auto grid = default_grid();
    GridResult gr = grid_search(g, split, tc, grid);
    std::ofstream out(ctx.output("grid.tsv"));
    out << "alpha\tbeta\teta\tval_prec\n";
    for (const auto& [point, score] : gr.scores) {
      out << format_real(point.alpha) << '\t' << format_real(point.beta) << '\t'
          << format_real(point.eta) << '\t' << format_real(score) << '\n';
    }
    result = std::move(gr.result);
  } else {
    result = train(g, split, tc);
  }
  save_model(result.model, ctx.output("model.txt"));
  save_history(result.history, ctx.output("history.tsv"));
  std::cout << "train: selected epoch " << result.model.selected_epoch
            << ", validation prec@100% " << result.model.selection_metric << '\n';
}

void cmd_eval(Context& ctx) {
  require_paths(ctx.cfg, {"edges", "split", "model"}, {"attrs"});
  AttributedGraph g = load_input_graph(ctx.cfg);
  SplitSet split = load_split(g, ctx.cfg.get("split"));
  ModelState model = load_model(ctx.cfg.get("model"));
  if (model.net.input_dim != 2 * g.attr_dim()) {
    throw Error(ErrorCode::kDimension, "model was trained on attributes of another width");
  }
  EvalScores s = score_test(model, split, static_cast<std::size_t>(ctx.cfg.get_int("batch_rows")));
  auto ks = cutoffs(ctx.cfg);
  MetricsReport report = rank_metrics(s.pos, s.neg, ks);
  report.regime = regime_name(split.regime);
  save_report(report, ctx.output("report.tsv"));
  if (!s.neg.empty()) {
    CurveResult curves = auc_and_curves(s.pos, s.neg);
    save_roc(curves.roc, ctx.output("roc.tsv"));
    save_pr(curves.pr, ctx.output("pr.tsv"));
  }
  for (const auto& v : report.values) {
    std::cout << v.metric << '\t' << v.k << '\t' << v.value << '\n';
  }
}

void cmd_sbm(Context& ctx) {
  SbmParams params{static_cast<int>(ctx.cfg.get_int("sbm_k")),
                   static_cast<int>(ctx.cfg.get_int("sbm_n")), ctx.cfg.get_real("p"),
                   ctx.cfg.get_real("q")};
  params.validate();
  std::optional<SbmAttributeOptions> attrs;
  const double sigma = ctx.cfg.get_real("sigma");
  if (sigma >= 0.0) attrs = SbmAttributeOptions{sigma};
  AttributedGraph g = sample_sbm(params, ctx.seed("sbm"), attrs);
  save_edges(g, ctx.output("edges.tsv"));
  if (attrs) save_attributes(g, ctx.output("attrs.tsv"));
  PairCensus c = pair_census(params);
  std::ofstream census(ctx.output("census.tsv"));
  census << "quantity\tvalue\n";
  census << "intra_pos\t" << format_real(c.intra_pos) << '\n';
  census << "intra_neg\t" << format_real(c.intra_neg) << '\n';
  census << "inter_pos\t" << format_real(c.inter_pos) << '\n';
  census << "inter_neg\t" << format_real(c.inter_neg) << '\n';
  census << "random_precision_biased\t" << format_real(random_classifier_precision(c, true))
         << '\n';
  census << "random_precision_unbiased\t"
         << format_real(random_classifier_precision(c, false)) << '\n';
  census << "sampled_edges\t" << g.num_edges() << '\n';
}

void verify_theorem1(Context& ctx) {
  if (ctx.cfg.get("grid") != "default") {
    throw Error(ErrorCode::kParameter, "only the default grid is available");
  }
  auto grid = default_accuracy_grid();
  auto rows = compare_accuracies(grid);
  std::ofstream out(ctx.output("theorem1.tsv"));
  out << "p\tq\tk\tn\tacc2\tacc3\twinner\n";
  for (const auto& r : rows) {
    out << format_real(r.params.p) << '\t' << format_real(r.params.q) << '\t' << r.params.k
        << '\t' << r.params.n << '\t' << format_real(r.acc_none) << '\t'
        << format_real(r.acc_within) << '\t' << r.winner << '\n';
  }
  const bool holds = accuracy_boundary_holds(rows);
  const std::string summary = std::string("# boundary p<0.5: ") + (holds ? "holds" : "violated") +
                              " over " + std::to_string(rows.size()) + " grid points";
  out << summary << '\n';
  std::cout << summary.substr(2) << '\n';
  if (!holds) throw Error(ErrorCode::kUndefined, "accuracy boundary violated");
}

void verify_lemma1(Context& ctx) {
  SbmParams params{static_cast<int>(ctx.cfg.get_int("sbm_k")),
                   static_cast<int>(ctx.cfg.get_int("sbm_n")), ctx.cfg.get_real("p"),
                   ctx.cfg.get_real("q")};
  params.validate();
  const int runs = static_cast<int>(ctx.cfg.get_int("runs"));
  const std::uint64_t root = ctx.seed("verify.lemma1");
  std::ofstream out(ctx.output("lemma1.tsv"));
  out << "run\tt\tintra_mean\tinter_mean\n";
  int wins1 = 0, wins3 = 0;
  for (int r = 0; r < runs; ++r) {
    AttributedGraph g = sample_sbm(params, derive_seed(root, "run", r));
    for (int t : {1, 3}) {
      BlockSeparation s = autocov_block_separation(g, params, t);
      out << r << '\t' << t << '\t' << format_real(s.intra_mean) << '\t'
          << format_real(s.inter_mean) << '\n';
      if (s.intra_mean > s.inter_mean) (t == 1 ? wins1 : wins3)++;
    }
  }
  std::cout << "lemma1: intra > inter in " << wins1 << "/" << runs << " runs (t=1), " << wins3
            << "/" << runs << " runs (t=3)\n";
}

void verify_lemma2(Context& ctx) {
  SbmParams params{static_cast<int>(ctx.cfg.get_int("sbm_k")),
                   static_cast<int>(ctx.cfg.get_int("sbm_n")), ctx.cfg.get_real("p"),
                   ctx.cfg.get_real("q")};
  AttributedGraph g = sample_sbm(params, ctx.seed("sbm"));
  std::vector<int> ks;
  for (auto k : ctx.cfg.get_int_list("k_sequence")) ks.push_back(static_cast<int>(k));
  DensityReport rep = block_density_trend(g, ks, ctx.seed("partition"));
  std::ofstream out(ctx.output("lemma2.tsv"));
  out << "k\tmean_p_hat\tmean_p_hat_square\texpected_intra\n";
  for (const auto& s : rep.steps) {
    out << s.k << '\t' << format_real(s.mean_p_hat) << '\t' << format_real(s.mean_p_hat_square)
        << '\t' << format_real(s.expected_intra) << '\n';
  }
  out << "# non_decreasing: " << (rep.non_decreasing ? "yes" : "no") << '\n';
  std::cout << "lemma2: block density " << (rep.non_decreasing ? "non-decreasing" : "decreases")
            << " over k\n";
}

void verify_inflation(Context& ctx) {
  InflationReport rep = inflation_demo();
  std::ofstream out(ctx.output("inflation.tsv"));
  out << "setting\tauc\tap\tprecision_at_full_recall\n";
  out << "biased\t" << format_real(rep.biased.auc) << '\t' << format_real(rep.biased.ap) << '\t'
      << format_real(rep.biased.precision_at_full_recall) << '\n';
  out << "unbiased\t" << format_real(rep.unbiased.auc) << '\t' << format_real(rep.unbiased.ap)
      << '\t' << format_real(rep.unbiased.precision_at_full_recall) << '\n';
  std::cout << "inflation: biased AUC " << rep.biased.auc << " AP " << rep.biased.ap
            << "; unbiased AP " << rep.unbiased.ap << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attribute-enhanced link prediction with unbiased evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_file;
  app.add_option("--config", config_file, "flat key = value configuration file");
  app.set_version_flag("--version", kVersion);

  std::map<std::string, std::string> flag_values;
  std::map<std::string, CLI::Option*> flag_options;
  for (const auto& key : config_keys()) {
    std::string flag = "--" + key.name;
    std::replace(flag.begin(), flag.end(), '_', '-');
    flag_options[key.name] = app.add_option(flag, flag_values[key.name], key.help);
  }

  std::string verify_target;
  auto* partition_cmd = app.add_subcommand("partition", "k-way partition of a graph");
  auto* split_cmd = app.add_subcommand("split", "train/valid/test split");
  auto* heuristic_cmd = app.add_subcommand("heuristic", "score a split with a heuristic");
  auto* train_cmd = app.add_subcommand("train", "train the enhanced-graph model");
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a trained model on the test split");
  auto* sbm_cmd = app.add_subcommand("sbm", "sample a stochastic block model graph");
  auto* verify_cmd = app.add_subcommand("verify", "numeric checks on SBM graphs");
  verify_cmd->add_option("target", verify_target, "theorem1 | lemma1 | lemma2 | inflation")
      ->required()
      ->check(CLI::IsMember({"theorem1", "lemma1", "lemma2", "inflation"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "error: code=parameter msg=" << msg << '\n';
    return 2;
  }

  Context ctx;
  try {
    ConfigMap flags;
    for (const auto& [name, opt] : flag_options) {
      if (opt->count() > 0) flags[name] = flag_values[name];
    }
    std::optional<fs::path> file;
    if (!config_file.empty()) file = config_file;
    ctx.cfg = RunConfig::resolve(file, environment_overrides(), flags);
    ctx.out = ctx.cfg.get("out");
    fs::create_directories(ctx.out);
    set_thread_count(static_cast<int>(ctx.cfg.get_int("threads")));

    if (partition_cmd->parsed()) {
      ctx.command = "partition";
      cmd_partition(ctx);
    } else if (split_cmd->parsed()) {
      ctx.command = "split";
      cmd_split(ctx);
    } else if (heuristic_cmd->parsed()) {
      ctx.command = "heuristic";
      cmd_heuristic(ctx);
    } else if (train_cmd->parsed()) {
      ctx.command = "train";
      cmd_train(ctx);
    } else if (eval_cmd->parsed()) {
      ctx.command = "eval";
      cmd_eval(ctx);
    } else if (sbm_cmd->parsed()) {
      ctx.command = "sbm";
      cmd_sbm(ctx);
    } else if (verify_cmd->parsed()) {
      ctx.command = "verify_" + verify_target;
      if (verify_target == "theorem1") verify_theorem1(ctx);
      if (verify_target == "lemma1") verify_lemma1(ctx);
      if (verify_target == "lemma2") verify_lemma2(ctx);
      if (verify_target == "inflation") verify_inflation(ctx);
    }
    write_manifest(ctx);
  } catch (const Error& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "error: code=" << error_code_name(e.code()) << " msg=" << msg << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "error: code=internal msg=" << msg << '\n';
    return 3;
  }
  return 0;
}
