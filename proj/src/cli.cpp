#include "cgn/cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cgn/corpus.hpp"
#include "cgn/error.hpp"
#include "cgn/explain.hpp"
#include "cgn/metrics.hpp"
#include "cgn/pipeline.hpp"

namespace cgn::cli {

namespace {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ojson metadata(double seconds) { return ojson{{"timestamp", utc_timestamp()}, {"seconds", seconds}}; }

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ojson counts_json(const ClassCounts& counts) {
  ojson j;
  for (std::size_t k = 0; k < kNumClasses; ++k) j[std::string(kClassNames[k])] = counts[k];
  return j;
}

double elapsed(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

// Flags shared by train and crossval.
struct PipelineOptions {
  std::string embedder = "hash";
  std::string embed_file;
  std::size_t dim = kDefaultEmbedDim;
  std::string gcn_mode = "trained";
  std::size_t gcn_dim = 128;
  double gcn_lr = 0.01;
  std::size_t gcn_epochs = 100;
  double gcn_l2 = 1e-4;
  bool self_loops = false;
  std::string model = "deeptree";
  std::size_t max_depth = 12;
  std::size_t min_samples_leaf = 2;
  std::vector<std::size_t> hidden = {64, 32};
  double lr = 1e-3;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double sgd_lr = 0.01;
  std::size_t sgd_epochs = 100;
  std::uint64_t seed = 42;

  void attach(CLI::App& app) {
    app.add_option("--embedder", embedder, "Line feature source")->check(CLI::IsMember({"hash", "file"}))->capture_default_str();
    app.add_option("--embed-file", embed_file, "Exchange file for --embedder file");
    app.add_option("--dim", dim, "Embedding dimension")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--gcn-mode", gcn_mode, "Graph layer weights")->check(CLI::IsMember({"fixed", "trained"}))->capture_default_str();
    app.add_option("--gcn-dim", gcn_dim, "Graph layer output dimension")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--gcn-lr", gcn_lr, "Graph layer learning rate")->capture_default_str();
    app.add_option("--gcn-epochs", gcn_epochs, "Graph layer epochs")->capture_default_str();
    app.add_option("--gcn-l2", gcn_l2, "Graph layer L2 penalty")->capture_default_str();
    app.add_flag("--self-loops", self_loops, "Use A + I instead of A");
    app.add_option("--model", model, "Classifier")->check(CLI::IsMember({"deeptree", "tree", "sgd"}))->capture_default_str();
    app.add_option("--max-depth", max_depth, "Tree depth limit")->capture_default_str();
    app.add_option("--min-samples-leaf", min_samples_leaf, "Tree leaf size")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--hidden", hidden, "MLP hidden layer sizes")->delimiter(',')->capture_default_str();
    app.add_option("--lr", lr, "MLP learning rate")->capture_default_str();
    app.add_option("--epochs", epochs, "MLP epochs")->capture_default_str();
    app.add_option("--batch-size", batch_size, "MLP batch size")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--sgd-lr", sgd_lr, "SGD learning rate")->capture_default_str();
    app.add_option("--sgd-epochs", sgd_epochs, "SGD epochs")->capture_default_str();
    app.add_option("--seed", seed, "Random seed")->capture_default_str();
  }

  PipelineConfig resolve() const {
    PipelineConfig c;
    c.embed.kind = embedder == "file" ? EmbedderKind::File : EmbedderKind::Hash;
    c.embed.dim = dim;
    if (c.embed.kind == EmbedderKind::File) {
      if (embed_file.empty()) throw Error(ErrorKind::Usage, "--embedder file requires --embed-file");
      c.embed.file = embed_file;
    }
    c.gcn.mode = gcn_mode == "fixed" ? GcnMode::Fixed : GcnMode::Trained;
    c.gcn.d_out = gcn_dim;
    c.gcn.learning_rate = gcn_lr;
    c.gcn.epochs = gcn_epochs;
    c.gcn.l2 = gcn_l2;
    c.self_loops = self_loops;
    c.classifier.kind = parse_model_kind(model);
    c.classifier.tree.max_depth = max_depth;
    c.classifier.tree.min_samples_leaf = min_samples_leaf;
    c.classifier.deeptree.tree = c.classifier.tree;
    c.classifier.deeptree.hidden = hidden;
    c.classifier.deeptree.learning_rate = lr;
    c.classifier.deeptree.epochs = epochs;
    c.classifier.deeptree.batch_size = batch_size;
    c.classifier.sgd.learning_rate = sgd_lr;
    c.classifier.sgd.epochs = sgd_epochs;
    return c.with_seed(seed);
  }
};

// ---------------------------------------------------------------------------

struct IngestOptions {
  std::string input;
  std::string out_dir;
  std::string balance = "downsample";
  std::size_t target = 0;
  double test_fraction = 0.2;
  std::uint64_t seed = 42;
};

int cmd_ingest(const IngestOptions& o, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const auto corpus = load_corpus(o.input);
  Corpus balanced = corpus;
  if (o.balance != "none") {
    const auto strategy = o.balance == "upsample" ? BalanceStrategy::UpsampleAugment : BalanceStrategy::Downsample;
    balanced = balance(corpus, strategy, o.target ? std::optional<std::size_t>(o.target) : std::nullopt, o.seed);
  }
  const auto parts = split(balanced, o.test_fraction, o.seed);
  const fs::path dir = o.out_dir;
  fs::create_directories(dir);
  write_corpus(dir / "train.csv", parts.train);
  write_corpus(dir / "test.csv", parts.test);

  ojson summary{{"config",
                 {{"input", o.input},
                  {"balance", o.balance},
                  {"target", o.target},
                  {"test_fraction", o.test_fraction},
                  {"seed", o.seed}}},
                {"classes", kClassNames},
                {"counts",
                 {{"input", counts_json(corpus.class_counts())},
                  {"balanced", counts_json(balanced.class_counts())},
                  {"train", counts_json(parts.train.class_counts())},
                  {"test", counts_json(parts.test.class_counts())}}},
                {"totals",
                 {{"input", corpus.size()},
                  {"balanced", balanced.size()},
                  {"train", parts.train.size()},
                  {"test", parts.test.size()}}},
                {"metadata", metadata(elapsed(start))}};
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  out << "ingested " << corpus.size() << " samples -> " << parts.train.size() << " train / " << parts.test.size()
      << " test in " << dir.string() << "\n";
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    out << "  " << kClassNames[k] << ": " << balanced.class_counts()[k] << "\n";
  }
  return kExitOk;
}

struct TrainOptions {
  std::string input;
  std::string out = "model.json";
  std::string report;
  PipelineOptions pipeline;
};

int cmd_train(const TrainOptions& o, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const auto corpus = load_corpus(o.input);
  const auto config = o.pipeline.resolve();
  auto fit = train_pipeline(corpus, config);
  if (const fs::path out_path(o.out); out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  save_model(o.out, fit.pipeline);

  ojson report{{"config", config_to_json(config)},
               {"input", o.input},
               {"samples", corpus.size()},
               {"class_counts", counts_json(corpus.class_counts())},
               {"gcn",
                {{"losses", fit.gcn.losses},
                 {"final_loss", fit.gcn.final_loss},
                 {"head_accuracy", fit.gcn.head_accuracy}}},
               {"classifier", report_to_json(fit.report)},
               {"metadata", metadata(elapsed(start))}};
  const auto report_path = o.report.empty() ? o.out + ".report.json" : o.report;
  write_text(report_path, report.dump(2) + "\n");
  out << "trained " << to_string(config.classifier.kind) << " on " << corpus.size()
      << " samples, train accuracy " << fit.report.train_accuracy << "\n"
      << "model: " << o.out << "\nreport: " << report_path << "\n";
  return kExitOk;
}

struct EvalOptions {
  std::string model;
  std::string input;
  std::string out;
};

int cmd_eval(const EvalOptions& o, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const auto pipeline = load_model(o.model);
  const auto corpus = load_corpus(o.input);
  const auto report = evaluate(pipeline, corpus);
  out << format_metric_table({{std::string(to_string(pipeline.classifier().kind())), &report}}) << "\n"
      << format_class_table(report);
  if (!o.out.empty()) {
    ojson doc{{"model", o.model}, {"input", o.input}, {"report", report_to_json(report)},
              {"metadata", metadata(elapsed(start))}};
    write_text(o.out, doc.dump(2) + "\n");
  }
  return kExitOk;
}

struct CrossvalOptions {
  std::string input;
  std::string out;
  std::size_t folds = 10;
  PipelineOptions pipeline;
};

int cmd_crossval(const CrossvalOptions& o, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const auto corpus = load_corpus(o.input);
  const auto base = o.pipeline.resolve();
  const PipelineFactory factory = [&](const Corpus& train, std::uint64_t seed) -> std::unique_ptr<Predictor> {
    return std::make_unique<Pipeline>(train_pipeline(train, base.with_seed(seed)).pipeline);
  };
  const auto result = cross_validate(factory, corpus, o.folds, base.seed);

  std::vector<std::pair<std::string, const EvalReport*>> rows;
  for (std::size_t f = 0; f < result.folds.size(); ++f) rows.emplace_back("fold " + std::to_string(f), &result.folds[f]);
  out << format_metric_table(rows);
  out << "mean ";
  for (const auto& [name, v] : result.mean) out << " " << name << "=" << v;
  out << "\nstd  ";
  for (const auto& [name, v] : result.stddev) out << " " << name << "=" << v;
  out << "\n";
  if (!o.out.empty()) {
    ojson doc = crossval_to_json(result);
    doc["config"] = config_to_json(base);
    doc["input"] = o.input;
    doc["metadata"] = metadata(elapsed(start));
    write_text(o.out, doc.dump(2) + "\n");
  }
  return kExitOk;
}

struct ExplainOptions {
  std::string model;
  std::string input;
  std::string corpus;
  std::string id;
  std::string format = "ansi";
  std::string out;
  std::size_t perturbations = 200;
  double keep_probability = 0.5;
  double kernel_width = 0.0;
  double ridge = 1e-3;
  std::uint64_t seed = 42;
};

int cmd_explain(const ExplainOptions& o, std::ostream& out) {
  const auto pipeline = load_model(o.model);
  Sample sample;
  if (!o.corpus.empty()) {
    if (o.id.empty()) throw Error(ErrorKind::Usage, "--corpus requires --id");
    const auto corpus = load_corpus(o.corpus);
    const auto it = std::find_if(corpus.samples().begin(), corpus.samples().end(),
                                 [&](const Sample& s) { return s.id == o.id; });
    if (it == corpus.samples().end()) throw Error(ErrorKind::Lookup, "no sample with id '" + o.id + "'");
    sample = *it;
  } else if (!o.input.empty()) {
    sample.id = o.id.empty() ? fs::path(o.input).filename().string() : o.id;
    sample.code = read_text(o.input);
  } else {
    throw Error(ErrorKind::Usage, "explain needs --input FILE or --corpus CSV --id ID");
  }

  ExplainConfig cfg;
  cfg.n_perturbations = o.perturbations;
  cfg.keep_probability = o.keep_probability;
  if (o.kernel_width > 0.0) cfg.kernel_width = o.kernel_width;
  cfg.ridge = o.ridge;
  cfg.seed = o.seed;
  const auto explanation = explain_lines(pipeline, sample, cfg);
  const auto text = render_report(sample, explanation, parse_report_format(o.format));
  if (o.out.empty()) {
    out << text;
  } else {
    write_text(o.out, text);
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Line-graph vulnerability classifier and line highlighter", "cgn"};
  app.require_subcommand(1);

  IngestOptions ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Load, balance and split a labeled corpus");
  ingest_cmd->add_option("--input", ingest.input, "Corpus CSV (id,code,label)")->required()->check(CLI::ExistingFile);
  ingest_cmd->add_option("--out", ingest.out_dir, "Output directory")->required();
  ingest_cmd->add_option("--balance", ingest.balance, "Balancing strategy")
      ->check(CLI::IsMember({"downsample", "upsample", "none"}))
      ->capture_default_str();
  ingest_cmd->add_option("--target", ingest.target, "Per-class target count (0: automatic)");
  ingest_cmd->add_option("--test-fraction", ingest.test_fraction, "Held-out fraction")->capture_default_str();
  ingest_cmd->add_option("--seed", ingest.seed, "Random seed")->capture_default_str();

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Fit embedding, graph layer and classifier");
  train_cmd->add_option("--input", train.input, "Training corpus CSV")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", train.out, "Model file")->capture_default_str();
  train_cmd->add_option("--report", train.report, "Training report JSON (default: <out>.report.json)");
  train.pipeline.attach(*train_cmd);

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model on a labeled corpus");
  eval_cmd->add_option("--model", eval.model, "Model file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--input", eval.input, "Test corpus CSV")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", eval.out, "Report JSON");

  CrossvalOptions crossval;
  auto* cv_cmd = app.add_subcommand("crossval", "Stratified k-fold cross-validation");
  cv_cmd->add_option("--input", crossval.input, "Corpus CSV")->required()->check(CLI::ExistingFile);
  cv_cmd->add_option("--out", crossval.out, "Aggregate report JSON");
  cv_cmd->add_option("--folds", crossval.folds, "Number of folds")->check(CLI::Range(2, 1000))->capture_default_str();
  crossval.pipeline.attach(*cv_cmd);

  ExplainOptions explain;
  auto* explain_cmd = app.add_subcommand("explain", "Rank and shade the lines behind a prediction");
  explain_cmd->add_option("--model", explain.model, "Model file")->required()->check(CLI::ExistingFile);
  explain_cmd->add_option("--input", explain.input, "Source file to explain")->check(CLI::ExistingFile);
  explain_cmd->add_option("--corpus", explain.corpus, "Corpus CSV holding the sample")->check(CLI::ExistingFile);
  explain_cmd->add_option("--id", explain.id, "Sample id (with --corpus) or report label");
  explain_cmd->add_option("--format", explain.format, "Report format")
      ->check(CLI::IsMember({"ansi", "html", "json"}))
      ->capture_default_str();
  explain_cmd->add_option("--out", explain.out, "Write the report here instead of stdout");
  explain_cmd->add_option("--perturbations", explain.perturbations, "Number of line masks")->capture_default_str();
  explain_cmd->add_option("--keep-prob", explain.keep_probability, "Probability of keeping a line")->capture_default_str();
  explain_cmd->add_option("--kernel-width", explain.kernel_width, "Kernel width (0: 0.25*sqrt(lines))");
  explain_cmd->add_option("--ridge", explain.ridge, "Ridge penalty")->capture_default_str();
  explain_cmd->add_option("--seed", explain.seed, "Random seed")->capture_default_str();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();  // program name
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*ingest_cmd) return cmd_ingest(ingest, out);
    if (*train_cmd) return cmd_train(train, out);
    if (*eval_cmd) return cmd_eval(eval, out);
    if (*cv_cmd) return cmd_crossval(crossval, out);
    if (*explain_cmd) return cmd_explain(explain, out);
  } catch (const Error& e) {
    err << "cgn: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return e.kind() == ErrorKind::Usage ? kExitUsage : kExitRuntime;
  } catch (const std::exception& e) {
    err << "cgn: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace cgn::cli
