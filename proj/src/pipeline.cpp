#include "cgn/pipeline.hpp"

#include <fstream>
#include <sstream>

#include "cgn/error.hpp"
#include "cgn/linegraph.hpp"
#include "cgn/random.hpp"

namespace cgn {

using ojson = nlohmann::ordered_json;

PipelineConfig PipelineConfig::with_seed(std::uint64_t s) const {
  PipelineConfig c = *this;
  c.seed = s;
  c.embed.seed = s;
  c.gcn.seed = derive_seed(s, 10);
  c.classifier.tree.seed = s;
  c.classifier.deeptree.seed = derive_seed(s, 11);
  c.classifier.deeptree.tree.seed = s;
  c.classifier.sgd.seed = derive_seed(s, 12);
  return c;
}

namespace {

const char* gcn_mode_name(GcnMode m) { return m == GcnMode::Fixed ? "fixed" : "trained"; }

ojson tree_config_json(const TreeConfig& t) {
  return ojson{{"max_depth", t.max_depth}, {"min_samples_leaf", t.min_samples_leaf}, {"seed", t.seed}};
}

}  // namespace

ojson config_to_json(const PipelineConfig& c) {
  ojson embed{{"kind", to_string(c.embed.kind)}, {"dim", c.embed.dim}, {"seed", c.embed.seed}};
  if (c.embed.kind == EmbedderKind::File) embed["file"] = c.embed.file.string();
  ojson classifier{{"kind", to_string(c.classifier.kind)}};
  switch (c.classifier.kind) {
    case ModelKind::DeepTree:
      classifier["tree"] = tree_config_json(c.classifier.deeptree.tree);
      classifier["hidden"] = c.classifier.deeptree.hidden;
      classifier["learning_rate"] = c.classifier.deeptree.learning_rate;
      classifier["epochs"] = c.classifier.deeptree.epochs;
      classifier["batch_size"] = c.classifier.deeptree.batch_size;
      classifier["seed"] = c.classifier.deeptree.seed;
      break;
    case ModelKind::Tree:
      classifier["tree"] = tree_config_json(c.classifier.tree);
      break;
    case ModelKind::Sgd:
      classifier["learning_rate"] = c.classifier.sgd.learning_rate;
      classifier["epochs"] = c.classifier.sgd.epochs;
      classifier["seed"] = c.classifier.sgd.seed;
      break;
  }
  return ojson{{"seed", c.seed},
               {"embed", std::move(embed)},
               {"gcn",
                {{"mode", gcn_mode_name(c.gcn.mode)},
                 {"d_out", c.gcn.d_out},
                 {"learning_rate", c.gcn.learning_rate},
                 {"epochs", c.gcn.epochs},
                 {"l2", c.gcn.l2},
                 {"seed", c.gcn.seed},
                 {"self_loops", c.self_loops}}},
               {"classifier", std::move(classifier)}};
}

EmbeddingProvider make_provider(const EmbedderConfig& config) {
  if (config.kind == EmbedderKind::Hash) return EmbeddingProvider::hash(config.dim, config.seed);
  auto provider = load_precomputed(config.file);
  if (config.dim != 0 && provider.dim() != config.dim) {
    throw Error(ErrorKind::Dimension, "embedding file dim " + std::to_string(provider.dim()) +
                                          " differs from requested dim " + std::to_string(config.dim));
  }
  return provider;
}

Pipeline::Pipeline(PipelineConfig config, EmbeddingProvider provider, GcnParams gcn, Classifier classifier)
    : config_(std::move(config)), provider_(std::move(provider)), gcn_(std::move(gcn)), classifier_(std::move(classifier)) {
  if (gcn_.d_in() != provider_.dim()) {
    throw Error(ErrorKind::Pipeline, "GCN input dim " + std::to_string(gcn_.d_in()) + " differs from embedding dim " +
                                         std::to_string(provider_.dim()));
  }
}

GraphExample graph_example(const Sample& sample, const EmbeddingProvider& provider, bool self_loops) {
  GraphExample ex;
  ex.features = line_embeddings(sample, provider);
  ex.adjacency = adjacency(build_line_graph(static_cast<std::size_t>(ex.features.rows())), self_loops);
  ex.label = code_of(sample.label);
  return ex;
}

Eigen::VectorXd Pipeline::featurize(const Sample& sample) const {
  const auto ex = graph_example(sample, provider_, config_.self_loops);
  return embed_graph(gcn_, ex.features, ex.adjacency);
}

ClassProba Pipeline::predict_proba(const Sample& sample) const { return predict(sample).proba; }

Prediction Pipeline::predict(const Sample& sample) const { return classifier_.predict(featurize(sample)); }

PipelineFit train_pipeline(const Corpus& corpus, const PipelineConfig& config) {
  if (corpus.empty()) throw Error(ErrorKind::Training, "cannot train on an empty corpus");
  auto provider = make_provider(config.embed);

  std::vector<GraphExample> examples;
  examples.reserve(corpus.size());
  for (const auto& s : corpus.samples()) examples.push_back(graph_example(s, provider, config.self_loops));

  auto gcn = train_gcn(examples, config.gcn);

  Eigen::MatrixXd features(static_cast<Eigen::Index>(corpus.size()), static_cast<Eigen::Index>(config.gcn.d_out));
  std::vector<int> labels;
  labels.reserve(corpus.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    features.row(static_cast<Eigen::Index>(i)) =
        embed_graph(gcn.params, examples[i].features, examples[i].adjacency).transpose();
    labels.push_back(examples[i].label);
  }
  auto [classifier, report] = fit_classifier(features, labels, config.classifier);
  Pipeline pipeline(config, std::move(provider), gcn.params, std::move(classifier));
  return PipelineFit{std::move(pipeline), std::move(report), std::move(gcn)};
}

ojson pipeline_to_json(const Pipeline& p) {
  const auto& cfg = p.config();
  ojson embed{{"kind", to_string(p.provider().kind())}, {"dim", p.provider().dim()}, {"seed", p.provider().seed()}};
  if (p.provider().kind() == EmbedderKind::File) embed["file"] = cfg.embed.file.string();

  ojson doc{{"format", "cgn-model"},
            {"version", 1},
            {"config", config_to_json(cfg)},
            {"classes", kClassNames},
            {"embed", std::move(embed)},
            {"gcn",
             {{"d_in", p.gcn().d_in()},
              {"d_out", p.gcn().d_out()},
              {"self_loops", cfg.self_loops},
              {"W", matrix_to_json(p.gcn().weight)},
              {"b", vector_to_json(p.gcn().bias)}}},
            {"model", to_string(p.classifier().kind())}};
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DeepTreeModel>) {
          doc["tree"] = tree_to_json(m.tree);
          doc["mlp"] = mlp_to_json(m.mlp);
        } else if constexpr (std::is_same_v<T, TreeModel>) {
          doc["tree"] = tree_to_json(m);
        } else {
          doc["linear"] = linear_to_json(m);
        }
      },
      p.classifier().model());
  return doc;
}

namespace {

PipelineConfig config_from_json(const ojson& c) {
  PipelineConfig cfg;
  cfg.seed = c.at("seed").get<std::uint64_t>();
  const auto& e = c.at("embed");
  cfg.embed.kind = e.at("kind").get<std::string>() == "file" ? EmbedderKind::File : EmbedderKind::Hash;
  cfg.embed.dim = e.at("dim").get<std::size_t>();
  cfg.embed.seed = e.at("seed").get<std::uint64_t>();
  if (e.contains("file")) cfg.embed.file = e.at("file").get<std::string>();
  const auto& g = c.at("gcn");
  cfg.gcn.mode = g.at("mode").get<std::string>() == "fixed" ? GcnMode::Fixed : GcnMode::Trained;
  cfg.gcn.d_out = g.at("d_out").get<std::size_t>();
  cfg.gcn.learning_rate = g.at("learning_rate").get<double>();
  cfg.gcn.epochs = g.at("epochs").get<std::size_t>();
  cfg.gcn.l2 = g.at("l2").get<double>();
  cfg.gcn.seed = g.at("seed").get<std::uint64_t>();
  cfg.self_loops = g.at("self_loops").get<bool>();
  const auto& m = c.at("classifier");
  cfg.classifier.kind = parse_model_kind(m.at("kind").get<std::string>());
  auto read_tree = [](const ojson& t) {
    TreeConfig tc;
    tc.max_depth = t.at("max_depth").get<std::size_t>();
    tc.min_samples_leaf = t.at("min_samples_leaf").get<std::size_t>();
    tc.seed = t.at("seed").get<std::uint64_t>();
    return tc;
  };
  switch (cfg.classifier.kind) {
    case ModelKind::DeepTree:
      cfg.classifier.deeptree.tree = read_tree(m.at("tree"));
      cfg.classifier.deeptree.hidden = m.at("hidden").get<std::vector<std::size_t>>();
      cfg.classifier.deeptree.learning_rate = m.at("learning_rate").get<double>();
      cfg.classifier.deeptree.epochs = m.at("epochs").get<std::size_t>();
      cfg.classifier.deeptree.batch_size = m.at("batch_size").get<std::size_t>();
      cfg.classifier.deeptree.seed = m.at("seed").get<std::uint64_t>();
      break;
    case ModelKind::Tree:
      cfg.classifier.tree = read_tree(m.at("tree"));
      break;
    case ModelKind::Sgd:
      cfg.classifier.sgd.learning_rate = m.at("learning_rate").get<double>();
      cfg.classifier.sgd.epochs = m.at("epochs").get<std::size_t>();
      cfg.classifier.sgd.seed = m.at("seed").get<std::uint64_t>();
      break;
  }
  return cfg;
}

}  // namespace

Pipeline pipeline_from_json(const ojson& doc) {
  try {
    if (doc.value("format", "") != "cgn-model") throw Error(ErrorKind::Parse, "not a cgn-model document");
    if (doc.value("version", 0) != 1) throw Error(ErrorKind::Parse, "unsupported cgn-model version");
    auto cfg = config_from_json(doc.at("config"));

    const auto& e = doc.at("embed");
    EmbedderConfig ecfg;
    ecfg.kind = e.at("kind").get<std::string>() == "file" ? EmbedderKind::File : EmbedderKind::Hash;
    ecfg.dim = e.at("dim").get<std::size_t>();
    ecfg.seed = e.at("seed").get<std::uint64_t>();
    if (e.contains("file")) ecfg.file = e.at("file").get<std::string>();
    auto provider = make_provider(ecfg);

    const auto& g = doc.at("gcn");
    GcnParams gcn;
    gcn.weight = matrix_from_json(g.at("W"));
    gcn.bias = vector_from_json(g.at("b"));
    if (gcn.bias.size() != gcn.weight.cols()) throw Error(ErrorKind::Parse, "GCN bias length mismatch");

    const auto kind = parse_model_kind(doc.at("model").get<std::string>());
    Classifier classifier;
    switch (kind) {
      case ModelKind::DeepTree:
        classifier = Classifier(DeepTreeModel{tree_from_json(doc.at("tree")), mlp_from_json(doc.at("mlp"))});
        break;
      case ModelKind::Tree:
        classifier = Classifier(tree_from_json(doc.at("tree")));
        break;
      case ModelKind::Sgd:
        classifier = Classifier(linear_from_json(doc.at("linear")));
        break;
    }
    return Pipeline(std::move(cfg), std::move(provider), std::move(gcn), std::move(classifier));
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorKind::Parse, std::string("malformed model file: ") + ex.what());
  }
}

void save_model(const std::filesystem::path& path, const Pipeline& pipeline) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write model file '" + path.string() + "'");
  out << pipeline_to_json(pipeline).dump(1) << '\n';
}

Pipeline load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open model file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  ojson doc;
  try {
    doc = ojson::parse(buf.str());
  } catch (const nlohmann::json::parse_error& ex) {
    throw Error(ErrorKind::Parse, "model file '" + path.string() + "': " + ex.what());
  }
  return pipeline_from_json(doc);
}

}  // namespace cgn
