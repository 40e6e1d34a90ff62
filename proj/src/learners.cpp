#include "longicog/learners.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"

namespace longicog {

using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kModelSchema = "longicog-model/1";

void check_training_input(const Matrix& x, std::span<const int> labels, int n_classes) {
  if (n_classes < 2) throw ValidationError("need at least 2 classes");
  if (static_cast<std::size_t>(x.rows()) != labels.size())
    throw ValidationError("feature rows and labels differ in length");
  if (x.rows() < 2) throw ValidationError("need at least 2 training samples");
  if (x.cols() < 1) throw ValidationError("training features are empty");
  if (!x.allFinite()) throw ValidationError("training features contain NaN or infinite values");
  std::set<int> present;
  for (int y : labels) {
    if (y < 0 || y >= n_classes) throw ValidationError("label " + std::to_string(y) + " outside [0, n_classes)");
    present.insert(y);
  }
  if (present.size() < 2) throw ValidationError("training labels contain a single class");
}

ojson matrix_json(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  ojson rows = ojson::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ojson row = ojson::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd json_matrix(const ojson& j, Eigen::Index cols_if_empty = 0) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : cols_if_empty;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(j[static_cast<std::size_t>(r)].size()) != cols) throw ValidationError("ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Eigen::VectorXd json_vector(const ojson& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

ojson tree_json(const TreeModel& t) {
  ojson nodes = ojson::array();
  for (const auto& n : t.nodes)
    nodes.push_back({{"feature", n.feature},
                     {"threshold", n.threshold},
                     {"left", n.left},
                     {"right", n.right},
                     {"counts", n.counts},
                     {"impurity", n.impurity}});
  return {{"n_classes", t.n_classes}, {"dimension", t.dimension}, {"nodes", std::move(nodes)}};
}

TreeModel json_tree(const ojson& j) {
  TreeModel t;
  t.n_classes = j.at("n_classes").get<int>();
  t.dimension = j.at("dimension").get<std::size_t>();
  for (const auto& jn : j.at("nodes")) {
    TreeNode n;
    n.feature = jn.at("feature").get<int>();
    n.threshold = jn.at("threshold").get<double>();
    n.left = jn.at("left").get<int>();
    n.right = jn.at("right").get<int>();
    n.counts = jn.at("counts").get<std::vector<double>>();
    n.impurity = jn.at("impurity").get<double>();
    t.nodes.push_back(std::move(n));
  }
  return t;
}

ojson config_json(const LearnerConfig& c) {
  ojson j;
  j["kind"] = std::string(to_string(c.kind));
  j["seed"] = c.seed;
  j["tree"] = {{"min_samples_split", c.tree.min_samples_split}};
  ojson forest = {{"n_trees", c.forest.n_trees}, {"bootstrap", c.forest.bootstrap}};
  forest["max_features"] = c.forest.max_features ? ojson(*c.forest.max_features) : ojson("sqrt");
  j["forest"] = std::move(forest);
  ojson svm = {{"C", c.svm.c}};
  svm["gamma"] = c.svm.gamma ? ojson(*c.svm.gamma) : ojson("scale");
  svm["tol"] = c.svm.tol;
  svm["max_iter"] = c.svm.max_iter;
  j["svm"] = std::move(svm);
  j["mlp"] = {{"learning_rate", c.mlp.learning_rate},
              {"epochs", c.mlp.epochs},
              {"batch_size", c.mlp.batch_size},
              {"hidden", c.mlp.hidden}};
  return j;
}

LearnerConfig json_config(const ojson& j) {
  LearnerConfig c;
  c.kind = parse_learner_kind(j.at("kind").get<std::string>());
  c.seed = j.at("seed").get<std::uint64_t>();
  c.tree.min_samples_split = j.at("tree").at("min_samples_split").get<int>();
  const auto& f = j.at("forest");
  c.forest.n_trees = f.at("n_trees").get<int>();
  c.forest.bootstrap = f.at("bootstrap").get<bool>();
  if (f.at("max_features").is_number()) c.forest.max_features = f["max_features"].get<std::size_t>();
  const auto& s = j.at("svm");
  c.svm.c = s.at("C").get<double>();
  if (s.at("gamma").is_number()) c.svm.gamma = s["gamma"].get<double>();
  c.svm.tol = s.at("tol").get<double>();
  c.svm.max_iter = s.at("max_iter").get<long>();
  const auto& m = j.at("mlp");
  c.mlp.learning_rate = m.at("learning_rate").get<double>();
  c.mlp.epochs = m.at("epochs").get<int>();
  c.mlp.batch_size = m.at("batch_size").get<int>();
  c.mlp.hidden = m.at("hidden").get<int>();
  return c;
}

}  // namespace

std::string learner_config_to_json(const LearnerConfig& config) { return config_json(config).dump(); }

LearnerConfig learner_config_from_json(const std::string& text) {
  try {
    return json_config(ojson::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("<learner config>", 0, e.what());
  }
}

std::string_view to_string(LearnerKind k) {
  switch (k) {
    case LearnerKind::Tree: return "tree";
    case LearnerKind::Forest: return "forest";
    case LearnerKind::Svm: return "svm";
    case LearnerKind::Mlp: return "mlp";
  }
  return "?";
}

LearnerKind parse_learner_kind(std::string_view s) {
  if (s == "tree" || s == "dt") return LearnerKind::Tree;
  if (s == "forest" || s == "rf") return LearnerKind::Forest;
  if (s == "svm") return LearnerKind::Svm;
  if (s == "mlp" || s == "nn") return LearnerKind::Mlp;
  throw ValidationError("unknown learner '" + std::string(s) + "' (expected tree|forest|svm|mlp)");
}

void LearnerConfig::validate() const {
  if (tree.min_samples_split < 2) throw ValidationError("min_samples_split must be >= 2");
  if (forest.n_trees < 1) throw ValidationError("n_trees must be positive");
  if (forest.max_features && *forest.max_features < 1) throw ValidationError("max_features must be positive");
  if (!(svm.c > 0.0)) throw ValidationError("SVM C must be > 0");
  if (svm.gamma && !(*svm.gamma > 0.0)) throw ValidationError("SVM gamma must be > 0");
  if (!(svm.tol > 0.0) || svm.max_iter < 1) throw ValidationError("SVM tol and max_iter must be positive");
  if (!(mlp.learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
  if (mlp.epochs < 1 || mlp.batch_size < 1 || mlp.hidden < 1)
    throw ValidationError("epochs, batch_size and hidden must be positive");
}

int argmax(std::span<const double> scores) {
  if (scores.empty()) throw ValidationError("argmax of empty scores");
  int best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  return best;
}

TrainedModel train(const LearnerConfig& config, const Matrix& x, std::span<const int> labels, int n_classes) {
  config.validate();
  check_training_input(x, labels, n_classes);
  TrainedModel model;
  model.config = config;
  model.n_classes = n_classes;
  model.dimension = static_cast<std::size_t>(x.cols());
  switch (config.kind) {
    case LearnerKind::Tree: {
      std::vector<std::size_t> rows(static_cast<std::size_t>(x.rows()));
      for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
      model.params = fit_tree(x, labels, rows, n_classes, config.tree, 0, nullptr);
      break;
    }
    case LearnerKind::Forest:
      model.params = fit_forest(x, labels, n_classes, config.forest, config.tree, config.seed, config.threads);
      break;
    case LearnerKind::Svm:
      model.params = fit_svm(x, labels, n_classes, config.svm, config.threads);
      break;
    case LearnerKind::Mlp:
      model.params = fit_mlp(x, labels, n_classes, config.mlp, config.seed);
      break;
  }
  return model;
}

TrainedModel train(const LearnerConfig& config, const Dataset& data) {
  return train(config, data.features, data.labels, data.n_classes());
}

Prediction predict(const TrainedModel& model, std::span<const double> x) {
  if (x.size() != model.dimension)
    throw ValidationError("model expects dimension " + std::to_string(model.dimension) + ", got " +
                          std::to_string(x.size()));
  Prediction p;
  if (const auto* tree = std::get_if<TreeModel>(&model.params)) {
    p.scores = tree->predict_proba(x);
  } else if (const auto* forest = std::get_if<ForestModel>(&model.params)) {
    p.scores.assign(static_cast<std::size_t>(model.n_classes), 0.0);
    for (const auto& t : forest->trees) p.scores[static_cast<std::size_t>(argmax(t.predict_proba(x)))] += 1.0;
    for (auto& s : p.scores) s /= static_cast<double>(forest->trees.size());
  } else if (const auto* svm = std::get_if<SvmModel>(&model.params)) {
    p.scores = svm->decision_values(x);
  } else {
    const auto& mlp = std::get<MlpModel>(model.params);
    Matrix row(1, static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) row(0, static_cast<Eigen::Index>(i)) = x[i];
    const Matrix probs = mlp.forward(row);
    p.scores.assign(probs.data(), probs.data() + probs.cols());
  }
  p.label = argmax(p.scores);
  return p;
}

std::vector<int> predict_labels(const TrainedModel& model, const Matrix& x) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    out.push_back(predict(model, std::span<const double>(x.row(r).data(), static_cast<std::size_t>(x.cols()))).label);
  return out;
}

std::string model_to_json(const TrainedModel& model) {
  ojson j;
  j["schema"] = kModelSchema;
  j["kind"] = std::string(to_string(model.kind()));
  j["n_classes"] = model.n_classes;
  j["dimension"] = model.dimension;
  j["config"] = config_json(model.config);
  ojson params;
  if (const auto* tree = std::get_if<TreeModel>(&model.params)) {
    params = tree_json(*tree);
  } else if (const auto* forest = std::get_if<ForestModel>(&model.params)) {
    params["tree_seeds"] = forest->tree_seeds;
    params["trees"] = ojson::array();
    for (const auto& t : forest->trees) params["trees"].push_back(tree_json(t));
  } else if (const auto* svm = std::get_if<SvmModel>(&model.params)) {
    params["gamma"] = svm->gamma;
    params["C"] = svm->c;
    params["machines"] = ojson::array();
    for (const auto& m : svm->machines) {
      ojson jm;
      if (m.constant) {
        jm["constant"] = *m.constant;
      } else {
        jm["bias"] = m.bias;
        jm["alpha"] = m.alpha;
        jm["labels"] = m.sv_labels;
        jm["support_vectors"] = matrix_json(m.support_vectors);
      }
      params["machines"].push_back(std::move(jm));
    }
  } else {
    const auto& mlp = std::get<MlpModel>(model.params);
    params["w1"] = matrix_json(mlp.w1);
    params["b1"] = std::vector<double>(mlp.b1.data(), mlp.b1.data() + mlp.b1.size());
    params["w2"] = matrix_json(mlp.w2);
    params["b2"] = std::vector<double>(mlp.b2.data(), mlp.b2.data() + mlp.b2.size());
  }
  j["params"] = std::move(params);
  return j.dump(1);
}

TrainedModel model_from_json(const std::string& text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("<model>", 0, e.what());
  }
  try {
    if (j.value("schema", std::string()) != kModelSchema)
      throw ParseError("<model>", 0, std::string("expected schema '") + kModelSchema + "'");
    TrainedModel m;
    m.config = json_config(j.at("config"));
    m.n_classes = j.at("n_classes").get<int>();
    m.dimension = j.at("dimension").get<std::size_t>();
    const auto kind = parse_learner_kind(j.at("kind").get<std::string>());
    const auto& p = j.at("params");
    switch (kind) {
      case LearnerKind::Tree:
        m.params = json_tree(p);
        break;
      case LearnerKind::Forest: {
        ForestModel f;
        f.n_classes = m.n_classes;
        f.dimension = m.dimension;
        f.tree_seeds = p.at("tree_seeds").get<std::vector<std::uint64_t>>();
        for (const auto& t : p.at("trees")) f.trees.push_back(json_tree(t));
        m.params = std::move(f);
        break;
      }
      case LearnerKind::Svm: {
        SvmModel s;
        s.gamma = p.at("gamma").get<double>();
        s.c = p.at("C").get<double>();
        s.n_classes = m.n_classes;
        s.dimension = m.dimension;
        for (const auto& jm : p.at("machines")) {
          BinarySvm b;
          if (jm.contains("constant")) {
            b.constant = jm["constant"].get<double>();
          } else {
            b.bias = jm.at("bias").get<double>();
            b.alpha = jm.at("alpha").get<std::vector<double>>();
            b.sv_labels = jm.at("labels").get<std::vector<int>>();
            b.support_vectors = json_matrix(jm.at("support_vectors"), static_cast<Eigen::Index>(m.dimension));
          }
          s.machines.push_back(std::move(b));
        }
        m.params = std::move(s);
        break;
      }
      case LearnerKind::Mlp: {
        MlpModel mlp;
        mlp.w1 = json_matrix(p.at("w1"));
        mlp.b1 = json_vector(p.at("b1"));
        mlp.w2 = json_matrix(p.at("w2"));
        mlp.b2 = json_vector(p.at("b2"));
        m.params = std::move(mlp);
        break;
      }
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("<model>", 0, e.what());
  }
}

}  // namespace longicog
