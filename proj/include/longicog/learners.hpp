#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "longicog/cohort.hpp"
#include "longicog/dataset.hpp"

namespace longicog {

enum class LearnerKind { Tree, Forest, Svm, Mlp };
std::string_view to_string(LearnerKind k);
/// Accepts tree|dt, forest|rf, svm, mlp|nn.
LearnerKind parse_learner_kind(std::string_view s);

struct TreeParams {
  int min_samples_split = 2;
};

struct ForestParams {
  int n_trees = 100;
  bool bootstrap = true;
  /// Features tried per split. Unset means ceil(sqrt(d)).
  std::optional<std::size_t> max_features;
};

struct SvmParams {
  double c = 1.0;
  /// Unset means 1 / (d * var(X)) over the training matrix.
  std::optional<double> gamma;
  double tol = 1e-3;
  long max_iter = 100000;
};

struct MlpParams {
  double learning_rate = 0.1;
  int epochs = 100;
  int batch_size = 16;
  int hidden = 64;
};

struct LearnerConfig {
  LearnerKind kind = LearnerKind::Forest;
  TreeParams tree;
  ForestParams forest;
  SvmParams svm;
  MlpParams mlp;
  std::uint64_t seed = 0;
  /// Worker threads for forest trees and one-vs-rest machines. 0 = LONGICOG_THREADS or hardware.
  std::size_t threads = 0;

  void validate() const;
};

/// SplitMix64 step; used to derive per-unit seeds from one master seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t unit);

/// Shape-checked equality (Eigen's operator== requires equal shapes).
template <class A, class B>
bool same_matrix(const A& a, const B& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}

// ---------------------------------------------------------------- tree

/// 1 - sum p_c^2 over class counts.
double gini(std::span<const double> counts);

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;  // go left iff x[feature] <= threshold
  int left = -1;
  int right = -1;
  std::vector<double> counts;  // class counts of training rows reaching this node
  double impurity = 0.0;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct TreeModel {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  int n_classes = 0;
  std::size_t dimension = 0;

  const TreeNode& leaf_for(std::span<const double> x) const;
  /// Class distribution of the leaf reached by x.
  std::vector<double> predict_proba(std::span<const double> x) const;
  std::size_t depth() const;
  std::size_t leaf_count() const;
  bool operator==(const TreeModel&) const = default;
};

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double weighted_impurity = 0.0;
};

/// Best Gini split of `rows` over `features`. Ties go to the earlier feature in
/// `features`, then the smaller threshold. Returns nullopt if every candidate
/// feature is constant on `rows`.
std::optional<SplitChoice> best_split(const Matrix& x, std::span<const int> labels, std::span<const std::size_t> rows,
                                      std::span<const std::size_t> features, int n_classes);

/// CART growth on `rows` (repeats allowed, e.g. a bootstrap sample) until
/// nodes are pure, smaller than min_samples_split, or unsplittable.
/// `max_features` < dimension draws that many candidate features per node from `rng`.
TreeModel fit_tree(const Matrix& x, std::span<const int> labels, std::span<const std::size_t> rows, int n_classes,
                   const TreeParams& params, std::size_t max_features, std::mt19937_64* rng);

// ---------------------------------------------------------------- forest

struct ForestModel {
  std::vector<TreeModel> trees;
  std::vector<std::uint64_t> tree_seeds;
  int n_classes = 0;
  std::size_t dimension = 0;
  bool operator==(const ForestModel&) const = default;
};

ForestModel fit_forest(const Matrix& x, std::span<const int> labels, int n_classes, const ForestParams& params,
                       const TreeParams& tree_params, std::uint64_t seed, std::size_t threads);

// ---------------------------------------------------------------- svm

struct SmoResult {
  std::vector<double> alpha;
  double bias = 0.0;  // decision(x) = sum alpha_i y_i K(x_i, x) + bias
  std::vector<double> objective_trace;  // dual objective after each iteration
  long iterations = 0;
  double kkt_gap = 0.0;  // maximal violating pair gap at exit
};

class SolverError : public Error {
 public:
  SolverError(const std::string& what, SmoResult best) : Error(what), best_(std::move(best)) {}
  const SmoResult& best_iterate() const { return best_; }

 private:
  SmoResult best_;
};

/// Dual objective sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij.
double svm_dual_objective(const Matrix& kernel, std::span<const int> labels, std::span<const double> alpha);

/// C-SVC dual by SMO with maximal-violating-pair selection. Labels are +1/-1
/// and both signs must occur. Stops when the pair gap drops below `tol`.
SmoResult smo_solve(const Matrix& kernel, std::span<const int> labels, double c, double tol = 1e-3,
                    long max_iter = 100000);

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma);
/// 1 / (d * var(X)), all entries pooled; 1 when the variance is 0.
double scale_gamma(const Matrix& x);

struct BinarySvm {
  Matrix support_vectors;
  std::vector<double> alpha;
  std::vector<int> sv_labels;  // +1 / -1
  double bias = 0.0;
  /// Set when the training labels were all one sign: decision is this constant.
  std::optional<double> constant;

  double decision(std::span<const double> x, double gamma) const;
  bool operator==(const BinarySvm& o) const {
    return same_matrix(support_vectors, o.support_vectors) && alpha == o.alpha && sv_labels == o.sv_labels &&
           bias == o.bias && constant == o.constant;
  }
};

struct SvmModel {
  double gamma = 1.0;
  double c = 1.0;
  int n_classes = 0;
  std::size_t dimension = 0;
  /// One machine for 2 classes (positive = class 1), else one per class (one-vs-rest).
  std::vector<BinarySvm> machines;

  std::vector<double> decision_values(std::span<const double> x) const;
  bool operator==(const SvmModel&) const = default;
};

SvmModel fit_svm(const Matrix& x, std::span<const int> labels, int n_classes, const SvmParams& params,
                 std::size_t threads);

// ---------------------------------------------------------------- mlp

/// input -> hidden (ReLU) -> n_classes (softmax).
struct MlpModel {
  Eigen::MatrixXd w1;  // hidden x input
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // classes x hidden
  Eigen::VectorXd b2;

  std::size_t input_dim() const { return static_cast<std::size_t>(w1.cols()); }
  int n_classes() const { return static_cast<int>(w2.rows()); }
  /// Softmax probabilities, one row per input row.
  Matrix forward(const Matrix& x) const;
  bool operator==(const MlpModel& o) const {
    return same_matrix(w1, o.w1) && same_matrix(b1, o.b1) && same_matrix(w2, o.w2) && same_matrix(b2, o.b2);
  }
};

struct MlpGradients {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;
};

/// Xavier-uniform weights, zero biases.
MlpModel init_mlp(std::size_t input_dim, int hidden, int n_classes, std::mt19937_64& rng);

/// Mean cross-entropy over the batch.
double mlp_loss(const MlpModel& model, const Matrix& x, std::span<const int> labels);
/// Analytic gradients of mlp_loss w.r.t. every parameter.
MlpGradients mlp_gradients(const MlpModel& model, const Matrix& x, std::span<const int> labels);

/// Adam (beta1 0.9, beta2 0.999, eps 1e-8), mini-batches reshuffled every epoch.
/// If `epoch_losses` is given, the full-data loss after each epoch is appended.
MlpModel fit_mlp(const Matrix& x, std::span<const int> labels, int n_classes, const MlpParams& params,
                 std::uint64_t seed, std::vector<double>* epoch_losses = nullptr);

// ---------------------------------------------------------------- unified

struct TrainedModel {
  LearnerConfig config;
  int n_classes = 0;
  std::size_t dimension = 0;
  std::variant<TreeModel, ForestModel, SvmModel, MlpModel> params;

  LearnerKind kind() const { return static_cast<LearnerKind>(params.index()); }
  bool operator==(const TrainedModel& o) const {
    return n_classes == o.n_classes && dimension == o.dimension && params == o.params;
  }
};

struct Prediction {
  int label = 0;
  std::vector<double> scores;
};

/// Index of the largest score; ties go to the lowest index.
int argmax(std::span<const double> scores);

TrainedModel train(const LearnerConfig& config, const Matrix& x, std::span<const int> labels, int n_classes);
TrainedModel train(const LearnerConfig& config, const Dataset& data);

Prediction predict(const TrainedModel& model, std::span<const double> x);
std::vector<int> predict_labels(const TrainedModel& model, const Matrix& x);

/// Hyperparameters as a compact JSON object (embedded in model and report documents).
std::string learner_config_to_json(const LearnerConfig& config);
LearnerConfig learner_config_from_json(const std::string& text);

/// Versioned JSON document (`longicog-model/1`). Round trip is exact.
std::string model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const std::string& text);

}  // namespace longicog
