#include <algorithm>
#include <cmath>
#include <numeric>

#include "longicog/learners.hpp"

namespace longicog {

namespace {

struct ForwardPass {
  Eigen::MatrixXd pre;     // batch x hidden, before ReLU
  Eigen::MatrixXd hidden;  // batch x hidden
  Eigen::MatrixXd probs;   // batch x classes
};

ForwardPass run_forward(const MlpModel& m, const Matrix& x) {
  if (static_cast<std::size_t>(x.cols()) != m.input_dim())
    throw ValidationError("mlp expects dimension " + std::to_string(m.input_dim()) + ", got " +
                          std::to_string(x.cols()));
  ForwardPass f;
  f.pre = (x * m.w1.transpose()).rowwise() + m.b1.transpose();
  f.hidden = f.pre.cwiseMax(0.0);
  Eigen::MatrixXd logits = (f.hidden * m.w2.transpose()).rowwise() + m.b2.transpose();
  Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
  logits.colwise() -= row_max;
  f.probs = logits.array().exp().matrix();
  Eigen::VectorXd sums = f.probs.rowwise().sum();
  for (Eigen::Index r = 0; r < f.probs.rows(); ++r) f.probs.row(r) /= sums(r);
  return f;
}

struct AdamSlot {
  Eigen::MatrixXd m;
  Eigen::MatrixXd v;
};

void adam_step(Eigen::Ref<Eigen::MatrixXd> param, const Eigen::MatrixXd& grad, AdamSlot& slot, double lr, long step) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  slot.m = kBeta1 * slot.m + (1.0 - kBeta1) * grad;
  slot.v = kBeta2 * slot.v + (1.0 - kBeta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
  param.array() -= lr * (slot.m.array() / c1) / ((slot.v.array() / c2).sqrt() + kEps);
}

}  // namespace

Matrix MlpModel::forward(const Matrix& x) const { return run_forward(*this, x).probs; }

MlpModel init_mlp(std::size_t input_dim, int hidden, int n_classes, std::mt19937_64& rng) {
  auto xavier = [&](Eigen::Index rows, Eigen::Index cols) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> u(-limit, limit);
    Eigen::MatrixXd w(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = u(rng);
    return w;
  };
  MlpModel m;
  m.w1 = xavier(hidden, static_cast<Eigen::Index>(input_dim));
  m.b1 = Eigen::VectorXd::Zero(hidden);
  m.w2 = xavier(n_classes, hidden);
  m.b2 = Eigen::VectorXd::Zero(n_classes);
  return m;
}

double mlp_loss(const MlpModel& model, const Matrix& x, std::span<const int> labels) {
  const ForwardPass f = run_forward(model, x);
  double sum = 0.0;
  for (Eigen::Index r = 0; r < f.probs.rows(); ++r)
    sum -= std::log(std::max(f.probs(r, labels[static_cast<std::size_t>(r)]), 1e-300));
  return sum / static_cast<double>(f.probs.rows());
}

MlpGradients mlp_gradients(const MlpModel& model, const Matrix& x, std::span<const int> labels) {
  if (x.rows() == 0) throw ValidationError("gradient batch is empty");
  const ForwardPass f = run_forward(model, x);
  const double batch = static_cast<double>(x.rows());

  Eigen::MatrixXd d_logits = f.probs;
  for (Eigen::Index r = 0; r < d_logits.rows(); ++r) d_logits(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
  d_logits /= batch;

  MlpGradients g;
  g.w2 = d_logits.transpose() * f.hidden;
  g.b2 = d_logits.colwise().sum().transpose();
  Eigen::MatrixXd d_hidden = d_logits * model.w2;
  d_hidden.array() *= (f.pre.array() > 0.0).cast<double>();
  g.w1 = d_hidden.transpose() * x;
  g.b1 = d_hidden.colwise().sum().transpose();
  return g;
}

MlpModel fit_mlp(const Matrix& x, std::span<const int> labels, int n_classes, const MlpParams& params,
                 std::uint64_t seed, std::vector<double>* epoch_losses) {
  std::mt19937_64 init_rng(derive_seed(seed, 0));
  std::mt19937_64 shuffle_rng(derive_seed(seed, 1));
  MlpModel model = init_mlp(static_cast<std::size_t>(x.cols()), params.hidden, n_classes, init_rng);

  AdamSlot s_w1{Eigen::MatrixXd::Zero(model.w1.rows(), model.w1.cols()), Eigen::MatrixXd::Zero(model.w1.rows(), model.w1.cols())};
  AdamSlot s_b1{Eigen::MatrixXd::Zero(model.b1.size(), 1), Eigen::MatrixXd::Zero(model.b1.size(), 1)};
  AdamSlot s_w2{Eigen::MatrixXd::Zero(model.w2.rows(), model.w2.cols()), Eigen::MatrixXd::Zero(model.w2.rows(), model.w2.cols())};
  AdamSlot s_b2{Eigen::MatrixXd::Zero(model.b2.size(), 1), Eigen::MatrixXd::Zero(model.b2.size(), 1)};

  const auto n = static_cast<std::size_t>(x.rows());
  const auto batch_size = static_cast<std::size_t>(params.batch_size);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  long step = 0;
  Matrix batch_x;
  std::vector<int> batch_y;
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t start = 0; start < n; start += batch_size) {
      const std::size_t end = std::min(n, start + batch_size);
      batch_x.resize(static_cast<Eigen::Index>(end - start), x.cols());
      batch_y.resize(end - start);
      for (std::size_t i = start; i < end; ++i) {
        batch_x.row(static_cast<Eigen::Index>(i - start)) = x.row(static_cast<Eigen::Index>(order[i]));
        batch_y[i - start] = labels[order[i]];
      }
      const MlpGradients g = mlp_gradients(model, batch_x, batch_y);
      ++step;
      adam_step(model.w1, g.w1, s_w1, params.learning_rate, step);
      adam_step(model.b1, g.b1, s_b1, params.learning_rate, step);
      adam_step(model.w2, g.w2, s_w2, params.learning_rate, step);
      adam_step(model.b2, g.b2, s_b2, params.learning_rate, step);
    }
    if (epoch_losses) epoch_losses->push_back(mlp_loss(model, x, labels));
  }
  return model;
}

}  // namespace longicog
