#include <algorithm>
#include <cmath>
#include <limits>

#include "longicog/learners.hpp"
#include "longicog/parallel.hpp"

namespace longicog {

namespace {

constexpr double kTau = 1e-12;

}  // namespace

double svm_dual_objective(const Matrix& kernel, std::span<const int> labels, std::span<const double> alpha) {
  const auto n = alpha.size();
  double linear = 0.0;
  double quad = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    linear += alpha[i];
    for (std::size_t j = 0; j < n; ++j)
      quad += alpha[i] * alpha[j] * labels[i] * labels[j] *
              kernel(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  return linear - 0.5 * quad;
}

SmoResult smo_solve(const Matrix& kernel, std::span<const int> labels, double c, double tol, long max_iter) {
  const auto n = labels.size();
  if (kernel.rows() != static_cast<Eigen::Index>(n) || kernel.cols() != static_cast<Eigen::Index>(n))
    throw ValidationError("kernel matrix must be n x n");
  if (!(c > 0.0)) throw ValidationError("SVM penalty C must be positive");
  bool pos = false;
  bool neg = false;
  for (int y : labels) {
    if (y == 1) pos = true;
    else if (y == -1) neg = true;
    else throw ValidationError("SMO labels must be +1 or -1");
  }
  if (!pos || !neg) throw ValidationError("SMO needs both label signs");
  const double sym_tol = 1e-9 * std::max(1.0, kernel.cwiseAbs().maxCoeff());
  if ((kernel - kernel.transpose()).cwiseAbs().maxCoeff() > sym_tol)
    throw ValidationError("kernel matrix is not symmetric");

  auto q = [&](std::size_t i, std::size_t j) {
    return labels[i] * labels[j] * kernel(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  };

  SmoResult res;
  std::vector<double>& alpha = res.alpha;
  alpha.assign(n, 0.0);
  // gradient of 1/2 a'Qa - e'a
  std::vector<double> grad(n, -1.0);

  auto in_up = [&](std::size_t t) { return labels[t] == 1 ? alpha[t] < c : alpha[t] > 0.0; };
  auto in_low = [&](std::size_t t) { return labels[t] == 1 ? alpha[t] > 0.0 : alpha[t] < c; };
  auto objective = [&] {
    double f = 0.0;
    for (std::size_t t = 0; t < n; ++t) f += alpha[t] * (grad[t] - 1.0);
    return -0.5 * f;
  };

  bool converged = false;
  for (;;) {
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    std::size_t i = n;
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -labels[t] * grad[t];
      if (in_up(t) && v > gmax) {
        gmax = v;
        i = t;
      }
      if (in_low(t) && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    res.kkt_gap = gmax - gmin;
    if (i == n || j == n || res.kkt_gap < tol) {
      converged = true;
      break;
    }
    if (res.iterations >= max_iter) break;
    ++res.iterations;

    const double ci = c;
    const double cj = c;
    const double old_i = alpha[i];
    const double old_j = alpha[j];
    if (labels[i] != labels[j]) {
      double quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > ci - cj) {
        if (alpha[i] > ci) {
          alpha[i] = ci;
          alpha[j] = ci - diff;
        }
      } else if (alpha[j] > cj) {
        alpha[j] = cj;
        alpha[i] = cj + diff;
      }
    } else {
      double quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > ci) {
        if (alpha[i] > ci) {
          alpha[i] = ci;
          alpha[j] = sum - ci;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > cj) {
        if (alpha[j] > cj) {
          alpha[j] = cj;
          alpha[i] = sum - cj;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }

    const double di = alpha[i] - old_i;
    const double dj = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t) grad[t] += q(t, i) * di + q(t, j) * dj;
    res.objective_trace.push_back(objective());
  }

  // bias from free vectors, else the midpoint of the feasible interval
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = labels[t] * grad[t];
    if (alpha[t] >= c) {
      if (labels[t] == -1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0.0) {
      if (labels[t] == 1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      free_sum += yg;
    }
  }
  const double rho = n_free > 0 ? free_sum / static_cast<double>(n_free) : (ub + lb) / 2.0;
  res.bias = -rho;

  if (!converged)
    throw SolverError("SMO did not converge within " + std::to_string(max_iter) + " iterations (gap " +
                          std::to_string(res.kkt_gap) + ")",
                      res);
  return res;
}

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    d2 += t * t;
  }
  return std::exp(-gamma * d2);
}

double scale_gamma(const Matrix& x) {
  const auto count = static_cast<double>(x.size());
  if (count == 0.0) return 1.0;
  const double mean = x.mean();
  const double var = (x.array() - mean).square().sum() / count;
  if (!(var > 0.0)) return 1.0;
  return 1.0 / (static_cast<double>(x.cols()) * var);
}

double BinarySvm::decision(std::span<const double> x, double gamma) const {
  if (constant) return *constant;
  double sum = bias;
  for (Eigen::Index s = 0; s < support_vectors.rows(); ++s) {
    std::span<const double> sv(support_vectors.row(s).data(), static_cast<std::size_t>(support_vectors.cols()));
    sum += alpha[static_cast<std::size_t>(s)] * sv_labels[static_cast<std::size_t>(s)] * rbf_kernel(sv, x, gamma);
  }
  return sum;
}

std::vector<double> SvmModel::decision_values(std::span<const double> x) const {
  if (x.size() != dimension)
    throw ValidationError("svm expects dimension " + std::to_string(dimension) + ", got " + std::to_string(x.size()));
  if (n_classes == 2) {
    const double d = machines.at(0).decision(x, gamma);
    return {-d, d};
  }
  std::vector<double> out;
  for (const auto& m : machines) out.push_back(m.decision(x, gamma));
  return out;
}

SvmModel fit_svm(const Matrix& x, std::span<const int> labels, int n_classes, const SvmParams& params,
                 std::size_t threads) {
  const auto n = static_cast<std::size_t>(x.rows());
  SvmModel model;
  model.c = params.c;
  model.gamma = params.gamma ? *params.gamma : scale_gamma(x);
  model.n_classes = n_classes;
  model.dimension = static_cast<std::size_t>(x.cols());

  Matrix kernel(x.rows(), x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    std::span<const double> xi(x.row(i).data(), model.dimension);
    kernel(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < x.rows(); ++j) {
      const double k = rbf_kernel(xi, std::span<const double>(x.row(j).data(), model.dimension), model.gamma);
      kernel(i, j) = k;
      kernel(j, i) = k;
    }
  }

  const std::size_t n_machines = n_classes == 2 ? 1 : static_cast<std::size_t>(n_classes);
  model.machines.resize(n_machines);
  parallel_for(n_machines, resolve_threads(threads), [&](std::size_t m) {
    const int positive = n_classes == 2 ? 1 : static_cast<int>(m);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = labels[i] == positive ? 1 : -1;
    BinarySvm& machine = model.machines[m];
    const bool any_pos = std::find(y.begin(), y.end(), 1) != y.end();
    const bool any_neg = std::find(y.begin(), y.end(), -1) != y.end();
    if (!any_pos || !any_neg) {
      machine.constant = any_pos ? 1.0 : -1.0;
      return;
    }
    const SmoResult res = smo_solve(kernel, y, params.c, params.tol, params.max_iter);
    std::vector<Eigen::Index> support;
    for (std::size_t i = 0; i < n; ++i)
      if (res.alpha[i] > 0.0) support.push_back(static_cast<Eigen::Index>(i));
    machine.support_vectors.resize(static_cast<Eigen::Index>(support.size()), x.cols());
    for (std::size_t s = 0; s < support.size(); ++s) {
      machine.support_vectors.row(static_cast<Eigen::Index>(s)) = x.row(support[s]);
      machine.alpha.push_back(res.alpha[static_cast<std::size_t>(support[s])]);
      machine.sv_labels.push_back(y[static_cast<std::size_t>(support[s])]);
    }
    machine.bias = res.bias;
  });
  return model;
}

}  // namespace longicog
