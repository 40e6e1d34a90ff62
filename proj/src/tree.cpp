#include <algorithm>
#include <numeric>
#include <utility>

#include "longicog/learners.hpp"

namespace longicog {

double gini(std::span<const double> counts) {
  double n = 0.0;
  for (double c : counts) n += c;
  if (n <= 0.0) return 0.0;
  double sum_sq = 0.0;
  for (double c : counts) sum_sq += (c / n) * (c / n);
  return 1.0 - sum_sq;
}

std::optional<SplitChoice> best_split(const Matrix& x, std::span<const int> labels, std::span<const std::size_t> rows,
                                      std::span<const std::size_t> features, int n_classes) {
  const std::size_t n = rows.size();
  if (n < 2) return std::nullopt;
  const auto k = static_cast<std::size_t>(n_classes);

  std::vector<double> total(k, 0.0);
  for (auto r : rows) total[static_cast<std::size_t>(labels[r])] += 1.0;

  std::optional<SplitChoice> best;
  std::vector<std::pair<double, int>> column(n);
  std::vector<double> left(k);
  std::vector<double> right(k);
  for (auto f : features) {
    const auto col = static_cast<Eigen::Index>(f);
    for (std::size_t i = 0; i < n; ++i) column[i] = {x(static_cast<Eigen::Index>(rows[i]), col), labels[rows[i]]};
    std::stable_sort(column.begin(), column.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    if (column.front().first == column.back().first) continue;

    std::fill(left.begin(), left.end(), 0.0);
    right = total;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const auto c = static_cast<std::size_t>(column[i].second);
      left[c] += 1.0;
      right[c] -= 1.0;
      if (!(column[i].first < column[i + 1].first)) continue;
      const double n_left = static_cast<double>(i + 1);
      const double n_right = static_cast<double>(n - i - 1);
      const double weighted = (n_left * gini(left) + n_right * gini(right)) / static_cast<double>(n);
      if (!best || weighted < best->weighted_impurity) {
        const double lo = column[i].first;
        const double hi = column[i + 1].first;
        double threshold = lo + (hi - lo) / 2.0;
        if (!(threshold < hi)) threshold = lo;
        best = SplitChoice{static_cast<int>(f), threshold, weighted};
      }
    }
  }
  return best;
}

TreeModel fit_tree(const Matrix& x, std::span<const int> labels, std::span<const std::size_t> rows, int n_classes,
                   const TreeParams& params, std::size_t max_features, std::mt19937_64* rng) {
  if (rows.empty()) throw ValidationError("cannot grow a tree on zero rows");
  const auto d = static_cast<std::size_t>(x.cols());
  const auto k = static_cast<std::size_t>(n_classes);
  const bool subsample = max_features > 0 && max_features < d;
  if (subsample && rng == nullptr) throw ValidationError("feature subsampling needs a random generator");

  TreeModel tree;
  tree.n_classes = n_classes;
  tree.dimension = d;

  std::vector<std::size_t> all_features(d);
  std::iota(all_features.begin(), all_features.end(), std::size_t{0});

  struct Pending {
    int node;
    std::vector<std::size_t> rows;
  };
  std::vector<Pending> stack;
  tree.nodes.emplace_back();
  stack.push_back({0, std::vector<std::size_t>(rows.begin(), rows.end())});

  while (!stack.empty()) {
    Pending job = std::move(stack.back());
    stack.pop_back();

    std::vector<double> counts(k, 0.0);
    for (auto r : job.rows) counts[static_cast<std::size_t>(labels[r])] += 1.0;
    const double impurity = gini(counts);
    {
      TreeNode& node = tree.nodes[static_cast<std::size_t>(job.node)];
      node.counts = counts;
      node.impurity = impurity;
    }
    const auto present = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0.0; });
    if (present <= 1 || job.rows.size() < static_cast<std::size_t>(params.min_samples_split)) continue;

    std::optional<SplitChoice> split;
    if (subsample) {
      std::vector<std::size_t> order = all_features;
      std::shuffle(order.begin(), order.end(), *rng);
      std::span<const std::size_t> head(order.data(), max_features);
      split = best_split(x, labels, job.rows, head, n_classes);
      if (!split) {
        // every drawn feature is constant here; fall back to the rest
        std::span<const std::size_t> tail(order.data() + max_features, d - max_features);
        split = best_split(x, labels, job.rows, tail, n_classes);
      }
    } else {
      split = best_split(x, labels, job.rows, all_features, n_classes);
    }
    if (!split) continue;

    std::vector<std::size_t> left_rows;
    std::vector<std::size_t> right_rows;
    const auto col = static_cast<Eigen::Index>(split->feature);
    for (auto r : job.rows) (x(static_cast<Eigen::Index>(r), col) <= split->threshold ? left_rows : right_rows).push_back(r);

    const int left = static_cast<int>(tree.nodes.size());
    const int right = left + 1;
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    TreeNode& node = tree.nodes[static_cast<std::size_t>(job.node)];
    node.feature = split->feature;
    node.threshold = split->threshold;
    node.left = left;
    node.right = right;
    stack.push_back({right, std::move(right_rows)});
    stack.push_back({left, std::move(left_rows)});
  }
  return tree;
}

const TreeNode& TreeModel::leaf_for(std::span<const double> x) const {
  if (x.size() != dimension)
    throw ValidationError("tree expects dimension " + std::to_string(dimension) + ", got " + std::to_string(x.size()));
  const TreeNode* node = &nodes.at(0);
  while (!node->is_leaf())
    node = &nodes[static_cast<std::size_t>(x[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left
                                                                                                         : node->right)];
  return *node;
}

std::vector<double> TreeModel::predict_proba(std::span<const double> x) const {
  const TreeNode& leaf = leaf_for(x);
  double n = 0.0;
  for (double c : leaf.counts) n += c;
  std::vector<double> p(leaf.counts);
  for (auto& v : p) v /= n;
  return p;
}

std::size_t TreeModel::depth() const {
  if (nodes.empty()) return 0;
  std::size_t deepest = 0;
  std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [id, depth] = stack.back();
    stack.pop_back();
    const TreeNode& node = nodes[static_cast<std::size_t>(id)];
    deepest = std::max(deepest, depth);
    if (!node.is_leaf()) {
      stack.push_back({node.left, depth + 1});
      stack.push_back({node.right, depth + 1});
    }
  }
  return deepest;
}

std::size_t TreeModel::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

}  // namespace longicog
