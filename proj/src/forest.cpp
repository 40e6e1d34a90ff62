#include <cmath>
#include <numeric>

#include "longicog/learners.hpp"
#include "longicog/parallel.hpp"

namespace longicog {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t unit) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (unit + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

ForestModel fit_forest(const Matrix& x, std::span<const int> labels, int n_classes, const ForestParams& params,
                       const TreeParams& tree_params, std::uint64_t seed, std::size_t threads) {
  if (params.n_trees < 1) throw ValidationError("forest needs at least one tree");
  const auto n = static_cast<std::size_t>(x.rows());
  const auto d = static_cast<std::size_t>(x.cols());
  const std::size_t max_features =
      params.max_features ? std::min(*params.max_features, d)
                          : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));

  ForestModel forest;
  forest.n_classes = n_classes;
  forest.dimension = d;
  forest.trees.resize(static_cast<std::size_t>(params.n_trees));
  forest.tree_seeds.resize(forest.trees.size());
  for (std::size_t t = 0; t < forest.trees.size(); ++t) forest.tree_seeds[t] = derive_seed(seed, t);

  parallel_for(forest.trees.size(), resolve_threads(threads), [&](std::size_t t) {
    std::mt19937_64 rng(forest.tree_seeds[t]);
    std::vector<std::size_t> rows(n);
    if (params.bootstrap) {
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (auto& r : rows) r = pick(rng);
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    forest.trees[t] = fit_tree(x, labels, rows, n_classes, tree_params, max_features, &rng);
  });
  return forest;
}

}  // namespace longicog
