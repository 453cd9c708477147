#include "coopsc/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "coopsc/error.hpp"
#include "coopsc/rng.hpp"

namespace coopsc {

namespace {

// Features and thresholds live at float32 precision so a stored forest
// reproduces every decision exactly after a save/load cycle.
inline double as_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

std::size_t argmax(const ClassHistogram& h) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < h.size(); ++i)
    if (h[i] > h[best]) best = i;
  return best;
}

ClassHistogram histogram(std::span<const LabeledFeature> samples) {
  ClassHistogram h{};
  for (const auto& s : samples) h[static_cast<std::size_t>(s.label)] += 1.0;
  return h;
}

std::int32_t grow(DecisionTree& tree, std::vector<LabeledFeature>& samples, std::size_t depth,
                  std::size_t max_depth) {
  const auto id = static_cast<std::int32_t>(tree.nodes.size());
  tree.nodes.push_back({});
  tree.nodes[id].counts = histogram(samples);
  const auto& counts = tree.nodes[id].counts;
  const bool pure = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }) <= 1;
  Split split;
  if (pure || depth >= max_depth || samples.size() < 2 || !best_split(samples, split)) return id;

  std::vector<LabeledFeature> left, right;
  for (const auto& s : samples) (as_f32(s.u) <= split.threshold ? left : right).push_back(s);
  samples.clear();
  samples.shrink_to_fit();
  const std::int32_t l = grow(tree, left, depth + 1, max_depth);
  const std::int32_t r = grow(tree, right, depth + 1, max_depth);
  tree.nodes[id].threshold = split.threshold;
  tree.nodes[id].left = l;
  tree.nodes[id].right = r;
  return id;
}

std::size_t subtree_depth(const DecisionTree& tree, std::int32_t node) {
  const auto& n = tree.nodes[node];
  if (n.left < 0) return 0;
  return 1 + std::max(subtree_depth(tree, n.left), subtree_depth(tree, n.right));
}

}  // namespace

double gini(const ClassHistogram& counts) {
  const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (n == 0.0) return 0.0;
  double sum_sq = 0.0;
  for (double c : counts) sum_sq += (c / n) * (c / n);
  return 1.0 - sum_sq;
}

bool best_split(std::span<const LabeledFeature> samples, Split& out) {
  std::vector<LabeledFeature> sorted(samples.begin(), samples.end());
  for (auto& s : sorted) s.u = as_f32(s.u);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const LabeledFeature& a, const LabeledFeature& b) { return a.u < b.u; });
  const double n = static_cast<double>(sorted.size());
  const ClassHistogram total = histogram(sorted);
  ClassHistogram left{};
  bool found = false;
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    left[static_cast<std::size_t>(sorted[i].label)] += 1.0;
    if (sorted[i].u == sorted[i + 1].u) continue;
    ClassHistogram right{};
    for (std::size_t c = 0; c < kNumPostures; ++c) right[c] = total[c] - left[c];
    const double nl = static_cast<double>(i + 1);
    const double score = (nl / n) * gini(left) + ((n - nl) / n) * gini(right);
    if (!found || score < out.weighted_gini) {
      const double lo = sorted[i].u, hi = sorted[i + 1].u;
      double t = as_f32(0.5 * (lo + hi));
      if (t >= hi) t = lo;
      out = Split{t, score};
      found = true;
    }
  }
  return found;
}

Posture DecisionTree::predict(double u) const {
  const double x = as_f32(u);
  std::int32_t i = 0;
  while (nodes[i].left >= 0) i = x <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
  return static_cast<Posture>(argmax(nodes[i].counts));
}

std::size_t DecisionTree::depth() const { return nodes.empty() ? 0 : subtree_depth(*this, 0); }

std::vector<std::size_t> bootstrap_indices(std::size_t n, std::uint64_t seed, std::size_t tree) {
  CounterRng rng(derive_seed(seed, {tree}));
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = rng.below(n);
  return idx;
}

DecisionTree fit_tree(std::span<const LabeledFeature> samples, std::size_t max_depth) {
  if (samples.empty()) throw Error(ErrorKind::kPrecondition, "cannot fit a tree on no samples");
  DecisionTree tree;
  std::vector<LabeledFeature> work(samples.begin(), samples.end());
  grow(tree, work, 0, max_depth);
  return tree;
}

RandomForest train_forest(std::span<const LabeledFeature> data, const ForestConfig& config) {
  if (data.empty()) throw Error(ErrorKind::kPrecondition, "forest training set is empty");
  if (config.n_trees == 0) throw Error(ErrorKind::kPrecondition, "forest needs at least one tree");
  RandomForest forest;
  forest.config = config;
  for (std::size_t t = 0; t < config.n_trees; ++t) {
    std::vector<LabeledFeature> resample;
    resample.reserve(data.size());
    for (std::size_t i : bootstrap_indices(data.size(), config.seed, t)) resample.push_back(data[i]);
    forest.trees.push_back(fit_tree(resample, config.max_depth));
  }
  return forest;
}

Posture classify_posture(const RandomForest& forest, double u) {
  if (forest.trees.empty()) throw Error(ErrorKind::kState, "forest has no trees");
  ClassHistogram votes{};
  for (const auto& tree : forest.trees) votes[static_cast<std::size_t>(tree.predict(u))] += 1.0;
  return static_cast<Posture>(argmax(votes));
}

// ---- persistence ----------------------------------------------------------

std::vector<NamedArray> forest_to_arrays(const RandomForest& forest) {
  std::vector<NamedArray> arrays;
  const std::uint64_t seed = forest.config.seed;
  arrays.push_back({"forest.config", {2},
                    {static_cast<double>(forest.config.n_trees), static_cast<double>(forest.config.max_depth)}});
  arrays.push_back({"forest.seed_u16", {4},
                    {static_cast<double>(seed & 0xffff), static_cast<double>((seed >> 16) & 0xffff),
                     static_cast<double>((seed >> 32) & 0xffff), static_cast<double>(seed >> 48)}});
  arrays.push_back({"forest.tree_count", {1}, {static_cast<double>(forest.trees.size())}});
  for (std::size_t k = 0; k < forest.trees.size(); ++k) {
    const auto& nodes = forest.trees[k].nodes;
    const std::string prefix = "forest.tree" + std::to_string(k) + ".";
    NamedArray thr{prefix + "threshold", {nodes.size()}, {}};
    NamedArray kids{prefix + "children", {nodes.size(), 2}, {}};
    NamedArray hist{prefix + "counts", {nodes.size(), kNumPostures}, {}};
    for (const auto& n : nodes) {
      thr.values.push_back(n.threshold);
      kids.values.push_back(n.left);
      kids.values.push_back(n.right);
      hist.values.insert(hist.values.end(), n.counts.begin(), n.counts.end());
    }
    arrays.push_back(std::move(thr));
    arrays.push_back(std::move(kids));
    arrays.push_back(std::move(hist));
  }
  return arrays;
}

RandomForest forest_from_arrays(std::span<const NamedArray> arrays) {
  RandomForest forest;
  const auto& cfg = find_array(arrays, "forest.config").values;
  const auto& seed = find_array(arrays, "forest.seed_u16").values;
  if (cfg.size() != 2 || seed.size() != 4) throw Error(ErrorKind::kFormat, "malformed forest header");
  forest.config.n_trees = static_cast<std::size_t>(cfg[0]);
  forest.config.max_depth = static_cast<std::size_t>(cfg[1]);
  forest.config.seed = 0;
  for (int i = 0; i < 4; ++i) forest.config.seed |= static_cast<std::uint64_t>(seed[i]) << (16 * i);
  const auto count = static_cast<std::size_t>(find_array(arrays, "forest.tree_count").values.at(0));
  for (std::size_t k = 0; k < count; ++k) {
    const std::string prefix = "forest.tree" + std::to_string(k) + ".";
    const auto& thr = find_array(arrays, prefix + "threshold");
    const auto& kids = find_array(arrays, prefix + "children");
    const auto& hist = find_array(arrays, prefix + "counts");
    const std::size_t n = thr.values.size();
    if (kids.values.size() != 2 * n || hist.values.size() != kNumPostures * n || n == 0)
      throw Error(ErrorKind::kFormat, "tree " + std::to_string(k) + " arrays disagree on node count");
    DecisionTree tree;
    tree.nodes.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto& node = tree.nodes[i];
      node.threshold = thr.values[i];
      node.left = static_cast<std::int32_t>(kids.values[2 * i]);
      node.right = static_cast<std::int32_t>(kids.values[2 * i + 1]);
      const bool leaf = node.left < 0;
      if (!leaf && (node.left <= static_cast<std::int32_t>(i) || node.right <= static_cast<std::int32_t>(i) ||
                    node.left >= static_cast<std::int32_t>(n) || node.right >= static_cast<std::int32_t>(n)))
        throw Error(ErrorKind::kFormat, "tree " + std::to_string(k) + " has an invalid child index");
      for (std::size_t c = 0; c < kNumPostures; ++c) node.counts[c] = hist.values[i * kNumPostures + c];
    }
    forest.trees.push_back(std::move(tree));
  }
  return forest;
}

void save_forest(const RandomForest& forest, const std::filesystem::path& path) {
  write_weights_file(path, forest_to_arrays(forest));
}

RandomForest load_forest(const std::filesystem::path& path) {
  return forest_from_arrays(read_weights_file(path));
}

}  // namespace coopsc
