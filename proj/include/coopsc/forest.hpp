#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "coopsc/posture.hpp"
#include "coopsc/weights_io.hpp"

namespace coopsc {

struct LabeledFeature {
  double u = 0.0;
  Posture label = Posture::kLying;
};

using ClassHistogram = std::array<double, kNumPostures>;

/// Decision tree over the scalar feature u. Node 0 is the root; a node with
/// left == -1 is a leaf.
struct DecisionTree {
  struct Node {
    double threshold = 0.0;  // go left when u <= threshold
    std::int32_t left = -1;
    std::int32_t right = -1;
    ClassHistogram counts{};

    friend bool operator==(const Node&, const Node&) = default;
  };
  std::vector<Node> nodes;

  Posture predict(double u) const;
  /// Longest root-to-leaf path, counted in internal nodes.
  std::size_t depth() const;

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

struct ForestConfig {
  std::size_t n_trees = 10;
  std::size_t max_depth = 4;
  std::uint64_t seed = 1;

  friend bool operator==(const ForestConfig&, const ForestConfig&) = default;
};

struct RandomForest {
  std::vector<DecisionTree> trees;
  ForestConfig config;

  friend bool operator==(const RandomForest&, const RandomForest&) = default;
};

/// Best Gini split over midpoints of the sorted distinct values. Returns
/// false when the samples hold a single distinct value. Equal impurities keep
/// the smallest threshold. The threshold is rounded to float32 precision.
struct Split {
  double threshold = 0.0;
  double weighted_gini = 0.0;
};
bool best_split(std::span<const LabeledFeature> samples, Split& out);

double gini(const ClassHistogram& counts);

/// Bootstrap indices for tree `tree` (n draws with replacement).
std::vector<std::size_t> bootstrap_indices(std::size_t n, std::uint64_t seed, std::size_t tree);

/// Fits one tree on exactly `samples` (no resampling).
DecisionTree fit_tree(std::span<const LabeledFeature> samples, std::size_t max_depth);

/// Each tree is fit on its own bootstrap resample. Throws kPrecondition on an
/// empty training set.
RandomForest train_forest(std::span<const LabeledFeature> data, const ForestConfig& config = {});

/// Plurality vote; ties go to the lowest posture code.
Posture classify_posture(const RandomForest& forest, double u);

std::vector<NamedArray> forest_to_arrays(const RandomForest& forest);
RandomForest forest_from_arrays(std::span<const NamedArray> arrays);
void save_forest(const RandomForest& forest, const std::filesystem::path& path);
RandomForest load_forest(const std::filesystem::path& path);

}  // namespace coopsc
