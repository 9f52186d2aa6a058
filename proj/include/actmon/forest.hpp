#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "actmon/rng.hpp"
#include "actmon/windowing.hpp"

namespace actmon {

struct ClassDistribution {
    std::vector<std::uint64_t> counts;

    std::uint64_t total() const;
    std::vector<double> proportions() const;
};

// Gini impurity 1 - sum(p_k^2); empty distribution -> 0.
double gini(const ClassDistribution& dist);

inline constexpr std::size_t kUnboundedDepth = static_cast<std::size_t>(-1);
inline constexpr std::size_t kAutoMaxFeatures = static_cast<std::size_t>(-1);  // ceil(sqrt(d))

struct ForestConfig {
    std::size_t n_trees = 100;
    std::size_t max_depth = kUnboundedDepth;  // 0 = root stays a leaf
    std::size_t min_samples_split = 2;
    std::size_t max_features = kAutoMaxFeatures;
    bool bootstrap = true;
    std::uint64_t seed = 0;
};

// Training table. Class labels are kept lexicographically sorted so the
// documented tie-breaks (smallest label) reduce to lowest index.
struct Dataset {
    FeatureSchema schema;
    std::vector<double> x;             // row-major n x d
    std::vector<std::size_t> y;        // class indices
    std::vector<std::string> classes;

    std::size_t n() const { return schema.size() == 0 ? 0 : x.size() / schema.size(); }
    std::size_t d() const { return schema.size(); }
    std::span<const double> row(std::size_t i) const { return {x.data() + i * d(), d()}; }
};

Dataset make_dataset(FeatureSchema schema, const std::vector<std::vector<double>>& rows,
                     const std::vector<std::string>& labels);

// Binary tree in preorder; feature == npos marks a leaf. Every node keeps its
// fit-time class counts so impurity decreases (and hence importances) can be
// recomputed from a deserialized model.
struct TreeNode {
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    std::size_t feature = npos;
    bool categorical = false;
    double threshold = 0.0;  // midpoint for numeric, category code for categorical
    std::vector<std::uint64_t> counts;
    std::unique_ptr<TreeNode> left;
    std::unique_ptr<TreeNode> right;

    bool is_leaf() const { return feature == npos; }
    std::size_t majority_class() const;
};

struct SplitCandidate {
    std::size_t feature = 0;
    bool categorical = false;
    double threshold = 0.0;
    double decrease = 0.0;  // parent gini - weighted child gini
};

// Minimum weighted-child-Gini split over the candidate features. Numeric
// thresholds are midpoints between consecutive distinct sorted values;
// categorical tests are one-vs-rest per observed category. Ties resolve to
// the lower feature index, then the lower threshold/category. nullopt when no
// candidate yields two nonempty children with positive decrease.
std::optional<SplitCandidate> best_split(const Dataset& data, std::span<const std::size_t> rows,
                                         std::span<const std::size_t> features);

std::unique_ptr<TreeNode> fit_tree(const Dataset& data, const ForestConfig& config, Rng& rng);

struct RandomForestModel {
    ForestConfig config;
    FeatureSchema schema;
    std::vector<std::string> classes;
    std::vector<std::unique_ptr<TreeNode>> trees;

    std::size_t class_index(std::string_view label) const;  // npos when absent
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

RandomForestModel fit_forest(const Dataset& data, const ForestConfig& config);

struct Prediction {
    std::size_t class_index = 0;
    std::vector<double> vote_shares;  // per class, sums to 1
};

Prediction predict(const RandomForestModel& model, std::span<const double> x);

// Mean decrease in impurity over trees, normalized to sum 1 (all-leaf forest
// yields the zero vector).
std::vector<double> feature_importances(const RandomForestModel& model);

// Same accumulation with each node's distribution projected to
// class-vs-rest, ranking the features that separate one class.
std::vector<double> class_feature_importances(const RandomForestModel& model,
                                              std::size_t class_index);

// "feature<TAB>score" lines sorted by descending score (index order on ties).
std::string importances_tsv(const FeatureSchema& schema, std::span<const double> scores);

std::string save_model(const RandomForestModel& model);
RandomForestModel load_model(const std::string& text);
void save_model_file(const RandomForestModel& model, const std::string& path);
RandomForestModel load_model_file(const std::string& path);

}  // namespace actmon
