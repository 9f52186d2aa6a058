#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "actmon/rng.hpp"

namespace actmon {

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

struct ClassMetrics {
    std::string label;
    std::size_t support = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct EvalReport {
    double accuracy = 0.0;
    std::vector<ClassMetrics> per_class;
    double weighted_precision = 0.0;
    double weighted_recall = 0.0;
    double weighted_f1 = 0.0;
    std::vector<std::vector<std::uint64_t>> confusion;  // rows = true class
    std::optional<double> auc;                          // absent when undefined
    std::vector<RocPoint> roc;                          // binary tasks only

    std::string to_table() const;  // human-readable
    std::string to_kv() const;     // machine-readable key/value lines
    std::string roc_tsv() const;   // "fpr<TAB>tpr" lines
};

// Rank-based AUC: probability that a random positive outscores a random
// negative, ties counting one half. nullopt when either side is empty.
std::optional<double> auc_score(std::span<const double> scores, const std::vector<bool>& positive);

std::vector<RocPoint> roc_points(std::span<const double> scores, const std::vector<bool>& positive);

// y_true/y_pred are indices into classes; scores is n x |classes| row-major
// vote shares (may be empty: AUC/ROC omitted). Multiclass AUC is one-vs-rest,
// support-weighted over the classes where it is defined.
EvalReport evaluate(std::span<const std::size_t> y_true, std::span<const std::size_t> y_pred,
                    std::span<const double> scores, const std::vector<std::string>& classes);

struct TrainTestSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// Seeded uniform shuffle, first floor(n*ratio) indices train. With labels
// provided the split is stratified: each class contributes round(n_c*ratio)
// training rows, keeping class proportions within one sample.
TrainTestSplit split_train_test(std::size_t n, double ratio, std::uint64_t seed,
                                std::span<const std::size_t> labels = {});

// Chronological variant: first floor(n*ratio) rows in index order.
TrainTestSplit split_chronological(std::size_t n, double ratio);

}  // namespace actmon
