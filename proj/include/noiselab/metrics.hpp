#pragma once

#include <span>
#include <vector>

#include "noiselab/matrix.hpp"

namespace noiselab {

struct MetricSet {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    /// One-vs-rest AUC per class; 0.5 when a class has no positives or no
    /// negatives among the evaluated samples.
    std::vector<double> per_class_auc;
    /// confusion[true][predicted]
    std::vector<std::vector<std::size_t>> confusion;

    double mean_auc() const;
    std::size_t total() const;
};

/// Index of the largest entry; the lowest index wins ties.
std::size_t argmax(std::span<const double> values);

/// Mann-Whitney AUC with average ranks for tied scores.
double binary_auc(std::span<const double> scores, std::span<const bool> positive);

MetricSet compute_metrics(const RowMatrix& probs, std::span<const int> labels);

}  // namespace noiselab
