#include "noiselab/metrics.hpp"

#include <algorithm>
#include <memory>
#include <numeric>
#include <string>

#include "noiselab/error.hpp"

namespace noiselab {

double MetricSet::mean_auc() const {
    if (per_class_auc.empty()) return 0.0;
    return std::accumulate(per_class_auc.begin(), per_class_auc.end(), 0.0) /
           static_cast<double>(per_class_auc.size());
}

std::size_t MetricSet::total() const {
    std::size_t n = 0;
    for (const auto& row : confusion) n = std::accumulate(row.begin(), row.end(), n);
    return n;
}

std::size_t argmax(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

double binary_auc(std::span<const double> scores, std::span<const bool> positive) {
    if (scores.size() != positive.size()) throw ArgumentError("AUC scores and labels differ in length");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double positive_rank_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t start = 0; start < n;) {
        std::size_t end = start + 1;
        while (end < n && scores[order[end]] == scores[order[start]]) ++end;
        // ranks start+1 .. end share their mean
        const double avg_rank = 0.5 * static_cast<double>(start + 1 + end);
        for (std::size_t k = start; k < end; ++k) {
            if (positive[order[k]]) {
                positive_rank_sum += avg_rank;
                ++n_pos;
            }
        }
        start = end;
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) return 0.5;
    const double p = static_cast<double>(n_pos);
    return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(n_neg));
}

MetricSet compute_metrics(const RowMatrix& probs, std::span<const int> labels) {
    if (probs.rows != labels.size()) {
        throw ArgumentError("metrics: " + std::to_string(probs.rows) + " prediction rows but " +
                            std::to_string(labels.size()) + " labels");
    }
    if (probs.cols < 2) throw ArgumentError("metrics need at least two classes");
    const std::size_t c = probs.cols;
    const std::size_t n = probs.rows;

    MetricSet m;
    m.confusion.assign(c, std::vector<std::size_t>(c, 0));
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= c) {
            throw ArgumentError("metrics: label " + std::to_string(labels[i]) + " out of range");
        }
        ++m.confusion[static_cast<std::size_t>(labels[i])][argmax(probs.row(i))];
    }

    std::size_t correct = 0;
    double f1_sum = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
        const std::size_t tp = m.confusion[k][k];
        std::size_t fp = 0;
        std::size_t fn = 0;
        for (std::size_t j = 0; j < c; ++j) {
            if (j == k) continue;
            fp += m.confusion[j][k];
            fn += m.confusion[k][j];
        }
        correct += tp;
        const std::size_t denom = 2 * tp + fp + fn;
        f1_sum += denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
    }
    m.accuracy = n == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(n);
    m.macro_f1 = f1_sum / static_cast<double>(c);

    std::vector<double> scores(n);
    // std::vector<bool> is not contiguous, so a plain array backs the span.
    std::unique_ptr<bool[]> positive(new bool[n]);
    m.per_class_auc.resize(c);
    for (std::size_t k = 0; k < c; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = probs(i, k);
            positive[i] = labels[i] == static_cast<int>(k);
        }
        m.per_class_auc[k] = binary_auc(scores, std::span<const bool>(positive.get(), n));
    }
    return m;
}

}  // namespace noiselab
