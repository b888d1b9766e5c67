#include "noiselab/estimator.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "noiselab/error.hpp"
#include "noiselab/parallel.hpp"
#include "noiselab/pipeline.hpp"
#include "noiselab/rng.hpp"

namespace noiselab {

std::vector<double> LossHistogramFeatures::regressor_inputs() const {
    std::vector<double> x(ratios);
    x.push_back(static_cast<double>(n_samples));
    x.push_back(static_cast<double>(n_classes));
    return x;
}

LossHistogramFeatures featurize_losses(std::span<const double> losses, int num_classes, std::size_t bins) {
    if (losses.empty()) throw ArgumentError("cannot featurize an empty loss vector");
    if (num_classes < 2) throw ArgumentError("class count must be at least 2");
    if (bins == 0) throw ArgumentError("histogram needs at least one bin");
    for (std::size_t i = 0; i < losses.size(); ++i) {
        if (!std::isfinite(losses[i]) || losses[i] < 0.0) {
            throw DataError("loss " + std::to_string(i) + " is negative or non-finite");
        }
    }

    const double hi = *std::max_element(losses.begin(), losses.end());
    std::vector<std::size_t> counts(bins, 0);
    for (double loss : losses) {
        std::size_t ascending = bins - 1;
        if (hi > 0.0) {
            ascending = std::min(bins - 1, static_cast<std::size_t>(loss / hi * static_cast<double>(bins)));
        }
        ++counts[bins - 1 - ascending];
    }

    LossHistogramFeatures f;
    f.n_samples = losses.size();
    f.n_classes = num_classes;
    f.ratios.resize(bins);
    const auto n = static_cast<double>(losses.size());
    for (std::size_t b = 0; b < bins; ++b) f.ratios[b] = static_cast<double>(counts[b]) / n;
    return f;
}

void EstimatorModel::validate() const {
    if (weights.size() < 3) throw DataError("estimator needs at least one histogram bin");
    if (feature_means.size() != weights.size() || feature_scales.size() != weights.size()) {
        throw DataError("estimator standardization vectors do not match the weight count");
    }
    auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(weights.begin(), weights.end(), finite) ||
        !std::all_of(feature_means.begin(), feature_means.end(), finite) || !std::isfinite(bias)) {
        throw DataError("estimator has non-finite parameters");
    }
    for (double s : feature_scales) {
        if (!(s > 0.0) || !std::isfinite(s)) throw DataError("estimator feature scales must be positive");
    }
}

double EstimatorModel::predict_raw(const LossHistogramFeatures& features) const {
    if (features.ratios.size() != bins()) {
        throw ArgumentError("features have " + std::to_string(features.ratios.size()) + " bins, estimator expects " +
                            std::to_string(bins()));
    }
    const auto x = features.regressor_inputs();
    double eta = bias;
    for (std::size_t i = 0; i < x.size(); ++i) eta += weights[i] * (x[i] - feature_means[i]) / feature_scales[i];
    return eta;
}

double EstimatorFit::residual_rms() const {
    if (residuals.empty()) return 0.0;
    double s = 0.0;
    for (double r : residuals) s += r * r;
    return std::sqrt(s / static_cast<double>(residuals.size()));
}

EstimatorFit fit_estimator(const std::vector<EstimatorTrainingRow>& rows, double ridge) {
    if (rows.size() < 2) throw ArgumentError("estimator fit needs at least 2 rows, got " + std::to_string(rows.size()));
    if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw ArgumentError("ridge must be nonnegative");

    const std::size_t bins = rows.front().features.ratios.size();
    const std::size_t m = rows.size();
    const std::size_t p = bins + 2;
    Eigen::MatrixXd x(m, p);
    Eigen::VectorXd y(m);
    for (std::size_t r = 0; r < m; ++r) {
        if (rows[r].features.ratios.size() != bins) throw ArgumentError("estimator rows differ in bin count");
        const auto inputs = rows[r].features.regressor_inputs();
        for (std::size_t k = 0; k < p; ++k) x(r, k) = inputs[k];
        y(r) = rows[r].target;
    }

    EstimatorFit fit;
    EstimatorModel& model = fit.model;
    model.feature_means.resize(p);
    model.feature_scales.resize(p);
    for (std::size_t k = 0; k < p; ++k) {
        const double mean = x.col(k).mean();
        const double var = (x.col(k).array() - mean).square().mean();
        const double sd = std::sqrt(var);
        model.feature_means[k] = mean;
        model.feature_scales[k] = sd > 1e-12 * std::max(1.0, std::abs(mean)) ? sd : 1.0;
        x.col(k) = (x.col(k).array() - mean) / model.feature_scales[k];
    }
    const double y_mean = y.mean();
    const Eigen::VectorXd yc = y.array() - y_mean;

    // Ridge solution through the SVD of the standardized design:
    // w = V diag(s / (s^2 + ridge)) U^T y. With ridge = 0 the small singular
    // values are dropped, giving the minimum-norm least-squares solution.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    const double cutoff = s.size() > 0 ? s(0) * static_cast<double>(std::max(m, p)) *
                                             std::numeric_limits<double>::epsilon()
                                       : 0.0;
    Eigen::VectorXd uty = svd.matrixU().transpose() * yc;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (ridge == 0.0) {
            uty(i) = s(i) > cutoff ? uty(i) / s(i) : 0.0;
        } else {
            uty(i) = s(i) * uty(i) / (s(i) * s(i) + ridge);
        }
    }
    const Eigen::VectorXd w = svd.matrixV() * uty;

    model.weights.assign(w.data(), w.data() + w.size());
    model.bias = y_mean;
    const Eigen::VectorXd pred = x * w;
    fit.residuals.resize(m);
    for (std::size_t r = 0; r < m; ++r) fit.residuals[r] = pred(static_cast<Eigen::Index>(r)) + y_mean - y(r);
    return fit;
}

NoiseRateEstimate estimate_noise_rate(const EstimatorModel& model, const LossHistogramFeatures& features) {
    NoiseRateEstimate est;
    est.raw = model.predict_raw(features);
    const double upper = max_noise_rate(features.n_classes) - 1e-6;
    est.clamped = std::isfinite(est.raw) ? std::clamp(est.raw, 0.0, upper) : 0.0;
    return est;
}

std::vector<EstimatorTrainingRow> build_training_rows(const std::vector<Dataset>& auxiliary,
                                                      const std::vector<double>& rates,
                                                      const std::vector<NoiseKind>& kinds, const RunConfig& cfg,
                                                      unsigned threads) {
    cfg.validate();
    if (auxiliary.empty() || rates.empty() || kinds.empty()) {
        throw ArgumentError("estimator training needs datasets, rates and noise kinds");
    }
    for (const Dataset& d : auxiliary) {
        d.validate();
        for (double rate : rates) {
            if (!(rate >= 0.0) || !(rate < max_noise_rate(d.num_classes))) {
                throw ArgumentError("rate " + std::to_string(rate) + " is not below (c-1)/c for dataset '" + d.name +
                                    "'");
            }
        }
    }

    struct Cell {
        std::size_t dataset, kind, rate;
    };
    std::vector<Cell> cells;
    for (std::size_t di = 0; di < auxiliary.size(); ++di) {
        for (std::size_t ki = 0; ki < kinds.size(); ++ki) {
            for (std::size_t ri = 0; ri < rates.size(); ++ri) cells.push_back({di, ki, ri});
        }
    }

    std::vector<EstimatorTrainingRow> rows(cells.size());
    auto run_cell = [&](const Cell& cell) {
        Dataset base = auxiliary[cell.dataset];
        base.split = Split::train;
        const double rate = rates[cell.rate];
        const NoiseKind kind = kinds[cell.kind];
        NoiseSpec noise{kind, rate, derive_seed(cfg.seed, {cell.dataset, cell.kind, cell.rate, 0})};
        const auto noisy = inject_noise(base, noise).first;

        RunConfig cell_cfg = cfg;
        cell_cfg.seed = derive_seed(cfg.seed, {cell.dataset, cell.kind, cell.rate, 1});
        if (!cell_cfg.model_spec.layer_sizes.empty()) {
            cell_cfg.model_spec.layer_sizes.front() = base.feature_dim;
            cell_cfg.model_spec.layer_sizes.back() = static_cast<std::size_t>(base.num_classes);
        }
        std::vector<double> losses;
        try {
            losses = pre_selection_training(noisy, cell_cfg).losses;
        } catch (const Error& err) {
            throw RunError("estimator", "dataset '" + base.name + "' at rate " + std::to_string(rate) + ": " +
                                            err.what());
        }
        EstimatorTrainingRow& row = rows[&cell - cells.data()];
        row.features = featurize_losses(losses, base.num_classes);
        row.target = rate;
        row.source = base.name;
        row.kind = kind;
    };

    parallel_for(cells.size(), threads, [&](std::size_t i) { run_cell(cells[i]); });
    return rows;
}

}  // namespace noiselab
