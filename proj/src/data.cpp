#include "noiselab/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "noiselab/error.hpp"
#include "noiselab/rng.hpp"

namespace noiselab {

std::string_view to_string(Split split) {
    switch (split) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        case Split::test: return "test";
    }
    return "train";
}

Split split_from_string(std::string_view text) {
    if (text == "train") return Split::train;
    if (text == "validation") return Split::validation;
    if (text == "test") return Split::test;
    throw ArgumentError("unknown split '" + std::string(text) + "'");
}

void Dataset::validate() const {
    if (num_classes < 2) throw DataError("dataset '" + name + "': class count must be at least 2");
    if (feature_dim == 0) throw DataError("dataset '" + name + "': feature_dim must be positive");
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const Sample& s = samples[i];
        if (s.features.size() != feature_dim) {
            throw DataError("dataset '" + name + "': sample " + std::to_string(i) + " has " +
                            std::to_string(s.features.size()) + " features, expected " +
                            std::to_string(feature_dim));
        }
        if (s.observed_label < 0 || s.observed_label >= num_classes) {
            throw DataError("dataset '" + name + "': sample " + std::to_string(i) +
                            " observed_label out of range");
        }
        if (s.true_label && (*s.true_label < 0 || *s.true_label >= num_classes)) {
            throw DataError("dataset '" + name + "': sample " + std::to_string(i) +
                            " true_label out of range");
        }
        for (double v : s.features) {
            if (!std::isfinite(v)) {
                throw DataError("dataset '" + name + "': sample " + std::to_string(i) +
                                " has a non-finite feature");
            }
        }
    }
}

std::vector<int> Dataset::observed_labels() const {
    std::vector<int> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.observed_label);
    return out;
}

std::vector<int> Dataset::true_labels() const {
    std::vector<int> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.true_label.value_or(s.observed_label));
    return out;
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
    Dataset out;
    out.name = name;
    out.num_classes = num_classes;
    out.feature_dim = feature_dim;
    out.split = split;
    out.samples.reserve(indices.size());
    for (std::size_t idx : indices) {
        if (idx >= samples.size()) throw ArgumentError("subset index out of range");
        out.samples.push_back(samples[idx]);
    }
    return out;
}

Dataset generate_synthetic(const SyntheticSpec& spec, Split split) {
    if (spec.num_classes < 2) throw ArgumentError("synthetic data needs at least 2 classes");
    if (spec.n < static_cast<std::size_t>(spec.num_classes)) {
        throw ArgumentError("synthetic data needs n >= c (n=" + std::to_string(spec.n) +
                            ", c=" + std::to_string(spec.num_classes) + ")");
    }
    if (spec.feature_dim == 0) throw ArgumentError("feature_dim must be positive");
    if (!(spec.cluster_spread > 0.0) || !std::isfinite(spec.cluster_spread)) {
        throw ArgumentError("cluster_spread must be positive");
    }

    Xoshiro256 rng(spec.seed);
    const auto c = static_cast<std::size_t>(spec.num_classes);
    std::vector<std::vector<double>> means(c, std::vector<double>(spec.feature_dim));
    for (auto& mean : means) {
        for (double& m : mean) m = rng.uniform(0.2, 0.8);
    }

    Dataset d;
    d.name = "synthetic-n" + std::to_string(spec.n) + "-c" + std::to_string(spec.num_classes) + "-d" +
             std::to_string(spec.feature_dim) + "-s" + std::to_string(spec.seed);
    d.num_classes = spec.num_classes;
    d.feature_dim = spec.feature_dim;
    d.split = split;
    d.samples.resize(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) {
        Sample& s = d.samples[i];
        const std::size_t cls = i % c;
        s.features.resize(spec.feature_dim);
        for (std::size_t k = 0; k < spec.feature_dim; ++k) {
            s.features[k] = std::clamp(means[cls][k] + spec.cluster_spread * rng.normal(), 0.0, 1.0);
        }
        s.observed_label = static_cast<int>(cls);
        s.true_label = static_cast<int>(cls);
    }
    return d;
}

DatasetSplits split_dataset(const Dataset& d, const SplitFractions& fractions, std::uint64_t seed) {
    const double f[3] = {fractions.train, fractions.validation, fractions.test};
    for (double v : f) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw ArgumentError("split fractions must be nonnegative");
    }
    if (std::abs(f[0] + f[1] + f[2] - 1.0) > 1e-9) {
        throw ArgumentError("split fractions must sum to 1");
    }

    const std::size_t n = d.size();
    const auto n_val = static_cast<std::size_t>(std::floor(fractions.validation * static_cast<double>(n)));
    const auto n_test = static_cast<std::size_t>(std::floor(fractions.test * static_cast<double>(n)));
    if (n_val + n_test > n) throw ArgumentError("split fractions exceed the dataset size");
    const std::size_t n_train = n - n_val - n_test;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Xoshiro256 rng(seed);
    rng.shuffle(std::span<std::size_t>(order));

    auto take = [&](std::size_t first, std::size_t count, Split split, const char* suffix) {
        std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(first),
                                     order.begin() + static_cast<std::ptrdiff_t>(first + count));
        Dataset part = d.subset(idx);
        part.split = split;
        part.name = d.name + "/" + suffix;
        return part;
    };

    return DatasetSplits{take(0, n_train, Split::train, "train"),
                         take(n_train, n_val, Split::validation, "validation"),
                         take(n_train + n_val, n_test, Split::test, "test")};
}

}  // namespace noiselab
