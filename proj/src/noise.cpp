#include "noiselab/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "noiselab/error.hpp"
#include "noiselab/rng.hpp"

namespace noiselab {

std::string_view to_string(NoiseKind kind) {
    return kind == NoiseKind::symmetric ? "symmetric" : "asymmetric";
}

NoiseKind noise_kind_from_string(std::string_view text) {
    if (text == "symmetric" || text == "sym") return NoiseKind::symmetric;
    if (text == "asymmetric" || text == "asym") return NoiseKind::asymmetric;
    throw ArgumentError("unknown noise kind '" + std::string(text) + "'");
}

std::size_t CorruptionRecord::flipped_count() const {
    return static_cast<std::size_t>(std::count(flipped.begin(), flipped.end(), true));
}

double max_noise_rate(int num_classes) {
    return static_cast<double>(num_classes - 1) / static_cast<double>(num_classes);
}

std::pair<Dataset, CorruptionRecord> inject_noise(const Dataset& d, const NoiseSpec& spec) {
    if (d.split != Split::train) {
        throw UsageError("label noise is only injected into the train split, got '" +
                         std::string(to_string(d.split)) + "'");
    }
    if (!(spec.rate >= 0.0) || !(spec.rate < max_noise_rate(d.num_classes))) {
        throw ArgumentError("noise rate " + std::to_string(spec.rate) + " must lie in [0, (c-1)/c) for c=" +
                            std::to_string(d.num_classes));
    }

    const std::size_t n = d.size();
    const auto flips = static_cast<std::size_t>(std::llround(spec.rate * static_cast<double>(n)));

    Dataset out = d;
    CorruptionRecord record;
    record.flipped.assign(n, false);
    record.original_label = d.observed_labels();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Xoshiro256 rng(spec.seed);
    rng.shuffle(std::span<std::size_t>(order));

    const auto c = static_cast<std::uint64_t>(d.num_classes);
    for (std::size_t k = 0; k < flips; ++k) {
        const std::size_t i = order[k];
        const int old_label = out.samples[i].observed_label;
        int new_label;
        if (spec.kind == NoiseKind::symmetric) {
            const auto r = static_cast<int>(rng.uniform_below(c - 1));
            new_label = r < old_label ? r : r + 1;
        } else {
            new_label = (old_label + 1) % d.num_classes;
        }
        out.samples[i].observed_label = new_label;
        record.flipped[i] = true;
    }
    record.realized_rate = n == 0 ? 0.0 : static_cast<double>(flips) / static_cast<double>(n);
    return {std::move(out), std::move(record)};
}

}  // namespace noiselab
