#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include "noiselab/data.hpp"

namespace noiselab {

enum class NoiseKind { symmetric, asymmetric };

std::string_view to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(std::string_view text);

struct NoiseSpec {
    NoiseKind kind = NoiseKind::symmetric;
    double rate = 0.0;
    std::uint64_t seed = 0;
};

struct CorruptionRecord {
    std::vector<bool> flipped;
    std::vector<int> original_label;
    double realized_rate = 0.0;

    std::size_t flipped_count() const;
};

/// Largest admissible noise rate is strictly below (c - 1) / c.
double max_noise_rate(int num_classes);

/// Flip exactly round(rate * n) labels chosen uniformly without
/// replacement. Symmetric noise draws the new label uniformly from the
/// other c - 1 classes; asymmetric noise maps y to (y + 1) mod c.
std::pair<Dataset, CorruptionRecord> inject_noise(const Dataset& d, const NoiseSpec& spec);

}  // namespace noiselab
