#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace noiselab {

enum class Split { train, validation, test };

std::string_view to_string(Split split);
Split split_from_string(std::string_view text);

struct Sample {
    std::vector<double> features;
    int observed_label = 0;
    /// Hidden ground truth; never read by training code.
    std::optional<int> true_label;
};

struct Dataset {
    std::string name;
    int num_classes = 2;
    std::size_t feature_dim = 1;
    Split split = Split::train;
    std::vector<Sample> samples;

    std::size_t size() const noexcept { return samples.size(); }
    bool empty() const noexcept { return samples.empty(); }

    /// Throws DataError if any invariant is broken.
    void validate() const;

    std::vector<int> observed_labels() const;
    /// Falls back to the observed label for samples without a true label.
    std::vector<int> true_labels() const;

    /// New dataset with the same metadata holding samples[indices[i]].
    Dataset subset(const std::vector<std::size_t>& indices) const;
};

/// Read an IDX image/label file pair. Images may carry any number of
/// trailing dimensions (2D images, 3D volumes); they are flattened row-major
/// and scaled by 1/255.
Dataset load_idx_pair(const std::filesystem::path& images_path,
                      const std::filesystem::path& labels_path, int num_classes);

/// Write a u8 tensor / u8 vector in IDX format. `dims` excludes the leading
/// item count.
void write_idx_images(const std::filesystem::path& path, const std::vector<std::uint8_t>& pixels,
                      std::uint32_t count, const std::vector<std::uint32_t>& dims);
void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels);

struct SyntheticSpec {
    std::size_t n = 1000;
    int num_classes = 2;
    std::size_t feature_dim = 2;
    double cluster_spread = 0.1;
    std::uint64_t seed = 0;
};

/// Gaussian clusters, one per class, clipped to [0, 1]. Sample i belongs to
/// class i mod c. Class means are drawn uniformly from [0.2, 0.8]^d.
Dataset generate_synthetic(const SyntheticSpec& spec, Split split = Split::train);

struct SplitFractions {
    double train = 0.9;
    double validation = 0.1;
    double test = 0.0;
};

struct DatasetSplits {
    Dataset train;
    Dataset validation;
    Dataset test;
};

/// Shuffle-and-cut. Validation and test get floor(f * n) samples; the
/// remainder goes to train.
DatasetSplits split_dataset(const Dataset& d, const SplitFractions& fractions, std::uint64_t seed);

}  // namespace noiselab
