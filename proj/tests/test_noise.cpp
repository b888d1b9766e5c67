#include <doctest.h>

#include <cmath>

#include "noiselab/data.hpp"
#include "noiselab/error.hpp"
#include "noiselab/noise.hpp"
#include "noiselab/serialize.hpp"
#include "test_util.hpp"

using namespace noiselab;

TEST_CASE("zero rate is the identity") {
    const Dataset d = generate_synthetic({50, 3, 2, 0.1, 1});
    const auto [out, rec] = inject_noise(d, {NoiseKind::symmetric, 0.0, 5});
    CHECK(testutil::same_dataset(d, out));
    CHECK(rec.realized_rate == 0.0);
    CHECK(rec.flipped_count() == 0);
}

TEST_CASE("binary symmetric noise flips exactly 40 of 100 to the other class") {
    const Dataset d = generate_synthetic({100, 2, 2, 0.1, 1});
    const auto [out, rec] = inject_noise(d, {NoiseKind::symmetric, 0.4, 3});
    std::size_t flips = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (rec.flipped[i]) {
            ++flips;
            CHECK(out.samples[i].observed_label == 1 - d.samples[i].observed_label);
        } else {
            CHECK(out.samples[i].observed_label == d.samples[i].observed_label);
        }
        CHECK(rec.original_label[i] == d.samples[i].observed_label);
    }
    CHECK(flips == 40);
    CHECK(rec.flipped_count() == 40);
    CHECK(rec.realized_rate == 0.4);
}

TEST_CASE("asymmetric noise wraps the last class to zero") {
    const Dataset d = generate_synthetic({90, 9, 2, 0.1, 2});
    const auto [out, rec] = inject_noise(d, {NoiseKind::asymmetric, 0.5, 4});
    bool saw_wrap = false;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (!rec.flipped[i]) continue;
        const int old = d.samples[i].observed_label;
        CHECK(out.samples[i].observed_label == (old + 1) % 9);
        if (old == 8) {
            CHECK(out.samples[i].observed_label == 0);
            saw_wrap = true;
        }
    }
    CHECK(saw_wrap);
}

TEST_CASE("flip count is round(eta n) for every seed and kind") {
    for (std::size_t n : {7u, 33u, 120u}) {
        for (double eta : {0.05, 0.1, 0.25, 0.4, 0.6}) {
            for (std::uint64_t seed = 0; seed < 4; ++seed) {
                const Dataset d = generate_synthetic({n, 4, 2, 0.1, seed});
                for (auto kind : {NoiseKind::symmetric, NoiseKind::asymmetric}) {
                    const auto [out, rec] = inject_noise(d, {kind, eta, seed});
                    const auto expected = static_cast<std::size_t>(std::llround(eta * n));
                    CHECK(rec.flipped_count() == expected);
                    CHECK(rec.realized_rate == static_cast<double>(expected) / n);
                    for (std::size_t i = 0; i < n; ++i) {
                        // flipped exactly when the observed label disagrees with the truth
                        CHECK(rec.flipped[i] == (out.samples[i].observed_label != *out.samples[i].true_label));
                        CHECK(out.samples[i].true_label == d.samples[i].true_label);
                    }
                }
            }
        }
    }
}

TEST_CASE("symmetric targets are spread over the other classes") {
    const Dataset d = generate_synthetic({3000, 4, 1, 0.1, 0});
    const auto [out, rec] = inject_noise(d, {NoiseKind::symmetric, 0.6, 8});
    // Among flips from class 0, each of the 3 targets should get about a third.
    std::vector<int> to(4, 0);
    int from0 = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (rec.flipped[i] && d.samples[i].observed_label == 0) {
            ++to[out.samples[i].observed_label];
            ++from0;
        }
    }
    CHECK(to[0] == 0);
    const double p = 1.0 / 3.0;
    for (int k = 1; k < 4; ++k) CHECK(std::abs(to[k] - from0 * p) < 4.0 * std::sqrt(from0 * p * (1 - p)));
}

TEST_CASE("injection is deterministic") {
    const Dataset d = generate_synthetic({80, 3, 2, 0.1, 4});
    const auto a = inject_noise(d, {NoiseKind::symmetric, 0.3, 10});
    const auto b = inject_noise(d, {NoiseKind::symmetric, 0.3, 10});
    CHECK(testutil::same_dataset(a.first, b.first));
    CHECK(a.second.flipped == b.second.flipped);
    const auto c = inject_noise(d, {NoiseKind::symmetric, 0.3, 11});
    CHECK(a.second.flipped != c.second.flipped);
}

TEST_CASE("noise preconditions") {
    const Dataset d = generate_synthetic({20, 2, 2, 0.1, 4});
    CHECK(max_noise_rate(2) == 0.5);
    CHECK_THROWS_AS(inject_noise(d, {NoiseKind::symmetric, 0.5, 0}), ArgumentError);
    CHECK_THROWS_AS(inject_noise(d, {NoiseKind::symmetric, -0.1, 0}), ArgumentError);
    CHECK_NOTHROW(inject_noise(d, {NoiseKind::symmetric, 0.49, 0}));
    Dataset val = d;
    val.split = Split::validation;
    CHECK_THROWS_AS(inject_noise(val, {NoiseKind::symmetric, 0.1, 0}), UsageError);
    CHECK(noise_kind_from_string("asym") == NoiseKind::asymmetric);
    CHECK_THROWS_AS(noise_kind_from_string("pair"), ArgumentError);
}

TEST_CASE("corruption record JSON round trip") {
    const Dataset d = generate_synthetic({30, 3, 2, 0.1, 4});
    const auto [out, rec] = inject_noise(d, {NoiseKind::symmetric, 0.2, 1});
    const auto j = to_json(rec);
    CHECK(j.contains("flipped"));
    CHECK(j.contains("original_label"));
    CHECK(j.contains("realized_rate"));
    const auto back = corruption_record_from_json(j);
    CHECK(back.flipped == rec.flipped);
    CHECK(back.original_label == rec.original_label);
    CHECK(back.realized_rate == rec.realized_rate);
}
