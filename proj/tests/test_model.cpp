#include <doctest.h>

#include <cmath>

#include "noiselab/error.hpp"
#include "noiselab/model.hpp"
#include "noiselab/objective.hpp"
#include "noiselab/rng.hpp"
#include "noiselab/serialize.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace noiselab;

namespace {

std::vector<double> flatten(const ModelParams& p) {
    std::vector<double> out;
    for (const auto& l : p.layers) {
        out.insert(out.end(), l.weights.begin(), l.weights.end());
        out.insert(out.end(), l.bias.begin(), l.bias.end());
    }
    return out;
}

std::vector<double> flatten(const Gradients& g) {
    std::vector<double> out;
    for (const auto& l : g.layers) {
        out.insert(out.end(), l.weights.begin(), l.weights.end());
        out.insert(out.end(), l.bias.begin(), l.bias.end());
    }
    return out;
}

void unflatten(ModelParams& p, const std::vector<double>& v) {
    std::size_t k = 0;
    for (auto& l : p.layers) {
        for (auto& w : l.weights) w = v[k++];
        for (auto& b : l.bias) b = v[k++];
    }
    p.touch();
}

}  // namespace

TEST_CASE("init is deterministic, bounded, with zero biases") {
    const MlpSpec spec{{4, 3}, Activation::relu, 17};
    const auto a = init_params(spec);
    const auto b = init_params(spec);
    CHECK(testutil::same_params(a, b));
    const double bound = std::sqrt(6.0 / 4.0);
    for (double w : a.layers[0].weights) CHECK(std::abs(w) <= bound);
    for (double v : a.layers[0].bias) CHECK(v == 0.0);

    const auto deep = init_params(default_mlp_spec(10, 3, 5));
    CHECK(deep.spec.layer_sizes == std::vector<std::size_t>{10, 128, 64, 3});
    for (const auto& l : deep.layers) {
        const double bnd = std::sqrt(6.0 / static_cast<double>(l.inputs));
        for (double w : l.weights) CHECK(std::abs(w) <= bnd);
        for (double v : l.bias) CHECK(v == 0.0);
    }
    CHECK(deep.parameter_count() == 10 * 128 + 128 + 128 * 64 + 64 + 64 * 3 + 3);
    CHECK_FALSE(testutil::same_params(deep, init_params(default_mlp_spec(10, 3, 6))));
}

TEST_CASE("MLP layer shape validation") {
    CHECK_THROWS_AS(MlpSpec{{4}}.validate(), ArgumentError);
    CHECK_THROWS_AS((MlpSpec{{4, 0, 2}}.validate()), ArgumentError);
    CHECK_THROWS_AS((MlpSpec{{4, 1}}.validate()), ArgumentError);
    CHECK_NOTHROW((MlpSpec{{4, 2}}.validate()));
}

TEST_CASE("softmax examples") {
    const auto u = tempered_softmax(std::vector<double>{0.0, 0.0}, 1.0);
    CHECK(u[0] == 0.5);
    CHECK(u[1] == 0.5);
    const auto sharp = tempered_softmax(std::vector<double>{2.0, 0.0}, 0.05);
    CHECK(sharp[0] >= 1.0 - 1e-9);
    // mpmath, 40 digits
    const auto s = tempered_softmax(std::vector<double>{1.0, 2.0, 3.0}, 1.0);
    CHECK(std::abs(s[0] - 0.09003057317038046) <= 1e-6);
    CHECK(std::abs(s[1] - 0.24472847105479765) <= 1e-6);
    CHECK(std::abs(s[2] - 0.6652409557748219) <= 1e-6);
    CHECK(s[2] == doctest::Approx(0.6652409557748219).epsilon(1e-15));
    CHECK_THROWS_AS(tempered_softmax(std::vector<double>{1.0, 2.0}, 0.0), ArgumentError);
    CHECK_THROWS_AS(tempered_softmax(std::vector<double>{1.0, 2.0}, -1.0), ArgumentError);
}

TEST_CASE("softmax agrees with a long double oracle and survives huge logits") {
    Xoshiro256 rng(8);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> z(2 + t % 6);
        for (auto& v : z) v = rng.uniform(-30.0, 30.0);
        const double tau = rng.uniform(0.05, 2.0);
        const auto p = tempered_softmax(z, tau);
        const auto ref = oracle::softmax_ld(z, tau);
        for (std::size_t i = 0; i < z.size(); ++i) CHECK(std::abs(p[i] - static_cast<double>(ref[i])) <= 1e-14);
    }
    const auto big = tempered_softmax(std::vector<double>{1000.0, 999.0}, 1.0);
    CHECK(std::isfinite(big[0]));
    CHECK(big[0] + big[1] == doctest::Approx(1.0));
}

TEST_CASE("softmax shift invariance, argmax invariance and sharpening") {
    Xoshiro256 rng(12);
    for (int t = 0; t < 500; ++t) {
        std::vector<double> z(2 + t % 7);
        for (auto& v : z) v = rng.uniform(-5.0, 5.0);
        const double a = rng.uniform(-100.0, 100.0);
        std::vector<double> shifted = z;
        for (auto& v : shifted) v += a;
        const double tau = rng.uniform(0.05, 1.5);
        const auto p = tempered_softmax(z, tau);
        const auto q = tempered_softmax(shifted, tau);
        std::size_t best = 0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            CHECK(std::abs(p[i] - q[i]) <= 1e-12);
            if (z[i] > z[best]) best = i;
        }
        double prev_max = 0.0;
        for (double tt : {1.0, 0.5, 0.1, 0.05}) {
            const auto pt = tempered_softmax(z, tt);
            double sum = 0.0;
            std::size_t am = 0;
            for (std::size_t i = 0; i < pt.size(); ++i) {
                sum += pt[i];
                if (pt[i] > pt[am]) am = i;
            }
            CHECK(std::abs(sum - 1.0) <= 1e-9);
            CHECK(am == best);
            CHECK(pt[am] >= prev_max);
            prev_max = pt[am];
        }
    }
}

TEST_CASE("forward examples") {
    auto params = init_params({{3, 5, 4}, Activation::relu, 1});
    for (auto& l : params.layers) {
        std::fill(l.weights.begin(), l.weights.end(), 0.0);
        std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
    params.touch();
    const auto r = forward(params, std::vector<double>{0.3, 0.9, 0.1}, 0.5);
    for (double v : r.probs) CHECK(v == 0.25);

    const auto p2 = init_params({{3, 5, 4}, Activation::relu, 2});
    const auto a = forward(p2, std::vector<double>{0.3, 0.9, 0.1}, 0.5);
    const auto b = forward(p2, std::vector<double>{0.3, 0.9, 0.1}, 0.5);
    CHECK(a.probs == b.probs);
    CHECK_THROWS_AS(forward(p2, std::vector<double>{0.3, 0.9}, 0.5), ArgumentError);
}

TEST_CASE("backward examples") {
    const auto params = init_params({{3, 4, 3}, Activation::relu, 3});
    const auto r = forward(params, std::vector<double>{0.1, 0.5, 0.9}, 0.7);
    const auto zero = backward(params, r.cache, std::vector<double>(3, 0.0));
    for (double v : flatten(zero)) CHECK(v == 0.0);

    // A stale cache is refused.
    auto moved = params;
    Gradients g = Gradients::zeros_like(params);
    g.layers[0].weights[0] = 1.0;
    sgd_step_inplace(moved, g, 0.1);
    CHECK_THROWS_AS(backward(moved, r.cache, std::vector<double>(3, 1.0)), UsageError);
    CHECK_THROWS_AS(backward(params, r.cache, std::vector<double>(2, 1.0)), ArgumentError);
}

TEST_CASE("softmax-CE gradient at the logits is probs minus one-hot") {
    // Single linear layer with the identity weight: the weight gradient row
    // for input unit i equals (sigma - onehot) * x_i.
    ModelParams params = init_params({{2, 2}, Activation::relu, 0});
    params.layers[0].weights = {1.0, 0.0, 0.0, 1.0};
    params.layers[0].bias = {0.0, 0.0};
    params.touch();
    const std::vector<double> x{0.8, 0.3};
    const auto r = forward(params, x, 1.0);
    const auto d = total_loss_grad(r.probs, 1, ObjectiveConfig::cross_entropy());
    const auto g = backward(params, r.cache, d);
    const auto sigma = oracle::softmax_ld(x, 1.0L);
    for (int o = 0; o < 2; ++o) {
        const double delta = static_cast<double>(sigma[o]) - (o == 1 ? 1.0 : 0.0);
        CHECK(g.layers[0].bias[o] == doctest::Approx(delta).epsilon(1e-12));
        for (int i = 0; i < 2; ++i) CHECK(g.layers[0].w(o, i) == doctest::Approx(delta * x[i]).epsilon(1e-12));
    }
}

TEST_CASE("full model gradient matches central differences") {
    Xoshiro256 rng(77);
    double worst = 0.0;
    for (int t = 0; t < 40; ++t) {
        MlpSpec spec;
        const std::size_t depth = 1 + rng.uniform_below(3);
        spec.layer_sizes.push_back(1 + rng.uniform_below(6));
        for (std::size_t k = 1; k < depth; ++k) spec.layer_sizes.push_back(1 + rng.uniform_below(10));
        spec.layer_sizes.push_back(2 + rng.uniform_below(4));
        spec.init_seed = t;
        auto params = init_params(spec);
        for (auto& l : params.layers)
            for (auto& b : l.bias) b = rng.uniform(-0.2, 0.2);
        params.touch();
        std::vector<double> x(spec.input_size());
        for (auto& v : x) v = rng.uniform();
        const int y = static_cast<int>(rng.uniform_below(spec.output_size()));
        ObjectiveConfig cfg;
        cfg.temperature = rng.uniform(0.3, 1.5);
        cfg.q = rng.uniform(0.1, 1.0);
        cfg.p = rng.uniform(0.1, 1.0);
        cfg.lambda = rng.uniform(0.0, 0.5);

        const auto r = forward(params, x, cfg.temperature);
        const auto analytic = flatten(backward(params, r.cache, total_loss_grad(r.probs, y, cfg)));
        ModelParams probe = params;
        const auto numeric = oracle::central_difference(
            [&](const std::vector<double>& theta) {
                unflatten(probe, theta);
                return total_loss(forward(probe, x, cfg.temperature).probs, y, cfg);
            },
            flatten(params), 1e-5);
        for (std::size_t i = 0; i < analytic.size(); ++i)
            worst = std::max(worst, oracle::rel_err(analytic[i], numeric[i], 1e-6));
    }
    CHECK(worst <= 1e-4);
}

TEST_CASE("accumulate_backward sums scaled per-sample gradients") {
    const auto params = init_params({{3, 4, 2}, Activation::relu, 9});
    const std::vector<std::vector<double>> xs{{0.1, 0.2, 0.3}, {0.9, 0.1, 0.5}};
    Gradients acc = Gradients::zeros_like(params);
    std::vector<double> expected(flatten(acc).size(), 0.0);
    for (const auto& x : xs) {
        const auto r = forward(params, x, 0.5);
        const std::vector<double> d{0.3, -1.2};
        accumulate_backward(params, r.cache, d, 0.5, acc);
        const auto single = flatten(backward(params, r.cache, d));
        for (std::size_t i = 0; i < single.size(); ++i) expected[i] += 0.5 * single[i];
    }
    const auto got = flatten(acc);
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(expected[i]).epsilon(1e-14));
}

TEST_CASE("sgd step") {
    ModelParams p = init_params({{1, 2}, Activation::relu, 0});
    p.layers[0].weights = {1.0, 1.0};
    p.touch();
    Gradients g = Gradients::zeros_like(p);
    g.layers[0].weights[0] = 0.5;
    const auto q = sgd_step(p, g, 0.01);
    CHECK(q.layers[0].weights[0] == 0.995);
    CHECK(q.layers[0].weights[1] == 1.0);
    CHECK(q.revision != p.revision);

    const auto same = sgd_step(p, Gradients::zeros_like(p), 0.1);
    CHECK(testutil::same_params(same, p));

    CHECK_THROWS_AS(sgd_step(p, g, 0.0), ArgumentError);
    CHECK_THROWS_AS(sgd_step(p, g, -0.1), ArgumentError);
    g.layers[0].bias[1] = std::nan("");
    try {
        sgd_step(p, g, 0.1, 42);
        FAIL("expected a training error");
    } catch (const TrainingError& e) {
        CHECK(e.batch_index() == 42);
    }
}

TEST_CASE("predict_probs rows are valid distributions") {
    const auto params = init_params(default_mlp_spec(4, 3, 1));
    const Dataset d = generate_synthetic({20, 3, 4, 0.1, 1});
    const auto probs = predict_probs(params, d, 0.5);
    CHECK(probs.rows == 20);
    CHECK(probs.cols == 3);
    for (std::size_t i = 0; i < probs.rows; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(probs(i, k) > 0.0);
            CHECK(probs(i, k) < 1.0);
            s += probs(i, k);
        }
        CHECK(std::abs(s - 1.0) <= 1e-9);
    }
}

TEST_CASE("model params JSON round trip") {
    const auto params = init_params({{5, 7, 3}, Activation::relu, 21});
    const Json j = to_json(params);
    CHECK(j["layers"][0]["w"].size() == 7);
    CHECK(j["layers"][0]["w"][0].size() == 5);
    const auto back = model_params_from_json(j);
    CHECK(testutil::same_params(params, back));
    const auto x = std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5};
    CHECK(forward(params, x, 1.0).probs == forward(back, x, 1.0).probs);
    Json bad = j;
    bad["layers"][0]["w"][0].push_back(1.0);
    CHECK_THROWS_AS(model_params_from_json(bad), FormatError);
}
