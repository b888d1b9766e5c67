#include "noiselab/objective.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "noiselab/error.hpp"

namespace noiselab {

namespace {

void check_q(double q) {
    if (!(q > 0.0 && q <= 1.0)) throw ArgumentError("GCE q must lie in (0, 1], got " + std::to_string(q));
}

void check_p(double p) {
    if (!(p > 0.0 && p <= 1.0)) throw ArgumentError("Lp exponent p must lie in (0, 1], got " + std::to_string(p));
}

void check_lambda(double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ArgumentError("lambda must be nonnegative");
}

double label_prob(std::span<const double> probs, int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= probs.size()) {
        throw ArgumentError("label " + std::to_string(label) + " out of range for " + std::to_string(probs.size()) +
                            " classes");
    }
    return std::max(probs[static_cast<std::size_t>(label)], kProbFloor);
}

}  // namespace

std::string_view to_string(LossKind kind) { return kind == LossKind::ce ? "ce" : "gce"; }

LossKind loss_kind_from_string(std::string_view text) {
    if (text == "ce") return LossKind::ce;
    if (text == "gce") return LossKind::gce;
    throw ArgumentError("unknown loss kind '" + std::string(text) + "'");
}

void ObjectiveConfig::validate() const {
    check_q(q);
    check_p(p);
    check_lambda(lambda);
    if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ArgumentError("temperature must be positive");
}

ObjectiveConfig ObjectiveConfig::cross_entropy() {
    ObjectiveConfig cfg;
    cfg.q = 1.0;
    cfg.temperature = 1.0;
    cfg.lambda = 0.0;
    cfg.p = 1.0;
    cfg.loss_kind = LossKind::ce;
    return cfg;
}

double gce_loss(std::span<const double> probs, int label, double q) {
    check_q(q);
    const double f = label_prob(probs, label);
    if (q == 1.0) return 1.0 - f;
    // expm1 keeps the q -> 0 limit accurate.
    return -std::expm1(q * std::log(f)) / q;
}

double ce_loss(std::span<const double> probs, int label) { return -std::log(label_prob(probs, label)); }

double lp_penalty(std::span<const double> probs, double lambda, double p) {
    check_p(p);
    check_lambda(lambda);
    // ||f||_1 = 1 on the simplex.
    if (p == 1.0) return lambda;
    double sum = 0.0;
    for (double f : probs) sum += std::pow(std::max(f, 0.0), p);
    return lambda * sum;
}

double total_loss(std::span<const double> probs, int label, const ObjectiveConfig& cfg) {
    cfg.validate();
    const double data_term = cfg.loss_kind == LossKind::ce ? ce_loss(probs, label) : gce_loss(probs, label, cfg.q);
    if (cfg.lambda == 0.0) return data_term;
    return data_term + lp_penalty(probs, cfg.lambda, cfg.p);
}

std::vector<double> total_loss_grad(std::span<const double> probs, int label, const ObjectiveConfig& cfg) {
    cfg.validate();
    const double f_y = label_prob(probs, label);
    std::vector<double> grad(probs.size(), 0.0);
    if (cfg.lambda > 0.0) {
        for (std::size_t i = 0; i < probs.size(); ++i) {
            grad[i] = cfg.p == 1.0 ? cfg.lambda
                                   : cfg.lambda * cfg.p * std::pow(std::max(probs[i], kProbFloor), cfg.p - 1.0);
        }
    }
    const auto y = static_cast<std::size_t>(label);
    if (cfg.loss_kind == LossKind::ce) {
        grad[y] += -1.0 / f_y;
    } else {
        grad[y] += -std::pow(f_y, cfg.q - 1.0);
    }
    return grad;
}

}  // namespace noiselab
