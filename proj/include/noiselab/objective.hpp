#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace noiselab {

enum class LossKind { ce, gce };

std::string_view to_string(LossKind kind);
LossKind loss_kind_from_string(std::string_view text);

/// Probabilities are floored here before any log or fractional power.
inline constexpr double kProbFloor = 1e-12;

struct ObjectiveConfig {
    double q = 0.7;
    double temperature = 0.5;
    double lambda = 0.1;
    double p = 0.1;
    LossKind loss_kind = LossKind::gce;

    void validate() const;

    /// Plain cross entropy through an untempered softmax.
    static ObjectiveConfig cross_entropy();
};

/// (1 - f_y^q) / q
double gce_loss(std::span<const double> probs, int label, double q);

/// -ln f_y
double ce_loss(std::span<const double> probs, int label);

/// lambda * sum_i f_i^p
double lp_penalty(std::span<const double> probs, double lambda, double p);

double total_loss(std::span<const double> probs, int label, const ObjectiveConfig& cfg);

/// d total_loss / d probs.
std::vector<double> total_loss_grad(std::span<const double> probs, int label, const ObjectiveConfig& cfg);

}  // namespace noiselab
