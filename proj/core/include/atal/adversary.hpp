#pragma once

#include <span>

#include "atal/gridnet.hpp"

namespace atal {

/// L-infinity PGD settings: radius epsilon, step alpha, T steps.
struct AttackConfig {
  double epsilon = 0.03;
  double alpha = 0.01;
  int steps = 7;

  void validate() const;
  friend bool operator==(const AttackConfig&, const AttackConfig&) = default;
};

/// Hardened prediction: class 1 iff p >= 0.5.
ClassMap make_pseudo_labels(const ProbMap& clean_prob);

/// Mean over members of d masked_bce(f_m(x), pseudo) / dx.
Image ensemble_input_gradient(std::span<const GridNet> members, const Image& image,
                              std::span<const PixelTarget> targets);

/// x <- Clip(x + alpha * sign(grad)) for cfg.steps steps, where Clip projects
/// onto [x0 - eps, x0 + eps] intersected with [0, 1] and grad is the ensemble
/// input gradient of the BCE against the dense pseudo labels. The models are
/// only read.
Image pgd_attack(std::span<const GridNet> members, const Image& image, const ClassMap& pseudo_labels,
                 const AttackConfig& cfg);
Image pgd_attack(const GridNet& model, const Image& image, const ClassMap& pseudo_labels,
                 const AttackConfig& cfg);

/// Fraction of pixels whose hardened class differs between two maps.
double flip_rate(const ProbMap& clean, const ProbMap& adversarial);

}  // namespace atal
