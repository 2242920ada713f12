#include "atal/adversary.hpp"

#include <algorithm>
#include <cmath>

namespace atal {

void AttackConfig::validate() const {
  if (!(epsilon >= 0.0) || epsilon > 1.0) throw InvalidInput("attack epsilon must lie in [0, 1]");
  if (!(alpha >= 0.0)) throw InvalidInput("attack step size must be non-negative");
  if (steps < 0) throw InvalidInput("attack steps must be non-negative");
}

ClassMap make_pseudo_labels(const ProbMap& clean_prob) {
  ClassMap out(clean_prob.height(), clean_prob.width());
  for (std::size_t i = 0; i < clean_prob.size(); ++i) out[i] = clean_prob[i] >= 0.5 ? 1 : 0;
  return out;
}

Image ensemble_input_gradient(std::span<const GridNet> members, const Image& image,
                              std::span<const PixelTarget> targets) {
  if (members.empty()) throw InvalidInput("attack needs at least one model");
  Image mean(image.height(), image.width(), image.channels());
  for (const GridNet& m : members) {
    const Gradients g = backward(m, image, targets, GradientParts::input);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += g.input[i];
  }
  const double inv = 1.0 / static_cast<double>(members.size());
  for (double& v : mean.values()) v *= inv;
  return mean;
}

Image pgd_attack(std::span<const GridNet> members, const Image& image, const ClassMap& pseudo_labels,
                 const AttackConfig& cfg) {
  cfg.validate();
  require_same_extent(image, pseudo_labels, "pgd_attack");
  for (double v : image.values()) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput("attack input must lie in [0, 1]");
  }
  const auto targets = dense_targets(pseudo_labels);
  Image adv = image;
  for (int t = 0; t < cfg.steps; ++t) {
    const Image grad = ensemble_input_gradient(members, adv, targets);
    for (double g : grad.values()) {
      if (!std::isfinite(g)) throw InvalidInput("non-finite input gradient during attack");
    }
    for (std::size_t i = 0; i < adv.size(); ++i) {
      const double g = grad[i];
      const double step = g > 0.0 ? cfg.alpha : (g < 0.0 ? -cfg.alpha : 0.0);
      const double moved = std::clamp(adv[i] + step, image[i] - cfg.epsilon, image[i] + cfg.epsilon);
      adv[i] = std::clamp(moved, 0.0, 1.0);
    }
  }
  return adv;
}

Image pgd_attack(const GridNet& model, const Image& image, const ClassMap& pseudo_labels,
                 const AttackConfig& cfg) {
  return pgd_attack(std::span<const GridNet>(&model, 1), image, pseudo_labels, cfg);
}

double flip_rate(const ProbMap& clean, const ProbMap& adversarial) {
  require_same_extent(clean, adversarial, "flip_rate");
  if (clean.empty()) return 0.0;
  std::size_t flips = 0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    flips += (clean[i] >= 0.5) != (adversarial[i] >= 0.5);
  }
  return static_cast<double>(flips) / static_cast<double>(clean.size());
}

}  // namespace atal
