#pragma once

#include <random>
#include <vector>

#include "evsynth/model.hpp"

namespace evsynth::gen {

// A random point strictly inside the model's support.
template <class Rng>
std::vector<double> random_state(const Model& model, Rng& rng) {
  std::vector<double> x(model.dimension());
  std::normal_distribution<double> effect(0.0, 0.7);
  const auto& coords = model.coordinates();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto& c = coords[i];
    switch (c.kind) {
      case Model::Kind::Delta: x[i] = effect(rng); break;
      case Model::Kind::Tau:
      case Model::Kind::Sigma: x[i] = std::uniform_real_distribution<double>(0.02, 1.5)(rng); break;
      case Model::Kind::Mu: x[i] = std::uniform_real_distribution<double>(-3.0, 1.0)(rng); break;
      default: x[i] = std::uniform_real_distribution<double>(-2.0, 2.0)(rng); break;
    }
  }
  return x;
}

}  // namespace evsynth::gen
