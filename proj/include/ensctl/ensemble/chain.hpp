#pragma once

#include "ensctl/ensemble/spec.hpp"

namespace ensctl {

/// Unidirectional path v0 -> v1 -> ... -> v_{n-1}. Every node carries its
/// own loop draw and every edge its own weight draw. Defaults to a single
/// driver at v0 and a zero initial state.
inline EnsembleSpec make_chain_spec(std::size_t n, const WeightDistribution& loop_dist,
                                    const WeightDistribution& edge_dist,
                                    std::vector<std::size_t> targets, std::vector<double> y_f,
                                    Horizon horizon = Horizon::infinite(),
                                    std::vector<std::size_t> drivers = {0}) {
  if (n < 2) throw ValidationError("chain: n must be >= 2");
  EnsembleSpec spec;
  spec.n = n;
  spec.loops.assign(n, loop_dist);
  for (std::size_t j = 0; j + 1 < n; ++j) spec.edges.push_back({j, j + 1, edge_dist});
  spec.drivers = std::move(drivers);
  spec.targets = std::move(targets);
  spec.x0.assign(n, 0.0);
  spec.y_f = std::move(y_f);
  spec.horizon = std::move(horizon);
  validate(spec);
  return spec;
}

/// Loops -U(2,4), edges U(0.5,1.5), target v1, y_f = 1 on a 4-node chain.
inline EnsembleSpec example_chain_spec() {
  return make_chain_spec(4, WeightDistribution::uniform(-4.0, -2.0),
                         WeightDistribution::uniform(0.5, 1.5), {1}, {1.0});
}

/// Six nodes and ten edges mixing delta, uniform, triangular and truncated
/// normal weights; loops -U(2,4); drivers {0,1}; targets {4,5}; y_f = (1,1).
/// The parameters are illustrative.
inline EnsembleSpec example_network_spec() {
  EnsembleSpec spec;
  spec.n = 6;
  spec.loops.assign(6, WeightDistribution::uniform(-4.0, -2.0));
  spec.edges = {
      {0, 2, WeightDistribution::delta(1.0)},
      {1, 3, WeightDistribution::delta(0.8)},
      {2, 3, WeightDistribution::delta(0.5)},
      {2, 4, WeightDistribution::uniform(0.5, 1.5)},
      {3, 4, WeightDistribution::uniform(0.2, 1.0)},
      {3, 5, WeightDistribution::uniform(0.5, 1.5)},
      {4, 5, WeightDistribution::triangular(0.5, 1.5, 1.0)},
      {1, 2, WeightDistribution::triangular(0.2, 1.0, 0.4)},
      {5, 2, WeightDistribution::truncated_normal(-0.5, 0.2, -1.0, 0.0)},
      {4, 0, WeightDistribution::truncated_normal(0.3, 0.1, 0.1, 0.5)},
  };
  spec.drivers = {0, 1};
  spec.targets = {4, 5};
  spec.x0.assign(6, 0.0);
  spec.y_f = {1.0, 1.0};
  validate(spec);
  return spec;
}

}  // namespace ensctl
