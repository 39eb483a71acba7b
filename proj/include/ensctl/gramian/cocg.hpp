#pragma once

#include "ensctl/gramian/sylvester.hpp"
#include "ensctl/linalg/symmetric_eigen.hpp"

namespace ensctl {

/// Composite output controllability Gramian: the Np x Np matrix with blocks
/// C W_{j,k} C^T, together with its spectrum (descending) and eigenvectors.
struct Cocg {
  std::size_t N = 0;
  std::size_t p = 0;
  RealMatrix matrix;
  RealVector eigenvalues;
  RealMatrix eigenvectors;
  Horizon horizon = Horizon::infinite();

  [[nodiscard]] std::size_t size() const noexcept { return N * p; }
};

/// Projects the pair Gramians through C and diagonalizes the result.
inline Cocg assemble_cocg_from_pairs(const PairGramians& pairs, const RealMatrix& c,
                                     const PrecisionContext& ctx) {
  const std::size_t N = pairs.N();
  const std::size_t p = c.rows();
  Cocg out;
  out.N = N;
  out.p = p;
  out.horizon = pairs.horizon();
  out.matrix = RealMatrix(N * p, N * p);
  const RealMatrix ct = c.transpose();
  for (std::size_t k = 0; k < N; ++k)
    for (std::size_t j = 0; j <= k; ++j) {
      const RealMatrix g = c * pairs.upper_block(j, k) * ct;
      for (std::size_t r = 0; r < p; ++r)
        for (std::size_t s = 0; s < p; ++s) {
          out.matrix(j * p + r, k * p + s) = g(r, s);
          out.matrix(k * p + s, j * p + r) = g(r, s);
        }
    }
  auto eig = symmetric_eigen(out.matrix, ctx);
  out.eigenvalues = std::move(eig.values);
  out.eigenvectors = std::move(eig.vectors);
  return out;
}

inline Cocg assemble_cocg(const RealizationSet& set, const PrecisionContext& ctx, std::size_t jobs = 1) {
  const auto systems = prepare_systems(set, ctx, jobs);
  const auto pairs = compute_pair_gramians(systems, set.horizon, ctx, jobs);
  return assemble_cocg_from_pairs(pairs, set.C, ctx);
}

}  // namespace ensctl
