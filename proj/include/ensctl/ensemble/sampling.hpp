#pragma once

#include <string>

#include "ensctl/ensemble/spec.hpp"
#include "ensctl/linalg/schur_eigen.hpp"

namespace ensctl {

/// Largest real part over the spectrum of `a`.
inline Real spectral_abscissa(const RealMatrix& a, const PrecisionContext& ctx,
                              const std::string& label = "matrix") {
  auto values = schur_eigenvalues(a, ctx, label);
  Real best = values.front().re;
  for (const auto& v : values) best = std::max(best, v.re);
  return best;
}

inline bool is_hurwitz(const RealMatrix& a, const PrecisionContext& ctx) {
  return spectral_abscissa(a, ctx) < 0;
}

/// Throws if any realization has an eigenvalue with nonnegative real part.
inline void require_hurwitz(const std::vector<RealMatrix>& matrices, const PrecisionContext& ctx) {
  std::string bad;
  for (std::size_t j = 0; j < matrices.size(); ++j) {
    const std::string label = "realization " + std::to_string(j);
    if (!(spectral_abscissa(matrices[j], ctx, label) < 0)) {
      bad += (bad.empty() ? "" : ", ") + std::to_string(j);
    }
  }
  if (!bad.empty()) {
    throw NumericalError("Hurwitz violation in infinite-horizon mode for realization(s): " + bad);
  }
}

/// Draws N realizations. Draw order is realization-major, then loops by
/// node index, then edges in declaration order, so a seed fixes the set.
inline RealizationSet sample_realizations(const EnsembleSpec& spec, std::size_t N,
                                          std::uint64_t seed, const PrecisionContext& ctx) {
  validate(spec);
  if (N < 1) throw ValidationError("sample_realizations: N must be >= 1");
  Rng rng(seed);
  RealizationSet out;
  out.matrices.reserve(N);
  for (std::size_t j = 0; j < N; ++j) {
    RealMatrix a(spec.n, spec.n);
    for (std::size_t v = 0; v < spec.n; ++v) a(v, v) = sample_weight(spec.loops[v], rng);
    for (const auto& e : spec.edges) a(e.target, e.source) = sample_weight(e.weight, rng);
    out.matrices.push_back(std::move(a));
  }
  out.B = input_matrix(spec.n, spec.drivers);
  out.C = output_matrix(spec.n, spec.targets);
  out.x0 = widen(spec.x0);
  out.y_f = widen(spec.y_f);
  out.horizon = spec.horizon;
  out.seed = seed;
  if (out.horizon.is_infinite()) require_hurwitz(out.matrices, ctx);
  return out;
}

}  // namespace ensctl
