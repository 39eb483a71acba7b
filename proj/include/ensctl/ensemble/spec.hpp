#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ensctl/ensemble/distribution.hpp"
#include "ensctl/linalg/matrix.hpp"

namespace ensctl {

/// Final time, or the infinite-horizon limit.
class Horizon {
 public:
  static Horizon infinite() { return Horizon(); }
  static Horizon finite(Real t_f) {
    if (!(t_f > 0)) throw ValidationError("t_f must be positive");
    Horizon h;
    h.t_f_ = std::move(t_f);
    return h;
  }

  [[nodiscard]] bool is_infinite() const noexcept { return !t_f_.has_value(); }
  [[nodiscard]] const Real& t_f() const {
    if (!t_f_) throw ValidationError("infinite horizon has no finite t_f");
    return *t_f_;
  }

 private:
  std::optional<Real> t_f_;
};

struct Edge {
  std::size_t source;
  std::size_t target;
  WeightDistribution weight;
};

/// Declarative network ensemble: structure, weight distributions, and the
/// control task (drivers, targets, initial state, desired output, horizon).
/// Entry (t, s) of a realization is the weight of edge s -> t; loops are
/// distributions over the diagonal value itself.
struct EnsembleSpec {
  std::size_t n = 0;
  std::vector<Edge> edges;
  std::vector<WeightDistribution> loops;
  std::vector<std::size_t> drivers;
  std::vector<std::size_t> targets;
  std::vector<double> x0;
  std::vector<double> y_f;
  Horizon horizon = Horizon::infinite();

  [[nodiscard]] std::size_t m() const noexcept { return drivers.size(); }
  [[nodiscard]] std::size_t p() const noexcept { return targets.size(); }
};

namespace detail {

inline void check_node_set(const std::vector<std::size_t>& nodes, std::size_t n, const char* what) {
  if (nodes.empty()) throw ValidationError(std::string(what) + " must be nonempty");
  std::set<std::size_t> seen;
  for (auto v : nodes) {
    if (v >= n)
      throw ValidationError(std::string(what) + ": node " + std::to_string(v) + " out of range");
    if (!seen.insert(v).second)
      throw ValidationError(std::string(what) + ": duplicate node " + std::to_string(v));
  }
}

}  // namespace detail

inline void validate(const EnsembleSpec& spec) {
  if (spec.n == 0) throw ValidationError("ensemble: n must be positive");
  if (spec.loops.size() != spec.n)
    throw ValidationError("ensemble: expected " + std::to_string(spec.n) + " loop distributions");
  for (const auto& e : spec.edges) {
    if (e.source >= spec.n || e.target >= spec.n)
      throw ValidationError("ensemble: edge endpoint out of range");
    if (e.source == e.target) throw ValidationError("ensemble: self-loops belong in `loops`");
  }
  detail::check_node_set(spec.drivers, spec.n, "drivers");
  detail::check_node_set(spec.targets, spec.n, "targets");
  if (spec.x0.size() != spec.n) throw ValidationError("ensemble: x0 must have length n");
  if (spec.y_f.size() != spec.targets.size())
    throw ValidationError("ensemble: y_f must have one entry per target");
}

/// n x m, one unit entry per column at the driver row.
inline RealMatrix input_matrix(std::size_t n, const std::vector<std::size_t>& drivers) {
  detail::check_node_set(drivers, n, "drivers");
  RealMatrix b(n, drivers.size());
  for (std::size_t c = 0; c < drivers.size(); ++c) b(drivers[c], c) = 1;
  return b;
}

/// p x n, one unit entry per row at the target column.
inline RealMatrix output_matrix(std::size_t n, const std::vector<std::size_t>& targets) {
  detail::check_node_set(targets, n, "targets");
  RealMatrix c(targets.size(), n);
  for (std::size_t r = 0; r < targets.size(); ++r) c(r, targets[r]) = 1;
  return c;
}

/// N sampled state matrices plus the shared B, C and task data.
struct RealizationSet {
  std::vector<RealMatrix> matrices;
  RealMatrix B;
  RealMatrix C;
  RealVector x0;
  RealVector y_f;
  Horizon horizon = Horizon::infinite();
  std::uint64_t seed = 0;

  [[nodiscard]] std::size_t N() const noexcept { return matrices.size(); }
  [[nodiscard]] std::size_t n() const noexcept { return B.rows(); }
  [[nodiscard]] std::size_t m() const noexcept { return B.cols(); }
  [[nodiscard]] std::size_t p() const noexcept { return C.rows(); }

  /// Same realizations, different target set and desired output.
  [[nodiscard]] RealizationSet with_targets(const std::vector<std::size_t>& targets,
                                            const RealVector& y_f_new) const {
    if (y_f_new.size() != targets.size())
      throw ValidationError("y_f must have one entry per target");
    RealizationSet out = *this;
    out.C = output_matrix(n(), targets);
    out.y_f = y_f_new;
    return out;
  }
};

inline RealVector widen(const std::vector<double>& v) { return RealVector(v.begin(), v.end()); }

}  // namespace ensctl
