#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <variant>

#include "ensctl/ensemble/rng.hpp"
#include "ensctl/error.hpp"

namespace ensctl {

struct Delta {
  double value;
};
struct Uniform {
  double a, b;
};
/// T(a, b, c): support [a, b], mode c, a < c < b.
struct Triangular {
  double a, b, c;
};
struct TruncatedNormal {
  double mean, stddev, lo, hi;
};

/// Finite-support distribution of a single edge or loop weight.
class WeightDistribution {
 public:
  using Kind = std::variant<Delta, Uniform, Triangular, TruncatedNormal>;

  WeightDistribution() : kind_(Delta{0.0}) {}
  WeightDistribution(Kind kind) : kind_(kind) { validate(); }  // NOLINT: implicit

  static WeightDistribution delta(double c) { return {Delta{c}}; }
  static WeightDistribution uniform(double a, double b) { return {Uniform{a, b}}; }
  static WeightDistribution triangular(double a, double b, double c) { return {Triangular{a, b, c}}; }
  static WeightDistribution truncated_normal(double mean, double sd, double lo, double hi) {
    return {TruncatedNormal{mean, sd, lo, hi}};
  }

  [[nodiscard]] const Kind& kind() const noexcept { return kind_; }

  /// Closed interval containing every sample.
  [[nodiscard]] std::pair<double, double> support() const {
    return std::visit(
        [](const auto& d) -> std::pair<double, double> {
          using D = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<D, Delta>) return {d.value, d.value};
          if constexpr (std::is_same_v<D, Uniform>) return {d.a, d.b};
          if constexpr (std::is_same_v<D, Triangular>) return {d.a, d.b};
          if constexpr (std::is_same_v<D, TruncatedNormal>) return {d.lo, d.hi};
        },
        kind_);
  }

  [[nodiscard]] bool is_delta() const { return std::holds_alternative<Delta>(kind_); }

  [[nodiscard]] std::string describe() const {
    return std::visit(
        [](const auto& d) -> std::string {
          using D = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<D, Delta>) return "delta(" + std::to_string(d.value) + ")";
          if constexpr (std::is_same_v<D, Uniform>)
            return "uniform(" + std::to_string(d.a) + ", " + std::to_string(d.b) + ")";
          if constexpr (std::is_same_v<D, Triangular>)
            return "triangular(" + std::to_string(d.a) + ", " + std::to_string(d.b) + ", " +
                   std::to_string(d.c) + ")";
          if constexpr (std::is_same_v<D, TruncatedNormal>)
            return "truncated_normal(" + std::to_string(d.mean) + ", " + std::to_string(d.stddev) +
                   ", " + std::to_string(d.lo) + ", " + std::to_string(d.hi) + ")";
        },
        kind_);
  }

 private:
  void validate() const {
    auto finite = [](double x) { return std::isfinite(x); };
    std::visit(
        [&](const auto& d) {
          using D = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<D, Delta>) {
            if (!finite(d.value)) throw ValidationError("delta: value must be finite");
          } else if constexpr (std::is_same_v<D, Uniform>) {
            if (!finite(d.a) || !finite(d.b) || !(d.a < d.b))
              throw ValidationError("uniform: requires finite a < b");
          } else if constexpr (std::is_same_v<D, Triangular>) {
            if (!finite(d.a) || !finite(d.b) || !finite(d.c) || !(d.a < d.c && d.c < d.b))
              throw ValidationError("triangular: requires a < c < b");
          } else {
            if (!finite(d.mean) || !finite(d.lo) || !finite(d.hi) || !(d.lo < d.hi))
              throw ValidationError("truncated_normal: requires finite lo < hi");
            if (!(d.stddev > 0) || !finite(d.stddev))
              throw ValidationError("truncated_normal: requires std > 0");
          }
        },
        kind_);
  }

  Kind kind_;
};

inline constexpr long kMaxRejections = 1'000'000;

/// One draw. Triangular uses the inverse CDF; truncated normal rejects
/// from the untruncated normal.
inline double sample_weight(const WeightDistribution& dist, Rng& rng) {
  return std::visit(
      [&](const auto& d) -> double {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, Delta>) {
          return d.value;
        } else if constexpr (std::is_same_v<D, Uniform>) {
          return d.a + (d.b - d.a) * rng.uniform01();
        } else if constexpr (std::is_same_v<D, Triangular>) {
          const double u = rng.uniform01();
          const double width = d.b - d.a;
          const double split = (d.c - d.a) / width;
          if (u < split) return d.a + std::sqrt(u * width * (d.c - d.a));
          return d.b - std::sqrt((1.0 - u) * width * (d.b - d.c));
        } else {
          for (long i = 0; i < kMaxRejections; ++i) {
            const double x = d.mean + d.stddev * rng.standard_normal();
            if (x >= d.lo && x <= d.hi) return x;
          }
          throw NumericalError("truncated_normal: rejection sampling exceeded 1e6 draws");
        }
      },
      dist.kind());
}

}  // namespace ensctl
