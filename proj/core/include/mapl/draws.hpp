#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mapl/rng.hpp"

namespace mapl {

/// View of the draws belonging to one group (an individual or a task):
/// R rows of D uniforms, row-major, plus their standard normal quantiles.
struct DrawGroup {
  std::span<const double> uniforms;
  std::span<const double> normals;
  std::size_t draws = 0;
  std::size_t dims = 0;

  double u(std::size_t r, std::size_t d) const noexcept { return uniforms[r * dims + d]; }
  double z(std::size_t r, std::size_t d) const noexcept { return normals[r * dims + d]; }
};

/// Uniform draws on the open unit interval, shaped groups x R x D. Simulated
/// likelihoods consume them through inverse CDFs, so holding one UniformDraws
/// fixed across optimizer steps gives common random numbers.
class UniformDraws {
 public:
  UniformDraws() = default;
  /// Throws ConfigError if the size disagrees with the shape or any entry is
  /// outside (0, 1).
  UniformDraws(std::size_t groups, std::size_t draws, std::size_t dims, std::vector<double> uniforms);

  /// Group g is filled from CounterRng(seed, stream, g), so any group can be
  /// regenerated without the others.
  static UniformDraws generate(std::size_t groups, std::size_t draws, std::size_t dims, std::uint64_t seed,
                               Stream stream);

  std::size_t groups() const noexcept { return groups_; }
  std::size_t draws() const noexcept { return draws_; }
  std::size_t dims() const noexcept { return dims_; }
  bool empty() const noexcept { return uniforms_.empty(); }

  DrawGroup group(std::size_t g) const noexcept;
  std::span<const double> uniforms() const noexcept { return uniforms_; }

 private:
  std::size_t groups_ = 0, draws_ = 0, dims_ = 0;
  std::vector<double> uniforms_;
  std::vector<double> normals_;
};

}  // namespace mapl
