#include "mapl/draws.hpp"

#include "mapl/error.hpp"
#include "mapl/numeric.hpp"

namespace mapl {

UniformDraws::UniformDraws(std::size_t groups, std::size_t draws, std::size_t dims, std::vector<double> uniforms)
    : groups_(groups), draws_(draws), dims_(dims), uniforms_(std::move(uniforms)) {
  if (uniforms_.size() != groups_ * draws_ * dims_) throw ConfigError("UniformDraws: size does not match shape");
  normals_.resize(uniforms_.size());
  for (std::size_t i = 0; i < uniforms_.size(); ++i) {
    const double u = uniforms_[i];
    if (!(u > 0.0 && u < 1.0)) throw ConfigError("UniformDraws: entries must lie in (0, 1)");
    normals_[i] = normal_quantile(u);
  }
}

UniformDraws UniformDraws::generate(std::size_t groups, std::size_t draws, std::size_t dims, std::uint64_t seed,
                                    Stream stream) {
  std::vector<double> u(groups * draws * dims);
  const std::size_t per_group = draws * dims;
  for (std::size_t g = 0; g < groups; ++g) {
    const CounterRng rng(seed, stream, g);
    for (std::size_t c = 0; c < per_group; ++c) u[g * per_group + c] = to_open_unit(rng.at(c));
  }
  return UniformDraws(groups, draws, dims, std::move(u));
}

DrawGroup UniformDraws::group(std::size_t g) const noexcept {
  const std::size_t n = draws_ * dims_;
  return {std::span<const double>(uniforms_).subspan(g * n, n), std::span<const double>(normals_).subspan(g * n, n),
          draws_, dims_};
}

}  // namespace mapl
