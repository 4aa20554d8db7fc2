#include <algorithm>
#include <cmath>

#include "damro/cli.hpp"
#include "damro/errors.hpp"
#include "damro/rng.hpp"

namespace damro::cli {

lvlm::ImageInput make_image(const lvlm::ModelConfig& config, const std::string& pattern, std::uint64_t seed) {
  config.validate();
  const std::size_t side = config.patch_grid_side;
  const std::size_t dim = config.patch_dim;
  Rng rng(seed);
  lvlm::ImageInput img;
  img.pixels.resize(side * side * dim);

  if (pattern == "noise") {
    for (double& v : img.pixels) v = rng.uniform();
  } else if (pattern == "gradient") {
    for (std::size_t r = 0; r < side; ++r)
      for (std::size_t c = 0; c < side; ++c)
        for (std::size_t k = 0; k < dim; ++k)
          img.pixels[(r * side + c) * dim + k] =
              (static_cast<double>(r + c) + static_cast<double>(k) / static_cast<double>(dim)) /
              static_cast<double>(2 * side);
  } else if (pattern == "blocks") {
    // Dim background with low-amplitude noise plus one bright rectangle whose
    // placement and extent come from the seed.
    const std::size_t bw = 1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(std::max<std::size_t>(side / 2, 1)));
    const std::size_t bh = 1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(std::max<std::size_t>(side / 2, 1)));
    const std::size_t r0 = static_cast<std::size_t>(rng.uniform() * static_cast<double>(side - std::min(bh, side) + 1));
    const std::size_t c0 = static_cast<std::size_t>(rng.uniform() * static_cast<double>(side - std::min(bw, side) + 1));
    const double hue = rng.uniform();
    for (std::size_t r = 0; r < side; ++r)
      for (std::size_t c = 0; c < side; ++c) {
        const bool inside = r >= r0 && r < r0 + bh && c >= c0 && c < c0 + bw;
        for (std::size_t k = 0; k < dim; ++k) {
          const double base = inside ? 0.6 + 0.4 * std::fabs(std::sin(hue * 6.0 + static_cast<double>(k))) : 0.15;
          img.pixels[(r * side + c) * dim + k] = std::clamp(base + 0.05 * (rng.uniform() - 0.5), 0.0, 1.0);
        }
      }
  } else {
    throw InputError("unknown image pattern '" + pattern + "' (expected noise, blocks or gradient)");
  }
  return img;
}

}  // namespace damro::cli
