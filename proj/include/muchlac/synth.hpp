#pragma once

// Synthetic "cross-channel" scenario: a 2-band raster of square cells. In
// negative cells the two bands are independent uniform noise; in positive
// cells band B copies band A. Per-band marginals are identical in both
// classes, so only inter-channel structure separates them.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "muchlac/common.hpp"
#include "muchlac/raster.hpp"

namespace muchlac {

struct SynthParams {
  std::string scenario = "cross-channel";
  std::size_t cells_x = 32;
  std::size_t cells_y = 32;
  std::size_t cell_size = 16;
  double positive_fraction = 0.25;
  std::uint64_t seed = 7;
};

struct SynthScene {
  MultibandRaster raster;
  MultibandRaster mask;
};

// Largest per-band total-variation distance between positive and negative
// pixel histograms that the generator accepts.
inline constexpr double kSynthMarginalTolerance = 0.05;
inline constexpr std::size_t kSynthHistogramBins = 16;

inline SynthScene synth_generate(const SynthParams& p) {
  if (p.scenario != "cross-channel") throw std::invalid_argument("unknown scenario: " + p.scenario);
  if (p.cells_x == 0 || p.cells_y == 0 || p.cell_size == 0) throw std::invalid_argument("empty synthetic scene");
  if (!(p.positive_fraction >= 0.0 && p.positive_fraction <= 1.0))
    throw std::invalid_argument("positive_fraction must be in [0, 1]");

  const std::size_t w = p.cells_x * p.cell_size, h = p.cells_y * p.cell_size;
  SynthScene s;
  s.raster = MultibandRaster::zeros(w, h, 2);
  s.raster.band_names = {"A", "B"};
  s.mask = MultibandRaster::zeros(w, h, 1);
  s.mask.band_names = {"label"};
  s.mask.full_scale = 1.0;

  const std::size_t cells = p.cells_x * p.cells_y;
  std::vector<std::size_t> order(cells);
  for (std::size_t i = 0; i < cells; ++i) order[i] = i;
  Rng rng(mix_seed(p.seed, 0x5e17));
  rng.shuffle(order);
  const auto n_pos = static_cast<std::size_t>(std::llround(p.positive_fraction * static_cast<double>(cells)));
  std::vector<char> positive(cells, 0);
  for (std::size_t i = 0; i < n_pos; ++i) positive[order[i]] = 1;

  const double fs = s.raster.full_scale;
  for (std::size_t c = 0; c < cells; ++c) {
    const std::size_t cx = (c % p.cells_x) * p.cell_size, cy = (c / p.cells_x) * p.cell_size;
    for (std::size_t y = cy; y < cy + p.cell_size; ++y) {
      for (std::size_t x = cx; x < cx + p.cell_size; ++x) {
        const double a = static_cast<double>(rng.below(65536)) / fs;
        const double b = positive[c] ? a : static_cast<double>(rng.below(65536)) / fs;
        s.raster.at(0, x, y) = a;
        s.raster.at(1, x, y) = b;
        s.mask.at(0, x, y) = positive[c] ? 1.0 : 0.0;
      }
    }
  }
  return s;
}

// Max over bands of the total-variation distance between the intensity
// histograms of positive-cell and negative-cell pixels.
inline double synth_marginal_distance(const SynthScene& s) {
  double worst = 0.0;
  for (std::size_t b = 0; b < s.raster.channels(); ++b) {
    std::array<double, kSynthHistogramBins> pos{}, neg{};
    double n_pos = 0.0, n_neg = 0.0;
    const auto& band = s.raster.bands[b];
    for (std::size_t i = 0; i < band.size(); ++i) {
      const auto bin = std::min(kSynthHistogramBins - 1, static_cast<std::size_t>(band[i] * kSynthHistogramBins));
      if (s.mask.bands[0][i] != 0.0) {
        pos[bin] += 1.0;
        n_pos += 1.0;
      } else {
        neg[bin] += 1.0;
        n_neg += 1.0;
      }
    }
    if (n_pos == 0.0 || n_neg == 0.0) continue;
    double tv = 0.0;
    for (std::size_t k = 0; k < kSynthHistogramBins; ++k) tv += std::abs(pos[k] / n_pos - neg[k] / n_neg);
    worst = std::max(worst, tv / 2.0);
  }
  return worst;
}

}  // namespace muchlac
