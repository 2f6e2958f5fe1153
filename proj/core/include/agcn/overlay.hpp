#pragma once

#include <cstdint>
#include <vector>

#include "agcn/graph.hpp"
#include "agcn/image.hpp"

namespace agcn {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Salient nodes gold, contextual nodes blue.
struct OverlaySpec {
  int node_radius = 3;
  Rgb salient{218, 165, 32};
  Rgb contextual{65, 105, 225};
  Rgb edge{220, 20, 60};

  void validate() const;  // ConfigError on radius < 1 or repeated colours
};

struct PixelPos {
  long x = 0;
  long y = 0;
};

// Centre of grid cell (x, y) of a grid_w x grid_h map, scaled to the image.
PixelPos grid_to_pixel(const GridPos& p, std::size_t grid_w, std::size_t grid_h, std::size_t image_w,
                       std::size_t image_h);

struct OverlayResult {
  Image image;
  std::vector<PixelPos> markers;  // one per drawn node
};

// Draws both graphs' edges, then one filled circle per node.
OverlayResult render_overlay(const Image& base, const ScenePair& graphs, const OverlaySpec& spec = {});

Image upscale_nearest(const Image& image, std::size_t factor);

}  // namespace agcn
