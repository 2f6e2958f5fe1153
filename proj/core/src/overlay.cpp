#include "agcn/overlay.hpp"

#include <cstdlib>

#include "agcn/error.hpp"

namespace agcn {

void OverlaySpec::validate() const {
  if (node_radius < 1) throw ConfigError("overlay: node radius must be >= 1");
  if (salient == contextual || salient == edge || contextual == edge) {
    throw ConfigError("overlay: salient, contextual and edge colours must differ");
  }
}

PixelPos grid_to_pixel(const GridPos& p, std::size_t grid_w, std::size_t grid_h, std::size_t image_w,
                       std::size_t image_h) {
  // floor((x + 0.5) * W / w) < W for every x < w.
  return {static_cast<long>((2 * p.x + 1) * image_w / (2 * grid_w)),
          static_cast<long>((2 * p.y + 1) * image_h / (2 * grid_h))};
}

namespace {

void put(Image& img, long x, long y, const Rgb& c) {
  if (x < 0 || y < 0 || x >= static_cast<long>(img.width) || y >= static_cast<long>(img.height)) return;
  std::uint8_t* px = img.pixel(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
  px[0] = c.r;
  px[1] = c.g;
  px[2] = c.b;
}

void line(Image& img, PixelPos a, PixelPos b, const Rgb& c) {
  const long dx = std::labs(b.x - a.x), dy = -std::labs(b.y - a.y);
  const long sx = a.x < b.x ? 1 : -1, sy = a.y < b.y ? 1 : -1;
  long err = dx + dy;
  while (true) {
    put(img, a.x, a.y, c);
    if (a.x == b.x && a.y == b.y) break;
    const long e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      a.x += sx;
    }
    if (e2 <= dx) {
      err += dx;
      a.y += sy;
    }
  }
}

void disc(Image& img, PixelPos c, int r, const Rgb& colour) {
  for (long y = -r; y <= r; ++y) {
    for (long x = -r; x <= r; ++x) {
      if (x * x + y * y <= static_cast<long>(r) * r) put(img, c.x + x, c.y + y, colour);
    }
  }
}

}  // namespace

OverlayResult render_overlay(const Image& base, const ScenePair& graphs, const OverlaySpec& spec) {
  spec.validate();
  OverlayResult out{base, {}};
  auto to_px = [&](const GridPos& p) { return grid_to_pixel(p, graphs.w, graphs.h, base.width, base.height); };
  for (const SceneGraph* g : {&graphs.salient, &graphs.contextual}) {
    for (const Edge& e : g->edges) line(out.image, to_px(g->positions[e.i]), to_px(g->positions[e.j]), spec.edge);
  }
  for (const SceneGraph* g : {&graphs.salient, &graphs.contextual}) {
    const Rgb& colour = g->kind == GraphKind::salient ? spec.salient : spec.contextual;
    for (const GridPos& p : g->positions) {
      const PixelPos c = to_px(p);
      disc(out.image, c, spec.node_radius, colour);
      out.markers.push_back(c);
    }
  }
  return out;
}

Image upscale_nearest(const Image& image, std::size_t factor) {
  if (factor < 1) throw ConfigError("upscale: factor must be >= 1");
  Image out(image.width * factor, image.height * factor);
  for (std::size_t y = 0; y < out.height; ++y) {
    for (std::size_t x = 0; x < out.width; ++x) {
      std::copy_n(image.pixel(x / factor, y / factor), 3, out.pixel(x, y));
    }
  }
  return out;
}

}  // namespace agcn
