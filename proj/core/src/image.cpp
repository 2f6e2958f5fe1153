#include "agcn/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

#include "agcn/error.hpp"
#include "agcn/kernels.hpp"

namespace agcn {

namespace {

std::size_t read_header_int(std::istream& in, const std::string& path) {
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  if (c == EOF || !std::isdigit(c)) {
    throw DataError(path + ": malformed PNM header at byte " + std::to_string(static_cast<long>(in.tellg())));
  }
  std::size_t v = 0;
  while (c != EOF && std::isdigit(c)) {
    v = v * 10 + static_cast<std::size_t>(c - '0');
    c = in.get();
  }
  return v;  // the single whitespace after the token has been consumed
}

}  // namespace

Image read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (in.gcount() != 2 || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6')) {
    throw DataError(path.string() + ": not a binary PGM/PPM (P5/P6) at byte 0");
  }
  const bool rgb = magic[1] == '6';
  const std::size_t w = read_header_int(in, path.string());
  const std::size_t h = read_header_int(in, path.string());
  const std::size_t maxval = read_header_int(in, path.string());
  if (w == 0 || h == 0) throw DataError(path.string() + ": zero image dimension");
  if (maxval != 255) throw DataError(path.string() + ": only 8-bit (maxval 255) images are supported");
  const std::size_t channels = rgb ? 3 : 1;
  std::vector<std::uint8_t> raw(w * h * channels);
  const auto offset = static_cast<long>(in.tellg());
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw DataError(path.string() + ": truncated pixel data at byte " +
                    std::to_string(offset + static_cast<long>(in.gcount())));
  }
  Image img(w, h);
  if (rgb) {
    img.rgb = std::move(raw);
  } else {
    for (std::size_t i = 0; i < w * h; ++i) std::fill_n(img.rgb.data() + 3 * i, 3, raw[i]);
  }
  return img;
}

void write_ppm(const std::filesystem::path& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.rgb.data()), static_cast<std::streamsize>(image.rgb.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

Tensor image_to_tensor(const Image& image) {
  Tensor t({3, image.height, image.width});
  const std::size_t plane = image.width * image.height;
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < 3; ++c) t[c * plane + i] = image.rgb[3 * i + c] / 255.0;
  }
  return t;
}

Image tensor_to_image(const Tensor& chw) {
  require_rank(chw, 3, "tensor_to_image");
  const std::size_t c = chw.dim(0), h = chw.dim(1), w = chw.dim(2), plane = h * w;
  Image img(w, h);
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t k = 0; k < 3; ++k) {
      const double v = chw[(c == 3 ? k : 0) * plane + i];
      img.rgb[3 * i + k] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    }
  }
  return img;
}

Tensor resize_chw(const Tensor& chw, std::size_t out_h, std::size_t out_w) {
  require_rank(chw, 3, "resize_chw");
  if (chw.dim(1) == out_h && chw.dim(2) == out_w) return chw;
  const Tensor batched = chw.reshaped({1, chw.dim(0), chw.dim(1), chw.dim(2)});
  return kernels::bilinear_upsample(batched, out_h, out_w).reshaped({chw.dim(0), out_h, out_w});
}

Tensor load_visual_input(const std::filesystem::path& path, std::size_t size_h, std::size_t size_w) {
  return resize_chw(image_to_tensor(read_pnm(path)), size_h, size_w);
}

Image render_heatmap(const Tensor& chw) {
  require_rank(chw, 3, "render_heatmap");
  const std::size_t h = chw.dim(1), w = chw.dim(2), plane = h * w;
  const auto first = chw.data().subspan(0, plane);
  const auto [lo, hi] = std::minmax_element(first.begin(), first.end());
  const double range = *hi - *lo;
  Image img(w, h);
  for (std::size_t i = 0; i < plane; ++i) {
    const double v = range > 0.0 ? (first[i] - *lo) / range : 0.0;
    std::fill_n(img.rgb.data() + 3 * i, 3, static_cast<std::uint8_t>(std::lround(v * 255.0)));
  }
  return img;
}

}  // namespace agcn
